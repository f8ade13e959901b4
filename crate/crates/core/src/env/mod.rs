//! Downlink cell simulator.
//!
//! One allocation step hands one PRB to one UE. After `num_prbs` steps the
//! TTI closes: packets age, traffic arrives, UEs move, channels are redrawn
//! and the penalty reward for the TTI is computed.

mod channel;
mod config;
mod observation;
mod reward;
mod state;
mod trace;

pub use channel::{compute_cqi, path_loss_db, snr_db};
pub use config::{tbs_table, CellConfig, ChannelConfig, QosProfile, MAX_CQI, NUM_QOS_CLASSES};
pub use observation::{Observation, UeObservation};
pub use reward::compute_tfra_reward;
pub use state::{reflect, Allocation, EnvState, Packet, UeState};
pub use trace::TrajectoryWriter;
