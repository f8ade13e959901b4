//! Deep Q-learning scheduler.
//!
//! Each UE's raw buffer state goes through the feature pipeline (age capping,
//! training-time packet shuffling) and the encoder of its QoS class. The
//! encodings, laid out in a random UE order during training, plus the PRB
//! embedding feed the main network, whose outputs are mapped back to UE
//! order.

pub mod checkpoint;
pub mod config;
pub mod features;
pub mod micki;
pub mod network;
pub mod policy;
pub mod replay;
pub mod train;

pub use config::{TrainConfig, Variant};
pub use features::{apply_age_cap, shuffle_packets, FeaturePipeline, ShuffleMode};
pub use micki::{micki_bonus, micki_mu};
pub use network::{permutation, AgentParams, NetworkDims, QForward};
pub use policy::{select_action, EpsilonSchedule};
pub use replay::{ReplayMemory, Transition};
pub use train::{
    build_input, full_network_grad_check, q_values, td_train_step, DqnAgent, DqnPolicy,
    NetworkInput, StepRecord, TdContext,
};
