//! Training, evaluation and benchmarking protocol.
//!
//! Output files:
//!
//! - `training_log.csv`: `step,episode,epsilon,mu,base_reward,bonus,loss`,
//!   one row per allocation step (`loss` empty when no update ran).
//! - `eval_log.csv`: `episode,step,mean,median,q1,q3,min,max,checkpoint`,
//!   one row per evaluation point.
//! - `episode_NNNN.ckpt`: agent checkpoint after `NNNN` episodes.
//! - `benchmark.csv`: see [`bench::write_benchmark_csv`].
//! - `bands.csv`: `episode,runs,median,inner_lo,inner_hi,outer_lo,outer_hi`.

pub mod bench;
pub mod config;
pub mod eval;
pub mod split;
pub mod training;

pub use bench::{aggregate_bands, parse_eval_log, run_benchmark, write_bands_csv, write_benchmark_csv};
pub use config::{RunConfig, RunManifest, ScheduleConfig};
pub use eval::{run_episode, run_eval, AgentSpec, EvalReport};
pub use split::{EnvSplit, NUM_TRAINING_ENVS};
pub use training::{
    checkpoint_name, dqn_spec, load_dqn_spec, parse_agent, run_training, save_agent, EvalPoint, TrainOptions,
    TrainingOutcome, AGENT_NAMES,
};
