//! Deterministic OFDMA downlink scheduling workbench.
//!
//! The crate is split into:
//!
//! - [`env`]: the downlink cell simulator (UE mobility, QoS traffic, CQI,
//!   per-UE buffers, PRB-by-PRB allocation and the penalty reward).
//! - [`baselines`]: classical schedulers (round robin if traffic,
//!   proportional fair channel aware, knapsack, uniform random).
//! - [`nn`]: the small dense-network toolkit used by the agent.
//! - [`agent`]: the deep Q-learning scheduler with per-class encoder
//!   networks, UE shuffling, packet shuffling, age capping, PRB embedding
//!   and expert-mimicking reward shaping.
//! - [`harness`]: training/evaluation/benchmark orchestration and CSV output.
//! - [`selftest`]: the invariant suite behind `ofdmarl selftest`.
//!
//! UE indices, PRB indices and buffer slots are 0-based throughout. QoS class
//! identifiers keep their natural values 1..=4.
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod baselines;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod rng;
pub mod selftest;
pub mod stats;

pub use error::{Error, Result};
