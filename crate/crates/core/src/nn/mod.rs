//! Dense networks with hand-written backward passes, 64-bit throughout.

pub mod checkpoint;
mod embedding;
pub mod gradcheck;
mod loss;
mod mlp;
mod optim;
mod params;

pub use embedding::{embedding_dim, EmbeddingTable};
pub use loss::huber;
pub use mlp::{Activation, Dense, Mlp, MlpCache};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind};
pub use params::{ParamSet, Tensor};
