//! Epsilon-greedy action selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::argmax_lowest;

/// With probability `epsilon` a uniformly random UE, otherwise the argmax of
/// `q` with ties going to the lowest index. `epsilon == 0` draws nothing.
pub fn select_action<R: Rng + ?Sized>(q: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return rng.random_range(0..q.len());
    }
    argmax_lowest(q.iter().copied()).unwrap_or(0)
}

/// Linear decay from `start` to `end` over `decay_steps`, then flat.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if self.decay_steps == 0 || step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}
