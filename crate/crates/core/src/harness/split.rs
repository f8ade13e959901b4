use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::rng::derive_seed;
use crate::{Error, Result};

pub const NUM_TRAINING_ENVS: usize = 7;

/// Environment seeds for training, evaluation during training and the final
/// benchmark. The three sets never overlap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvSplit {
    pub training: Vec<u64>,
    pub eval: Vec<u64>,
    pub test: Vec<u64>,
}

impl EnvSplit {
    pub fn new(training: Vec<u64>, eval: Vec<u64>, test: Vec<u64>) -> Result<Self> {
        if training.is_empty() {
            return Err(Error::Config("need at least one training environment".into()));
        }
        let mut seen = HashSet::new();
        for (set, seeds) in [("training", &training), ("eval", &eval), ("test", &test)] {
            for &s in seeds {
                if !seen.insert(s) {
                    return Err(Error::Config(format!(
                        "environment seed {s} appears twice (last in the {set} set)"
                    )));
                }
            }
        }
        Ok(Self {
            training,
            eval,
            test,
        })
    }

    /// Seven training environments plus `eval` and `test` further ones, all
    /// derived from `master`.
    pub fn derive(master: u64, eval: usize, test: usize) -> Result<Self> {
        let seeds = |label: &str, n: usize| -> Vec<u64> {
            (0..n)
                .map(|i| derive_seed(master, &format!("{label}-env-{i}")))
                .collect()
        };
        Self::new(
            seeds("training", NUM_TRAINING_ENVS),
            seeds("eval", eval),
            seeds("test", test),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_split_shape() {
        let s = EnvSplit::derive(7, 10, 300).unwrap();
        assert_eq!((s.training.len(), s.eval.len(), s.test.len()), (7, 10, 300));
        assert_eq!(s, EnvSplit::derive(7, 10, 300).unwrap());
        assert_ne!(s, EnvSplit::derive(8, 10, 300).unwrap());
    }

    #[test]
    fn overlap_is_rejected() {
        assert!(EnvSplit::new(vec![1, 2], vec![3], vec![2]).is_err());
        assert!(EnvSplit::new(vec![1, 1], vec![], vec![]).is_err());
        assert!(EnvSplit::new(vec![], vec![1], vec![2]).is_err());
        assert!(EnvSplit::new(vec![1], vec![2], vec![3]).is_ok());
    }
}
