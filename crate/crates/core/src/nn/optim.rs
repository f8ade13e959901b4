use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Plain SGD or bias-corrected Adam over any [`ParamSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct Optimizer {
    pub config: OptimizerConfig,
    steps: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig) -> Result<Self> {
        if !(config.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        Ok(Self {
            config,
            steps: 0,
            first: Vec::new(),
            second: Vec::new(),
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Adam first and second moments, one vector per parameter tensor.
    pub fn moments(&self) -> (&[Vec<f64>], &[Vec<f64>]) {
        (&self.first, &self.second)
    }

    pub fn restore(&mut self, steps: u64, first: Vec<Vec<f64>>, second: Vec<Vec<f64>>) {
        self.steps = steps;
        self.first = first;
        self.second = second;
    }

    /// Applies one update. Non-finite gradients abort before anything changes.
    pub fn step<P: ParamSet>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let g = grads.tensors();
        for t in &g {
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("gradient of {}", t.name)));
            }
        }
        let mut p = params.tensors_mut();
        if p.len() != g.len() || p.iter().zip(&g).any(|(a, b)| a.len() != b.data.len()) {
            return Err(Error::Shape("gradients do not match parameters".into()));
        }
        self.steps += 1;
        let lr = self.config.learning_rate;
        match self.config.kind {
            OptimizerKind::Sgd => {
                for (p, g) in p.iter_mut().zip(&g) {
                    for (w, d) in p.iter_mut().zip(g.data) {
                        *w -= lr * d;
                    }
                }
            }
            OptimizerKind::Adam => {
                if self.first.len() != g.len() {
                    self.first = g.iter().map(|t| vec![0.0; t.data.len()]).collect();
                    self.second = self.first.clone();
                }
                let OptimizerConfig {
                    beta1: b1,
                    beta2: b2,
                    epsilon: eps,
                    ..
                } = self.config;
                let t = self.steps as i32;
                let c1 = 1.0 - b1.powi(t);
                let c2 = 1.0 - b2.powi(t);
                for (i, (p, g)) in p.iter_mut().zip(&g).enumerate() {
                    let m = &mut self.first[i];
                    let v = &mut self.second[i];
                    for j in 0..p.len() {
                        let d = g.data[j];
                        m[j] = b1 * m[j] + (1.0 - b1) * d;
                        v[j] = b2 * v[j] + (1.0 - b2) * d * d;
                        p[j] -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
