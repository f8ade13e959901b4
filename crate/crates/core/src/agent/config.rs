use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::features::ShuffleMode;
use super::policy::EpsilonSchedule;
use crate::baselines::BaselineKind;
use crate::{Error, Result};

/// Learning hyperparameters of the DQN agent. The step size lives in the
/// optimizer configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// `None` decays over the first 30% of all training steps.
    pub epsilon_decay_steps: Option<u64>,
    pub mu0: f64,
    pub rho: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub learn_every: u64,
    /// Steps between target-network syncs; 0 bootstraps from the online network.
    pub target_sync: u64,
    pub shuffle_mode: ShuffleMode,
    pub age_cap: bool,
    /// Shuffle UE order around the main network during training.
    pub ue_shuffle: bool,
    /// Also shuffle UE order at evaluation time.
    pub eval_random_perm: bool,
    pub expert: BaselineKind,
    pub huber_delta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: None,
            mu0: 1.0,
            rho: 0.95,
            batch_size: 64,
            replay_capacity: 50_000,
            learn_every: 4,
            target_sync: 1_000,
            shuffle_mode: ShuffleMode::None,
            age_cap: false,
            ue_shuffle: true,
            eval_random_perm: false,
            expert: BaselineKind::Knapsack,
            huber_delta: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn for_variant(variant: Variant) -> Self {
        let mut c = Self::default();
        variant.apply(&mut c);
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if !(self.mu0 >= 0.0 && self.mu0.is_finite()) {
            return bad("mu0 must be finite and >= 0");
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return bad("need 0 < batch_size <= replay_capacity");
        }
        if self.learn_every == 0 {
            return bad("learn_every must be >= 1");
        }
        if !(self.huber_delta > 0.0) {
            return bad("huber_delta must be > 0");
        }
        Ok(())
    }

    /// Epsilon schedule for a run of `total_steps` allocation steps.
    pub fn epsilon_schedule(&self, total_steps: u64) -> EpsilonSchedule {
        EpsilonSchedule {
            start: self.epsilon_start,
            end: self.epsilon_end,
            decay_steps: self
                .epsilon_decay_steps
                .unwrap_or_else(|| (total_steps as f64 * 0.3).round() as u64),
        }
    }
}

/// Technique presets. Every preset uses expert mimicking, UE shuffling and
/// per-class encoders; later ones add age capping and packet shuffling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Enn,
    Nps,
    Rps,
    Sps,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Self::Enn, Self::Nps, Self::Rps, Self::Sps];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Enn => "enn",
            Self::Nps => "nps",
            Self::Rps => "rps",
            Self::Sps => "sps",
        }
    }

    /// Sets the technique switches, leaving other hyperparameters alone.
    pub fn apply(self, c: &mut TrainConfig) {
        c.ue_shuffle = true;
        c.age_cap = self != Self::Enn;
        c.shuffle_mode = match self {
            Self::Enn | Self::Nps => ShuffleMode::None,
            Self::Rps => ShuffleMode::Rps,
            Self::Sps => ShuffleMode::Sps,
        };
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}' (valid: enn, nps, rps, sps)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_matrix() {
        let enn = TrainConfig::for_variant(Variant::Enn);
        assert!(!enn.age_cap && enn.shuffle_mode == ShuffleMode::None);
        let nps = TrainConfig::for_variant(Variant::Nps);
        assert!(nps.age_cap && nps.shuffle_mode == ShuffleMode::None);
        assert_eq!(TrainConfig::for_variant(Variant::Rps).shuffle_mode, ShuffleMode::Rps);
        assert_eq!(TrainConfig::for_variant(Variant::Sps).shuffle_mode, ShuffleMode::Sps);
        for v in Variant::ALL {
            let c = TrainConfig::for_variant(v);
            assert!(c.ue_shuffle && c.mu0 > 0.0);
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("foo".parse::<Variant>().is_err());
    }

    #[test]
    fn default_decay_is_thirty_percent() {
        let s = TrainConfig::default().epsilon_schedule(1_000);
        assert_eq!(s.decay_steps, 300);
        TrainConfig::default().validate().unwrap();
    }
}
