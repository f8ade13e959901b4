use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::{TrainConfig, Variant};
use crate::env::CellConfig;
use crate::nn::{OptimizerConfig, OptimizerKind};
use crate::{Error, Result};

/// Episode counts, lengths and evaluation cadence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub episodes: u64,
    /// Allocation steps per training episode.
    pub episode_steps: u64,
    /// Evaluate (and checkpoint) after every this many episodes.
    pub eval_every: u64,
    pub eval_seeds: usize,
    /// Steps per evaluation environment; `None` uses `episode_steps`.
    pub eval_steps: Option<u64>,
    pub test_seeds: usize,
    pub bench_steps: u64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            episodes: 500,
            episode_steps: 17_500,
            eval_every: 10,
            eval_seeds: 5,
            eval_steps: None,
            test_seeds: 300,
            bench_steps: 65_536,
        }
    }
}

impl ScheduleConfig {
    pub fn eval_steps(&self) -> u64 {
        self.eval_steps.unwrap_or(self.episode_steps)
    }

    pub fn total_steps(&self) -> u64 {
        self.episodes * self.episode_steps
    }

    pub fn validate(&self) -> Result<()> {
        if self.episode_steps == 0 || self.eval_every == 0 {
            return Err(Error::Config("episode_steps and eval_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything a run depends on besides the master seed and variant.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cell: CellConfig,
    pub train: TrainConfig,
    pub optimizer: OptimizerConfig,
    pub schedule: ScheduleConfig,
}

impl RunConfig {
    /// Full-size cell with default hyperparameters.
    pub fn paper() -> Self {
        Self::default()
    }

    /// Desk-scale preset: K = 8, N_PRB = 6, L = 8, 50 episodes of 1 000
    /// steps, with hyperparameters sized for that budget. Greedy evaluation
    /// draws a fresh UE permutation per decision; with the identity a small
    /// bias of the main network against one output block can starve a UE.
    pub fn smoke() -> Self {
        Self {
            cell: CellConfig::smoke(),
            train: TrainConfig {
                batch_size: 32,
                replay_capacity: 20_000,
                gamma: 0.99,
                learn_every: 2,
                target_sync: 500,
                eval_random_perm: true,
                ..TrainConfig::default()
            },
            optimizer: OptimizerConfig {
                kind: OptimizerKind::Adam,
                learning_rate: 3e-4,
                ..OptimizerConfig::default()
            },
            schedule: ScheduleConfig {
                episodes: 50,
                episode_steps: 1_000,
                eval_seeds: 10,
                test_seeds: 20,
                bench_steps: 2_000,
                ..ScheduleConfig::default()
            },
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "smoke" => Ok(Self::smoke()),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected paper or smoke)"
            ))),
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        variant.apply(&mut self.train);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.cell.validate()?;
        self.train.validate()?;
        self.schedule.validate()?;
        if !(self.optimizer.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

/// Written before a run starts; enough to repeat it exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    pub variant: Option<Variant>,
    pub config: RunConfig,
    /// Agents of a benchmark run, as given on the command line.
    #[serde(default)]
    pub agents: Vec<String>,
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: u64, variant: Option<Variant>, config: RunConfig) -> Self {
        Self {
            tool: "ofdmarl".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            master_seed,
            variant,
            config,
            agents: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad manifest: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let c = RunConfig::smoke().with_variant(Variant::Sps);
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = RunConfig::from_toml_str("[schedule]\nepisodes = 3\n").unwrap();
        assert_eq!(c.schedule.episodes, 3);
        assert_eq!(c.cell, CellConfig::paper());
        assert!(RunConfig::from_toml_str("[schedule]\nepisodes = 'x'\n").is_err());
        assert!(RunConfig::from_toml_str("[cell]\nnum_ues = 6\n").is_err());
    }

    #[test]
    fn paper_episode_length() {
        let c = RunConfig::paper();
        assert_eq!(c.schedule.episode_steps, 17_500);
        assert_eq!(c.schedule.episode_steps / c.cell.num_prbs as u64, 700);
        assert_eq!(c.schedule.bench_steps, 65_536);
    }
}
