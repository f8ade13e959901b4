use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::agent::{AgentParams, DqnPolicy, FeaturePipeline};
use crate::baselines::{BaselineKind, Scheduler};
use crate::env::{CellConfig, EnvState};
use crate::rng::derive_seed;
use crate::stats::Summary;
use crate::{Error, Result};

/// A recipe for a scheduler; every environment gets a fresh instance.
#[derive(Clone, Debug)]
pub enum AgentSpec {
    Baseline(BaselineKind),
    Dqn {
        name: String,
        params: Arc<AgentParams>,
        pipeline: FeaturePipeline,
        random_perm: bool,
    },
}

impl AgentSpec {
    pub fn name(&self) -> String {
        match self {
            Self::Baseline(kind) => kind.to_string(),
            Self::Dqn { name, .. } => name.clone(),
        }
    }

    /// A scheduler for the environment with seed `env_seed`.
    pub fn build(&self, cell: &CellConfig, env_seed: u64) -> Result<Box<dyn Scheduler>> {
        let seed = derive_seed(env_seed, "agent");
        Ok(match self {
            Self::Baseline(kind) => kind.build(cell, seed),
            Self::Dqn {
                name,
                params,
                pipeline,
                random_perm,
            } => {
                let p = DqnPolicy::new(params.clone(), pipeline.clone(), *random_perm, seed)
                    .with_name(name.clone());
                p.validate_for(cell)?;
                Box::new(p)
            }
        })
    }
}

/// Mean per-TTI reward of each environment and their summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub agent: String,
    pub seeds: Vec<u64>,
    pub env_means: Vec<f64>,
    pub summary: Summary,
}

impl EvalReport {
    pub fn new(agent: String, seeds: Vec<u64>, env_means: Vec<f64>) -> Self {
        let summary = Summary::of(&env_means);
        Self {
            agent,
            seeds,
            env_means,
            summary,
        }
    }

    pub fn mean(&self) -> f64 {
        self.summary.mean
    }
}

/// Runs `steps` allocations on a fresh environment and returns the mean
/// reward over the completed TTIs (0 if none completed).
pub fn run_episode(
    scheduler: &mut dyn Scheduler,
    cell: &CellConfig,
    env_seed: u64,
    steps: u64,
) -> Result<f64> {
    let mut env = EnvState::new(cell.clone(), env_seed)?;
    let mut total = 0.0;
    let mut ttis = 0u64;
    for _ in 0..steps {
        let obs = env.observe();
        let a = scheduler.select(&obs);
        if let Some(r) = env.allocate_prb(a)?.reward {
            total += r;
            ttis += 1;
        }
    }
    Ok(if ttis == 0 { 0.0 } else { total / ttis as f64 })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Evaluates `agent` on every seed; `jobs` threads (0 = one per core).
/// Results do not depend on `jobs`.
pub fn run_eval(
    agent: &AgentSpec,
    cell: &CellConfig,
    seeds: &[u64],
    steps: u64,
    jobs: usize,
) -> Result<EvalReport> {
    let one = |&seed: &u64| -> Result<f64> {
        let mut s = agent.build(cell, seed)?;
        run_episode(s.as_mut(), cell, seed, steps)
    };
    let means: Vec<f64> = if jobs == 1 {
        seeds.iter().map(one).collect::<Result<_>>()?
    } else {
        pool(jobs)?.install(|| seeds.par_iter().map(one).collect::<Result<_>>())?
    };
    Ok(EvalReport::new(agent.name(), seeds.to_vec(), means))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_is_deterministic_and_parallel_safe() {
        let cell = CellConfig::smoke();
        let seeds = [1, 2, 3, 4];
        let agent = AgentSpec::Baseline(BaselineKind::Random);
        let a = run_eval(&agent, &cell, &seeds, 300, 1).unwrap();
        let b = run_eval(&agent, &cell, &seeds, 300, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.env_means.len(), 4);
        assert!(a.env_means.iter().all(|&m| m <= 0.0));
    }

    #[test]
    fn too_short_run_has_zero_mean() {
        let cell = CellConfig::smoke();
        let mut s = BaselineKind::Rrit.build(&cell, 0);
        assert_eq!(run_episode(s.as_mut(), &cell, 1, 5).unwrap(), 0.0);
    }
}
