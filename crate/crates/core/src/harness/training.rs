use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::config::RunConfig;
use super::eval::{run_eval, AgentSpec, EvalReport};
use super::split::EnvSplit;
use crate::agent::{checkpoint, AgentParams, DqnAgent, FeaturePipeline, NetworkDims, StepRecord};
use crate::env::{CellConfig, EnvState};
use crate::rng::derive_seed;
use crate::{Error, Result};

pub const TRAINING_LOG_HEADER: &str = "step,episode,epsilon,mu,base_reward,bonus,loss";
pub const EVAL_LOG_HEADER: &str = "episode,step,mean,median,q1,q3,min,max,checkpoint";

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Where logs and checkpoints go; nothing is written without it.
    pub out_dir: Option<PathBuf>,
    /// Worker threads for evaluation (0 = one per core).
    pub jobs: usize,
    /// Keep every step record in memory.
    pub keep_records: bool,
    /// Print a line per evaluation point to stderr.
    pub progress: bool,
}

#[derive(Clone, Debug)]
pub struct EvalPoint {
    /// Episodes completed so far.
    pub episode: u64,
    pub step: u64,
    pub report: EvalReport,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug)]
pub struct TrainingOutcome {
    pub agent: DqnAgent,
    pub evals: Vec<EvalPoint>,
    pub records: Vec<StepRecord>,
    /// Parameters at the evaluation point with the highest mean reward
    /// (earliest on ties).
    pub best: Option<(u64, Arc<AgentParams>)>,
}

impl TrainingOutcome {
    /// Greedy policy of the best validated parameters, or of the final ones
    /// when no evaluation ran.
    pub fn best_spec(&self, name: &str) -> AgentSpec {
        match &self.best {
            Some((_, params)) => AgentSpec::Dqn {
                name: name.into(),
                params: params.clone(),
                pipeline: self.agent.pipeline().clone(),
                random_perm: self.agent.config.eval_random_perm,
            },
            None => dqn_spec(&self.agent, name),
        }
    }
}

pub fn checkpoint_name(episode: u64) -> String {
    format!("episode_{episode:04}.ckpt")
}

fn csv_row(r: &StepRecord) -> String {
    let loss = r.loss.map(|l| l.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{}",
        r.step, r.episode, r.epsilon, r.mu, r.base_reward, r.bonus, loss
    )
}

/// Greedy policy of `agent` as an evaluation recipe.
pub fn dqn_spec(agent: &DqnAgent, name: &str) -> AgentSpec {
    AgentSpec::Dqn {
        name: name.into(),
        params: Arc::new(agent.params().clone()),
        pipeline: agent.pipeline().clone(),
        random_perm: agent.config.eval_random_perm,
    }
}

/// Trains a DQN agent.
///
/// Episode `e` (0-based) replays training environment `e mod 7` from its
/// initial state with a fresh expert. After every `eval_every` episodes the
/// greedy policy is evaluated on the eval seeds and a checkpoint is written.
/// A numeric failure aborts the run; checkpoints already written stay.
pub fn run_training(
    config: &RunConfig,
    split: &EnvSplit,
    master_seed: u64,
    opts: &TrainOptions,
) -> Result<TrainingOutcome> {
    config.validate()?;
    let sched = &config.schedule;
    let cell = &config.cell;
    let mut agent = DqnAgent::new(
        cell,
        config.train.clone(),
        config.optimizer.clone(),
        derive_seed(master_seed, "agent"),
        sched.total_steps(),
    )?;

    let mut logs = match &opts.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut train = BufWriter::new(File::create(dir.join("training_log.csv"))?);
            let mut eval = BufWriter::new(File::create(dir.join("eval_log.csv"))?);
            writeln!(train, "{TRAINING_LOG_HEADER}")?;
            writeln!(eval, "{EVAL_LOG_HEADER}")?;
            Some((train, eval))
        }
        None => None,
    };

    let mut evals: Vec<EvalPoint> = Vec::new();
    let mut best: Option<(u64, Arc<AgentParams>)> = None;
    let mut records = Vec::new();
    for episode in 0..sched.episodes {
        let env_seed = split.training[(episode % split.training.len() as u64) as usize];
        let mut env = EnvState::new(cell.clone(), env_seed)?;
        let mut expert = config.train.expert.build(cell, derive_seed(env_seed, "expert"));
        let mut obs = Arc::new(env.observe());
        for s in 0..sched.episode_steps {
            let terminal = s + 1 == sched.episode_steps;
            let (rec, next) = agent.interact(&mut env, expert.as_mut(), episode, terminal, obs)?;
            obs = next;
            if let Some((train, _)) = &mut logs {
                writeln!(train, "{}", csv_row(&rec))?;
            }
            if opts.keep_records {
                records.push(rec);
            }
        }

        let done = episode + 1;
        if done % sched.eval_every == 0 {
            let report = run_eval(
                &dqn_spec(&agent, "dqn"),
                cell,
                &split.eval,
                sched.eval_steps(),
                opts.jobs,
            )?;
            let ckpt = match &opts.out_dir {
                Some(dir) => {
                    let path = dir.join(checkpoint_name(done));
                    save_agent(&agent, &path)?;
                    Some(path)
                }
                None => None,
            };
            if let Some((train, eval)) = &mut logs {
                train.flush()?;
                let s = &report.summary;
                let name = ckpt
                    .as_ref()
                    .and_then(|p| p.file_name())
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                writeln!(
                    eval,
                    "{done},{},{},{},{},{},{},{},{name}",
                    agent.steps(),
                    s.mean,
                    s.median,
                    s.q1,
                    s.q3,
                    s.min,
                    s.max
                )?;
                eval.flush()?;
            }
            if opts.progress {
                eprintln!(
                    "episode {done}/{}: eval mean reward {:.4}",
                    sched.episodes, report.summary.mean
                );
            }
            let improved = evals
                .iter()
                .all(|e| report.mean() > e.report.mean());
            if improved {
                best = Some((done, Arc::new(agent.params().clone())));
            }
            evals.push(EvalPoint {
                episode: done,
                step: agent.steps(),
                report,
                checkpoint: ckpt,
            });
        }
    }
    if let Some((mut train, mut eval)) = logs {
        train.flush()?;
        eval.flush()?;
    }
    Ok(TrainingOutcome {
        agent,
        evals,
        records,
        best,
    })
}

pub fn save_agent(agent: &DqnAgent, path: &Path) -> Result<()> {
    checkpoint::save(
        path,
        &agent.dims,
        &agent.config,
        agent.params(),
        agent.optimizer(),
    )
}

/// Evaluation recipe for a saved checkpoint on `cell`. The feature pipeline
/// follows the cell's QoS profiles and the checkpoint's age-cap setting.
pub fn load_dqn_spec(path: &Path, name: &str, cell: &CellConfig) -> Result<AgentSpec> {
    let ckpt = checkpoint::load(path)?;
    if ckpt.dims != NetworkDims::for_cell(cell) {
        return Err(Error::Shape(format!(
            "checkpoint {} was trained for {} UEs / {} PRBs / {} slots, cell has {} / {} / {}",
            path.display(),
            ckpt.dims.num_ues,
            ckpt.dims.num_prbs,
            ckpt.dims.buffer_len,
            cell.num_ues,
            cell.num_prbs,
            cell.buffer_len
        )));
    }
    Ok(AgentSpec::Dqn {
        name: name.into(),
        params: Arc::new(ckpt.params),
        pipeline: FeaturePipeline::new(cell, ckpt.train.age_cap, ckpt.train.shuffle_mode),
        random_perm: ckpt.train.eval_random_perm,
    })
}

/// Valid agent names for [`parse_agent`].
pub const AGENT_NAMES: &str = "rrit, pfca, knapsack, random, dqn:<checkpoint>";

/// Resolves a command-line agent name: a baseline or `dqn:<checkpoint path>`.
pub fn parse_agent(token: &str, cell: &CellConfig) -> Result<AgentSpec> {
    if let Some(path) = token.strip_prefix("dqn:") {
        let path = Path::new(path);
        if !path.is_file() {
            return Err(Error::Checkpoint(format!(
                "checkpoint {} not found",
                path.display()
            )));
        }
        return load_dqn_spec(path, token, cell);
    }
    token
        .parse()
        .map(AgentSpec::Baseline)
        .map_err(|_| Error::Config(format!("unknown agent '{token}' (valid: {AGENT_NAMES})")))
}
