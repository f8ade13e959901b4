//! TD learning, the acting loop and the evaluation-time policy.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::features::FeaturePipeline;
use super::micki::{micki_bonus, micki_mu};
use super::network::{permutation, AgentParams, NetworkDims};
use super::policy::{select_action, EpsilonSchedule};
use super::replay::{ReplayMemory, Transition};
use crate::baselines::{argmax_lowest, Scheduler};
use crate::env::{CellConfig, EnvState, Observation};
use crate::nn::gradcheck::{check, GradCheckOptions, GradCheckReport};
use crate::nn::{huber, Optimizer, OptimizerConfig, ParamSet};
use crate::rng::stream;
use crate::{Error, Result};

/// Encoder inputs, class identifiers and UE permutation for one forward pass.
#[derive(Clone, Debug)]
pub struct NetworkInput {
    pub features: Vec<Vec<f64>>,
    pub qis: Vec<u8>,
    pub perm: Vec<usize>,
    pub prb: usize,
}

/// Runs the feature pipeline over every UE, then draws the UE permutation.
pub fn build_input<R: Rng + ?Sized>(
    pipeline: &FeaturePipeline,
    obs: &Observation,
    training: bool,
    shuffle_ues: bool,
    rng: &mut R,
) -> NetworkInput {
    let features = obs
        .ues
        .iter()
        .map(|u| pipeline.ue_features(u, training, rng))
        .collect();
    NetworkInput {
        features,
        qis: obs.ues.iter().map(|u| u.qi).collect(),
        perm: permutation(obs.num_ues(), shuffle_ues, rng),
        prb: obs.prb_cursor,
    }
}

/// Q-values of `obs`, indexed by UE.
pub fn q_values(params: &AgentParams, input: &NetworkInput) -> Result<Vec<f64>> {
    Ok(params
        .forward(&input.features, &input.qis, input.prb, &input.perm)?
        .q)
}

/// Everything [`td_train_step`] needs besides the parameters.
pub struct TdContext<'a, R: Rng + ?Sized> {
    pub config: &'a TrainConfig,
    pub pipeline: &'a FeaturePipeline,
    pub rng: &'a mut R,
}

/// One optimizer step on the mean Huber loss of `batch`.
///
/// Targets are `r + gamma * max_a Q_target(s', a)`, or `r` on terminal
/// transitions; `target = None` bootstraps from `params` itself. No gradient
/// flows through the target. Returns the mean loss. On a non-finite loss or
/// gradient nothing is modified.
pub fn td_train_step<R: Rng + ?Sized>(
    params: &mut AgentParams,
    target: Option<&AgentParams>,
    batch: &[&Transition],
    opt: &mut Optimizer,
    ctx: &mut TdContext<'_, R>,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Contract("empty training batch".into()));
    }
    let cfg = ctx.config;
    let scale = 1.0 / batch.len() as f64;
    let mut grads = params.zeros_like();
    let mut total = 0.0;
    for t in batch {
        let input = build_input(ctx.pipeline, &t.state, true, cfg.ue_shuffle, ctx.rng);
        let y = if t.terminal {
            t.reward
        } else {
            let next = build_input(ctx.pipeline, &t.next_state, true, cfg.ue_shuffle, ctx.rng);
            let q_next = q_values(target.unwrap_or(&*params), &next)?;
            t.reward + cfg.gamma * q_next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        let fwd = params.forward(&input.features, &input.qis, input.prb, &input.perm)?;
        let (loss, dloss) = huber(fwd.q[t.action], y, cfg.huber_delta);
        let mut grad_q = vec![0.0; fwd.q.len()];
        grad_q[t.action] = dloss * scale;
        params.backward(&fwd, &grad_q, &mut grads)?;
        total += loss;
    }
    let mean = total * scale;
    if !mean.is_finite() {
        return Err(Error::Numeric("td loss".into()));
    }
    opt.step(params, &grads)?;
    Ok(mean)
}

/// What happened in one acting step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    /// 1-based global step counter.
    pub step: u64,
    pub episode: u64,
    pub epsilon: f64,
    pub mu: f64,
    pub action: usize,
    pub expert_action: usize,
    pub base_reward: f64,
    pub bonus: f64,
    pub loss: Option<f64>,
}

/// Learner state: online and target parameters, optimizer, replay memory
/// and private RNG streams for exploration, augmentation and sampling.
#[derive(Clone, Debug)]
pub struct DqnAgent {
    pub dims: NetworkDims,
    pub config: TrainConfig,
    pub(crate) params: AgentParams,
    pub(crate) target: Option<AgentParams>,
    pub(crate) optimizer: Optimizer,
    replay: ReplayMemory,
    pipeline: FeaturePipeline,
    epsilon: EpsilonSchedule,
    explore_rng: ChaCha8Rng,
    augment_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    steps: u64,
}

impl DqnAgent {
    /// `total_steps` only sizes the default epsilon schedule.
    pub fn new(
        cell: &CellConfig,
        config: TrainConfig,
        optimizer: OptimizerConfig,
        seed: u64,
        total_steps: u64,
    ) -> Result<Self> {
        cell.validate()?;
        config.validate()?;
        let dims = NetworkDims::for_cell(cell);
        let params = AgentParams::new(&dims, seed);
        Self::with_params(cell, config, optimizer, seed, total_steps, params)
    }

    pub fn with_params(
        cell: &CellConfig,
        config: TrainConfig,
        optimizer: OptimizerConfig,
        seed: u64,
        total_steps: u64,
        params: AgentParams,
    ) -> Result<Self> {
        let dims = NetworkDims::for_cell(cell);
        check_fits(&dims, &params)?;
        Ok(Self {
            target: (config.target_sync > 0).then(|| params.clone()),
            params,
            optimizer: Optimizer::new(optimizer)?,
            replay: ReplayMemory::new(config.replay_capacity),
            pipeline: FeaturePipeline::new(cell, config.age_cap, config.shuffle_mode),
            epsilon: config.epsilon_schedule(total_steps),
            explore_rng: stream(seed, "explore"),
            augment_rng: stream(seed, "augment"),
            replay_rng: stream(seed, "replay"),
            steps: 0,
            dims,
            config,
        })
    }

    pub fn params(&self) -> &AgentParams {
        &self.params
    }

    pub fn target_params(&self) -> Option<&AgentParams> {
        self.target.as_ref()
    }

    pub fn optimizer(&self) -> &Optimizer {
        &self.optimizer
    }

    pub fn replay(&self) -> &ReplayMemory {
        &self.replay
    }

    pub fn pipeline(&self) -> &FeaturePipeline {
        &self.pipeline
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn epsilon_at(&self, step: u64) -> f64 {
        self.epsilon.value(step)
    }

    /// Training-time action: augmented features, shuffled UEs, epsilon-greedy.
    pub fn act(&mut self, obs: &Observation, epsilon: f64) -> Result<usize> {
        let input = build_input(
            &self.pipeline,
            obs,
            true,
            self.config.ue_shuffle,
            &mut self.augment_rng,
        );
        let q = q_values(&self.params, &input)?;
        Ok(select_action(&q, epsilon, &mut self.explore_rng))
    }

    /// One environment step with expert shadowing, storage and learning.
    ///
    /// The expert sees the same observation before the environment moves.
    /// `terminal` marks the last step of an episode.
    pub fn interact(
        &mut self,
        env: &mut EnvState,
        expert: &mut dyn Scheduler,
        episode: u64,
        terminal: bool,
        state: Arc<Observation>,
    ) -> Result<(StepRecord, Arc<Observation>)> {
        let epsilon = self.epsilon.value(self.steps);
        let mu = micki_mu(self.config.mu0, self.config.rho, episode);
        let action = self.act(&state, epsilon)?;
        let expert_action = expert.select(&state);
        let alloc = env.allocate_prb(action)?;
        let base_reward = alloc.reward.unwrap_or(0.0);
        let bonus = micki_bonus(action, expert_action, mu);
        let next_state = Arc::new(env.observe());
        self.replay.push(Transition {
            state,
            action,
            reward: base_reward + bonus,
            base_reward,
            bonus,
            episode,
            next_state: next_state.clone(),
            terminal,
        });
        self.steps += 1;

        let mut loss = None;
        if self.steps.is_multiple_of(self.config.learn_every) {
            loss = self.learn()?;
        }
        if let Some(target) = &mut self.target {
            if self.steps.is_multiple_of(self.config.target_sync) {
                target.clone_from(&self.params);
            }
        }
        Ok((
            StepRecord {
                step: self.steps,
                episode,
                epsilon,
                mu,
                action,
                expert_action,
                base_reward,
                bonus,
                loss,
            },
            next_state,
        ))
    }

    /// A TD step on a fresh batch, or `None` while the memory is warming up.
    pub fn learn(&mut self) -> Result<Option<f64>> {
        let Some(idx) = self
            .replay
            .sample_indices(self.config.batch_size, &mut self.replay_rng)
        else {
            return Ok(None);
        };
        let batch: Vec<&Transition> = idx.into_iter().map(|i| self.replay.get(i)).collect();
        let mut ctx = TdContext {
            config: &self.config,
            pipeline: &self.pipeline,
            rng: &mut self.augment_rng,
        };
        td_train_step(
            &mut self.params,
            self.target.as_ref(),
            &batch,
            &mut self.optimizer,
            &mut ctx,
        )
        .map(Some)
    }

    /// Greedy evaluation policy over a snapshot of the current parameters.
    pub fn policy(&self, seed: u64) -> DqnPolicy {
        DqnPolicy::new(
            Arc::new(self.params.clone()),
            self.pipeline.clone(),
            self.config.eval_random_perm,
            seed,
        )
    }
}

fn check_fits(dims: &NetworkDims, params: &AgentParams) -> Result<()> {
    let enn_ok = params
        .enn
        .iter()
        .all(|e| e.input_width() == dims.enn_input() && e.output_width() == dims.enn_out);
    if !enn_ok
        || params.main.input_width() != dims.main_input()
        || params.main.output_width() != dims.num_ues
        || params.embedding.rows() != dims.num_prbs
    {
        return Err(Error::Shape(format!(
            "network does not fit a cell with {} UEs, {} PRBs and {} buffer slots",
            dims.num_ues, dims.num_prbs, dims.buffer_len
        )));
    }
    Ok(())
}

/// Greedy (epsilon = 0) scheduler over an immutable parameter snapshot.
#[derive(Clone, Debug)]
pub struct DqnPolicy {
    params: Arc<AgentParams>,
    pipeline: FeaturePipeline,
    random_perm: bool,
    rng: ChaCha8Rng,
    name: String,
}

impl DqnPolicy {
    pub fn new(
        params: Arc<AgentParams>,
        pipeline: FeaturePipeline,
        random_perm: bool,
        seed: u64,
    ) -> Self {
        Self {
            params,
            pipeline,
            random_perm,
            rng: stream(seed, "dqn-eval"),
            name: "dqn".into(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn params(&self) -> &AgentParams {
        &self.params
    }

    /// Checks that the snapshot fits `cell`.
    pub fn validate_for(&self, cell: &CellConfig) -> Result<()> {
        check_fits(&NetworkDims::for_cell(cell), &self.params)?;
        if self.pipeline.buffer_len != cell.buffer_len {
            return Err(Error::Shape("feature pipeline buffer length differs from cell".into()));
        }
        Ok(())
    }

    pub fn q_values(&mut self, obs: &Observation) -> Result<Vec<f64>> {
        let input = build_input(&self.pipeline, obs, false, self.random_perm, &mut self.rng);
        q_values(&self.params, &input)
    }
}

impl Scheduler for DqnPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, obs: &Observation) -> usize {
        let q = self
            .q_values(obs)
            .expect("policy validated against the cell before use");
        argmax_lowest(q).unwrap_or(0)
    }
}

/// Finite-difference check of the whole composed network on one transition:
/// ENNs, PRB embedding, UE permutation, main network and the Huber loss
/// against a fixed target. `corrupt` scales one analytic bias gradient by
/// 1.5 as a negative control.
pub fn full_network_grad_check(
    params: &AgentParams,
    input: &NetworkInput,
    action: usize,
    target: f64,
    delta: f64,
    opts: &GradCheckOptions,
    corrupt: bool,
) -> Result<GradCheckReport> {
    let fwd = params.forward(&input.features, &input.qis, input.prb, &input.perm)?;
    let (_, dloss) = huber(fwd.q[action], target, delta);
    let mut grad_q = vec![0.0; fwd.q.len()];
    grad_q[action] = dloss;
    let mut grads = params.zeros_like();
    params.backward(&fwd, &grad_q, &mut grads)?;
    let mut opts = opts.clone();
    if corrupt {
        let last = grads.main.layers().len() - 1;
        let j = input.perm.iter().position(|&u| u == action).unwrap_or(0);
        grads.main.layers_mut()[last].bias[j] *= 1.5;
        opts.include.push((format!("main.layer{last}.bias"), j));
    }
    let mut failure = None;
    let report = check(
        params,
        &grads,
        |p: &AgentParams| match p.forward(&input.features, &input.qis, input.prb, &input.perm) {
            Ok(f) => (huber(f.q[action], target, delta).0, p.relu_signature(&f)),
            Err(e) => {
                failure.get_or_insert(e);
                (f64::NAN, 0)
            }
        },
        &opts,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}
