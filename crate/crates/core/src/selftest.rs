//! Invariant checks shared by `ofdmarl selftest` and the test suites.
//!
//! Each check returns a [`Check`] with a one-line detail; the sizes are
//! parameters so the CLI can run a quick pass and tests a thorough one.

use std::time::Instant;

use rand::Rng;

use crate::agent::{
    apply_age_cap, build_input, full_network_grad_check, q_values, select_action, shuffle_packets,
    AgentParams, FeaturePipeline, NetworkDims, ReplayMemory, ShuffleMode, Transition,
};
use crate::baselines::knapsack::{solve, Item};
use crate::env::{CellConfig, EnvState, Packet};
use crate::nn::gradcheck::GradCheckOptions;
use crate::nn::{Activation, Dense, EmbeddingTable, Mlp};
use crate::rng::stream;
use crate::stats::chi_square;
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

/// Gradient check of the composed network (encoders, embedding, UE
/// permutation, main network, Huber loss) on `instances` random cells and
/// observations. `corrupt` injects a wrong bias gradient.
pub fn gradient_check(instances: usize, seed: u64, corrupt: bool) -> Result<Check> {
    let start = Instant::now();
    let mut rng = stream(seed, "selftest-gradcheck");
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..instances {
        let cell = CellConfig {
            num_ues: 4 * rng.random_range(1..=2),
            num_prbs: rng.random_range(2..=8),
            buffer_len: rng.random_range(2..=6),
            ..CellConfig::smoke()
        };
        let dims = NetworkDims::for_cell(&cell);
        let params = AgentParams::new(&dims, rng.random());
        let pipe = FeaturePipeline::new(&cell, rng.random(), ShuffleMode::None);
        let mut env = EnvState::new(cell.clone(), rng.random())?;
        for _ in 0..rng.random_range(0..400) {
            env.allocate_prb(rng.random_range(0..cell.num_ues))?;
        }
        let input = build_input(&pipe, &env.observe(), false, true, &mut rng);
        let action = rng.random_range(0..cell.num_ues);
        let target = rng.random_range(-3.0..3.0);
        let opts = GradCheckOptions {
            max_params: 1_500,
            sample_seed: i as u64,
            ..GradCheckOptions::default()
        };
        let r = full_network_grad_check(&params, &input, action, target, 1.0, &opts, corrupt)?;
        worst = worst.max(r.max_rel_err);
        checked += r.checked;
    }
    Ok(Check::new(
        "gradient check",
        worst < 1e-4,
        format!(
            "max relative error {worst:.3e} over {instances} networks, {checked} coordinates, {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    ))
}

pub fn age_cap_check(pairs: usize, seed: u64) -> Check {
    let mut rng = stream(seed, "selftest-agecap");
    let mut bad = 0;
    for _ in 0..pairs {
        let age: u32 = rng.random();
        let pdb: u32 = rng.random_range(1..u32::MAX);
        let once = apply_age_cap(age, pdb);
        if once != age.min(pdb + 1) || apply_age_cap(once, pdb) != once {
            bad += 1;
        }
    }
    Check::new(
        "age capping",
        bad == 0,
        format!("{bad} mismatches in {pairs} pairs"),
    )
}

/// SPS keeps the packet order on every draw for every fill level.
pub fn sps_order_check(draws: usize, slots: usize, seed: u64) -> Check {
    let mut rng = stream(seed, "selftest-sps");
    let mut bad = 0;
    for d in 0..draws {
        let m = 1 + d % slots;
        let mut buf: Vec<Option<Packet>> = (0..m as u32).map(|i| Some(Packet::new(i + 1, 0))).collect();
        buf.resize(slots, None);
        let out = shuffle_packets(&buf, ShuffleMode::Sps, &mut rng);
        let order: Vec<u32> = out.iter().flatten().map(|p| p.size).collect();
        if order != (1..=m as u32).collect::<Vec<_>>() {
            bad += 1;
        }
    }
    Check::new(
        "sorted packet shuffling keeps order",
        bad == 0,
        format!("{bad} violations in {draws} draws, L = {slots}"),
    )
}

/// RPS with L = 4 and two packets: all 12 ordered placements equally likely.
pub fn rps_uniformity_check(draws: usize, seed: u64) -> Check {
    let mut rng = stream(seed, "selftest-rps");
    let buf = vec![Some(Packet::new(1, 0)), Some(Packet::new(2, 0)), None, None];
    let mut counts = [0u64; 16];
    for _ in 0..draws {
        let out = shuffle_packets(&buf, ShuffleMode::Rps, &mut rng);
        let pa = out.iter().position(|p| p.is_some_and(|p| p.size == 1)).unwrap_or(0);
        let pb = out.iter().position(|p| p.is_some_and(|p| p.size == 2)).unwrap_or(0);
        counts[pa * 4 + pb] += 1;
    }
    let cells: Vec<u64> = (0..16).filter(|c| c / 4 != c % 4).map(|c| counts[c]).collect();
    let impossible: u64 = (0..4).map(|d| counts[d * 4 + d]).sum();
    let (stat, p) = chi_square(&cells, &[draws as f64 / 12.0; 12]);
    Check::new(
        "random packet shuffling is uniform",
        impossible == 0 && p > 1e-3,
        format!("chi-square {stat:.2} on 11 dof, p = {p:.4}, {draws} draws"),
    )
}

/// Uniform exploration and uniform replay sampling.
pub fn sampling_uniformity_check(draws: usize, seed: u64) -> Result<Check> {
    let mut rng = stream(seed, "selftest-sampling");
    let mut picks = [0u64; 4];
    for _ in 0..draws {
        picks[select_action(&[0.0, 1.0, 2.0, 3.0], 1.0, &mut rng)] += 1;
    }
    let (_, p_eps) = chi_square(&picks, &[draws as f64 / 4.0; 4]);

    let obs = std::sync::Arc::new(EnvState::new(CellConfig::smoke(), seed)?.observe());
    let mut mem = ReplayMemory::new(10);
    for a in 0..10 {
        mem.push(Transition {
            state: obs.clone(),
            action: a,
            reward: 0.0,
            base_reward: 0.0,
            bonus: 0.0,
            episode: 0,
            next_state: obs.clone(),
            terminal: false,
        });
    }
    let mut hits = [0u64; 10];
    for _ in 0..draws {
        let b = mem.sample(1, &mut rng).expect("memory holds 10");
        hits[b[0].action] += 1;
    }
    let (_, p_replay) = chi_square(&hits, &[draws as f64 / 10.0; 10]);
    Ok(Check::new(
        "exploration and replay sampling are uniform",
        p_eps > 1e-3 && p_replay > 1e-3,
        format!("p = {p_eps:.4} (epsilon = 1, K = 4), p = {p_replay:.4} (replay of 10)"),
    ))
}

/// With a main network that copies block `j`'s first code component to
/// output `j`, the Q-values must not depend on the UE permutation.
pub fn ue_shuffle_check(observations: usize, perms: usize, seed: u64) -> Result<Check> {
    let cell = CellConfig::smoke();
    let dims = NetworkDims::for_cell(&cell);
    let k = dims.num_ues;
    let width = dims.main_input();
    let mut d = Dense::zeros(width, k, Activation::Linear);
    for j in 0..k {
        d.weight[j * width + j * dims.enn_out] = 1.0;
    }
    let base = AgentParams::new(&dims, seed);
    let params = AgentParams::from_parts(
        base.enn,
        Mlp::from_layers(vec![d])?,
        EmbeddingTable::random(dims.num_prbs, &mut stream(seed, "emb")),
    )?;
    let pipe = FeaturePipeline::new(&cell, true, ShuffleMode::None);
    let mut rng = stream(seed, "selftest-ueshuffle");
    let mut env = EnvState::new(cell.clone(), seed)?;
    let mut bad = 0;
    for _ in 0..observations {
        for _ in 0..rng.random_range(1..200) {
            env.allocate_prb(rng.random_range(0..k))?;
        }
        let obs = env.observe();
        let plain = build_input(&pipe, &obs, false, false, &mut rng);
        let expected: Vec<f64> = (0..k)
            .map(|u| params.encode_ue(plain.qis[u], &plain.features[u]).map(|z| z[0]))
            .collect::<Result<_>>()?;
        for _ in 0..perms {
            let shuffled = build_input(&pipe, &obs, false, true, &mut rng);
            if q_values(&params, &shuffled)? != expected {
                bad += 1;
            }
        }
    }
    Ok(Check::new(
        "UE shuffling is undone at the output",
        bad == 0,
        format!("{bad} mismatches over {observations} observations x {perms} permutations"),
    ))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnvInvariantStats {
    pub ttis: u64,
    pub reflections: u64,
    pub max_speed_rel_err: f64,
    pub violations: Vec<String>,
}

/// Drives `cell` with uniformly random actions for `ttis` TTIs and checks
/// PRB accounting, packet aging, position containment, speed conservation
/// and the reward sign.
pub fn env_invariants(cell: &CellConfig, ttis: u64, seed: u64) -> Result<EnvInvariantStats> {
    let mut env = EnvState::new(cell.clone(), seed)?;
    let mut rng = stream(seed, "selftest-env-actions");
    let k = cell.num_ues;
    let speeds: Vec<f64> = env.ues.iter().map(|u| u.speed()).collect();
    let mut stats = EnvInvariantStats::default();
    let fail = |msg: String, stats: &mut EnvInvariantStats| {
        if stats.violations.len() < 10 {
            stats.violations.push(msg);
        }
    };
    for t in 0..ttis {
        let start_tti = env.tti();
        let mut allocations = 0;
        loop {
            let before: Vec<Vec<Packet>> =
                env.ues.iter().map(|u| u.buffer.iter().copied().collect()).collect();
            let ue = rng.random_range(0..k);
            let alloc = env.allocate_prb(ue)?;
            allocations += 1;
            let Some(reward) = alloc.reward else {
                if env.tti() != start_tti {
                    fail(format!("TTI {t} closed without a reward"), &mut stats);
                }
                continue;
            };
            if reward > 0.0 {
                fail(format!("TTI {t}: positive reward {reward}"), &mut stats);
            }
            if env.tti() != start_tti + 1 {
                fail(format!("TTI {t}: counter jumped to {}", env.tti()), &mut stats);
            }
            for (u, (prev, now)) in before.iter().zip(&env.ues).enumerate() {
                let survivors: Vec<Packet> =
                    now.buffer.iter().copied().filter(|p| p.age > 0).collect();
                if survivors.len() > prev.len() {
                    fail(format!("TTI {t}, UE {u}: aged packets appeared"), &mut stats);
                    continue;
                }
                let tail = &prev[prev.len() - survivors.len()..];
                for (i, (old, new)) in tail.iter().zip(&survivors).enumerate() {
                    let partial = u == ue && i == 0;
                    let size_ok = if partial {
                        new.size <= old.size
                    } else {
                        new.size == old.size
                    };
                    if new.age != old.age + 1 || !size_ok {
                        fail(
                            format!("TTI {t}, UE {u}: packet {old:?} became {new:?}"),
                            &mut stats,
                        );
                    }
                }
            }
            break;
        }
        if allocations != cell.num_prbs {
            fail(format!("TTI {t}: {allocations} allocations"), &mut stats);
        }
        for (u, ue) in env.ues.iter().enumerate() {
            let inside = ue
                .position
                .iter()
                .all(|&x| (0.0..=cell.area_side).contains(&x));
            if !inside {
                fail(format!("TTI {t}, UE {u}: left the square at {:?}", ue.position), &mut stats);
            }
            let err = (ue.speed() - speeds[u]).abs() / speeds[u];
            stats.max_speed_rel_err = stats.max_speed_rel_err.max(err);
        }
    }
    stats.ttis = ttis;
    stats.reflections = env.reflections();
    Ok(stats)
}

pub fn env_invariant_check(ttis: u64, seed: u64) -> Result<Check> {
    // Fast UEs so that edge reflections are frequent.
    let cell = CellConfig {
        speed_mean: 300.0,
        speed_std: 40.0,
        ..CellConfig::smoke()
    };
    let s = env_invariants(&cell, ttis, seed)?;
    let passed = s.violations.is_empty() && s.reflections >= 100 && s.max_speed_rel_err < 1e-9;
    let mut detail = format!(
        "{} TTIs, {} reflections, max speed drift {:.1e}",
        s.ttis, s.reflections, s.max_speed_rel_err
    );
    if let Some(v) = s.violations.first() {
        detail.push_str(&format!("; first violation: {v}"));
    }
    Ok(Check::new("environment invariants", passed, detail))
}

/// Best subset by enumeration; ties keep the numerically smallest mask.
pub fn knapsack_exhaustive(items: &[Item], capacity: u64) -> (f64, u32) {
    let mut best = (0.0, 0u32);
    for mask in 0u32..(1 << items.len()) {
        let (w, v) = items
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .fold((0u64, 0.0), |(w, v), (_, it)| (w + it.weight, v + it.value));
        if w <= capacity && v > best.0 {
            best = (v, mask);
        }
    }
    best
}

pub fn knapsack_oracle_check(instances: usize, seed: u64) -> Check {
    let mut rng = stream(seed, "selftest-knapsack");
    let mut bad = 0;
    for _ in 0..instances {
        let n = rng.random_range(0..=12);
        let items: Vec<Item> = (0..n)
            .map(|_| Item {
                weight: rng.random_range(1..=60),
                value: f64::from(rng.random_range(0..=20u32)),
            })
            .collect();
        let capacity = rng.random_range(0..=200);
        let sol = solve(&items, capacity);
        let mask = sol
            .selected
            .iter()
            .enumerate()
            .fold(0u32, |m, (i, &s)| m | (u32::from(s) << i));
        let (value, best_mask) = knapsack_exhaustive(&items, capacity);
        if sol.value != value || mask != best_mask || sol.weight(&items) > capacity {
            bad += 1;
        }
    }
    Check::new(
        "knapsack matches exhaustive search",
        bad == 0,
        format!("{bad} mismatches in {instances} instances of up to 12 items"),
    )
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Corrupt one analytic gradient (negative control).
    pub fault_gradient: bool,
}

/// The quick invariant suite behind `ofdmarl selftest`.
pub fn run_selftest(opts: SelftestOptions) -> Result<Vec<Check>> {
    let s = opts.seed;
    Ok(vec![
        gradient_check(20, s, opts.fault_gradient)?,
        age_cap_check(100_000, s),
        sps_order_check(20_000, 8, s),
        rps_uniformity_check(60_000, s),
        sampling_uniformity_check(40_000, s)?,
        ue_shuffle_check(10, 20, s)?,
        env_invariant_check(100_000, s)?,
        knapsack_oracle_check(500, s),
    ])
}
