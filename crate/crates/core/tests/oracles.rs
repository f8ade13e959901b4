//! Hand-evaluated examples checked through the public API. Indices are
//! 0-based; QoS classes are 1..=4.

use std::sync::Arc;

use ofdmarl_core::agent::{
    apply_age_cap, micki_bonus, micki_mu, select_action, shuffle_packets, FeaturePipeline,
    ReplayMemory, ShuffleMode, Transition,
};
use ofdmarl_core::baselines::knapsack::{solve, Item};
use ofdmarl_core::baselines::{
    knapsack_select, pfca_select, rrit_select, BaselineKind, RritCursor,
};
use ofdmarl_core::env::{
    compute_cqi, reflect, CellConfig, ChannelConfig, EnvState, Observation, Packet, UeObservation,
};
use ofdmarl_core::harness::{run_eval, write_benchmark_csv, AgentSpec, EvalReport};
use ofdmarl_core::nn::{
    embedding_dim, huber, Activation, Dense, Mlp, Optimizer, OptimizerConfig, OptimizerKind,
};
use ofdmarl_core::rng::stream;
use ofdmarl_core::Error;

fn obs_with(traffic: &[usize], k: usize) -> Observation {
    let ues = (0..k)
        .map(|u| UeObservation {
            qi: (u % 4) as u8 + 1,
            cqi: 9,
            cqi_mean: 9.0,
            tbs_bits: 500,
            avg_throughput: 100.0,
            packets: if traffic.contains(&u) {
                vec![Packet::new(300, 1)]
            } else {
                Vec::new()
            },
        })
        .collect();
    Observation {
        ues,
        prb_cursor: 0,
        num_prbs: 4,
        buffer_len: 8,
        tti: 0,
    }
}

#[test]
fn paper_cell_has_eight_ues_per_class() {
    let env = EnvState::new(CellConfig::paper(), 7).unwrap();
    for qi in 1..=4 {
        assert_eq!(env.ues.iter().filter(|u| u.qi == qi).count(), 8);
    }
}

#[test]
fn same_seed_same_state() {
    let cell = CellConfig {
        num_ues: 4,
        ..CellConfig::smoke()
    };
    let a = EnvState::new(cell.clone(), 11).unwrap();
    let b = EnvState::new(cell, 11).unwrap();
    assert_eq!(a.ues, b.ues);
    assert_eq!(a.observe(), b.observe());
}

#[test]
fn ue_count_must_be_multiple_of_four() {
    let cell = CellConfig {
        num_ues: 6,
        ..CellConfig::smoke()
    };
    assert!(matches!(EnvState::new(cell, 1), Err(Error::Config(_))));
}

fn flat_tbs_env(tbs: u32) -> EnvState {
    let cell = CellConfig {
        tbs_table: (0..16).map(|c| if c == 0 { 0 } else { tbs }).collect(),
        ..CellConfig::smoke()
    };
    let mut env = EnvState::new(cell, 3).unwrap();
    for ue in &mut env.ues {
        ue.cqi = ue.cqi.max(1);
    }
    env
}

#[test]
fn fifo_drain_examples() {
    let mut env = flat_tbs_env(1200);
    assert_eq!(env.allocate_prb(1).unwrap().bits, 0);
    assert!(env.ues[1].buffer.is_empty());

    env.ues[0].buffer.push_back(Packet::new(1000, 3));
    assert_eq!(env.allocate_prb(0).unwrap().bits, 1000);
    assert!(env.ues[0].buffer.is_empty());

    env.ues[0].buffer.push_back(Packet::new(2000, 5));
    assert_eq!(env.allocate_prb(0).unwrap().bits, 1200);
    assert_eq!(env.ues[0].buffer.iter().copied().collect::<Vec<_>>(), vec![Packet::new(800, 5)]);
}

#[test]
fn fresh_cell_closes_first_tti_without_penalty() {
    let mut env = EnvState::new(CellConfig::smoke(), 5).unwrap();
    let mut reward = None;
    for _ in 0..env.config().num_prbs {
        reward = env.allocate_prb(0).unwrap().reward;
    }
    assert_eq!(reward, Some(0.0));
    assert_eq!(env.prb_cursor(), 0);
    assert_eq!(env.tti(), 1);
}

#[test]
fn packet_at_budget_costs_one_through_its_guaranteed_rate() {
    let mut env = EnvState::new(CellConfig::smoke(), 5).unwrap();
    let voice = env.ues.iter().position(|u| u.qi == 1).unwrap();
    let other = (voice + 1) % env.num_ues();
    let pdb = env.config().qos_for(1).pdb;
    env.ues[voice].buffer.push_back(Packet::new(368, pdb - 1));
    let mut reward = None;
    for _ in 0..env.config().num_prbs {
        reward = env.allocate_prb(other).unwrap().reward;
    }
    assert_eq!(env.ues[voice].buffer[0].age, pdb);
    assert_eq!(reward, Some(-1.0));
}

#[test]
fn late_packets_and_drops() {
    let mut cell = CellConfig::smoke();
    for q in &mut cell.qos {
        q.penalty_weight = 1.0;
        q.gbr = 0.0;
    }
    let mut env = EnvState::new(cell, 5).unwrap();
    let pdb = env.config().qos_for(env.ues[0].qi).pdb;
    env.ues[0].buffer.extend([Packet::new(10, pdb), Packet::new(10, pdb + 7)]);
    let mut reward = None;
    for _ in 0..env.config().num_prbs {
        reward = env.allocate_prb(1).unwrap().reward;
    }
    assert_eq!(reward, Some(-2.0));
}

#[test]
fn specular_reflection() {
    let (x, v, bounces) = reflect(999.9 + 0.2, 0.2, 1000.0);
    assert!((x - 999.9).abs() < 1e-9);
    assert_eq!(v, -0.2);
    assert_eq!(bounces, 1);
}

#[test]
fn cqi_examples() {
    let cell = CellConfig {
        channel: ChannelConfig {
            tx_power_dbm: 40.0,
            noise_dbm: -100.0,
            snr_min_db: 0.0,
            snr_step_db: 2.0,
            ..ChannelConfig::default()
        },
        ..CellConfig::paper()
    };
    let c = cell.area_side / 2.0;
    assert_eq!(compute_cqi([c, c], 0.0, &cell), 15);
    // 40 - (128.1 + 37.6 log10(0.5)) + 100 = 23.22 dB -> 11.61 steps -> 12
    let pl = 128.1 + 37.6 * 0.5f64.log10();
    let expected = ((40.0 - pl + 100.0) / 2.0).round() as u8;
    assert_eq!(expected, 12);
    assert_eq!(compute_cqi([c + 500.0, c], 0.0, &cell), expected);
    // Far corner with deep fading clamps to 0.
    assert_eq!(compute_cqi([0.0, 0.0], -200.0, &cell), 0);
}

#[test]
fn rrit_examples() {
    let k = 8;
    let (pick, _) = rrit_select(&obs_with(&[4], k), RritCursor { last_served: 1 });
    assert_eq!(pick, 4);

    let obs = obs_with(&[2, 6], k);
    let (first, cursor) = rrit_select(&obs, RritCursor { last_served: 2 });
    let (second, _) = rrit_select(&obs, cursor);
    assert_eq!((first, second), (6, 2));

    let (pick, _) = rrit_select(&obs_with(&[], k), RritCursor { last_served: k - 1 });
    assert_eq!(pick, 0);
}

#[test]
fn pfca_examples() {
    let mut obs = obs_with(&[0, 1], 2);
    obs.ues[0].tbs_bits = 1000;
    obs.ues[0].avg_throughput = 100.0;
    obs.ues[1].tbs_bits = 600;
    obs.ues[1].avg_throughput = 20.0;
    assert_eq!(pfca_select(&obs), 1);

    let obs = obs_with(&[2, 9], 12);
    assert_eq!(pfca_select(&obs), 2);
    assert_eq!(pfca_select(&obs_with(&[5], 8)), 5);
}

#[test]
fn knapsack_examples() {
    let cell = CellConfig::smoke();
    assert_eq!(knapsack_select(&obs_with(&[3], 8), &cell.qos, 4), 3);

    let items = [
        Item { weight: 3, value: 4.0 },
        Item { weight: 4, value: 5.0 },
        Item { weight: 5, value: 6.0 },
    ];
    let mut best = 0.0f64;
    for mask in 0..8u32 {
        let (w, v) = (0..3)
            .filter(|i| mask >> i & 1 == 1)
            .fold((0, 0.0), |(w, v), i| (w + items[i].weight, v + items[i].value));
        if w <= 9 {
            best = best.max(v);
        }
    }
    let s = solve(&items, 9);
    assert_eq!(s.value, best);
    assert_eq!(s.selected, vec![false, true, true]);

    let twins = [Item { weight: 2, value: 1.0 }, Item { weight: 2, value: 1.0 }];
    assert_eq!(solve(&twins, 2).selected, vec![true, false]);
}

#[test]
fn random_scheduler_examples() {
    let cell = CellConfig::smoke();
    let obs = obs_with(&[], 1);
    let mut one = BaselineKind::Random.build(&cell, 4);
    assert!((0..100).all(|_| one.select(&obs) == 0));

    let obs = obs_with(&[], 8);
    let mut a = BaselineKind::Random.build(&cell, 4);
    let mut b = BaselineKind::Random.build(&cell, 4);
    let xs: Vec<usize> = (0..50).map(|_| a.select(&obs)).collect();
    let ys: Vec<usize> = (0..50).map(|_| b.select(&obs)).collect();
    assert_eq!(xs, ys);
}

#[test]
fn network_examples() {
    let zero = Mlp::from_layers(vec![
        Dense::zeros(3, 4, Activation::Relu),
        Dense::zeros(4, 2, Activation::Linear),
    ])
    .unwrap();
    assert_eq!(zero.predict(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);

    let mut id = Dense::zeros(3, 3, Activation::Linear);
    for i in 0..3 {
        id.weight[i * 3 + i] = 1.0;
    }
    let id = Mlp::from_layers(vec![id]).unwrap();
    assert_eq!(id.predict(&[1.5, -2.0, 0.25]).unwrap(), vec![1.5, -2.0, 0.25]);

    // h = relu([[1, -1], [2, 0.5]] x + [0, -1]); y = [3, -1] h + 0.5
    let mut l1 = Dense::zeros(2, 2, Activation::Relu);
    l1.weight = vec![1.0, -1.0, 2.0, 0.5];
    l1.bias = vec![0.0, -1.0];
    let mut l2 = Dense::zeros(2, 1, Activation::Linear);
    l2.weight = vec![3.0, -1.0];
    l2.bias = vec![0.5];
    let net = Mlp::from_layers(vec![l1, l2]).unwrap();
    // x = (1, 2): pre = (-1, 2) -> h = (0, 2) -> y = -2 + 0.5
    assert_eq!(net.predict(&[1.0, 2.0]).unwrap(), vec![-1.5]);
}

#[test]
fn huber_and_sgd_examples() {
    assert_eq!(huber(3.0, 3.0, 1.0), (0.0, 0.0));
    assert_eq!(huber(2.0, 0.0, 1.0), (1.5, 1.0));

    let mut p = Dense::zeros(1, 1, Activation::Linear);
    p.weight[0] = 1.0;
    let mut g = Dense::zeros(1, 1, Activation::Linear);
    g.weight[0] = 2.0;
    let mut params = Mlp::from_layers(vec![p]).unwrap();
    let grads = Mlp::from_layers(vec![g]).unwrap();
    let mut opt = Optimizer::new(OptimizerConfig {
        kind: OptimizerKind::Sgd,
        learning_rate: 0.1,
        ..OptimizerConfig::default()
    })
    .unwrap();
    opt.step(&mut params, &grads).unwrap();
    assert!((params.layers()[0].weight[0] - 0.8).abs() < 1e-15);
}

#[test]
fn embedding_dimensions() {
    assert_eq!(embedding_dim(25), 3);
    assert_eq!(embedding_dim(16), 2);
    assert_eq!(embedding_dim(6), 2);
}

#[test]
fn age_cap_examples() {
    assert_eq!(apply_age_cap(250, 100), 101);
    assert_eq!(apply_age_cap(40, 100), 40);
    assert_eq!(apply_age_cap(101, 100), 101);
}

#[test]
fn empty_buffer_examples() {
    let mut rng = stream(1, "oracle");
    let empty = vec![None; 8];
    for mode in [ShuffleMode::None, ShuffleMode::Rps, ShuffleMode::Sps] {
        assert_eq!(shuffle_packets(&empty, mode, &mut rng), empty);
    }

    let cell = CellConfig::paper();
    let pipe = FeaturePipeline::new(&cell, true, ShuffleMode::Rps);
    let ue = UeObservation {
        qi: 2,
        cqi: 12,
        cqi_mean: 10.5,
        tbs_bits: 700,
        avg_throughput: 0.0,
        packets: Vec::new(),
    };
    let x = pipe.ue_features(&ue, true, &mut rng);
    assert_eq!(x.len(), 66);
    assert_eq!(x[..2], [12.0 / 15.0, 10.5 / 15.0]);
    assert!(x[2..].iter().all(|&v| v == 0.0));
}

#[test]
fn action_selection_examples() {
    let mut rng = stream(2, "oracle");
    let q = [0.1, 0.4, 0.9, -1.0, 0.3, 0.2, 0.0, 0.9];
    assert!((0..100).all(|_| select_action(&q, 0.0, &mut rng) == 2));
}

#[test]
fn micki_examples() {
    assert_eq!(micki_bonus(3, 3, micki_mu(1.5, 0.9, 0)), 1.5);
    assert_eq!(micki_bonus(3, 4, micki_mu(1.5, 0.9, 0)), 0.0);
    let mu = micki_mu(2.0, 0.9, 10);
    assert!((mu - 0.697_356_880_2).abs() < 1e-9);
    assert_eq!(micki_bonus(1, 1, mu), mu);
}

#[test]
fn replay_examples() {
    let obs = Arc::new(EnvState::new(CellConfig::smoke(), 1).unwrap().observe());
    let t = |action| Transition {
        state: obs.clone(),
        action,
        reward: 0.0,
        base_reward: 0.0,
        bonus: 0.0,
        episode: 0,
        next_state: obs.clone(),
        terminal: false,
    };
    let mut mem = ReplayMemory::new(3);
    for a in 0..4 {
        mem.push(t(a));
    }
    let mut held: Vec<usize> = mem.iter().map(|t| t.action).collect();
    held.sort_unstable();
    assert_eq!(held, vec![1, 2, 3]);

    let mut rng = stream(3, "oracle");
    let mut ten = ReplayMemory::new(100);
    for a in 0..10 {
        ten.push(t(a));
    }
    assert!(ten.sample(32, &mut rng).is_none());
    assert_eq!(ten.sample(10, &mut rng).unwrap().len(), 10);
}

#[test]
fn evaluation_is_repeatable() {
    let cell = CellConfig::smoke();
    let spec = AgentSpec::Baseline(BaselineKind::Pfca);
    let a = run_eval(&spec, &cell, &[5, 6, 7], 500, 1).unwrap();
    let b = run_eval(&spec, &cell, &[5, 6, 7], 500, 1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn benchmark_csv_cardinality() {
    let seeds: Vec<u64> = (0..300).collect();
    let reports: Vec<EvalReport> = ["rrit", "pfca", "knapsack", "random"]
        .iter()
        .map(|name| {
            let means = seeds.iter().map(|&s| -(s as f64) / 100.0).collect();
            EvalReport::new(name.to_string(), seeds.clone(), means)
        })
        .collect();
    let mut out = Vec::new();
    write_benchmark_csv(&mut out, &reports).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains(",env,")).count(), 1200);
    assert_eq!(text.lines().filter(|l| l.contains(",summary,")).count(), 4);
}
