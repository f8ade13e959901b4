//! Benchmark schedulers.
//!
//! All selectors are deterministic given their inputs; ties always go to the
//! lowest UE index.

pub mod knapsack;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{CellConfig, Observation, QosProfile};
use crate::rng::stream;
use crate::{Error, Result};

/// Anything that can pick a UE for the PRB under the cursor.
pub trait Scheduler: Send {
    fn name(&self) -> &str;
    fn select(&mut self, obs: &Observation) -> usize;
}

/// Index of the largest value; ties resolve to the lowest index.
pub(crate) fn argmax_lowest<I: IntoIterator<Item = f64>>(values: I) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RritCursor {
    pub last_served: usize,
}

impl RritCursor {
    /// A cursor whose first scan starts at UE 0.
    pub fn start(num_ues: usize) -> Self {
        Self {
            last_served: num_ues - 1,
        }
    }
}

/// Round robin if traffic: the first UE after `last_served`, cyclically,
/// with a non-empty buffer. With no traffic anywhere it just steps forward.
pub fn rrit_select(obs: &Observation, cursor: RritCursor) -> (usize, RritCursor) {
    let k = obs.num_ues();
    let pick = (1..=k)
        .map(|off| (cursor.last_served + off) % k)
        .find(|&i| obs.ues[i].has_traffic())
        .unwrap_or((cursor.last_served + 1) % k);
    (pick, RritCursor { last_served: pick })
}

pub const PFCA_EPSILON: f64 = 1e-6;

/// Proportional fair channel aware: `argmax tbs_k / max(avg_throughput_k, eps)`
/// over UEs with traffic; `argmax tbs_k` when every buffer is empty.
pub fn pfca_select(obs: &Observation) -> usize {
    let any_traffic = obs.ues.iter().any(|u| u.has_traffic());
    if !any_traffic {
        return argmax_lowest(obs.ues.iter().map(|u| f64::from(u.tbs_bits))).unwrap_or(0);
    }
    argmax_lowest(obs.ues.iter().map(|u| {
        if u.has_traffic() {
            f64::from(u.tbs_bits) / u.avg_throughput.max(PFCA_EPSILON)
        } else {
            f64::NEG_INFINITY
        }
    }))
    .unwrap_or(0)
}

/// Urgency-weighted value of a head-of-line packet.
pub fn knapsack_value(profile: &QosProfile, hol_age: u32) -> f64 {
    let slack = (i64::from(profile.pdb) - i64::from(hol_age) + 1).max(1);
    profile.penalty_weight / slack as f64
}

/// Knapsack scheduler.
///
/// One item per UE with traffic: weight is the head-of-line packet's remaining
/// bits, value is `penalty_weight / max(pdb - age + 1, 1)`. Items that cannot
/// be delivered on the UE's own channel within the remaining PRBs are left
/// out; total capacity is `remaining_prbs * max tbs`. The UE of the most
/// valuable selected item is served. When nothing is deliverable the most
/// valuable UE with traffic is served anyway, and with no traffic at all the
/// choice falls back to [`pfca_select`].
pub fn knapsack_select(obs: &Observation, qos: &[QosProfile], remaining_prbs: usize) -> usize {
    let remaining = remaining_prbs.max(1) as u64;
    let mut owners = Vec::new();
    let mut items = Vec::new();
    let mut fallback: Option<(usize, f64)> = None;
    for (k, ue) in obs.ues.iter().enumerate() {
        let Some(head) = ue.head() else { continue };
        let value = knapsack_value(&qos[usize::from(ue.qi) - 1], head.age);
        if fallback.is_none_or(|(_, v)| value > v) {
            fallback = Some((k, value));
        }
        if u64::from(head.size) <= remaining * u64::from(ue.tbs_bits) {
            owners.push(k);
            items.push(knapsack::Item {
                weight: u64::from(head.size),
                value,
            });
        }
    }
    let Some((fallback_ue, _)) = fallback else {
        return pfca_select(obs);
    };
    let max_tbs = obs.ues.iter().map(|u| u64::from(u.tbs_bits)).max().unwrap_or(0);
    let solution = knapsack::solve(&items, remaining * max_tbs);
    let chosen = argmax_lowest(
        items
            .iter()
            .zip(&solution.selected)
            .map(|(it, &s)| if s { it.value } else { f64::NEG_INFINITY }),
    )
    .filter(|&i| solution.selected[i]);
    chosen.map_or(fallback_ue, |i| owners[i])
}

pub struct Rrit {
    cursor: Option<RritCursor>,
}

impl Rrit {
    pub fn new() -> Self {
        Self { cursor: None }
    }
}

impl Default for Rrit {
    fn default() -> Self {
        Self::new()
    }
}

impl Scheduler for Rrit {
    fn name(&self) -> &str {
        "rrit"
    }

    fn select(&mut self, obs: &Observation) -> usize {
        let cursor = self
            .cursor
            .unwrap_or_else(|| RritCursor::start(obs.num_ues()));
        let (ue, next) = rrit_select(obs, cursor);
        self.cursor = Some(next);
        ue
    }
}

pub struct Pfca;

impl Scheduler for Pfca {
    fn name(&self) -> &str {
        "pfca"
    }

    fn select(&mut self, obs: &Observation) -> usize {
        pfca_select(obs)
    }
}

pub struct Knapsack {
    qos: Vec<QosProfile>,
}

impl Knapsack {
    pub fn new(config: &CellConfig) -> Self {
        Self {
            qos: config.qos.clone(),
        }
    }
}

impl Scheduler for Knapsack {
    fn name(&self) -> &str {
        "knapsack"
    }

    fn select(&mut self, obs: &Observation) -> usize {
        knapsack_select(obs, &self.qos, obs.remaining_prbs())
    }
}

/// Uniform over all UEs.
pub struct RandomScheduler {
    rng: ChaCha8Rng,
}

impl RandomScheduler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: stream(seed, "random-agent"),
        }
    }
}

pub fn random_select<R: Rng + ?Sized>(obs: &Observation, rng: &mut R) -> usize {
    rng.random_range(0..obs.num_ues())
}

impl Scheduler for RandomScheduler {
    fn name(&self) -> &str {
        "random"
    }

    fn select(&mut self, obs: &Observation) -> usize {
        random_select(obs, &mut self.rng)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Rrit,
    Pfca,
    Knapsack,
    Random,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [Self::Rrit, Self::Pfca, Self::Knapsack, Self::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rrit => "rrit",
            Self::Pfca => "pfca",
            Self::Knapsack => "knapsack",
            Self::Random => "random",
        }
    }

    /// Builds a fresh scheduler. `seed` only matters for the random agent.
    pub fn build(self, config: &CellConfig, seed: u64) -> Box<dyn Scheduler> {
        match self {
            Self::Rrit => Box::new(Rrit::new()),
            Self::Pfca => Box::new(Pfca),
            Self::Knapsack => Box::new(Knapsack::new(config)),
            Self::Random => Box::new(RandomScheduler::new(seed)),
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown baseline '{s}' (valid: rrit, pfca, knapsack, random)"
                ))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Packet, UeObservation};

    fn obs(buffers: &[&[Packet]]) -> Observation {
        Observation {
            ues: buffers
                .iter()
                .enumerate()
                .map(|(k, b)| UeObservation {
                    qi: (k % 4) as u8 + 1,
                    cqi: 10,
                    cqi_mean: 10.0,
                    tbs_bits: 491,
                    avg_throughput: 100.0,
                    packets: b.to_vec(),
                })
                .collect(),
            prb_cursor: 0,
            num_prbs: 6,
            buffer_len: 8,
            tti: 0,
        }
    }

    fn with_traffic(k: usize, busy: &[usize]) -> Observation {
        let p = [Packet::new(100, 0)];
        let bufs: Vec<&[Packet]> = (0..k)
            .map(|i| if busy.contains(&i) { &p[..] } else { &[][..] })
            .collect();
        obs(&bufs)
    }

    #[test]
    fn rrit_unique_candidate() {
        // 1-based "UE 5 with cursor at 2" is 0-based UE 4 with cursor 1.
        let o = with_traffic(8, &[4]);
        let (ue, c) = rrit_select(&o, RritCursor { last_served: 1 });
        assert_eq!(ue, 4);
        assert_eq!(c.last_served, 4);
    }

    #[test]
    fn rrit_cycles_between_candidates() {
        // 1-based UEs 3 and 7, cursor at 3 -> 7 then 3.
        let o = with_traffic(8, &[2, 6]);
        let (a, c) = rrit_select(&o, RritCursor { last_served: 2 });
        let (b, _) = rrit_select(&o, c);
        assert_eq!((a, b), (6, 2));
    }

    #[test]
    fn rrit_wraps_when_idle() {
        let o = with_traffic(8, &[]);
        let (ue, _) = rrit_select(&o, RritCursor { last_served: 7 });
        assert_eq!(ue, 0);
    }

    #[test]
    fn pfca_unique_and_metric() {
        let mut o = with_traffic(4, &[2]);
        assert_eq!(pfca_select(&o), 2);

        let mut o2 = with_traffic(4, &[0, 1]);
        o2.ues[0].tbs_bits = 1000;
        o2.ues[0].avg_throughput = 100.0;
        o2.ues[1].tbs_bits = 600;
        o2.ues[1].avg_throughput = 20.0;
        assert_eq!(pfca_select(&o2), 1);

        // Equal metrics: lowest index wins.
        o = with_traffic(10, &[1, 8]);
        assert_eq!(pfca_select(&o), 1);
    }

    #[test]
    fn pfca_without_traffic_picks_best_channel() {
        let mut o = with_traffic(4, &[]);
        o.ues[3].tbs_bits = 900;
        assert_eq!(pfca_select(&o), 3);
    }

    #[test]
    fn knapsack_unique_candidate() {
        let cfg = CellConfig::smoke();
        let o = with_traffic(8, &[5]);
        assert_eq!(knapsack_select(&o, &cfg.qos, 6), 5);
    }

    #[test]
    fn knapsack_prefers_urgent_high_weight_class() {
        let cfg = CellConfig::smoke();
        // UE0 is QI1 (weight 4, pdb 100); UE1 is QI2 (weight 3, pdb 150).
        let a = [Packet::new(300, 90)];
        let b = [Packet::new(300, 10)];
        let o = obs(&[&a, &b, &[], &[]]);
        assert_eq!(knapsack_select(&o, &cfg.qos, 6), 0);
    }

    #[test]
    fn knapsack_identical_values_lower_index() {
        let mut cfg = CellConfig::smoke();
        for q in &mut cfg.qos {
            q.penalty_weight = 1.0;
            q.pdb = 100;
        }
        // Capacity admits one of the two 400-bit items (1 PRB, max tbs 491).
        let p = [Packet::new(400, 5)];
        let o = obs(&[&[], &p, &p, &[]]);
        assert_eq!(knapsack_select(&o, &cfg.qos, 1), 1);
    }

    #[test]
    fn knapsack_serves_something_when_nothing_fits() {
        let cfg = CellConfig::smoke();
        let big = [Packet::new(12_000, 0)];
        let o = obs(&[&[], &[], &big, &[]]);
        assert_eq!(knapsack_select(&o, &cfg.qos, 1), 2);
    }

    #[test]
    fn knapsack_falls_back_to_pfca_without_traffic() {
        let cfg = CellConfig::smoke();
        let mut o = with_traffic(4, &[]);
        o.ues[2].tbs_bits = 1000;
        assert_eq!(knapsack_select(&o, &cfg.qos, 3), pfca_select(&o));
    }

    #[test]
    fn random_degenerate_and_reproducible() {
        let o = with_traffic(4, &[]);
        let mut a = RandomScheduler::new(3);
        let mut b = RandomScheduler::new(3);
        let xs: Vec<usize> = (0..50).map(|_| a.select(&o)).collect();
        let ys: Vec<usize> = (0..50).map(|_| b.select(&o)).collect();
        assert_eq!(xs, ys);

        let mut one = obs(&[&[]]);
        one.ues.truncate(1);
        assert!((0..20).all(|_| a.select(&one) == 0));
    }

    #[test]
    fn parse_names() {
        assert_eq!("pfca".parse::<BaselineKind>().unwrap(), BaselineKind::Pfca);
        assert!("nope".parse::<BaselineKind>().is_err());
    }
}
