use std::collections::VecDeque;
use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::channel::compute_cqi;
use super::config::CellConfig;
use super::observation::{Observation, UeObservation};
use super::reward::compute_tfra_reward;
use crate::rng::stream;
use crate::{Error, Result};

/// A buffered packet: remaining bits and TTIs since arrival.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub size: u32,
    pub age: u32,
}

impl Packet {
    pub fn new(size: u32, age: u32) -> Self {
        Self { size, age }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UeState {
    /// Meters, inside `[0, area_side]^2`.
    pub position: [f64; 2],
    /// Meters per second.
    pub velocity: [f64; 2],
    pub qi: u8,
    pub cqi: u8,
    pub cqi_mean: f64,
    /// Oldest packet at the front.
    pub buffer: VecDeque<Packet>,
    /// EMA of bits served per TTI.
    pub avg_throughput: f64,
    /// Offset of the periodic arrival schedule.
    pub arrival_phase: u32,
    /// Bits served during the current TTI.
    pub served_bits: u64,
    /// Packets dropped at arrival during the current TTI.
    pub dropped: u32,
    /// Whether data was left over when the current TTI closed.
    pub backlogged: bool,
}

impl UeState {
    pub fn speed(&self) -> f64 {
        self.velocity[0].hypot(self.velocity[1])
    }
}

/// Result of one allocation step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Allocation {
    /// Bits drained from the selected UE's buffer.
    pub bits: u64,
    /// Reward of the TTI this step closed, if it closed one.
    pub reward: Option<f64>,
}

/// Full simulator state. Cloning it forks the simulation, RNG streams included.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    config: CellConfig,
    pub ues: Vec<UeState>,
    prb_cursor: usize,
    tti: u64,
    /// Only consumed at placement; trajectories are rectilinear afterwards.
    mobility_rng: ChaCha8Rng,
    traffic_rng: ChaCha8Rng,
    fading_rng: ChaCha8Rng,
    total_dropped: u64,
    reflections: u64,
}

impl EnvState {
    /// Places `num_ues` UEs uniformly in the square with pedestrian speeds and
    /// uniform headings; buffers start empty.
    pub fn new(config: CellConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut mobility_rng = stream(seed, "mobility");
        let mut traffic_rng = stream(seed, "traffic");
        let mut fading_rng = stream(seed, "fading");
        let speed = Normal::new(config.speed_mean, config.speed_std)
            .map_err(|e| Error::Config(format!("speed distribution: {e}")))?;

        let mut ues = Vec::with_capacity(config.num_ues);
        for k in 0..config.num_ues {
            let position = [
                mobility_rng.random_range(0.0..=config.area_side),
                mobility_rng.random_range(0.0..=config.area_side),
            ];
            let v = speed.sample(&mut mobility_rng).max(config.speed_min);
            let heading = mobility_rng.random_range(0.0..TAU);
            let qi = config.qi_of(k);
            let profile = config.qos_for(qi);
            let arrival_phase = if profile.arrival_period > 0 {
                traffic_rng.random_range(0..profile.arrival_period)
            } else {
                0
            };
            let fading: f64 = fading_rng.sample::<f64, _>(StandardNormal) * config.channel.fading_std_db;
            let cqi = compute_cqi(position, fading, &config);
            ues.push(UeState {
                position,
                velocity: [v * heading.cos(), v * heading.sin()],
                qi,
                cqi,
                cqi_mean: f64::from(cqi),
                buffer: VecDeque::with_capacity(config.buffer_len),
                avg_throughput: 0.0,
                arrival_phase,
                served_bits: 0,
                dropped: 0,
                backlogged: false,
            });
        }

        Ok(Self {
            config,
            ues,
            prb_cursor: 0,
            tti: 0,
            mobility_rng,
            traffic_rng,
            fading_rng,
            total_dropped: 0,
            reflections: 0,
        })
    }

    pub fn config(&self) -> &CellConfig {
        &self.config
    }

    /// Index of the PRB the next allocation assigns, in `0..num_prbs`.
    pub fn prb_cursor(&self) -> usize {
        self.prb_cursor
    }

    /// Completed TTIs.
    pub fn tti(&self) -> u64 {
        self.tti
    }

    pub fn num_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn total_dropped(&self) -> u64 {
        self.total_dropped
    }

    /// Wall reflections performed by the mobility model so far.
    pub fn reflections(&self) -> u64 {
        self.reflections
    }

    /// Assigns the PRB under the cursor to `ue`, draining its buffer oldest
    /// packet first. Closes the TTI after the last PRB.
    pub fn allocate_prb(&mut self, ue: usize) -> Result<Allocation> {
        if ue >= self.ues.len() {
            return Err(Error::Action(format!(
                "UE index {ue} out of range 0..{}",
                self.ues.len()
            )));
        }
        let tbs = self.config.tbs(self.ues[ue].cqi);
        let state = &mut self.ues[ue];
        let mut budget = tbs;
        while budget > 0 {
            let Some(head) = state.buffer.front_mut() else {
                break;
            };
            let take = budget.min(head.size);
            head.size -= take;
            budget -= take;
            if head.size == 0 {
                state.buffer.pop_front();
            }
        }
        let bits = u64::from(tbs - budget);
        state.served_bits += bits;

        self.prb_cursor += 1;
        let reward = if self.prb_cursor == self.config.num_prbs {
            self.prb_cursor = 0;
            Some(self.advance_tti())
        } else {
            None
        };
        Ok(Allocation { bits, reward })
    }

    /// Closes the current TTI and returns its reward.
    fn advance_tti(&mut self) -> f64 {
        let cfg = &self.config;

        for ue in &mut self.ues {
            ue.backlogged = !ue.buffer.is_empty();
            for p in &mut ue.buffer {
                p.age += 1;
            }
        }

        for ue in &mut self.ues {
            let profile = cfg.qos_for(ue.qi);
            let arrivals = if profile.arrival_period > 0 {
                u32::from((self.tti + u64::from(ue.arrival_phase)).is_multiple_of(u64::from(profile.arrival_period)))
            } else {
                let poisson = Poisson::new(1.0 / profile.poisson_mean)
                    .expect("validated poisson_mean is positive");
                poisson.sample(&mut self.traffic_rng) as u32
            };
            for _ in 0..arrivals {
                if ue.buffer.len() < cfg.buffer_len {
                    ue.buffer.push_back(Packet::new(profile.packet_size, 0));
                } else {
                    ue.dropped += 1;
                }
            }
        }

        for ue in &mut self.ues {
            for axis in 0..2 {
                let moved = ue.position[axis] + ue.velocity[axis] * cfg.tti_duration;
                let (x, v, bounces) = reflect(moved, ue.velocity[axis], cfg.area_side);
                ue.position[axis] = x;
                ue.velocity[axis] = v;
                self.reflections += u64::from(bounces);
            }
        }

        for ue in &mut self.ues {
            let fading: f64 =
                self.fading_rng.sample::<f64, _>(StandardNormal) * cfg.channel.fading_std_db;
            ue.cqi = compute_cqi(ue.position, fading, cfg);
            ue.cqi_mean += cfg.cqi_ema * (f64::from(ue.cqi) - ue.cqi_mean);
            ue.avg_throughput += cfg.throughput_ema * (ue.served_bits as f64 - ue.avg_throughput);
        }

        let reward = compute_tfra_reward(self);

        for ue in &mut self.ues {
            self.total_dropped += u64::from(ue.dropped);
            ue.served_bits = 0;
            ue.dropped = 0;
        }
        self.tti += 1;
        reward
    }

    /// Raw observation: per-UE channel, class and buffer contents plus the PRB cursor.
    pub fn observe(&self) -> Observation {
        Observation {
            ues: self
                .ues
                .iter()
                .map(|ue| UeObservation {
                    qi: ue.qi,
                    cqi: ue.cqi,
                    cqi_mean: ue.cqi_mean,
                    tbs_bits: self.config.tbs(ue.cqi),
                    avg_throughput: ue.avg_throughput,
                    packets: ue.buffer.iter().copied().collect(),
                })
                .collect(),
            prb_cursor: self.prb_cursor,
            num_prbs: self.config.num_prbs,
            buffer_len: self.config.buffer_len,
            tti: self.tti,
        }
    }
}

/// Folds a coordinate back into `[0, side]` by specular reflection, flipping
/// the velocity component once per bounce. Returns the bounce count.
pub fn reflect(mut x: f64, mut v: f64, side: f64) -> (f64, f64, u32) {
    let mut bounces = 0;
    loop {
        if x > side {
            x = 2.0 * side - x;
        } else if x < 0.0 {
            x = -x;
        } else {
            return (x, v, bounces);
        }
        v = -v;
        bounces += 1;
    }
}
