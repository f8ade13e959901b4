//! Per-UE input features for the encoder networks.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{CellConfig, Packet, UeObservation, MAX_CQI, NUM_QOS_CLASSES};

/// Clamps a packet age to one TTI past the delay budget.
pub fn apply_age_cap(age: u32, pdb: u32) -> u32 {
    age.min(pdb.saturating_add(1))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShuffleMode {
    #[default]
    None,
    /// Occupied slots land on a uniformly random subset of positions in random order.
    Rps,
    /// Like `Rps`, but packets keep their relative order.
    Sps,
}

/// Redistributes the occupied entries of `slots` over all positions.
pub fn shuffle_packets<R: Rng + ?Sized>(
    slots: &[Option<Packet>],
    mode: ShuffleMode,
    rng: &mut R,
) -> Vec<Option<Packet>> {
    if mode == ShuffleMode::None {
        return slots.to_vec();
    }
    let packets: Vec<Packet> = slots.iter().flatten().copied().collect();
    let mut out = vec![None; slots.len()];
    if packets.is_empty() {
        return out;
    }
    let mut positions = sample(rng, slots.len(), packets.len()).into_vec();
    if mode == ShuffleMode::Sps {
        positions.sort_unstable();
    }
    for (pos, p) in positions.into_iter().zip(packets) {
        out[pos] = Some(p);
    }
    out
}

/// Turns a raw UE observation into the encoder input
/// `[c, c_mean, s_1..s_L, e_1..e_L]`.
///
/// CQIs are divided by 15, sizes by the largest packet size and ages by
/// `pdb + 1`, so capped ages land in `[0, 1]`. Empty slots are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePipeline {
    pub buffer_len: usize,
    pub pdb: [u32; NUM_QOS_CLASSES],
    pub max_packet_bits: u32,
    pub age_cap: bool,
    /// Applied only to training-time features.
    pub shuffle: ShuffleMode,
}

impl FeaturePipeline {
    pub fn new(cell: &CellConfig, age_cap: bool, shuffle: ShuffleMode) -> Self {
        let mut pdb = [1; NUM_QOS_CLASSES];
        for q in &cell.qos {
            pdb[usize::from(q.qi) - 1] = q.pdb;
        }
        Self {
            buffer_len: cell.buffer_len,
            pdb,
            max_packet_bits: cell.max_packet_bits(),
            age_cap,
            shuffle,
        }
    }

    pub fn width(&self) -> usize {
        2 + 2 * self.buffer_len
    }

    pub fn ue_features<R: Rng + ?Sized>(
        &self,
        ue: &UeObservation,
        training: bool,
        rng: &mut R,
    ) -> Vec<f64> {
        let l = self.buffer_len;
        let pdb = self.pdb[usize::from(ue.qi) - 1];
        let mut slots: Vec<Option<Packet>> = ue.packets.iter().copied().map(Some).collect();
        slots.resize(l, None);
        if training && self.shuffle != ShuffleMode::None {
            slots = shuffle_packets(&slots, self.shuffle, rng);
        }

        let cqi_scale = f64::from(MAX_CQI);
        let size_scale = f64::from(self.max_packet_bits);
        let age_scale = f64::from(pdb) + 1.0;
        let mut x = vec![0.0; self.width()];
        x[0] = f64::from(ue.cqi) / cqi_scale;
        x[1] = ue.cqi_mean / cqi_scale;
        for (i, slot) in slots.iter().enumerate() {
            if let Some(p) = slot {
                let age = if self.age_cap {
                    apply_age_cap(p.age, pdb)
                } else {
                    p.age
                };
                x[2 + i] = f64::from(p.size) / size_scale;
                x[2 + l + i] = f64::from(age) / age_scale;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn ue(packets: Vec<Packet>) -> UeObservation {
        UeObservation {
            qi: 1,
            cqi: 9,
            cqi_mean: 7.5,
            tbs_bits: 433,
            avg_throughput: 0.0,
            packets,
        }
    }

    #[test]
    fn age_cap_examples() {
        assert_eq!(apply_age_cap(250, 100), 101);
        assert_eq!(apply_age_cap(40, 100), 40);
        assert_eq!(apply_age_cap(101, 100), 101);
    }

    proptest! {
        #[test]
        fn age_cap_is_min_and_idempotent(age in any::<u32>(), pdb in 1u32..u32::MAX) {
            let once = apply_age_cap(age, pdb);
            prop_assert_eq!(once, age.min(pdb + 1));
            prop_assert_eq!(apply_age_cap(once, pdb), once);
        }

        #[test]
        fn sps_keeps_order(m in 0usize..=8, seed in any::<u64>()) {
            let mut slots: Vec<Option<Packet>> =
                (0..m).map(|i| Some(Packet::new(100 + i as u32, 50 - i as u32))).collect();
            slots.resize(8, None);
            let out = shuffle_packets(&slots, ShuffleMode::Sps, &mut stream(seed, "sps"));
            let seen: Vec<u32> = out.iter().flatten().map(|p| p.size).collect();
            prop_assert_eq!(seen, (0..m as u32).map(|i| 100 + i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn shuffle_of_empty_buffer_is_empty() {
        let slots = vec![None; 6];
        for mode in [ShuffleMode::None, ShuffleMode::Rps, ShuffleMode::Sps] {
            assert_eq!(shuffle_packets(&slots, mode, &mut stream(0, "x")), slots);
        }
    }

    #[test]
    fn empty_buffer_features() {
        let cell = CellConfig::paper();
        let pipe = FeaturePipeline::new(&cell, false, ShuffleMode::None);
        let x = pipe.ue_features(&ue(vec![]), true, &mut stream(0, "f"));
        assert_eq!(x.len(), 66);
        assert_eq!(x[0], 9.0 / 15.0);
        assert_eq!(x[1], 7.5 / 15.0);
        assert!(x[2..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn capped_age_normalizes_to_one() {
        let cell = CellConfig::paper();
        let pipe = FeaturePipeline::new(&cell, true, ShuffleMode::None);
        // QI1 has pdb 100: age 300 -> 101 -> 101 / 101.
        let x = pipe.ue_features(&ue(vec![Packet::new(12_000, 300)]), false, &mut stream(0, "f"));
        assert_eq!(x[2 + 32], 1.0);
        assert_eq!(x[2], 1.0);

        let uncapped = FeaturePipeline::new(&cell, false, ShuffleMode::None);
        let x = uncapped.ue_features(&ue(vec![Packet::new(6_000, 300)]), false, &mut stream(0, "f"));
        assert_eq!(x[2 + 32], 300.0 / 101.0);
        assert_eq!(x[2], 0.5);
    }

    #[test]
    fn shuffling_only_at_training_time() {
        let cell = CellConfig::smoke();
        let pipe = FeaturePipeline::new(&cell, true, ShuffleMode::Rps);
        let u = ue(vec![Packet::new(368, 3), Packet::new(368, 1)]);
        let mut rng = stream(4, "f");
        let eval = pipe.ue_features(&u, false, &mut rng);
        assert_eq!(eval[2..4], [368.0 / 12_000.0; 2]);
        assert!(eval[4..10].iter().all(|&v| v == 0.0));
        // Some training draw moves a packet off the prefix.
        let moved = (0..50).any(|_| {
            let x = pipe.ue_features(&u, true, &mut rng);
            x[2] == 0.0 || x[3] == 0.0
        });
        assert!(moved);
    }
}
