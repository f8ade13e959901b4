use super::state::Packet;

/// What the scheduler sees of one UE.
#[derive(Clone, Debug, PartialEq)]
pub struct UeObservation {
    pub qi: u8,
    pub cqi: u8,
    pub cqi_mean: f64,
    /// Bits one PRB would carry at the current CQI.
    pub tbs_bits: u32,
    pub avg_throughput: f64,
    /// Occupied buffer slots, oldest first.
    pub packets: Vec<Packet>,
}

impl UeObservation {
    pub fn has_traffic(&self) -> bool {
        !self.packets.is_empty()
    }

    /// Head-of-line packet.
    pub fn head(&self) -> Option<&Packet> {
        self.packets.first()
    }

    /// All `buffer_len` slots as `(size, age)`; empty slots are `(0, 0)`.
    pub fn slots(&self, buffer_len: usize) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = self.packets.iter().map(|p| (p.size, p.age)).collect();
        out.resize(buffer_len, (0, 0));
        out
    }
}

/// Raw (uncompressed) scheduler observation.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub ues: Vec<UeObservation>,
    /// PRB the next action assigns.
    pub prb_cursor: usize,
    pub num_prbs: usize,
    pub buffer_len: usize,
    pub tti: u64,
}

impl Observation {
    pub fn num_ues(&self) -> usize {
        self.ues.len()
    }

    /// PRBs left in the current TTI, including the one under the cursor.
    pub fn remaining_prbs(&self) -> usize {
        self.num_prbs - self.prb_cursor
    }

    /// Raw per-UE feature count: CQI, mean CQI and `(size, age)` per slot.
    pub fn raw_features_per_ue(&self) -> usize {
        2 + 2 * self.buffer_len
    }
}

#[cfg(test)]
mod tests {
    use crate::env::{CellConfig, EnvState};

    #[test]
    fn fresh_env_has_empty_slots() {
        let env = EnvState::new(CellConfig::paper(), 1).unwrap();
        let obs = env.observe();
        assert_eq!(obs.num_ues(), 32);
        assert_eq!(obs.raw_features_per_ue(), 66);
        for ue in &obs.ues {
            assert!(ue.slots(obs.buffer_len).iter().all(|&s| s == (0, 0)));
            assert_eq!(ue.slots(obs.buffer_len).len(), 32);
        }
        assert_eq!(obs.remaining_prbs(), 25);
    }
}
