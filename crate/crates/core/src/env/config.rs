//! Cell configuration and its TOML representation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of QoS classes; class identifiers run 1..=NUM_QOS_CLASSES.
pub const NUM_QOS_CLASSES: usize = 4;

/// Largest CQI value.
pub const MAX_CQI: u8 = 15;

/// Spectral efficiency ladder (bit/s/Hz) for CQI 0..=15.
const SPECTRAL_EFFICIENCY: [f64; 16] = [
    0.0, 0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223,
    3.9023, 4.5234, 5.1152, 5.5547,
];

/// Traffic contract of one QoS class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QosProfile {
    /// Class identifier in 1..=4.
    pub qi: u8,
    /// Guaranteed bit rate in bit/s.
    pub gbr: f64,
    /// Packet delay budget in TTIs.
    pub pdb: u32,
    /// Bits per arriving packet.
    pub packet_size: u32,
    /// TTIs between arrivals; 0 selects Poisson arrivals with `poisson_mean`.
    pub arrival_period: u32,
    /// Mean TTIs between Poisson arrivals.
    #[serde(default)]
    pub poisson_mean: f64,
    /// Weight of each packet past its delay budget.
    pub penalty_weight: f64,
    /// Weight of the guaranteed-bit-rate shortfall term.
    #[serde(default = "default_gbr_weight")]
    pub gbr_weight: f64,
}

fn default_gbr_weight() -> f64 {
    1.0
}

impl QosProfile {
    fn periodic(qi: u8, pdb: u32, packet_size: u32, period: u32, penalty_weight: f64) -> Self {
        Self {
            qi,
            gbr: f64::from(packet_size) / (f64::from(period) * 1e-3),
            pdb,
            packet_size,
            arrival_period: period,
            poisson_mean: 0.0,
            penalty_weight,
            gbr_weight: 1.0,
        }
    }

    /// Non-GBR class with Poisson arrivals.
    fn poisson(qi: u8, pdb: u32, packet_size: u32, mean: f64, penalty_weight: f64) -> Self {
        Self {
            qi,
            gbr: 0.0,
            pdb,
            packet_size,
            arrival_period: 0,
            poisson_mean: mean,
            penalty_weight,
            gbr_weight: 1.0,
        }
    }

    /// The same class with arrivals `factor` times as frequent. Periodic
    /// classes round their period (at least 1 TTI); guaranteed rates follow
    /// the offered load.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut q = self.clone();
        if q.arrival_period > 0 {
            let period = (f64::from(q.arrival_period) / factor).round().max(1.0) as u32;
            q.gbr *= f64::from(q.arrival_period) / f64::from(period);
            q.arrival_period = period;
        } else {
            q.poisson_mean /= factor;
            q.gbr *= factor;
        }
        q
    }

    /// Voice and video (guaranteed bit rate), web and background (none).
    pub fn defaults() -> Vec<QosProfile> {
        vec![
            Self::periodic(1, 100, 368, 20, 4.0),
            Self::periodic(2, 150, 3_000, 10, 3.0),
            Self::poisson(3, 300, 12_000, 50.0, 2.0),
            Self::poisson(4, 500, 12_000, 100.0, 1.0),
        ]
    }

    /// Bits the class is guaranteed per TTI.
    pub fn gbr_bits_per_tti(&self, tti_duration: f64) -> f64 {
        self.gbr * tti_duration
    }
}

/// Link budget used to turn a UE position into a CQI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    pub tx_power_dbm: f64,
    /// Noise plus interference floor per PRB.
    pub noise_dbm: f64,
    /// SNR mapped to CQI 0.
    pub snr_min_db: f64,
    /// SNR step between consecutive CQI values.
    pub snr_step_db: f64,
    /// Standard deviation of the per-TTI fading term.
    pub fading_std_db: f64,
    /// Distance floor of the path-loss model, meters.
    pub min_distance: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: 30.0,
            noise_dbm: -100.0,
            snr_min_db: -6.0,
            snr_step_db: 2.0,
            fading_std_db: 4.0,
            min_distance: 35.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CellConfig {
    /// Number of UEs; a positive multiple of 4.
    pub num_ues: usize,
    /// PRBs allocated per TTI.
    pub num_prbs: usize,
    /// Buffer slots per UE.
    pub buffer_len: usize,
    /// Seconds per TTI.
    pub tti_duration: f64,
    /// Side of the square service area, meters.
    pub area_side: f64,
    /// UE speed distribution, m/s.
    pub speed_mean: f64,
    pub speed_std: f64,
    pub speed_min: f64,
    /// EMA coefficient of `cqi_mean`, per TTI.
    pub cqi_ema: f64,
    /// EMA coefficient of the served-bits average used by proportional fair.
    pub throughput_ema: f64,
    /// Penalty per dropped packet.
    pub drop_weight: f64,
    /// Bits one PRB carries at each CQI.
    pub tbs_table: Vec<u32>,
    pub channel: ChannelConfig,
    /// One profile per class, ordered by `qi`.
    pub qos: Vec<QosProfile>,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl CellConfig {
    /// K = 32, N_PRB = 25, L = 32.
    pub fn paper() -> Self {
        Self {
            num_ues: 32,
            num_prbs: 25,
            buffer_len: 32,
            tti_duration: 1e-3,
            area_side: 1000.0,
            speed_mean: 1.4,
            speed_std: 0.2,
            speed_min: 0.1,
            cqi_ema: 0.01,
            throughput_ema: 0.01,
            drop_weight: 5.0,
            tbs_table: tbs_table(180e3, 1e-3),
            channel: ChannelConfig::default(),
            qos: QosProfile::defaults(),
        }
    }

    /// Desk-scale cell: K = 8, N_PRB = 6, L = 8, with arrivals three times as
    /// frequent so that the six PRBs are contested.
    pub fn smoke() -> Self {
        Self {
            num_ues: 8,
            num_prbs: 6,
            buffer_len: 8,
            qos: QosProfile::defaults().iter().map(|q| q.scaled(3.0)).collect(),
            ..Self::paper()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "smoke" => Ok(Self::smoke()),
            other => Err(Error::Config(format!(
                "unknown cell preset '{other}' (expected paper or smoke)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.num_ues == 0 || !self.num_ues.is_multiple_of(NUM_QOS_CLASSES) {
            return bad(format!(
                "num_ues must be a positive multiple of 4, got {}",
                self.num_ues
            ));
        }
        if self.num_prbs == 0 {
            return bad("num_prbs must be at least 1".into());
        }
        if self.buffer_len == 0 {
            return bad("buffer_len must be at least 1".into());
        }
        if !(self.tti_duration > 0.0) || !(self.area_side > 0.0) {
            return bad("tti_duration and area_side must be positive".into());
        }
        if !(self.speed_min > 0.0) || !(self.speed_std >= 0.0) || !self.speed_mean.is_finite() {
            return bad("speed_min must be > 0 and speed_std >= 0".into());
        }
        for (name, v) in [
            ("cqi_ema", self.cqi_ema),
            ("throughput_ema", self.throughput_ema),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.drop_weight >= 0.0) {
            return bad("drop_weight must be >= 0".into());
        }
        if self.tbs_table.len() != usize::from(MAX_CQI) + 1 {
            return bad(format!(
                "tbs_table needs 16 entries, got {}",
                self.tbs_table.len()
            ));
        }
        if self.tbs_table[0] != 0 {
            return bad("tbs_table[0] must be 0".into());
        }
        if self.tbs_table.windows(2).any(|w| w[1] < w[0]) {
            return bad("tbs_table must be non-decreasing in CQI".into());
        }
        let ch = &self.channel;
        if !(ch.snr_step_db > 0.0) || !(ch.fading_std_db >= 0.0) || !(ch.min_distance > 0.0) {
            return bad("channel: snr_step_db and min_distance must be > 0, fading_std_db >= 0".into());
        }
        if self.qos.len() != NUM_QOS_CLASSES {
            return bad(format!("expected 4 QoS profiles, got {}", self.qos.len()));
        }
        for (i, q) in self.qos.iter().enumerate() {
            if usize::from(q.qi) != i + 1 {
                return bad(format!("QoS profile {i} must have qi = {}", i + 1));
            }
            if q.pdb < 1 || q.packet_size < 1 {
                return bad(format!("QI{}: pdb and packet_size must be >= 1", q.qi));
            }
            if !(q.penalty_weight >= 0.0) || !(q.gbr_weight >= 0.0) || !(q.gbr >= 0.0) {
                return bad(format!("QI{}: weights and gbr must be >= 0", q.qi));
            }
            if q.arrival_period == 0 && !(q.poisson_mean > 0.0) {
                return bad(format!(
                    "QI{}: Poisson arrivals need poisson_mean > 0",
                    q.qi
                ));
            }
        }
        Ok(())
    }

    /// Profile of class `qi` (1..=4).
    pub fn qos_for(&self, qi: u8) -> &QosProfile {
        &self.qos[usize::from(qi) - 1]
    }

    /// QoS class of UE `ue`: classes are dealt round robin, so every class
    /// holds exactly `num_ues / 4` UEs.
    pub fn qi_of(&self, ue: usize) -> u8 {
        (ue % NUM_QOS_CLASSES) as u8 + 1
    }

    pub fn tbs(&self, cqi: u8) -> u32 {
        self.tbs_table[usize::from(cqi.min(MAX_CQI))]
    }

    pub fn max_packet_bits(&self) -> u32 {
        self.qos.iter().map(|q| q.packet_size).max().unwrap_or(1)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: CellConfig =
            toml::from_str(s).map_err(|e| Error::Config(format!("invalid cell config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("cell config is always serializable")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

/// TBS ladder: `round(efficiency(cqi) * prb_bandwidth * tti_duration)`.
pub fn tbs_table(prb_bandwidth_hz: f64, tti_duration: f64) -> Vec<u32> {
    SPECTRAL_EFFICIENCY
        .iter()
        .map(|eta| (eta * prb_bandwidth_hz * tti_duration).round() as u32)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tbs_table_is_pinned() {
        assert_eq!(
            CellConfig::paper().tbs_table,
            vec![0, 27, 42, 68, 108, 158, 212, 266, 345, 433, 491, 598, 702, 814, 921, 1000]
        );
    }

    #[test]
    fn presets_validate() {
        CellConfig::paper().validate().unwrap();
        CellConfig::smoke().validate().unwrap();
    }

    #[test]
    fn rejects_ue_count_not_multiple_of_four() {
        let cfg = CellConfig {
            num_ues: 6,
            ..CellConfig::paper()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_empty_buffer_and_bad_tbs() {
        let mut cfg = CellConfig::paper();
        cfg.buffer_len = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = CellConfig::paper();
        cfg.tbs_table[5] = 1;
        assert!(cfg.validate().is_err());

        let mut cfg = CellConfig::paper();
        cfg.tbs_table[0] = 3;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn eight_ues_per_class_at_paper_scale() {
        let cfg = CellConfig::paper();
        for qi in 1..=4u8 {
            let n = (0..cfg.num_ues).filter(|&k| cfg.qi_of(k) == qi).count();
            assert_eq!(n, 8);
        }
    }

    #[test]
    fn toml_round_trip_and_partial_override() {
        let cfg = CellConfig::paper();
        let back = CellConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, back);

        let partial = "num_ues = 8\nnum_prbs = 6\n[channel]\nfading_std_db = 0.0\n";
        let cfg = CellConfig::from_toml_str(partial).unwrap();
        assert_eq!(cfg.num_ues, 8);
        assert_eq!(cfg.buffer_len, 32);
        assert_eq!(cfg.channel.fading_std_db, 0.0);
        assert_eq!(cfg.channel.tx_power_dbm, 30.0);
    }
}
