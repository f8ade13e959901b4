use std::io::{self, Write};

/// CSV dump of an allocation trajectory: `tti,prb,action,allocated_bits,reward_so_far`.
pub struct TrajectoryWriter<W: Write> {
    out: W,
    reward_so_far: f64,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "tti,prb,action,allocated_bits,reward_so_far")?;
        Ok(Self {
            out,
            reward_so_far: 0.0,
        })
    }

    /// Records one step. `reward` is the TTI reward when the step closed a TTI.
    pub fn record(
        &mut self,
        tti: u64,
        prb: usize,
        action: usize,
        allocated_bits: u64,
        reward: Option<f64>,
    ) -> io::Result<()> {
        if let Some(r) = reward {
            self.reward_so_far += r;
        }
        writeln!(
            self.out,
            "{tti},{prb},{action},{allocated_bits},{}",
            self.reward_so_far
        )
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
