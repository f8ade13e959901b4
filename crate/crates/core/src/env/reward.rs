use super::state::EnvState;

/// Penalty reward of the TTI being closed:
///
/// `-sum_k [ w(q_k) * late_k + drop_weight * dropped_k + g(q_k) * shortfall_k ]`
///
/// where `late_k` counts buffered packets older than the class delay budget,
/// `dropped_k` counts arrivals rejected by a full buffer this TTI, and
/// `shortfall_k = max(0, 1 - served_k / (gbr * tti_duration))` applies only to
/// UEs that still had data queued when the TTI's PRBs ran out. A UE with an
/// empty queue has been given everything it asked for.
pub fn compute_tfra_reward(state: &EnvState) -> f64 {
    let cfg = state.config();
    let mut penalty = 0.0;
    for ue in &state.ues {
        let q = cfg.qos_for(ue.qi);
        let late = ue.buffer.iter().filter(|p| p.age > q.pdb).count();
        penalty += q.penalty_weight * late as f64;
        penalty += cfg.drop_weight * f64::from(ue.dropped);
        let guaranteed = q.gbr_bits_per_tti(cfg.tti_duration);
        if ue.backlogged && guaranteed > 0.0 {
            penalty += q.gbr_weight * (1.0 - ue.served_bits as f64 / guaranteed).max(0.0);
        }
    }
    if penalty == 0.0 {
        0.0
    } else {
        -penalty
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{CellConfig, Packet};

    fn env() -> EnvState {
        let mut cfg = CellConfig::smoke();
        cfg.num_ues = 4;
        for q in &mut cfg.qos {
            q.penalty_weight = 1.0;
        }
        EnvState::new(cfg, 9).unwrap()
    }

    #[test]
    fn nothing_wrong_gives_zero() {
        assert_eq!(compute_tfra_reward(&env()), 0.0);
    }

    #[test]
    fn late_packets_are_counted() {
        let mut env = env();
        let pdb = env.config().qos_for(env.ues[0].qi).pdb;
        env.ues[0].buffer.extend([
            Packet::new(10, pdb + 3),
            Packet::new(10, pdb + 1),
            Packet::new(10, pdb),
        ]);
        // Brute-force count of ages strictly above the budget.
        let expected = env.ues[0].buffer.iter().filter(|p| p.age > pdb).count() as f64;
        assert_eq!(expected, 2.0);
        assert_eq!(compute_tfra_reward(&env), -2.0);
    }

    #[test]
    fn drop_penalty() {
        let mut env = env();
        env.ues[2].dropped = 1;
        assert_eq!(compute_tfra_reward(&env), -5.0);
    }

    #[test]
    fn gbr_shortfall_only_when_backlogged() {
        let mut env = env();
        let g = env.config().qos_for(env.ues[1].qi).gbr_bits_per_tti(1e-3);
        env.ues[1].served_bits = (g / 4.0) as u64;
        assert_eq!(compute_tfra_reward(&env), 0.0);
        env.ues[1].backlogged = true;
        let expected = -(1.0 - (g / 4.0).floor() / g);
        assert!((compute_tfra_reward(&env) - expected).abs() < 1e-12);
        env.ues[1].served_bits = g as u64 + 10;
        assert_eq!(compute_tfra_reward(&env), 0.0);
    }
}
