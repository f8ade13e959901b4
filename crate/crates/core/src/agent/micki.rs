//! Expert-mimicking reward bonus.

/// `mu0 * rho^episode`.
pub fn micki_mu(mu0: f64, rho: f64, episode: u64) -> f64 {
    mu0 * rho.powi(episode.min(i32::MAX as u64) as i32)
}

/// `mu(episode)` when the agent picked what the expert would have, else 0.
pub fn micki_bonus(agent_action: usize, expert_action: usize, mu: f64) -> f64 {
    if agent_action == expert_action {
        mu
    } else {
        0.0
    }
}
