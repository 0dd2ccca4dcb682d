use laserwall_core::{EnvConfig, LayoutEnv};
use serde::{Deserialize, Serialize};

use crate::agent::Agent;
use crate::error::AgentError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub scenario: u32,
    pub episodes: usize,
    pub mean_reward: f64,
    pub mean_length: f64,
    pub success_rate: f64,
    pub mean_closeness: f64,
    pub mean_missed: f64,
    /// Connections satisfied at the end of the best-closeness episode.
    pub best_satisfied: usize,
    pub connections_required: usize,
}

/// Runs `episodes` full episodes (reset seeds `seed`, `seed + 1`, ...).
/// Success means the episode terminated by reaching the threshold.
pub fn evaluate(
    agent: &mut dyn Agent,
    config: &EnvConfig,
    episodes: usize,
    seed: u64,
) -> Result<EvalSummary, AgentError> {
    let mut env = LayoutEnv::new(config.clone())?;
    let (mut reward, mut length, mut wins, mut close, mut missed) = (0.0, 0usize, 0usize, 0.0, 0usize);
    let mut best = (f64::NEG_INFINITY, 0usize);
    for k in 0..episodes {
        let s = seed.wrapping_add(k as u64);
        env.reset(s)?;
        agent.begin_episode(s);
        let mut terminated = false;
        while !env.is_finished() {
            let a = match agent.act(&env) {
                Ok(a) => a,
                Err(AgentError::NoLegalAction) => break,
                Err(e) => return Err(e),
            };
            let tr = env.step(a)?;
            reward += tr.reward;
            length += 1;
            terminated = tr.terminated;
        }
        let m = env.metrics().expect("reset done");
        wins += usize::from(terminated);
        close += env.closeness();
        missed += m.missed.len();
        if env.closeness() > best.0 {
            best = (env.closeness(), m.connections_satisfied);
        }
    }
    let n = episodes.max(1) as f64;
    Ok(EvalSummary {
        scenario: config.scenario.id,
        episodes,
        mean_reward: reward / n,
        mean_length: length as f64 / n,
        success_rate: wins as f64 / n,
        mean_closeness: close / n,
        mean_missed: missed as f64 / n,
        best_satisfied: best.1,
        connections_required: config.scenario.connections_required(),
    })
}
