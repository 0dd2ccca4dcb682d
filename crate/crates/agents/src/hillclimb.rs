//! Greedy one-step lookahead with optional simulated annealing.

use laserwall_core::{EnvConfig, LayoutEnv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{legal_actions, Agent, RandomAgent};
use crate::error::AgentError;

/// Temperature `initial * decay^step`; zero disables annealing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSchedule {
    pub initial: f64,
    pub decay: f64,
}

impl TemperatureSchedule {
    pub const GREEDY: Self = Self { initial: 0.0, decay: 1.0 };

    pub fn at(&self, step: usize) -> f64 {
        self.initial * self.decay.powi(step.min(i32::MAX as usize) as i32)
    }
}

impl Default for TemperatureSchedule {
    fn default() -> Self {
        Self::GREEDY
    }
}

/// Best action by simulated closeness: `(action, closeness)`, lowest index
/// on ties, `None` when nothing is legal.
pub fn best_action(env: &LayoutEnv) -> Result<Option<(usize, f64)>, AgentError> {
    let mut best: Option<(usize, f64)> = None;
    for a in legal_actions(&env.action_mask()) {
        if let Some((_, c)) = env.simulate(a)? {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((a, c));
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug)]
pub struct HillClimbAgent {
    schedule: TemperatureSchedule,
    rng: ChaCha8Rng,
    step: usize,
}

impl HillClimbAgent {
    pub fn new(schedule: TemperatureSchedule, seed: u64) -> Self {
        Self { schedule, rng: ChaCha8Rng::seed_from_u64(seed), step: 0 }
    }

    /// `Ok(None)` at a local optimum the schedule does not let it leave.
    pub fn propose(&mut self, env: &LayoutEnv) -> Result<Option<usize>, AgentError> {
        let (best, c_best) = best_action(env)?.ok_or(AgentError::NoLegalAction)?;
        let temperature = self.schedule.at(self.step);
        self.step += 1;
        if c_best > env.closeness() {
            return Ok(Some(best));
        }
        if temperature <= 0.0 {
            return Ok(None);
        }
        let legal = legal_actions(&env.action_mask());
        let a = legal[self.rng.gen_range(0..legal.len())];
        let c = env.simulate(a)?.map_or(env.closeness(), |(_, c)| c);
        let accept = (c - env.closeness()) / temperature;
        Ok((self.rng.gen::<f64>() < accept.exp()).then_some(a))
    }
}

impl Agent for HillClimbAgent {
    /// Greedy argmax even at a local optimum; use [`HillClimbAgent::propose`]
    /// to detect one.
    fn act(&mut self, env: &LayoutEnv) -> Result<usize, AgentError> {
        match self.propose(env)? {
            Some(a) => Ok(a),
            None => best_action(env)?.map(|(a, _)| a).ok_or(AgentError::NoLegalAction),
        }
    }

    fn begin_episode(&mut self, _seed: u64) {
        self.step = 0;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClimbReport {
    pub restarts_run: usize,
    pub successes: usize,
    pub first_success: Option<usize>,
    pub best_closeness: f64,
    /// Connections satisfied where the best restart stopped.
    pub best_satisfied: usize,
    /// Closeness where each restart stopped.
    pub final_closeness: Vec<f64>,
    /// Environment steps spent in each restart.
    pub restart_steps: Vec<usize>,
    pub steps: usize,
}

impl ClimbReport {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.restarts_run.max(1) as f64
    }
}

/// Restarted hill climbing: each restart resets the environment with seed
/// `seed + k` and climbs until success, a local optimum or truncation.
/// Stops after the first success when `stop_on_success` is set.
pub fn hill_climb(
    config: &EnvConfig,
    restarts: usize,
    schedule: TemperatureSchedule,
    seed: u64,
    stop_on_success: bool,
) -> Result<ClimbReport, AgentError> {
    let mut env = LayoutEnv::new(config.clone())?;
    let tau = config.reward.terminal_threshold;
    let mut report = ClimbReport {
        restarts_run: 0,
        successes: 0,
        first_success: None,
        best_closeness: 0.0,
        best_satisfied: 0,
        final_closeness: Vec::new(),
        restart_steps: Vec::new(),
        steps: 0,
    };
    for k in 0..restarts {
        let episode_seed = seed.wrapping_add(k as u64);
        env.reset(episode_seed)?;
        let mut agent = HillClimbAgent::new(schedule, episode_seed);
        let mut steps = 0;
        while env.closeness() < tau && !env.is_finished() {
            match agent.propose(&env) {
                Ok(Some(a)) => {
                    env.step(a)?;
                    steps += 1;
                }
                Ok(None) | Err(AgentError::NoLegalAction) => break,
                Err(e) => return Err(e),
            }
        }
        if record(&mut report, k, &env, steps, tau) && stop_on_success {
            break;
        }
    }
    Ok(report)
}

fn record(report: &mut ClimbReport, k: usize, env: &LayoutEnv, steps: usize, tau: f64) -> bool {
    let c = env.closeness();
    if report.restarts_run == 0 || c > report.best_closeness {
        report.best_closeness = c;
        report.best_satisfied = env.metrics().map_or(0, |m| m.connections_satisfied);
    }
    report.restarts_run += 1;
    report.final_closeness.push(c);
    report.restart_steps.push(steps);
    report.steps += steps;
    let success = c >= tau;
    if success {
        report.successes += 1;
        report.first_success.get_or_insert(k);
    }
    success
}

/// Random baseline on a matched budget: restart `k` resets with the same
/// seed as [`hill_climb`] would and takes at most `budgets[k]` uniformly
/// random legal actions, stopping once the threshold is reached.
pub fn random_restarts(config: &EnvConfig, budgets: &[usize], seed: u64) -> Result<ClimbReport, AgentError> {
    let mut env = LayoutEnv::new(config.clone())?;
    let tau = config.reward.terminal_threshold;
    let mut report = ClimbReport {
        restarts_run: 0,
        successes: 0,
        first_success: None,
        best_closeness: 0.0,
        best_satisfied: 0,
        final_closeness: Vec::new(),
        restart_steps: Vec::new(),
        steps: 0,
    };
    for (k, &budget) in budgets.iter().enumerate() {
        let episode_seed = seed.wrapping_add(k as u64);
        env.reset(episode_seed)?;
        let mut agent = RandomAgent::new(episode_seed);
        let mut steps = 0;
        while steps < budget && env.closeness() < tau && !env.is_finished() {
            match agent.act(&env) {
                Ok(a) => {
                    env.step(a)?;
                    steps += 1;
                }
                Err(AgentError::NoLegalAction) => break,
                Err(e) => return Err(e),
            }
        }
        record(&mut report, k, &env, steps, tau);
    }
    Ok(report)
}
