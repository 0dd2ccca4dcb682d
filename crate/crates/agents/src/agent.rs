use laserwall_core::LayoutEnv;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::AgentError;

/// Anything that can choose the next action of an episode in progress.
pub trait Agent {
    fn act(&mut self, env: &LayoutEnv) -> Result<usize, AgentError>;

    /// Called before every episode, with that episode's reset seed.
    fn begin_episode(&mut self, _seed: u64) {}
}

pub(crate) fn legal_actions(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
}

/// Uniform over unmasked actions.
#[derive(Clone, Debug)]
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn choose(&mut self, mask: &[bool]) -> Result<usize, AgentError> {
        let legal = legal_actions(mask);
        if legal.is_empty() {
            return Err(AgentError::NoLegalAction);
        }
        Ok(legal[self.rng.gen_range(0..legal.len())])
    }
}

impl Agent for RandomAgent {
    fn act(&mut self, env: &LayoutEnv) -> Result<usize, AgentError> {
        self.choose(&env.action_mask())
    }
}
