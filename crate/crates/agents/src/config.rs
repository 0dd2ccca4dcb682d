use serde::{Deserialize, Serialize};

use crate::agent::{Agent, RandomAgent};
use crate::error::AgentError;
use crate::hillclimb::{HillClimbAgent, TemperatureSchedule};
use crate::ppo::PpoConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentConfig {
    Random,
    HillClimb { restarts: usize, schedule: TemperatureSchedule },
    Ppo(PpoConfig),
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        match self {
            AgentConfig::Random => Ok(()),
            AgentConfig::HillClimb { schedule, .. } => {
                if schedule.initial < 0.0 || !(0.0..=1.0).contains(&schedule.decay) {
                    return Err(AgentError::Config("temperature must be >= 0 and decay in [0, 1]".into()));
                }
                Ok(())
            }
            AgentConfig::Ppo(c) => c.validate(),
        }
    }

    /// A step-by-step agent for the heuristic kinds; PPO needs a trained
    /// policy and is built from a checkpoint instead.
    pub fn heuristic(&self, seed: u64) -> Option<Box<dyn Agent>> {
        match self {
            AgentConfig::Random => Some(Box::new(RandomAgent::new(seed))),
            AgentConfig::HillClimb { schedule, .. } => Some(Box::new(HillClimbAgent::new(*schedule, seed))),
            AgentConfig::Ppo(_) => None,
        }
    }
}
