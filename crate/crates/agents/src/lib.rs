//! Baseline agents for the layout environment: uniform random, restarted
//! hill climbing, and a small PPO actor-critic.

pub mod agent;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod hillclimb;
pub mod nn;
pub mod ppo;

pub use agent::{Agent, RandomAgent};
pub use config::AgentConfig;
pub use error::AgentError;
pub use eval::{evaluate, EvalSummary};
pub use hillclimb::{best_action, hill_climb, random_restarts, ClimbReport, HillClimbAgent, TemperatureSchedule};
pub use ppo::{train, PpoAgent, PpoConfig, PpoPolicy, TrainReport};
