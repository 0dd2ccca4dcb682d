use laserwall_core::EnvError;
use thiserror::Error;

use crate::ppo::TrainReport;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("no legal action in the current state")]
    NoLegalAction,
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error("training diverged at iteration {iteration}: non-finite loss")]
    DivergenceDetected { iteration: usize, report: Box<TrainReport> },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
