use thiserror::Error;

use crate::geometry::{CellCoord, Facade, WallId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("plan must be at least 1x1, got {0}x{1}")]
    EmptyPlan(i32, i32),
    #[error("entrance opening {0} is not on the {1} facade")]
    OpeningOffFacade(CellCoord, Facade),
    #[error("wall {0} leaves the plan at {1}")]
    OutOfBounds(WallId, CellCoord),
    #[error("wall {0} folds both segments onto one side")]
    Degenerate(WallId),
    #[error("segment length must be at least 1")]
    ZeroLength,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("wall {0} cannot be placed: {1}")]
    IllegalPlacement(WallId, String),
    #[error("duplicate wall id {0}")]
    DuplicateWall(WallId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("pick {index} is illegal: {reason}")]
    IllegalPick { index: usize, reason: String },
    #[error("expected {expected} picks, got {got}")]
    PickCount { expected: usize, got: usize },
    #[error("layout has {got} regions, scenario needs {needed}")]
    InsufficientRegions { got: usize, needed: usize },
    #[error("layout has {got} regions, expected exactly {expected}")]
    RegionCountMismatch { got: usize, expected: usize },
    #[error("wall {0} has no unassigned adjacent region")]
    ConflictingAssignment(WallId),
    #[error("wall {0} carries no room index")]
    MissingRoomIndex(WallId),
    #[error("unknown wall {0}")]
    UnknownWall(WallId),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid field `{field}`: {message}")]
    Validation { field: &'static str, message: String },
    #[error("no built-in scenario {0}")]
    UnknownBuiltin(u32),
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no legal initial layout found in {0} attempts")]
    ResetExhausted(usize),
    #[error("episode finished; call reset first")]
    EpisodeFinished,
    #[error("episode not started; call reset first")]
    NotReset,
    #[error("action {action} out of range 0..{n}")]
    InvalidAction { action: usize, n: usize },
    #[error(transparent)]
    Plan(#[from] PlanError),
}
