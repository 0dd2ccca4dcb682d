//! Floor-plan layout generation with laser-walls.
//!
//! A rectangular plan is partitioned into rooms by walls whose free ends emit
//! beams until they hit the outline or another wall's light. The crate covers
//! the grid geometry, beam propagation and region extraction, one-shot and
//! step-wise planning, layout metrics, the built-in design scenarios and an
//! episodic environment with reset/step semantics.

pub mod env;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod partition;
pub mod planner;
pub mod render;
pub mod scenario;
pub mod trajectory;

pub use env::{EnvConfig, LayoutEnv, Observation, ObservationMode, RewardSpec, ShapingCurve, WallTypes};
pub use error::{EnvError, GeometryError, PartitionError, PlanError, ScenarioError};
pub use geometry::{CellCoord, CellState, Facade, LaserWall, PlanGrid, PlanSize, Transformation, WallId, WallShape};
pub use metrics::{closeness, compute_metrics, LayoutMetrics};
pub use partition::{repartition, InfiltrationMode, PartitionResult};
pub use planner::{dynamic_step, one_shot_plan, AssignmentMode, LayoutState, LightMode, Pick, StepOutcome};
pub use scenario::{builtin, builtins, load_scenario, Connection, DesignScenario};
