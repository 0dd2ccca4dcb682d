//! JSON bodies exchanged with the session service.

use laserwall_core::env::{decode_action, RewardBreakdown, Transition};
use laserwall_core::partition::InfiltrationMode;
use laserwall_core::render::LabelView;
use laserwall_core::{
    Connection, DesignScenario, EnvConfig, LaserWall, LayoutEnv, LayoutMetrics, LightMode, StepOutcome, WallTypes,
};
use serde::{Deserialize, Serialize};

/// Layout snapshot returned by every state-changing call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub step: usize,
    pub width: usize,
    pub height: usize,
    /// Row-major rows of `room + 1` (0 for walls, entrance and unassigned).
    pub labels: Vec<Vec<u8>>,
    /// Row-major rows of cell kinds: 0 free, 1 beam, 2 wall, 3 entrance.
    pub kinds: Vec<Vec<u8>>,
    pub walls: Vec<LaserWall>,
    pub metrics: LayoutMetrics,
    pub closeness: f64,
    pub reward: RewardBreakdown,
    pub total_reward: f64,
    pub outcome: Option<StepOutcome>,
    pub action_mask: Vec<bool>,
    pub terminated: bool,
    pub truncated: bool,
    pub satisfied: Vec<Connection>,
    pub missed: Vec<Connection>,
}

fn rows(v: &[u8], width: usize) -> Vec<Vec<u8>> {
    v.chunks(width.max(1)).map(<[u8]>::to_vec).collect()
}

impl StepResponse {
    /// Snapshot of `env` after `last` (or right after a reset when `None`).
    pub fn capture(env: &LayoutEnv, last: Option<&Transition>) -> Self {
        let state = env.state().expect("session env is always reset");
        let metrics = env.metrics().expect("metrics after reset").clone();
        let view = LabelView::of(state);
        let mut walls = state.walls.clone();
        walls.sort_by_key(|w| w.id);
        Self {
            step: env.steps(),
            width: view.width,
            height: view.height,
            labels: rows(&view.labels, view.width),
            kinds: rows(&view.aux, view.width),
            walls,
            closeness: env.closeness(),
            reward: last.map(|t| t.info.reward).unwrap_or_default(),
            total_reward: last.map_or(0.0, |t| t.reward),
            outcome: last.and_then(|t| t.info.outcome),
            action_mask: env.action_mask(),
            terminated: last.is_some_and(|t| t.terminated),
            truncated: last.is_some_and(|t| t.truncated),
            satisfied: metrics.satisfied.clone(),
            missed: metrics.missed.clone(),
            metrics,
        }
    }
}

/// Body of `POST /sessions`. Every field is optional.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CreateSession {
    /// Built-in scenario id (1-6); ignored when `custom_scenario` is set.
    pub scenario: Option<u32>,
    pub custom_scenario: Option<DesignScenario>,
    pub light_mode: Option<LightMode>,
    pub infiltration: Option<InfiltrationMode>,
    pub wall_types: Option<WallTypes>,
    pub max_steps: Option<usize>,
    pub seed: Option<u64>,
    /// A complete config; overrides every other field except `seed`.
    pub config: Option<EnvConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub seed: u64,
    pub config: EnvConfig,
    pub state: StepResponse,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepRequest {
    pub wall_id: u32,
    pub transformation: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ResetRequest {
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedAction {
    pub action: usize,
    pub wall_id: u32,
    pub transformation: String,
}

impl NamedAction {
    pub fn of(action: usize) -> Self {
        let (wall, t) = decode_action(action);
        Self { action, wall_id: wall.0, transformation: t.name().to_string() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionsResponse {
    pub actions: Vec<NamedAction>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioEntry {
    #[serde(flatten)]
    pub scenario: DesignScenario,
    pub connections_required: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}
