//! Dynamic planning as an episodic decision process with reset/step
//! semantics.
//!
//! An action picks one wall and one of the 14 transformations:
//! `action = wall_ordinal * 14 + transformation_index`, where the wall
//! ordinal is the wall's id (stable for the whole episode, independent of
//! activation order).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EnvError, PlanError};
use crate::geometry::{
    placement_legal, CellCoord, LaserWall, PlacementRules, PlanGrid, Transformation, WallId, WallShape,
};
use crate::metrics::{closeness, compute_metrics, LayoutMetrics};
use crate::partition::InfiltrationMode;
use crate::planner::{dynamic_step, prepare_step, AssignmentMode, LayoutState, LightMode, StepOutcome};
use crate::render::{raster, LabelView, MAX_PALETTE_ROOMS};
use crate::scenario::DesignScenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallTypes {
    StraightOnly,
    AngledOnly,
    Both,
}

impl WallTypes {
    pub fn shapes(self) -> &'static [WallShape] {
        match self {
            WallTypes::StraightOnly => &WallShape::STRAIGHT,
            WallTypes::AngledOnly => &WallShape::ANGLED,
            WallTypes::Both => &WallShape::ALL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapingCurve {
    Linear,
    Quadratic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub violation_penalty: f64,
    pub deviation_penalty_scale: f64,
    pub terminal_fail_penalty: f64,
    /// Closeness at which an episode ends successfully.
    pub terminal_threshold: f64,
    pub terminal_scale: f64,
    pub adjacency_bonus: f64,
    pub shaping: ShapingCurve,
}

impl Default for RewardSpec {
    fn default() -> Self {
        Self {
            violation_penalty: -5.0,
            deviation_penalty_scale: -1.0,
            terminal_fail_penalty: -50.0,
            terminal_threshold: 0.8,
            terminal_scale: 100.0,
            adjacency_bonus: 20.0,
            shaping: ShapingCurve::Linear,
        }
    }
}

impl RewardSpec {
    /// Maps closeness in `[threshold, 1]` onto `[0, 1]`.
    pub fn shaped(&self, closeness: f64) -> f64 {
        let tau = self.terminal_threshold;
        let x = if tau >= 1.0 { 1.0 } else { ((closeness - tau) / (1.0 - tau)).clamp(0.0, 1.0) };
        match self.shaping {
            ShapingCurve::Linear => x,
            ShapingCurve::Quadratic => x * x,
        }
    }

    /// Inclusive range every single-step reward falls in.
    pub fn bounds(&self) -> (f64, f64) {
        let worst_instant = self.violation_penalty.min(self.deviation_penalty_scale);
        (self.terminal_fail_penalty + worst_instant, self.terminal_scale + self.adjacency_bonus)
    }

    fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::Config(m.to_string()));
        if !(self.terminal_threshold > 0.0 && self.terminal_threshold <= 1.0) {
            return bad("terminal threshold must lie in (0, 1]");
        }
        if self.violation_penalty > 0.0 || self.deviation_penalty_scale > 0.0 || self.terminal_fail_penalty > 0.0 {
            return bad("penalties must be non-positive");
        }
        if self.terminal_scale < 0.0 || self.adjacency_bonus < 0.0 {
            return bad("terminal scale and adjacency bonus must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservationMode {
    RgbImage { cell_px: u32 },
    LabelGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub scenario: DesignScenario,
    pub light_mode: LightMode,
    pub infiltration: InfiltrationMode,
    pub wall_types: WallTypes,
    pub max_steps: usize,
    pub reward: RewardSpec,
    pub observation_mode: ObservationMode,
    pub seed: u64,
}

impl EnvConfig {
    pub const DEFAULT_MAX_STEPS: usize = 200;
    pub const RESET_ATTEMPTS: usize = 10_000;

    pub fn new(scenario: DesignScenario) -> Self {
        let seed = scenario.seed;
        Self {
            scenario,
            light_mode: LightMode::OffLight,
            infiltration: InfiltrationMode::Fixed,
            wall_types: WallTypes::Both,
            max_steps: Self::DEFAULT_MAX_STEPS,
            reward: RewardSpec::default(),
            observation_mode: ObservationMode::LabelGrid,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.max_steps == 0 {
            return Err(EnvError::Config("max_steps must be at least 1".into()));
        }
        if let ObservationMode::RgbImage { cell_px } = self.observation_mode {
            if cell_px == 0 {
                return Err(EnvError::Config("cell_px must be at least 1".into()));
            }
            if self.scenario.n_rooms > MAX_PALETTE_ROOMS {
                return Err(EnvError::Config(format!("raster palette covers {MAX_PALETTE_ROOMS} rooms")));
            }
        }
        if let InfiltrationMode::Decreasing { horizon: 0 } = self.infiltration {
            return Err(EnvError::Config("decreasing horizon must be at least 1".into()));
        }
        self.reward.validate()
    }

    pub fn n_actions(&self) -> usize {
        self.scenario.n_walls() * Transformation::COUNT
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observation {
    Raster { width: u32, height: u32, cell_px: u32, pixels: Vec<u8> },
    Labels(LabelView),
}

impl Observation {
    pub fn shape(&self) -> (usize, usize, usize) {
        match self {
            Observation::Raster { width, height, .. } => (*height as usize, *width as usize, 3),
            Observation::Labels(v) => (v.height, v.width, 2),
        }
    }
}

/// Reward of one step, by component.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub violation: f64,
    pub deviation: f64,
    pub terminal: f64,
    pub adjacency_bonus: f64,
    pub terminal_fail: f64,
}

impl RewardBreakdown {
    pub fn total(&self) -> f64 {
        self.violation + self.deviation + self.terminal + self.adjacency_bonus + self.terminal_fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub step: usize,
    pub closeness: f64,
    pub metrics: LayoutMetrics,
    pub reward: RewardBreakdown,
    pub outcome: Option<StepOutcome>,
    pub action_mask: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

/// `(wall ordinal, transformation)` for an action index.
pub fn decode_action(action: usize) -> (WallId, Transformation) {
    let t = Transformation::from_index(action % Transformation::COUNT).expect("mod 14");
    (WallId((action / Transformation::COUNT) as u32), t)
}

pub fn encode_action(wall: WallId, t: Transformation) -> usize {
    wall.0 as usize * Transformation::COUNT + t.index()
}

/// Legal-action mask for `state`.
pub fn action_mask(state: &LayoutState, n_walls: usize) -> Vec<bool> {
    let mut mask = vec![false; n_walls * Transformation::COUNT];
    for w in 0..n_walls {
        for t in Transformation::ALL {
            mask[encode_action(WallId(w as u32), t)] = matches!(prepare_step(state, WallId(w as u32), t), Ok(Ok(_)));
        }
    }
    mask
}

/// Samples `n` identity-full walls (wall `i` carries room `i + 1`) with
/// uniformly chosen legal pivots, retrying until the layout has exactly
/// `n + 1` regions that all receive a room.
pub fn sample_initial_walls(config: &EnvConfig, rng: &mut ChaCha8Rng) -> Result<LayoutState, EnvError> {
    let scenario = &config.scenario;
    let outline = scenario.plan_grid();
    let size = outline.size();
    let shapes = config.wall_types.shapes();
    let rules = PlacementRules::default();
    for _ in 0..EnvConfig::RESET_ATTEMPTS {
        let mut bodies: PlanGrid = outline.clone();
        let mut walls: Vec<LaserWall> = Vec::with_capacity(scenario.n_walls());
        for i in 0..scenario.n_walls() {
            let shape = *shapes.choose(rng).expect("non-empty library");
            let id = WallId(i as u32);
            let legal: Vec<CellCoord> = (0..size.area())
                .map(|k| size.coord(k))
                .filter(|&p| {
                    let w = LaserWall::new(id, shape, p, scenario.segment_length, Some(i + 1));
                    placement_legal(&bodies, &w, &rules)
                })
                .collect();
            if legal.is_empty() {
                break;
            }
            let pivot = legal[rng.gen_range(0..legal.len())];
            let wall = LaserWall::new(id, shape, pivot, scenario.segment_length, Some(i + 1));
            crate::partition::activate_wall(&mut bodies, &wall, config.infiltration).expect("pivot checked legal");
            walls.push(wall);
        }
        if walls.len() != scenario.n_walls() {
            continue;
        }
        match LayoutState::build(
            &outline,
            walls,
            config.infiltration,
            config.light_mode,
            AssignmentMode::IdentityFull,
            scenario,
        ) {
            Ok(state)
                if state.partition.region_count() == scenario.n_rooms && state.assignment.unassigned.is_empty() =>
            {
                return Ok(state)
            }
            Ok(_) | Err(PlanError::ConflictingAssignment(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(EnvError::ResetExhausted(EnvConfig::RESET_ATTEMPTS))
}

/// One episode at a time over a [`EnvConfig`].
#[derive(Clone, Debug)]
pub struct LayoutEnv {
    config: EnvConfig,
    state: Option<LayoutState>,
    metrics: Option<LayoutMetrics>,
    closeness: f64,
    steps: usize,
    finished: bool,
}

impl LayoutEnv {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        Ok(Self { config, state: None, metrics: None, closeness: 0.0, steps: 0, finished: false })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> Option<&LayoutState> {
        self.state.as_ref()
    }

    pub fn metrics(&self) -> Option<&LayoutMetrics> {
        self.metrics.as_ref()
    }

    pub fn closeness(&self) -> f64 {
        self.closeness
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn n_walls(&self) -> usize {
        self.config.scenario.n_walls()
    }

    pub fn n_actions(&self) -> usize {
        self.config.n_actions()
    }

    /// Starts a new episode from a random initial layout drawn from `seed`.
    pub fn reset(&mut self, seed: u64) -> Result<(Observation, StepInfo), EnvError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = sample_initial_walls(&self.config, &mut rng)?;
        Ok(self.reset_to(state))
    }

    /// Starts a new episode from a given layout.
    pub fn reset_to(&mut self, state: LayoutState) -> (Observation, StepInfo) {
        let metrics = compute_metrics(&state, &self.config.scenario);
        self.closeness = closeness(&metrics, &self.config.scenario);
        self.metrics = Some(metrics);
        self.state = Some(state);
        self.steps = 0;
        self.finished = false;
        let info = self.info(RewardBreakdown::default(), None);
        (self.observe(), info)
    }

    pub fn action_mask(&self) -> Vec<bool> {
        match &self.state {
            Some(s) => action_mask(s, self.n_walls()),
            None => vec![false; self.n_actions()],
        }
    }

    pub fn observe(&self) -> Observation {
        let state = self.state.as_ref().expect("observe after reset");
        let view = LabelView::of(state);
        match self.config.observation_mode {
            ObservationMode::LabelGrid => Observation::Labels(view),
            ObservationMode::RgbImage { cell_px } => {
                let img = raster(&view, cell_px);
                Observation::Raster { width: img.width(), height: img.height(), cell_px, pixels: img.into_raw() }
            }
        }
    }

    fn info(&self, reward: RewardBreakdown, outcome: Option<StepOutcome>) -> StepInfo {
        StepInfo {
            step: self.steps,
            closeness: self.closeness,
            metrics: self.metrics.clone().expect("metrics after reset"),
            reward,
            outcome,
            action_mask: self.action_mask(),
        }
    }

    /// The layout and closeness `action` would produce, without stepping.
    /// `None` when the action is a violation.
    pub fn simulate(&self, action: usize) -> Result<Option<(LayoutState, f64)>, EnvError> {
        let state = self.state.as_ref().ok_or(EnvError::NotReset)?;
        if action >= self.n_actions() {
            return Err(EnvError::InvalidAction { action, n: self.n_actions() });
        }
        let (wall, t) = decode_action(action);
        let (next, outcome) = dynamic_step(state, wall, t)?;
        if outcome != StepOutcome::Applied {
            return Ok(None);
        }
        let c = closeness(&compute_metrics(&next, &self.config.scenario), &self.config.scenario);
        Ok(Some((next, c)))
    }

    pub fn step(&mut self, action: usize) -> Result<Transition, EnvError> {
        if self.finished {
            return Err(EnvError::EpisodeFinished);
        }
        let state = self.state.as_ref().ok_or(EnvError::NotReset)?;
        if action >= self.n_actions() {
            return Err(EnvError::InvalidAction { action, n: self.n_actions() });
        }
        let spec = self.config.reward;
        let (wall, t) = decode_action(action);
        let (next, outcome) = dynamic_step(state, wall, t)?;
        self.steps += 1;

        let mut reward = RewardBreakdown::default();
        let mut terminated = false;
        match outcome {
            StepOutcome::Violation(_) => reward.violation = spec.violation_penalty,
            StepOutcome::Applied => {
                let metrics = compute_metrics(&next, &self.config.scenario);
                self.closeness = closeness(&metrics, &self.config.scenario);
                reward.deviation = spec.deviation_penalty_scale * (1.0 - self.closeness);
                if self.closeness >= spec.terminal_threshold {
                    terminated = true;
                    reward.terminal = spec.terminal_scale * spec.shaped(self.closeness);
                    if metrics.all_connections() {
                        reward.adjacency_bonus = spec.adjacency_bonus;
                    }
                }
                self.metrics = Some(metrics);
                self.state = Some(next);
            }
        }
        let truncated = !terminated && self.steps >= self.config.max_steps;
        if truncated && self.closeness < spec.terminal_threshold {
            reward.terminal_fail = spec.terminal_fail_penalty;
        }
        self.finished = terminated || truncated;
        let info = self.info(reward, Some(outcome));
        Ok(Transition { observation: self.observe(), reward: reward.total(), terminated, truncated, info })
    }
}
