//! Label-view planes fed to the policy network.

use laserwall_core::render::{CellKind, LabelView};
use laserwall_core::{CellState, DesignScenario, LayoutMetrics, LayoutState};

/// Room label, wall mask, beam mask, entrance mask, wall identity and
/// signed per-room area error.
pub const PLANES: usize = 6;

/// Channel-major `PLANES x height x width` encoding, every value in [-1, 1].
pub fn encode(state: &LayoutState, metrics: &LayoutMetrics, scenario: &DesignScenario) -> Vec<f64> {
    let view = LabelView::of(state);
    let n = view.width * view.height;
    let rooms = scenario.n_rooms as f64;
    let walls = scenario.n_walls().max(1) as f64;
    let area_error: Vec<f64> = (0..scenario.n_rooms)
        .map(|r| {
            let d = f64::from(scenario.desired_areas[r]);
            ((metrics.areas[r] as f64 - d) / d).clamp(-1.0, 1.0)
        })
        .collect();
    let room_grid = state.room_grid();
    let mut out = vec![0.0; PLANES * n];
    for i in 0..n {
        out[i] = f64::from(view.labels[i]) / rooms;
        match view.kind(i) {
            CellKind::Wall => out[n + i] = 1.0,
            CellKind::Beam => out[2 * n + i] = 1.0,
            CellKind::Entrance => out[3 * n + i] = 1.0,
            CellKind::Free => {}
        }
        if let CellState::WallBody(id) = state.grid.at(i) {
            out[4 * n + i] = f64::from(id.0 + 1) / walls;
        }
        if let Some(r) = room_grid[i].filter(|&r| r < scenario.n_rooms) {
            out[5 * n + i] = area_error[r];
        }
    }
    out
}
