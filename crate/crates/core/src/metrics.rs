//! Geometric and topological evaluation of a layout against its scenario.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::CellState;
use crate::partition::entrance_region;
use crate::planner::{LayoutState, LIVING_ROOM};
use crate::scenario::{Connection, DesignScenario};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutMetrics {
    /// Cell count per room; 0 for a room with no region.
    pub areas: Vec<usize>,
    pub assigned: Vec<bool>,
    /// Bounding-box ratio `max(w, h) / min(w, h)` per room.
    pub aspect: Vec<Option<f64>>,
    /// Room pairs `(lo, hi)` sharing at least one cell edge.
    pub adjacency: BTreeSet<(usize, usize)>,
    pub facade_access: Vec<bool>,
    pub entrance_ok: bool,
    pub satisfied: Vec<Connection>,
    pub missed: Vec<Connection>,
    pub connections_satisfied: usize,
    pub connections_required: usize,
}

impl LayoutMetrics {
    pub fn all_connections(&self) -> bool {
        self.missed.is_empty()
    }
}

pub fn compute_metrics(state: &LayoutState, scenario: &DesignScenario) -> LayoutMetrics {
    let n = scenario.n_rooms;
    let size = state.grid.size();
    let rooms = state.room_grid();

    let mut areas = vec![0usize; n];
    let mut bbox = vec![None::<(i32, i32, i32, i32)>; n];
    let mut facade_access = vec![false; n];
    let mut adjacency = BTreeSet::new();
    for (i, room) in rooms.iter().enumerate() {
        let Some(r) = *room else { continue };
        if r >= n {
            continue;
        }
        areas[r] += 1;
        let c = size.coord(i);
        bbox[r] = Some(match bbox[r] {
            None => (c.x, c.y, c.x, c.y),
            Some((x0, y0, x1, y1)) => (x0.min(c.x), y0.min(c.y), x1.max(c.x), y1.max(c.y)),
        });
        if size.on_boundary(c) && !matches!(state.grid.at(i), CellState::EntranceOpening) {
            facade_access[r] = true;
        }
        // east and south neighbours cover every edge once
        for (dx, dy) in [(1, 0), (0, 1)] {
            let nb = c.step(dx, dy);
            if !size.contains(nb) {
                continue;
            }
            if let Some(o) = rooms[size.index(nb)] {
                if o != r && o < n {
                    adjacency.insert((r.min(o), r.max(o)));
                }
            }
        }
    }

    let assigned: Vec<bool> = (0..n).map(|r| state.assignment.region_of(r).is_some()).collect();
    let aspect = bbox
        .iter()
        .map(|b| {
            b.map(|(x0, y0, x1, y1)| {
                let w = f64::from(x1 - x0 + 1);
                let h = f64::from(y1 - y0 + 1);
                w.max(h) / w.min(h)
            })
        })
        .collect();

    let living = state.assignment.region_of(LIVING_ROOM);
    let entrance_ok = living.is_some() && living == entrance_region(&state.grid, &state.partition);

    let (mut satisfied, mut missed) = (Vec::new(), Vec::new());
    for c in scenario.required_connections() {
        let ok = match c {
            Connection::RoomToLiving(r) => {
                assigned[r] && assigned[LIVING_ROOM] && adjacency.contains(&(LIVING_ROOM, r))
            }
            Connection::RoomToFacade(r) => facade_access[r],
        };
        if ok {
            satisfied.push(c);
        } else {
            missed.push(c);
        }
    }
    LayoutMetrics {
        areas,
        assigned,
        aspect,
        adjacency,
        facade_access,
        entrance_ok,
        connections_satisfied: satisfied.len(),
        connections_required: scenario.connections_required(),
        satisfied,
        missed,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosenessWeights {
    pub geometric: f64,
    pub topological: f64,
}

impl Default for ClosenessWeights {
    fn default() -> Self {
        Self { geometric: 0.5, topological: 0.5 }
    }
}

/// Per-room geometric error in `[0, 1]`: relative area error, or 1 for a
/// missing room or one whose aspect ratio is out of bounds.
pub fn room_errors(metrics: &LayoutMetrics, scenario: &DesignScenario) -> Vec<f64> {
    (0..scenario.n_rooms)
        .map(|r| {
            let in_bounds = metrics.aspect[r].is_some_and(|a| scenario.aspect_bounds.contains(a));
            if !metrics.assigned[r] || !in_bounds {
                return 1.0;
            }
            let desired = f64::from(scenario.desired_areas[r]);
            ((metrics.areas[r] as f64 - desired).abs() / desired).min(1.0)
        })
        .collect()
}

pub fn closeness(metrics: &LayoutMetrics, scenario: &DesignScenario) -> f64 {
    closeness_weighted(metrics, scenario, ClosenessWeights::default())
}

pub fn closeness_weighted(metrics: &LayoutMetrics, scenario: &DesignScenario, w: ClosenessWeights) -> f64 {
    let errors = room_errors(metrics, scenario);
    let geometric = 1.0 - errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    let topological = if metrics.connections_required == 0 {
        1.0
    } else {
        metrics.connections_satisfied as f64 / metrics.connections_required as f64
    };
    (w.geometric * geometric + w.topological * topological) / (w.geometric + w.topological)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CellCoord, Facade, LaserWall, PlanSize, WallId, WallShape};
    use crate::partition::InfiltrationMode;
    use crate::planner::{AssignmentMode, LightMode};
    use crate::scenario::builtins;
    use proptest::prelude::*;

    fn synthetic(areas: Vec<usize>, satisfied: usize, required: usize) -> LayoutMetrics {
        let n = areas.len();
        LayoutMetrics {
            areas,
            assigned: vec![true; n],
            aspect: vec![Some(2.0); n],
            adjacency: BTreeSet::new(),
            facade_access: vec![true; n],
            entrance_ok: true,
            satisfied: vec![],
            missed: vec![],
            connections_satisfied: satisfied,
            connections_required: required,
        }
    }

    fn scen(areas: Vec<u32>) -> DesignScenario {
        DesignScenario::custom(areas.len(), areas, Facade::West, PlanSize::new(30, 30))
    }

    #[test]
    fn perfect_half_and_five_percent() {
        let s = scen(vec![100, 200, 400]);
        assert_eq!(closeness(&synthetic(vec![100, 200, 400], 5, 5), &s), 1.0);
        assert_eq!(closeness(&synthetic(vec![100, 200, 400], 2, 4), &s), 0.75);
        let c = closeness(&synthetic(vec![105, 190, 420], 5, 5), &s);
        assert!((c - 0.975).abs() < 1e-12, "{c}");
    }

    #[test]
    fn aspect_out_of_bounds_zeroes_room() {
        let s = scen(vec![100, 100]);
        let mut m = synthetic(vec![100, 100], 3, 3);
        m.aspect[1] = Some(7.0);
        assert_eq!(closeness(&m, &s), 0.5 * 0.5 + 0.5);
    }

    #[test]
    fn totals_for_builtins() {
        assert_eq!(builtins().iter().map(|s| s.connections_required()).sum::<usize>(), 72);
    }

    #[test]
    fn square_room_and_single_region() {
        let s = DesignScenario::custom(1, vec![25], Facade::North, PlanSize::new(5, 5));
        let st = LayoutState::build(
            &s.plan_grid(),
            vec![],
            InfiltrationMode::Fixed,
            LightMode::OffLight,
            AssignmentMode::IdentityFull,
            &s,
        )
        .unwrap();
        let m = compute_metrics(&st, &s);
        assert_eq!(m.aspect[0], Some(1.0));
        assert_eq!(m.areas, vec![25]);
        assert!(m.facade_access[0]);
        assert!(m.adjacency.is_empty());
        assert!(m.entrance_ok);
        assert_eq!(m.connections_required, 1);
        assert_eq!(closeness(&m, &s), 1.0);
    }

    #[test]
    fn corner_room_layout() {
        let s = DesignScenario::custom(2, vec![75, 25], Facade::West, PlanSize::new(10, 10));
        let w = LaserWall::new(WallId(0), WallShape::LSouthWest, CellCoord::new(6, 3), 2, Some(1));
        let st = LayoutState::build(
            &s.plan_grid(),
            vec![w],
            InfiltrationMode::Fixed,
            LightMode::OffLight,
            AssignmentMode::IdentityFull,
            &s,
        )
        .unwrap();
        let m = compute_metrics(&st, &s);
        assert_eq!(m.areas.iter().sum::<usize>(), 100);
        assert!(m.adjacency.contains(&(0, 1)));
        assert_eq!(m.missed, vec![]);
        assert_eq!(m.connections_satisfied, 3);
    }

    proptest! {
        #[test]
        fn monotone_in_area_error(base in 50usize..150, extra in 0usize..100, sat in 0usize..=5) {
            let s = scen(vec![100, 100]);
            let near = closeness(&synthetic(vec![100, base], sat, 5), &s);
            let far_area = if base >= 100 { base + extra } else { base.saturating_sub(extra) };
            let far = closeness(&synthetic(vec![100, far_area], sat, 5), &s);
            prop_assert!(far <= near + 1e-15);
        }

        #[test]
        fn monotone_in_connections(area in 1usize..300, sat in 0usize..5) {
            let s = scen(vec![100, 100]);
            let lo = closeness(&synthetic(vec![100, area], sat, 5), &s);
            let hi = closeness(&synthetic(vec![100, area], sat + 1, 5), &s);
            prop_assert!(hi >= lo);
            prop_assert!((0.0..=1.0).contains(&lo));
        }
    }
}
