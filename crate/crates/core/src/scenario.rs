//! Design scenarios: room program, entrance facade and plan size.

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::geometry::{Facade, PlanGrid, PlanSize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AspectBounds {
    pub low: f64,
    pub high: f64,
}

impl Default for AspectBounds {
    fn default() -> Self {
        Self { low: 1.0, high: 6.0 }
    }
}

impl AspectBounds {
    pub fn contains(&self, ratio: f64) -> bool {
        ratio >= self.low && ratio <= self.high
    }
}

/// One required adjacency. Room 0 is always the living room.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "room", rename_all = "snake_case")]
pub enum Connection {
    RoomToLiving(usize),
    RoomToFacade(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignScenario {
    pub id: u32,
    pub n_rooms: usize,
    /// Cell counts; index 0 is the living room.
    pub desired_areas: Vec<u32>,
    pub entrance_facade: Facade,
    pub aspect_bounds: AspectBounds,
    pub grid: PlanSize,
    /// Arm length of every wall instantiated for this scenario.
    pub segment_length: u32,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    width: i32,
    height: i32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AspectDoc {
    low: f64,
    high: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    id: u32,
    n_rooms: usize,
    desired_areas: Vec<u32>,
    entrance_facade: Facade,
    #[serde(default)]
    grid: Option<GridDoc>,
    #[serde(default)]
    aspect_bounds: Option<AspectDoc>,
    #[serde(default)]
    segment_length: Option<u32>,
    #[serde(default)]
    seed: u64,
}

const BUILTIN_SOURCES: [&str; 6] = [
    include_str!("../scenarios/v1/scenario_1.json"),
    include_str!("../scenarios/v1/scenario_2.json"),
    include_str!("../scenarios/v1/scenario_3.json"),
    include_str!("../scenarios/v1/scenario_4.json"),
    include_str!("../scenarios/v1/scenario_5.json"),
    include_str!("../scenarios/v1/scenario_6.json"),
];

/// Smallest rectangle holding `total` cells with sides differing by at most
/// two; ties go to the squarer shape, then to the wider one.
pub fn default_grid(total: u32) -> PlanSize {
    let total = total.max(1) as i64;
    let mut best: Option<((i64, i64), PlanSize)> = None;
    let side = (total as f64).sqrt().ceil() as i64 + 2;
    for w in 1..=side {
        for h in (w - 2).max(1)..=w + 2 {
            if w * h < total {
                continue;
            }
            let key = (w * h, (w - h).abs());
            let better = match &best {
                None => true,
                Some((k, s)) => key < *k || (key == *k && w > s.width as i64),
            };
            if better {
                best = Some((key, PlanSize::new(w as i32, h as i32)));
            }
        }
    }
    best.expect("some rectangle fits").1
}

pub fn default_segment_length(size: PlanSize) -> u32 {
    (size.width.min(size.height).max(1) as u32).div_ceil(8)
}

fn validation(field: &'static str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation { field, message: message.into() }
}

/// Parses and validates a scenario document.
pub fn load_scenario(source: &str) -> Result<DesignScenario, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_str(source).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.n_rooms == 0 {
        return Err(validation("n_rooms", "must be at least 1"));
    }
    if doc.desired_areas.len() != doc.n_rooms {
        return Err(validation(
            "desired_areas",
            format!("{} areas for {} rooms", doc.desired_areas.len(), doc.n_rooms),
        ));
    }
    if doc.desired_areas.contains(&0) {
        return Err(validation("desired_areas", "areas must be positive"));
    }
    let total: u32 = doc.desired_areas.iter().sum();
    let grid = match doc.grid {
        Some(g) => {
            if g.width < 1 || g.height < 1 {
                return Err(validation("grid", "dimensions must be positive"));
            }
            PlanSize::new(g.width, g.height)
        }
        None => default_grid(total),
    };
    let aspect_bounds = match doc.aspect_bounds {
        Some(a) => {
            if !(a.low >= 1.0 && a.high >= a.low) {
                return Err(validation("aspect_bounds", "need 1 <= low <= high"));
            }
            AspectBounds { low: a.low, high: a.high }
        }
        None => AspectBounds::default(),
    };
    let segment_length = doc.segment_length.unwrap_or_else(|| default_segment_length(grid));
    if segment_length == 0 {
        return Err(validation("segment_length", "must be at least 1"));
    }
    Ok(DesignScenario {
        id: doc.id,
        n_rooms: doc.n_rooms,
        desired_areas: doc.desired_areas,
        entrance_facade: doc.entrance_facade,
        aspect_bounds,
        grid,
        segment_length,
        seed: doc.seed,
    })
}

/// One of the six shipped scenarios, numbered from 1.
pub fn builtin(id: u32) -> Result<DesignScenario, ScenarioError> {
    let src =
        (id as usize).checked_sub(1).and_then(|i| BUILTIN_SOURCES.get(i)).ok_or(ScenarioError::UnknownBuiltin(id))?;
    Ok(load_scenario(src).expect("built-in scenarios are valid"))
}

pub fn builtins() -> Vec<DesignScenario> {
    (1..=BUILTIN_SOURCES.len() as u32).map(|i| builtin(i).unwrap()).collect()
}

impl DesignScenario {
    pub fn plan_grid(&self) -> PlanGrid {
        PlanGrid::new(self.grid, self.entrance_facade).expect("validated grid")
    }

    pub fn n_walls(&self) -> usize {
        self.n_rooms - 1
    }

    /// Every room to the living room, and every room to a facade.
    pub fn required_connections(&self) -> Vec<Connection> {
        (1..self.n_rooms).map(Connection::RoomToLiving).chain((0..self.n_rooms).map(Connection::RoomToFacade)).collect()
    }

    pub fn connections_required(&self) -> usize {
        (self.n_rooms - 1) + self.n_rooms
    }

    pub fn total_desired_area(&self) -> u32 {
        self.desired_areas.iter().sum()
    }

    /// A one-off scenario for tests and small examples.
    pub fn custom(n_rooms: usize, desired_areas: Vec<u32>, facade: Facade, grid: PlanSize) -> Self {
        Self {
            id: 0,
            n_rooms,
            desired_areas,
            entrance_facade: facade,
            aspect_bounds: AspectBounds::default(),
            grid,
            segment_length: default_segment_length(grid),
            seed: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let s4 = builtin(4).unwrap();
        assert_eq!(s4.n_rooms, 7);
        assert_eq!(s4.desired_areas, vec![313, 150, 144, 144, 130, 138, 134]);
        assert_eq!(s4.entrance_facade, Facade::West);
        let s6 = builtin(6).unwrap();
        assert_eq!(s6.n_rooms, 9);
        assert_eq!(s6.entrance_facade, Facade::East);
        assert!(builtin(7).is_err());
    }

    #[test]
    fn built_in_connection_totals() {
        let all = builtins();
        assert_eq!(all.iter().map(|s| s.n_rooms).sum::<usize>(), 39);
        assert_eq!(all.iter().map(|s| s.connections_required()).sum::<usize>(), 72);
        assert_eq!(all.iter().map(|s| s.required_connections().len()).sum::<usize>(), 72);
    }

    #[test]
    fn shipped_grids_follow_default_rule() {
        for s in builtins() {
            assert_eq!(s.grid, default_grid(s.total_desired_area()), "scenario {}", s.id);
            assert_eq!(s.segment_length, default_segment_length(s.grid));
            assert_eq!(s.aspect_bounds, AspectBounds::default());
        }
        assert_eq!(default_grid(1209), PlanSize::new(36, 34));
        assert_eq!(default_grid(1741), PlanSize::new(43, 41));
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let doc = r#"{"id": 9, "n_rooms": 4, "desired_areas": [1, 2, 3, 4, 5], "entrance_facade": "West"}"#;
        match load_scenario(doc) {
            Err(ScenarioError::Validation { field, .. }) => assert_eq!(field, "desired_areas"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let doc = "{\n  \"id\": 1,\n  \"n_rooms\": oops\n}";
        match load_scenario(doc) {
            Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
