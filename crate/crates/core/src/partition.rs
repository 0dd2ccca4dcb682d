//! Beam emission, beam interaction under an infiltration mode, and region
//! extraction.
//!
//! Wall bodies are hard obstacles. Beams leave each free endpoint along the
//! continuation of its arm and march cell by cell until the outline, a wall
//! body, the entrance opening or another beam stops them. Under decreasing
//! infiltration a beam that is strictly stronger at the meeting cell cuts
//! through, and the weaker beam loses every cell past the cut.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::PartitionError;
use crate::geometry::{BeamEnd, CellCoord, CellState, Dir4, LaserWall, PlanGrid, PlanSize, WallId};

pub type RegionId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InfiltrationMode {
    Fixed,
    Decreasing { horizon: u32 },
}

impl InfiltrationMode {
    /// Decreasing mode with the horizon set to the longer plan side.
    pub fn decreasing_for(size: PlanSize) -> Self {
        InfiltrationMode::Decreasing { horizon: size.width.max(size.height).max(1) as u32 }
    }
}

/// Beam strength `distance` cells from its origin.
pub fn infiltration_rate(distance: u32, mode: InfiltrationMode) -> f64 {
    match mode {
        InfiltrationMode::Fixed => 1.0,
        InfiltrationMode::Decreasing { horizon } => (1.0 - f64::from(distance) / f64::from(horizon.max(1))).max(0.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamCell {
    pub coord: CellCoord,
    pub distance: u32,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub owner: WallId,
    pub end: BeamEnd,
    pub origin: CellCoord,
    pub direction: Dir4,
    pub cells: Vec<BeamCell>,
}

/// Reverts the cells of beam `(owner, end)` lying strictly past `cut`.
fn truncate_after(grid: &mut PlanGrid, cut: usize, owner: WallId, end: BeamEnd, distance: u32) {
    let size = grid.size();
    // The beam is straight, so exactly one neighbour continues it.
    let next = size.neighbors(cut).find(|&n| {
        matches!(*grid.at(n), CellState::BeamLight { wall, end: e, distance: d, .. }
            if wall == owner && e == end && d == distance + 1)
    });
    let Some(mut idx) = next else { return };
    let (dx, dy) = {
        let a = size.coord(cut);
        let b = size.coord(idx);
        (b.x - a.x, b.y - a.y)
    };
    loop {
        match *grid.at(idx) {
            CellState::BeamLight { wall, end: e, .. } if wall == owner && e == end => {
                grid.set(idx, CellState::Free);
            }
            _ => break,
        }
        let c = size.coord(idx).step(dx, dy);
        if !size.contains(c) {
            break;
        }
        idx = size.index(c);
    }
}

/// Marches one beam from a free endpoint of `wall` across `grid`.
pub fn propagate_beam(grid: &mut PlanGrid, wall: &LaserWall, end: BeamEnd, mode: InfiltrationMode) -> Beam {
    let size = grid.size();
    let arm = wall.arm(end);
    let origin = arm.endpoint(wall.pivot);
    let mut beam = Beam { owner: wall.id, end, origin, direction: arm.dir, cells: Vec::new() };
    let mut distance = 1u32;
    loop {
        let c = origin.toward(arm.dir, distance as i32);
        if !size.contains(c) {
            break;
        }
        let idx = size.index(c);
        let rate = infiltration_rate(distance, mode);
        match *grid.at(idx) {
            CellState::Free => {}
            CellState::WallBody(_) | CellState::EntranceOpening => break,
            CellState::BeamLight { wall: other, end: other_end, rate: other_rate, distance: other_d } => {
                if other == wall.id || matches!(mode, InfiltrationMode::Fixed) || rate <= other_rate {
                    break;
                }
                truncate_after(grid, idx, other, other_end, other_d);
            }
        }
        grid.set(idx, CellState::BeamLight { wall: wall.id, end, rate, distance });
        beam.cells.push(BeamCell { coord: c, distance, rate });
        distance += 1;
    }
    beam
}

/// Places the body of `wall` on `grid` and emits both beams.
///
/// Body cells landing on existing beams cut those beams at that cell.
pub fn activate_wall(
    grid: &mut PlanGrid,
    wall: &LaserWall,
    mode: InfiltrationMode,
) -> Result<[Beam; 2], PartitionError> {
    place_body(grid, wall)?;
    Ok([propagate_beam(grid, wall, BeamEnd::A, mode), propagate_beam(grid, wall, BeamEnd::B, mode)])
}

fn place_body(grid: &mut PlanGrid, wall: &LaserWall) -> Result<(), PartitionError> {
    let size = grid.size();
    if wall.shape().is_none() {
        return Err(PartitionError::IllegalPlacement(wall.id, "degenerate shape".into()));
    }
    for c in wall.body() {
        if !size.contains(c) {
            return Err(PartitionError::IllegalPlacement(wall.id, format!("{c} outside plan")));
        }
        match *grid.at(size.index(c)) {
            CellState::WallBody(other) if other != wall.id => {
                return Err(PartitionError::IllegalPlacement(wall.id, format!("collides with {other} at {c}")));
            }
            CellState::EntranceOpening => {
                return Err(PartitionError::IllegalPlacement(wall.id, format!("blocks entrance at {c}")));
            }
            _ => {}
        }
    }
    for c in wall.body() {
        let idx = size.index(c);
        if let CellState::BeamLight { wall: owner, end, distance, .. } = *grid.at(idx) {
            truncate_after(grid, idx, owner, end, distance);
        }
        grid.set(idx, CellState::WallBody(wall.id));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub id: RegionId,
    /// Row-major cell indices, ascending.
    pub members: Vec<usize>,
    /// Members with a 4-neighbour outside the region or outside the plan.
    pub boundary: Vec<usize>,
    /// How many members are free (non-wall, non-beam) cells.
    pub free_cells: usize,
}

impl Region {
    pub fn area(&self) -> usize {
        self.members.len()
    }
}

/// Cell-to-region labeling. Region ids follow the row-major order of each
/// region's first free cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub size: PlanSize,
    pub labels: Vec<RegionId>,
    pub regions: Vec<Region>,
    pub wall_regions: BTreeMap<WallId, BTreeSet<RegionId>>,
}

impl PartitionResult {
    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn label(&self, c: CellCoord) -> RegionId {
        self.labels[self.size.index(c)]
    }

    pub fn area(&self, r: RegionId) -> usize {
        self.regions[r].area()
    }

    pub fn areas(&self) -> Vec<usize> {
        self.regions.iter().map(Region::area).collect()
    }

    pub fn cells_of(&self, r: RegionId) -> impl Iterator<Item = CellCoord> + '_ {
        self.regions[r].members.iter().map(|&i| self.size.coord(i))
    }

    /// Regions touching the body or beams of `wall`.
    pub fn adjacent_to(&self, wall: WallId) -> impl Iterator<Item = RegionId> + '_ {
        self.wall_regions.get(&wall).into_iter().flatten().copied()
    }
}

/// Intersection-over-union of two ascending index lists.
pub fn iou(a: &[usize], b: &[usize]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

const UNLABELED: RegionId = RegionId::MAX;

/// Labels the 4-connected components of free cells, then hands every other
/// cell to the region of its nearest free cell. Growth runs in synchronous
/// rounds; a cell joining in round k copies the first neighbour, in N, E, S,
/// W order, labelled in an earlier round.
pub fn extract_regions(grid: &PlanGrid) -> PartitionResult {
    let size = grid.size();
    let n = size.area();
    let mut labels = vec![UNLABELED; n];
    let mut next_id = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if labels[start] != UNLABELED || !grid.at(start).is_free() {
            continue;
        }
        labels[start] = next_id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            for nb in size.neighbors(i) {
                if labels[nb] == UNLABELED && grid.at(nb).is_free() {
                    labels[nb] = next_id;
                    stack.push(nb);
                }
            }
        }
        next_id += 1;
    }

    if next_id == 0 {
        // No free cell at all: the whole plan is one region.
        labels.fill(0);
        next_id = 1;
    } else {
        let mut frontier: Vec<usize> = (0..n).filter(|&i| labels[i] == UNLABELED).collect();
        while !frontier.is_empty() {
            let joins: Vec<(usize, RegionId)> = frontier
                .iter()
                .filter_map(|&i| size.neighbors(i).find(|&nb| labels[nb] != UNLABELED).map(|nb| (i, labels[nb])))
                .collect();
            assert!(!joins.is_empty(), "attachment stalled");
            for &(i, l) in &joins {
                labels[i] = l;
            }
            frontier.retain(|&i| labels[i] == UNLABELED);
        }
    }

    let mut regions: Vec<Region> =
        (0..next_id).map(|id| Region { id, members: Vec::new(), boundary: Vec::new(), free_cells: 0 }).collect();
    let mut wall_regions: BTreeMap<WallId, BTreeSet<RegionId>> = BTreeMap::new();
    for i in 0..n {
        let l = labels[i];
        let r = &mut regions[l];
        r.members.push(i);
        let state = grid.at(i);
        if state.is_free() {
            r.free_cells += 1;
        }
        let c = size.coord(i);
        let edge = Dir4::ALL.iter().any(|&d| {
            let nb = c.toward(d, 1);
            !size.contains(nb) || labels[size.index(nb)] != l
        });
        if edge {
            r.boundary.push(i);
        }
        let owner = match *state {
            CellState::WallBody(w) => Some(w),
            CellState::BeamLight { wall, .. } => Some(wall),
            _ => None,
        };
        if let Some(w) = owner {
            let set = wall_regions.entry(w).or_default();
            for nb in size.neighbors(i) {
                if grid.at(nb).is_free() {
                    set.insert(labels[nb]);
                }
            }
        }
    }
    PartitionResult { size, labels, regions, wall_regions }
}

/// Clears every beam of `outline`, stands all wall bodies, re-emits beams in
/// list order and extracts regions.
pub fn repartition(
    outline: &PlanGrid,
    walls: &[LaserWall],
    mode: InfiltrationMode,
) -> Result<(PlanGrid, PartitionResult), PartitionError> {
    let mut grid = outline.outline();
    let mut seen = HashSet::new();
    for w in walls {
        if !seen.insert(w.id) {
            return Err(PartitionError::DuplicateWall(w.id));
        }
        place_body(&mut grid, w)?;
    }
    for w in walls {
        propagate_beam(&mut grid, w, BeamEnd::A, mode);
        propagate_beam(&mut grid, w, BeamEnd::B, mode);
    }
    let partition = extract_regions(&grid);
    Ok((grid, partition))
}

/// Region holding the entrance: the one sharing the most edges with the
/// opening cells, ties to the lower id.
pub fn entrance_region(grid: &PlanGrid, partition: &PartitionResult) -> Option<RegionId> {
    let size = grid.size();
    let mut counts: BTreeMap<RegionId, usize> = BTreeMap::new();
    for &o in &grid.entrance().openings {
        for nb in size.neighbors(size.index(o)) {
            if !matches!(grid.at(nb), CellState::EntranceOpening) {
                *counts.entry(partition.labels[nb]).or_default() += 1;
            }
        }
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|&(_, n)| n == best).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{instantiate_wall, Facade, WallShape};

    fn grid(w: i32, h: i32) -> PlanGrid {
        PlanGrid::new(PlanSize::new(w, h), Facade::West).unwrap()
    }

    fn wall(g: &PlanGrid, id: u32, shape: WallShape, x: i32, y: i32, len: u32) -> LaserWall {
        instantiate_wall(g.size(), WallId(id), shape, CellCoord::new(x, y), len, None).unwrap()
    }

    #[test]
    fn rates() {
        assert_eq!(infiltration_rate(7, InfiltrationMode::Fixed), 1.0);
        let m = InfiltrationMode::Decreasing { horizon: 10 };
        assert_eq!(infiltration_rate(10, m), 0.0);
        assert_eq!(infiltration_rate(5, m), 0.5);
        assert_eq!(infiltration_rate(15, m), 0.0);
    }

    #[test]
    fn straight_wall_beams_reach_outline() {
        let mut g = grid(10, 10);
        let w = wall(&g, 0, WallShape::StraightVertical, 5, 4, 2);
        let [a, b] = activate_wall(&mut g, &w, InfiltrationMode::Fixed).unwrap();
        let rows = |b: &Beam| b.cells.iter().map(|c| c.coord.y).collect::<Vec<_>>();
        assert_eq!(rows(&a), vec![1, 0]);
        assert_eq!(rows(&b), vec![7, 8, 9]);
        assert!((0..10).all(|y| !g.get(CellCoord::new(5, y)).unwrap().is_free()));
        assert_eq!(extract_regions(&g).region_count(), 2);
    }

    #[test]
    fn fixed_mode_beam_stops_at_other_beam() {
        let mut g = grid(12, 12);
        let a = wall(&g, 0, WallShape::StraightVertical, 6, 6, 1);
        activate_wall(&mut g, &a, InfiltrationMode::Fixed).unwrap();
        let b = wall(&g, 1, WallShape::StraightHorizontal, 9, 2, 1);
        let [west, _] = activate_wall(&mut g, &b, InfiltrationMode::Fixed).unwrap();
        // west beam from (8,2) runs to x=7 and stops before column 6
        assert_eq!(west.cells.last().unwrap().coord, CellCoord::new(7, 2));
        assert!(matches!(g.get(CellCoord::new(6, 2)), Some(CellState::BeamLight { wall: WallId(0), .. })));
    }

    #[test]
    fn decreasing_mode_cuts_weaker_beam() {
        let mut g = grid(12, 12);
        let mode = InfiltrationMode::Decreasing { horizon: 10 };
        // A's north beam leaves (6,4); at (6,1) it is 3 cells out: rate 0.7
        let a = wall(&g, 0, WallShape::StraightVertical, 6, 6, 2);
        activate_wall(&mut g, &a, mode).unwrap();
        // B's west beam leaves (8,1); at (6,1) it is 2 cells out: rate 0.8
        let b = wall(&g, 1, WallShape::StraightHorizontal, 9, 1, 1);
        let [west, _] = activate_wall(&mut g, &b, mode).unwrap();
        assert!(west.cells.iter().any(|c| c.coord == CellCoord::new(6, 1) && c.rate == 0.8));
        assert_eq!(west.cells.last().unwrap().coord, CellCoord::new(0, 1));
        // A keeps (6,2), loses (6,0)
        assert!(matches!(g.get(CellCoord::new(6, 2)), Some(CellState::BeamLight { wall: WallId(0), .. })));
        assert_eq!(g.get(CellCoord::new(6, 0)), Some(&CellState::Free));
    }

    #[test]
    fn equal_rates_stop() {
        let mut g = grid(12, 12);
        let mode = InfiltrationMode::Decreasing { horizon: 10 };
        let a = wall(&g, 0, WallShape::StraightVertical, 6, 6, 2);
        activate_wall(&mut g, &a, mode).unwrap();
        // both at distance 3 when meeting at (6,1)
        let b = wall(&g, 1, WallShape::StraightHorizontal, 10, 1, 1);
        let [west, _] = activate_wall(&mut g, &b, mode).unwrap();
        assert_eq!(west.cells.last().unwrap().coord, CellCoord::new(7, 1));
    }

    #[test]
    fn empty_plan_is_one_region() {
        let g = grid(6, 5);
        let (_, p) = repartition(&g, &[], InfiltrationMode::Fixed).unwrap();
        assert_eq!(p.region_count(), 1);
        assert_eq!(p.area(0), 30);
    }

    #[test]
    fn full_cut_areas_sum_to_plan() {
        let g = grid(10, 10);
        let w = wall(&g, 0, WallShape::StraightVertical, 5, 5, 2);
        let (_, p) = repartition(&g, &[w], InfiltrationMode::Fixed).unwrap();
        assert_eq!(p.region_count(), 2);
        assert_eq!(p.areas().iter().sum::<usize>(), 100);
        assert_eq!(p.wall_regions[&WallId(0)], BTreeSet::from([0, 1]));
    }

    #[test]
    fn zero_length_beams_are_legal() {
        let g = grid(10, 10);
        let a = wall(&g, 0, WallShape::StraightVertical, 4, 5, 4).with_arm_lengths(5, 4);
        let c = wall(&g, 1, WallShape::StraightVertical, 5, 5, 4).with_arm_lengths(5, 4);
        let (_, p1) = repartition(&g, &[a], InfiltrationMode::Fixed).unwrap();
        let (g2, p2) = repartition(&g, &[a, c], InfiltrationMode::Fixed).unwrap();
        assert_eq!(p1.region_count(), 2);
        assert_eq!(p2.region_count(), 2);
        assert!(g2.cells().iter().all(|s| !matches!(s, CellState::BeamLight { .. })));
    }

    #[test]
    fn iou_arithmetic() {
        let a: Vec<usize> = (0..20).collect();
        let b: Vec<usize> = (10..30).collect();
        assert!((iou(&a, &b) - 10.0 / 30.0).abs() < 1e-15);
        assert_eq!(iou(&a, &a), 1.0);
    }
}
