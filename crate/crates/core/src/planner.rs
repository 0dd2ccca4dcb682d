//! One-shot planning, dynamic planning and room assignment.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::geometry::{
    apply_transform, instantiate_wall, placement_violation, CellCoord, LaserWall, PlacementRules, PlanGrid,
    Transformation, Violation, WallId, WallShape,
};
use crate::partition::{entrance_region, iou, repartition, InfiltrationMode, PartitionResult, RegionId};
use crate::scenario::DesignScenario;

pub const LIVING_ROOM: usize = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightMode {
    OnLight,
    OffLight,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMode {
    IdentityLess,
    IdentityFull,
}

/// Region-to-room mapping.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoomAssignment {
    pub rooms: BTreeMap<RegionId, usize>,
    pub living_room_region: Option<RegionId>,
    pub unassigned: BTreeSet<RegionId>,
}

impl RoomAssignment {
    fn start(living: Option<RegionId>) -> Self {
        let mut a = RoomAssignment { living_room_region: living, ..Default::default() };
        if let Some(r) = living {
            a.rooms.insert(r, LIVING_ROOM);
        }
        a
    }

    fn finish(mut self, partition: &PartitionResult) -> Self {
        self.unassigned = (0..partition.region_count()).filter(|r| !self.rooms.contains_key(r)).collect();
        self
    }

    pub fn room_of(&self, region: RegionId) -> Option<usize> {
        self.rooms.get(&region).copied()
    }

    pub fn region_of(&self, room: usize) -> Option<RegionId> {
        self.rooms.iter().find(|(_, &r)| r == room).map(|(&g, _)| g)
    }

    fn room_taken(&self, room: usize) -> bool {
        self.rooms.values().any(|&r| r == room)
    }

    /// Room index per region, `None` where unassigned.
    pub fn by_region(&self, n_regions: usize) -> Vec<Option<usize>> {
        (0..n_regions).map(|r| self.room_of(r)).collect()
    }
}

/// A laid-out plan: walls in activation order plus everything derived from them.
#[derive(Clone, Debug, PartialEq)]
pub struct LayoutState {
    pub grid: PlanGrid,
    /// Activation order; the most recently moved wall is last.
    pub walls: Vec<LaserWall>,
    pub partition: PartitionResult,
    pub assignment: RoomAssignment,
    pub light_mode: LightMode,
    pub infiltration: InfiltrationMode,
}

impl LayoutState {
    /// Partitions `walls` on `outline` and assigns rooms from scratch.
    pub fn build(
        outline: &PlanGrid,
        walls: Vec<LaserWall>,
        infiltration: InfiltrationMode,
        light_mode: LightMode,
        mode: AssignmentMode,
        scenario: &DesignScenario,
    ) -> Result<Self, PlanError> {
        let (grid, partition) = repartition(outline, &walls, infiltration)?;
        let living = entrance_region(&grid, &partition);
        let assignment = match mode {
            AssignmentMode::IdentityLess => assign_identityless(&partition, scenario, living)?,
            AssignmentMode::IdentityFull => assign_identityfull(&walls, &partition, living)?,
        };
        Ok(Self { grid, walls, partition, assignment, light_mode, infiltration })
    }

    pub fn wall(&self, id: WallId) -> Option<&LaserWall> {
        self.walls.iter().find(|w| w.id == id)
    }

    /// Room index for every cell, `None` where the region is unassigned.
    pub fn room_grid(&self) -> Vec<Option<usize>> {
        let by_region = self.assignment.by_region(self.partition.region_count());
        self.partition.labels.iter().map(|&l| by_region[l]).collect()
    }
}

/// A wall choice for one-shot planning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pick {
    pub shape: WallShape,
    pub pivot: CellCoord,
    #[serde(default)]
    pub room_index: Option<usize>,
}

fn illegal(index: usize, reason: impl Into<String>) -> PlanError {
    PlanError::IllegalPick { index, reason: reason.into() }
}

/// Places every pick once, in order, and assigns rooms.
pub fn one_shot_plan(
    scenario: &DesignScenario,
    picks: &[Pick],
    mode: AssignmentMode,
    infiltration: InfiltrationMode,
) -> Result<LayoutState, PlanError> {
    let expected = scenario.n_walls();
    if picks.len() != expected {
        return Err(PlanError::PickCount { expected, got: picks.len() });
    }
    let outline = scenario.plan_grid();
    let mut walls: Vec<LaserWall> = Vec::with_capacity(picks.len());
    let mut grid = outline.clone();
    let mut partition = repartition(&outline, &[], infiltration)?.1;
    let mut claimed: HashSet<usize> = HashSet::new();
    let mut used_rooms = BTreeSet::new();

    for (index, pick) in picks.iter().enumerate() {
        let room = match (mode, pick.room_index) {
            (AssignmentMode::IdentityFull, Some(r)) => {
                if r == LIVING_ROOM || r >= scenario.n_rooms || !used_rooms.insert(r) {
                    return Err(illegal(index, format!("room index {r} is not a free non-living room")));
                }
                Some(r)
            }
            (AssignmentMode::IdentityFull, None) => {
                return Err(illegal(index, "identity-full pick needs a room index"))
            }
            (AssignmentMode::IdentityLess, _) => None,
        };
        let wall = instantiate_wall(
            scenario.grid,
            WallId(index as u32),
            pick.shape,
            pick.pivot,
            scenario.segment_length,
            room,
        )
        .map_err(|e| illegal(index, e.to_string()))?;

        let mut rules = PlacementRules::default();
        if mode == AssignmentMode::IdentityFull {
            rules.forbidden = claimed.iter().flat_map(|&r| partition.cells_of(r)).collect();
        }
        if let Some(v) = placement_violation(&grid, &wall, &rules) {
            return Err(illegal(index, format!("{v:?}")));
        }

        let mut next = walls.clone();
        next.push(wall);
        let (g, p) = repartition(&outline, &next, infiltration)?;
        if mode == AssignmentMode::IdentityFull {
            let living = entrance_region(&g, &p);
            let before = assign_identityfull(&walls, &p, living)
                .map_err(|e| illegal(index, format!("earlier rooms lost their regions: {e}")))?;
            // The wall claims the smallest free region it touches; that region
            // must not be the one holding the entrance.
            let target = p
                .adjacent_to(wall.id)
                .filter(|r| !before.rooms.contains_key(r) || Some(*r) == living)
                .min_by_key(|&r| (p.area(r), r));
            match target {
                None => return Err(illegal(index, "wall creates no region of its own")),
                Some(r) if Some(r) == living => {
                    return Err(illegal(index, "wall targets the entrance-connected region"))
                }
                Some(_) => {}
            }
            let after = assign_identityfull(&next, &p, living).map_err(|e| illegal(index, e.to_string()))?;
            claimed = after.rooms.iter().filter(|(_, &room)| room != LIVING_ROOM).map(|(&r, _)| r).collect();
        }
        walls = next;
        grid = g;
        partition = p;
    }

    if partition.region_count() < scenario.n_rooms {
        return Err(PlanError::InsufficientRegions { got: partition.region_count(), needed: scenario.n_rooms });
    }
    LayoutState::build(&outline, walls, infiltration, LightMode::OffLight, mode, scenario)
}

/// Identity-less assignment: the entrance region is the living room, the
/// rest are matched greedily to the room with the closest desired area,
/// largest region first.
pub fn assign_identityless(
    partition: &PartitionResult,
    scenario: &DesignScenario,
    living: Option<RegionId>,
) -> Result<RoomAssignment, PlanError> {
    if partition.region_count() != scenario.n_rooms {
        return Err(PlanError::RegionCountMismatch { got: partition.region_count(), expected: scenario.n_rooms });
    }
    let mut a = RoomAssignment::start(living);
    let mut rooms: Vec<usize> = (0..scenario.n_rooms).filter(|&r| !a.room_taken(r)).collect();
    let mut regions: Vec<RegionId> = (0..partition.region_count()).filter(|r| Some(*r) != living).collect();
    regions.sort_by_key(|&r| (std::cmp::Reverse(partition.area(r)), r));
    for region in regions {
        let area = partition.area(region) as i64;
        let Some(pos) = rooms
            .iter()
            .enumerate()
            .min_by_key(|&(_, &room)| ((area - i64::from(scenario.desired_areas[room])).abs(), room))
            .map(|(i, _)| i)
        else {
            break;
        };
        a.rooms.insert(region, rooms.remove(pos));
    }
    Ok(a.finish(partition))
}

/// Identity-full assignment: after the living room, each wall in order takes
/// the smallest region it touches that is still free.
pub fn assign_identityfull(
    walls: &[LaserWall],
    partition: &PartitionResult,
    living: Option<RegionId>,
) -> Result<RoomAssignment, PlanError> {
    let mut a = RoomAssignment::start(living);
    for w in walls {
        let room = w.room_index.ok_or(PlanError::MissingRoomIndex(w.id))?;
        let region = partition
            .adjacent_to(w.id)
            .filter(|r| !a.rooms.contains_key(r))
            .min_by_key(|&r| (partition.area(r), r))
            .ok_or(PlanError::ConflictingAssignment(w.id))?;
        a.rooms.insert(region, room);
    }
    Ok(a.finish(partition))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "violation", rename_all = "snake_case")]
pub enum StepOutcome {
    Applied,
    Violation(Violation),
}

/// Transforms one wall and recomputes the layout with that wall activated
/// last. Illegal transformations leave the state untouched.
pub fn dynamic_step(
    state: &LayoutState,
    wall_id: WallId,
    t: Transformation,
) -> Result<(LayoutState, StepOutcome), PlanError> {
    match prepare_step(state, wall_id, t)? {
        Err(v) => Ok((state.clone(), StepOutcome::Violation(v))),
        Ok(walls) => {
            let (grid, partition) = repartition(&state.grid, &walls, state.infiltration)?;
            let assignment = reassign_rooms_iou(state, &grid, &partition, &walls);
            let next = LayoutState {
                grid,
                walls,
                partition,
                assignment,
                light_mode: state.light_mode,
                infiltration: state.infiltration,
            };
            Ok((next, StepOutcome::Applied))
        }
    }
}

/// Checks a transformation and returns the reordered wall list it would
/// produce, or the violation it commits.
pub fn prepare_step(
    state: &LayoutState,
    wall_id: WallId,
    t: Transformation,
) -> Result<Result<Vec<LaserWall>, Violation>, PlanError> {
    let wall = state.wall(wall_id).ok_or(PlanError::UnknownWall(wall_id))?;
    let moved = match apply_transform(state.grid.size(), wall, t) {
        Ok(w) => w,
        Err(e) => return Ok(Err(Violation::from(&e))),
    };
    let violation = match state.light_mode {
        LightMode::OffLight => {
            let mut dark = state.grid.clone();
            dark.clear_lights_of(wall_id);
            placement_violation(&dark, &moved, &PlacementRules::default())
        }
        LightMode::OnLight => {
            let rules = PlacementRules { block_own_beams: true, ..Default::default() };
            placement_violation(&state.grid, &moved, &rules)
        }
    };
    if let Some(v) = violation {
        return Ok(Err(v));
    }
    let mut walls: Vec<LaserWall> = state.walls.iter().filter(|w| w.id != wall_id).copied().collect();
    walls.push(moved);
    Ok(Ok(walls))
}

/// Carries room identities across a repartition: the entrance region stays
/// the living room, unchanged regions keep their room, and each remaining
/// wall (in `walls` order, moved wall last) takes the adjacent free region
/// overlapping its room's previous region the most.
pub fn reassign_rooms_iou(
    prev: &LayoutState,
    grid: &PlanGrid,
    partition: &PartitionResult,
    walls: &[LaserWall],
) -> RoomAssignment {
    let living = entrance_region(grid, partition);
    let mut a = RoomAssignment::start(living);
    let prev_members = |room: usize| -> Option<&[usize]> {
        prev.assignment.region_of(room).map(|r| prev.partition.regions[r].members.as_slice())
    };

    for region in &partition.regions {
        if a.rooms.contains_key(&region.id) {
            continue;
        }
        let keeps = prev.assignment.rooms.iter().find(|(&old, &room)| {
            room != LIVING_ROOM && !a.room_taken(room) && prev.partition.regions[old].members == region.members
        });
        if let Some((_, &room)) = keeps {
            a.rooms.insert(region.id, room);
        }
    }

    for w in walls {
        let Some(room) = w.room_index else { continue };
        if a.room_taken(room) {
            continue;
        }
        let old = prev_members(room).unwrap_or(&[]);
        let best = partition
            .adjacent_to(w.id)
            .filter(|r| !a.rooms.contains_key(r))
            .map(|r| (r, iou(&partition.regions[r].members, old)))
            // max IoU, lower region id on ties
            .fold(None::<(RegionId, f64)>, |best, (r, s)| match best {
                Some((_, bs)) if bs >= s => best,
                _ => Some((r, s)),
            });
        if let Some((r, _)) = best {
            a.rooms.insert(r, room);
        }
    }

    // Walls without identities: leftover rooms follow their best overlap.
    if walls.iter().all(|w| w.room_index.is_none()) {
        let leftover: Vec<usize> = prev.assignment.rooms.values().copied().filter(|&r| !a.room_taken(r)).collect();
        let mut rooms = leftover;
        rooms.sort_unstable();
        for room in rooms {
            let old = prev_members(room).unwrap_or(&[]);
            let best = (0..partition.region_count())
                .filter(|r| !a.rooms.contains_key(r))
                .map(|r| (r, iou(&partition.regions[r].members, old)))
                .fold(None::<(RegionId, f64)>, |best, (r, s)| match best {
                    Some((_, bs)) if bs >= s => best,
                    _ => Some((r, s)),
                });
            if let Some((r, _)) = best {
                a.rooms.insert(r, room);
            }
        }
    }
    a.finish(partition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Facade, PlanSize};
    use crate::scenario::{builtin, DesignScenario};

    fn two_room(grid: PlanSize, areas: Vec<u32>) -> DesignScenario {
        let mut s = DesignScenario::custom(2, areas, Facade::West, grid);
        s.segment_length = 2;
        s
    }

    #[test]
    fn identityless_forced_match() {
        // 20x20 cut at column 15: regions of 300 (x < 15) and 100 (x > 15) + the wall column
        let s = DesignScenario::custom(2, vec![310, 95], Facade::West, PlanSize::new(20, 20));
        let w = LaserWall::new(WallId(0), WallShape::StraightVertical, CellCoord::new(15, 10), 2, None);
        let (g, p) = repartition(&s.plan_grid(), &[w], InfiltrationMode::Fixed).unwrap();
        let living = entrance_region(&g, &p);
        let a = assign_identityless(&p, &s, living).unwrap();
        assert_eq!(living, Some(p.label(CellCoord::new(0, 0))));
        assert_eq!(a.room_of(p.label(CellCoord::new(19, 0))), Some(1));
        assert!(a.unassigned.is_empty());
    }

    #[test]
    fn identityless_mismatch() {
        let s = DesignScenario::custom(3, vec![10, 10, 10], Facade::West, PlanSize::new(10, 10));
        let (_, p) = repartition(&s.plan_grid(), &[], InfiltrationMode::Fixed).unwrap();
        assert!(matches!(
            assign_identityless(&p, &s, Some(0)),
            Err(PlanError::RegionCountMismatch { got: 1, expected: 3 })
        ));
    }

    #[test]
    fn identityfull_smaller_side_and_tie() {
        let s = two_room(PlanSize::new(10, 10), vec![60, 40]);
        // cut at column 6: west 60 cells (+ wall column attached), east 30
        let w = LaserWall::new(WallId(0), WallShape::StraightVertical, CellCoord::new(6, 5), 2, Some(1));
        let (g, p) = repartition(&s.plan_grid(), &[w], InfiltrationMode::Fixed).unwrap();
        let a = assign_identityfull(&[w], &p, entrance_region(&g, &p)).unwrap();
        let east = p.label(CellCoord::new(9, 9));
        let west = p.label(CellCoord::new(0, 0));
        assert_eq!(a.room_of(east), Some(1));
        assert_eq!(a.room_of(west), Some(LIVING_ROOM));

        // equal areas once the wall row joins the north side: lower region id wins
        let w = LaserWall::new(WallId(0), WallShape::StraightHorizontal, CellCoord::new(4, 5), 2, Some(1));
        let p = {
            let plain = PlanGrid::with_entrance(
                PlanSize::new(9, 12),
                crate::geometry::Entrance { facade: Facade::West, openings: vec![] },
            )
            .unwrap();
            repartition(&plain, &[w], InfiltrationMode::Fixed).unwrap().1
        };
        assert_eq!(p.areas(), vec![54, 54]);
        let a = assign_identityfull(&[w], &p, None).unwrap();
        assert_eq!(a.room_of(0), Some(1));
    }

    #[test]
    fn identityfull_exhaustion() {
        let s = two_room(PlanSize::new(10, 10), vec![60, 40]);
        let w = LaserWall::new(WallId(0), WallShape::StraightVertical, CellCoord::new(6, 5), 2, Some(1));
        let (g, p) = repartition(&s.plan_grid(), &[w], InfiltrationMode::Fixed).unwrap();
        // a second identity for the same single wall finds nothing left
        let twin = LaserWall { id: WallId(0), room_index: Some(2), ..w };
        let r = assign_identityfull(&[w, twin], &p, entrance_region(&g, &p));
        assert!(matches!(r, Err(PlanError::ConflictingAssignment(WallId(0)))));
    }

    #[test]
    fn one_shot_minimal() {
        let s = two_room(PlanSize::new(10, 10), vec![60, 40]);
        let picks = [Pick { shape: WallShape::StraightVertical, pivot: CellCoord::new(6, 5), room_index: Some(1) }];
        let st = one_shot_plan(&s, &picks, AssignmentMode::IdentityFull, InfiltrationMode::Fixed).unwrap();
        assert_eq!(st.partition.region_count(), 2);
        let east = st.partition.label(CellCoord::new(9, 0));
        assert_eq!(st.assignment.room_of(east), Some(1));
    }

    #[test]
    fn one_shot_rejects_entrance_target() {
        let s = two_room(PlanSize::new(10, 10), vec![60, 40]);
        // cut at column 2: the small side holds the entrance
        let picks = [Pick { shape: WallShape::StraightVertical, pivot: CellCoord::new(2, 5), room_index: Some(1) }];
        let r = one_shot_plan(&s, &picks, AssignmentMode::IdentityFull, InfiltrationMode::Fixed);
        assert!(matches!(r, Err(PlanError::IllegalPick { index: 0, .. })), "{r:?}");
    }

    #[test]
    fn one_shot_pick_count() {
        let s = builtin(1).unwrap();
        let r = one_shot_plan(&s, &[], AssignmentMode::IdentityLess, InfiltrationMode::Fixed);
        assert!(matches!(r, Err(PlanError::PickCount { expected: 3, got: 0 })));
    }

    fn interior_state(light: LightMode) -> LayoutState {
        let s = DesignScenario::custom(3, vec![100, 100, 100], Facade::West, PlanSize::new(20, 15));
        let walls = vec![
            LaserWall::new(WallId(0), WallShape::StraightVertical, CellCoord::new(7, 7), 2, Some(1)),
            LaserWall::new(WallId(1), WallShape::StraightVertical, CellCoord::new(13, 7), 2, Some(2)),
        ];
        LayoutState::build(&s.plan_grid(), walls, InfiltrationMode::Fixed, light, AssignmentMode::IdentityFull, &s)
            .unwrap()
    }

    #[test]
    fn legal_move_repartitions() {
        let st = interior_state(LightMode::OffLight);
        let (next, out) = dynamic_step(&st, WallId(0), Transformation::MoveE).unwrap();
        assert_eq!(out, StepOutcome::Applied);
        assert_eq!(next.walls.last().unwrap().id, WallId(0));
        assert_ne!(next.partition, st.partition);
        assert!(next.assignment.unassigned.is_empty());
    }

    #[test]
    fn collision_is_a_noop() {
        let s = DesignScenario::custom(3, vec![100, 100, 100], Facade::West, PlanSize::new(20, 15));
        let walls = vec![
            LaserWall::new(WallId(0), WallShape::StraightVertical, CellCoord::new(7, 7), 2, Some(1)),
            LaserWall::new(WallId(1), WallShape::StraightHorizontal, CellCoord::new(10, 7), 2, Some(2)),
        ];
        let st = LayoutState::build(
            &s.plan_grid(),
            walls,
            InfiltrationMode::Fixed,
            LightMode::OffLight,
            AssignmentMode::IdentityFull,
            &s,
        )
        .unwrap();
        let (next, out) = dynamic_step(&st, WallId(0), Transformation::MoveE).unwrap();
        assert_eq!(out, StepOutcome::Violation(Violation::WallCollision));
        assert_eq!(next, st);
    }

    #[test]
    fn on_light_blocks_own_beam() {
        let st = interior_state(LightMode::OnLight);
        let (_, out) = dynamic_step(&st, WallId(1), Transformation::MoveN).unwrap();
        assert_eq!(out, StepOutcome::Violation(Violation::OwnBeam));
        let off = interior_state(LightMode::OffLight);
        let (_, out) = dynamic_step(&off, WallId(1), Transformation::MoveN).unwrap();
        assert_eq!(out, StepOutcome::Applied);
    }

    #[test]
    fn move_and_back_restores_partition() {
        let st = interior_state(LightMode::OffLight);
        let last = st.walls.last().unwrap().id;
        let (a, _) = dynamic_step(&st, last, Transformation::MoveN).unwrap();
        let (b, _) = dynamic_step(&a, last, Transformation::MoveS).unwrap();
        assert_eq!(b.partition.labels, st.partition.labels);
        assert_eq!(b.assignment, st.assignment);
    }

    #[test]
    fn unknown_wall() {
        let st = interior_state(LightMode::OffLight);
        assert!(matches!(dynamic_step(&st, WallId(9), Transformation::MoveN), Err(PlanError::UnknownWall(_))));
    }

    #[test]
    fn iou_tie_goes_to_lower_region() {
        // One wall splits a plain plan into two mirror halves; its room had no
        // region before, so both halves score IoU 0 and the lower id wins.
        let plain = PlanGrid::with_entrance(
            PlanSize::new(9, 11),
            crate::geometry::Entrance { facade: Facade::West, openings: vec![] },
        )
        .unwrap();
        let w = LaserWall::new(WallId(0), WallShape::StraightHorizontal, CellCoord::new(4, 5), 2, Some(1));
        let (g, p) = repartition(&plain, &[w], InfiltrationMode::Fixed).unwrap();
        let prev = LayoutState {
            grid: plain.clone(),
            walls: vec![w],
            partition: repartition(&plain, &[], InfiltrationMode::Fixed).unwrap().1,
            assignment: RoomAssignment::default(),
            light_mode: LightMode::OffLight,
            infiltration: InfiltrationMode::Fixed,
        };
        let a = reassign_rooms_iou(&prev, &g, &p, &[w]);
        assert_eq!(a.room_of(0), Some(1));
        assert_eq!(a.room_of(1), None);
    }
}
