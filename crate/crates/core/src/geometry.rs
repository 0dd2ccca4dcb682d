//! Cell lattice, laser-wall shapes and the transformations agents apply to them.
//!
//! Coordinates grow east (`x`) and south (`y`); `(0, 0)` is the north-west
//! corner of the plan.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellCoord {
    pub x: i32,
    pub y: i32,
}

impl CellCoord {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn step(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn toward(self, dir: Dir4, n: i32) -> Self {
        let (dx, dy) = dir.delta();
        self.step(dx * n, dy * n)
    }
}

impl fmt::Display for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Plan dimensions in cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanSize {
    pub width: i32,
    pub height: i32,
}

impl PlanSize {
    pub const fn new(width: i32, height: i32) -> Self {
        Self { width, height }
    }

    pub fn area(self) -> usize {
        (self.width * self.height) as usize
    }

    pub fn contains(self, c: CellCoord) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width && c.y < self.height
    }

    /// Row-major index. Caller guarantees `contains(c)`.
    pub fn index(self, c: CellCoord) -> usize {
        (c.y * self.width + c.x) as usize
    }

    pub fn coord(self, index: usize) -> CellCoord {
        let i = index as i32;
        CellCoord::new(i % self.width, i / self.width)
    }

    pub fn on_boundary(self, c: CellCoord) -> bool {
        c.x == 0 || c.y == 0 || c.x == self.width - 1 || c.y == self.height - 1
    }

    /// In-plan 4-neighbours of `index` in N, E, S, W order.
    pub fn neighbors(self, index: usize) -> impl Iterator<Item = usize> {
        let c = self.coord(index);
        Dir4::ALL.into_iter().filter_map(move |d| {
            let n = c.toward(d, 1);
            self.contains(n).then(|| self.index(n))
        })
    }
}

/// Side of the plan outline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Facade {
    #[serde(alias = "north", alias = "N")]
    North,
    #[serde(alias = "east", alias = "E")]
    East,
    #[serde(alias = "south", alias = "S")]
    South,
    #[serde(alias = "west", alias = "W")]
    West,
}

impl Facade {
    pub fn contains(self, size: PlanSize, c: CellCoord) -> bool {
        size.contains(c)
            && match self {
                Facade::North => c.y == 0,
                Facade::East => c.x == size.width - 1,
                Facade::South => c.y == size.height - 1,
                Facade::West => c.x == 0,
            }
    }
}

impl fmt::Display for Facade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// The facade carrying the entrance and the opening cells reserved on it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entrance {
    pub facade: Facade,
    pub openings: Vec<CellCoord>,
}

impl Entrance {
    pub const DEFAULT_WIDTH: i32 = 2;

    /// Opening of `width` cells centred on `facade`.
    pub fn centered(size: PlanSize, facade: Facade, width: i32) -> Self {
        let span = match facade {
            Facade::North | Facade::South => size.width,
            Facade::East | Facade::West => size.height,
        };
        let width = width.clamp(1, span);
        let start = (span - width) / 2;
        let openings = (start..start + width)
            .map(|t| match facade {
                Facade::North => CellCoord::new(t, 0),
                Facade::South => CellCoord::new(t, size.height - 1),
                Facade::West => CellCoord::new(0, t),
                Facade::East => CellCoord::new(size.width - 1, t),
            })
            .collect();
        Self { facade, openings }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WallId(pub u32);

impl fmt::Display for WallId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

/// Which free endpoint of a wall a beam leaves from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BeamEnd {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CellState {
    Free,
    WallBody(WallId),
    BeamLight { wall: WallId, end: BeamEnd, rate: f64, distance: u32 },
    EntranceOpening,
}

impl CellState {
    pub fn is_free(&self) -> bool {
        matches!(self, CellState::Free)
    }
}

/// The cell lattice of a plan.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanGrid {
    size: PlanSize,
    cells: Vec<CellState>,
    entrance: Entrance,
}

impl PlanGrid {
    /// Empty plan with the default two-cell opening centred on `facade`.
    pub fn new(size: PlanSize, facade: Facade) -> Result<Self, GeometryError> {
        Self::with_entrance(size, Entrance::centered(size, facade, Entrance::DEFAULT_WIDTH))
    }

    pub fn with_entrance(size: PlanSize, entrance: Entrance) -> Result<Self, GeometryError> {
        if size.width < 1 || size.height < 1 {
            return Err(GeometryError::EmptyPlan(size.width, size.height));
        }
        let mut cells = vec![CellState::Free; size.area()];
        for &c in &entrance.openings {
            if !entrance.facade.contains(size, c) {
                return Err(GeometryError::OpeningOffFacade(c, entrance.facade));
            }
            cells[size.index(c)] = CellState::EntranceOpening;
        }
        Ok(Self { size, cells, entrance })
    }

    pub fn size(&self) -> PlanSize {
        self.size
    }

    pub fn width(&self) -> i32 {
        self.size.width
    }

    pub fn height(&self) -> i32 {
        self.size.height
    }

    pub fn entrance(&self) -> &Entrance {
        &self.entrance
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn get(&self, c: CellCoord) -> Option<&CellState> {
        self.size.contains(c).then(|| &self.cells[self.size.index(c)])
    }

    pub fn at(&self, index: usize) -> &CellState {
        &self.cells[index]
    }

    pub(crate) fn set(&mut self, index: usize, state: CellState) {
        self.cells[index] = state;
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|s| s.is_free()).count()
    }

    /// Same outline and entrance with every wall and beam removed.
    pub fn outline(&self) -> Self {
        let mut out = self.clone();
        for s in &mut out.cells {
            if !matches!(s, CellState::EntranceOpening) {
                *s = CellState::Free;
            }
        }
        out
    }

    /// Removes every beam, keeping wall bodies.
    pub fn clear_lights(&mut self) {
        for s in &mut self.cells {
            if matches!(s, CellState::BeamLight { .. }) {
                *s = CellState::Free;
            }
        }
    }

    /// Removes the beams of one wall.
    pub fn clear_lights_of(&mut self, id: WallId) {
        for s in &mut self.cells {
            if matches!(s, CellState::BeamLight { wall, .. } if *wall == id) {
                *s = CellState::Free;
            }
        }
    }
}

/// Compass direction along the lattice axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir4 {
    N,
    E,
    S,
    W,
}

impl Dir4 {
    pub const ALL: [Dir4; 4] = [Dir4::N, Dir4::E, Dir4::S, Dir4::W];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir4::N => (0, -1),
            Dir4::E => (1, 0),
            Dir4::S => (0, 1),
            Dir4::W => (-1, 0),
        }
    }

    pub fn cw(self) -> Self {
        match self {
            Dir4::N => Dir4::E,
            Dir4::E => Dir4::S,
            Dir4::S => Dir4::W,
            Dir4::W => Dir4::N,
        }
    }

    pub fn ccw(self) -> Self {
        self.cw().cw().cw()
    }

    pub fn opposite(self) -> Self {
        self.cw().cw()
    }

    pub fn axis(self) -> Axis {
        match self {
            Dir4::N | Dir4::S => Axis::Vertical,
            Dir4::E | Dir4::W => Axis::Horizontal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// A straight run of cells starting at its north/west-most cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub start: CellCoord,
    pub axis: Axis,
    pub length: u32,
}

impl Segment {
    pub fn cells(&self) -> impl Iterator<Item = CellCoord> + '_ {
        let dir = match self.axis {
            Axis::Horizontal => Dir4::E,
            Axis::Vertical => Dir4::S,
        };
        (0..self.length as i32).map(move |k| self.start.toward(dir, k))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WallShape {
    StraightHorizontal,
    StraightVertical,
    #[serde(rename = "L-NE")]
    LNorthEast,
    #[serde(rename = "L-NW")]
    LNorthWest,
    #[serde(rename = "L-SE")]
    LSouthEast,
    #[serde(rename = "L-SW")]
    LSouthWest,
}

impl WallShape {
    pub const ALL: [WallShape; 6] = [
        WallShape::StraightHorizontal,
        WallShape::StraightVertical,
        WallShape::LNorthEast,
        WallShape::LNorthWest,
        WallShape::LSouthEast,
        WallShape::LSouthWest,
    ];
    pub const STRAIGHT: [WallShape; 2] = [WallShape::StraightHorizontal, WallShape::StraightVertical];
    pub const ANGLED: [WallShape; 4] =
        [WallShape::LNorthEast, WallShape::LNorthWest, WallShape::LSouthEast, WallShape::LSouthWest];

    pub fn is_straight(self) -> bool {
        matches!(self, WallShape::StraightHorizontal | WallShape::StraightVertical)
    }

    /// Canonical arm directions `(a, b)`.
    pub fn arms(self) -> (Dir4, Dir4) {
        match self {
            WallShape::StraightHorizontal => (Dir4::W, Dir4::E),
            WallShape::StraightVertical => (Dir4::N, Dir4::S),
            WallShape::LNorthEast => (Dir4::N, Dir4::E),
            WallShape::LNorthWest => (Dir4::N, Dir4::W),
            WallShape::LSouthEast => (Dir4::S, Dir4::E),
            WallShape::LSouthWest => (Dir4::S, Dir4::W),
        }
    }

    /// Shape formed by two arms, `None` when they coincide.
    pub fn from_arms(a: Dir4, b: Dir4) -> Option<Self> {
        use Dir4::*;
        let shape = match (a, b) {
            (N, S) | (S, N) => WallShape::StraightVertical,
            (E, W) | (W, E) => WallShape::StraightHorizontal,
            (N, E) | (E, N) => WallShape::LNorthEast,
            (N, W) | (W, N) => WallShape::LNorthWest,
            (S, E) | (E, S) => WallShape::LSouthEast,
            (S, W) | (W, S) => WallShape::LSouthWest,
            _ => return None,
        };
        Some(shape)
    }

    pub fn name(self) -> &'static str {
        match self {
            WallShape::StraightHorizontal => "straight_horizontal",
            WallShape::StraightVertical => "straight_vertical",
            WallShape::LNorthEast => "l_ne",
            WallShape::LNorthWest => "l_nw",
            WallShape::LSouthEast => "l_se",
            WallShape::LSouthWest => "l_sw",
        }
    }
}

/// One arm of a wall: the cells leaving the pivot in `dir`, pivot excluded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arm {
    pub dir: Dir4,
    pub length: u32,
}

impl Arm {
    pub fn endpoint(&self, pivot: CellCoord) -> CellCoord {
        pivot.toward(self.dir, self.length as i32)
    }
}

/// The hard part of a laser-wall: two arms joined at a pivot cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LaserWall {
    pub id: WallId,
    pub pivot: CellCoord,
    pub arm_a: Arm,
    pub arm_b: Arm,
    /// Present iff the wall is identity-full.
    pub room_index: Option<usize>,
}

impl LaserWall {
    /// Builds the wall without bounds checking; see [`instantiate_wall`].
    pub fn new(id: WallId, shape: WallShape, pivot: CellCoord, segment_length: u32, room_index: Option<usize>) -> Self {
        let (a, b) = shape.arms();
        Self {
            id,
            pivot,
            arm_a: Arm { dir: a, length: segment_length },
            arm_b: Arm { dir: b, length: segment_length },
            room_index,
        }
    }

    pub fn with_arm_lengths(mut self, a: u32, b: u32) -> Self {
        self.arm_a.length = a;
        self.arm_b.length = b;
        self
    }

    /// `None` for a degenerate wall whose arms point the same way.
    pub fn shape(&self) -> Option<WallShape> {
        WallShape::from_arms(self.arm_a.dir, self.arm_b.dir)
    }

    pub fn arm(&self, end: BeamEnd) -> Arm {
        match end {
            BeamEnd::A => self.arm_a,
            BeamEnd::B => self.arm_b,
        }
    }

    fn segment_of(&self, arm: Arm) -> Segment {
        let end = arm.endpoint(self.pivot);
        Segment {
            start: CellCoord::new(end.x.min(self.pivot.x), end.y.min(self.pivot.y)),
            axis: arm.dir.axis(),
            length: arm.length + 1,
        }
    }

    /// Segment through the pivot and arm A.
    pub fn seg_a(&self) -> Segment {
        self.segment_of(self.arm_a)
    }

    pub fn seg_b(&self) -> Segment {
        self.segment_of(self.arm_b)
    }

    /// Body cells: pivot first, then arm A outward, then arm B outward.
    pub fn body(&self) -> impl Iterator<Item = CellCoord> + '_ {
        let a = (1..=self.arm_a.length as i32).map(move |k| self.pivot.toward(self.arm_a.dir, k));
        let b = (1..=self.arm_b.length as i32).map(move |k| self.pivot.toward(self.arm_b.dir, k));
        std::iter::once(self.pivot).chain(a).chain(b)
    }

    /// The two non-pivot extremities, with the direction their beam travels.
    pub fn free_endpoints(&self) -> [(BeamEnd, CellCoord, Dir4); 2] {
        [
            (BeamEnd::A, self.arm_a.endpoint(self.pivot), self.arm_a.dir),
            (BeamEnd::B, self.arm_b.endpoint(self.pivot), self.arm_b.dir),
        ]
    }

    pub fn within(&self, size: PlanSize) -> bool {
        self.body().all(|c| size.contains(c))
    }

    fn validate(self, size: PlanSize) -> Result<Self, GeometryError> {
        if self.arm_a.length == 0 || self.arm_b.length == 0 {
            return Err(GeometryError::ZeroLength);
        }
        if self.shape().is_none() {
            return Err(GeometryError::Degenerate(self.id));
        }
        if let Some(c) = self.body().find(|&c| !size.contains(c)) {
            return Err(GeometryError::OutOfBounds(self.id, c));
        }
        Ok(self)
    }
}

/// Builds a wall from the library and checks it fits the plan.
pub fn instantiate_wall(
    size: PlanSize,
    id: WallId,
    shape: WallShape,
    pivot: CellCoord,
    segment_length: u32,
    room_index: Option<usize>,
) -> Result<LaserWall, GeometryError> {
    LaserWall::new(id, shape, pivot, segment_length, room_index).validate(size)
}

/// Eight one-cell moves and six quarter-turn rotations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transformation {
    MoveN,
    MoveNE,
    MoveE,
    MoveSE,
    MoveS,
    MoveSW,
    MoveW,
    MoveNW,
    RotateWholeCW,
    RotateWholeCCW,
    RotateSegACW,
    RotateSegACCW,
    RotateSegBCW,
    RotateSegBCCW,
}

impl Transformation {
    pub const COUNT: usize = 14;

    pub const ALL: [Transformation; Self::COUNT] = [
        Transformation::MoveN,
        Transformation::MoveNE,
        Transformation::MoveE,
        Transformation::MoveSE,
        Transformation::MoveS,
        Transformation::MoveSW,
        Transformation::MoveW,
        Transformation::MoveNW,
        Transformation::RotateWholeCW,
        Transformation::RotateWholeCCW,
        Transformation::RotateSegACW,
        Transformation::RotateSegACCW,
        Transformation::RotateSegBCW,
        Transformation::RotateSegBCCW,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&t| t == self).expect("listed")
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Wire name, e.g. `move_ne` or `rotate_seg_a_ccw`.
    pub fn name(self) -> &'static str {
        match self {
            Transformation::MoveN => "move_n",
            Transformation::MoveNE => "move_ne",
            Transformation::MoveE => "move_e",
            Transformation::MoveSE => "move_se",
            Transformation::MoveS => "move_s",
            Transformation::MoveSW => "move_sw",
            Transformation::MoveW => "move_w",
            Transformation::MoveNW => "move_nw",
            Transformation::RotateWholeCW => "rotate_whole_cw",
            Transformation::RotateWholeCCW => "rotate_whole_ccw",
            Transformation::RotateSegACW => "rotate_seg_a_cw",
            Transformation::RotateSegACCW => "rotate_seg_a_ccw",
            Transformation::RotateSegBCW => "rotate_seg_b_cw",
            Transformation::RotateSegBCCW => "rotate_seg_b_ccw",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn move_delta(self) -> Option<(i32, i32)> {
        let d = match self {
            Transformation::MoveN => (0, -1),
            Transformation::MoveNE => (1, -1),
            Transformation::MoveE => (1, 0),
            Transformation::MoveSE => (1, 1),
            Transformation::MoveS => (0, 1),
            Transformation::MoveSW => (-1, 1),
            Transformation::MoveW => (-1, 0),
            Transformation::MoveNW => (-1, -1),
            _ => return None,
        };
        Some(d)
    }

    /// The transformation that undoes this one.
    pub fn inverse(self) -> Self {
        use Transformation::*;
        match self {
            MoveN => MoveS,
            MoveNE => MoveSW,
            MoveE => MoveW,
            MoveSE => MoveNW,
            MoveS => MoveN,
            MoveSW => MoveNE,
            MoveW => MoveE,
            MoveNW => MoveSE,
            RotateWholeCW => RotateWholeCCW,
            RotateWholeCCW => RotateWholeCW,
            RotateSegACW => RotateSegACCW,
            RotateSegACCW => RotateSegACW,
            RotateSegBCW => RotateSegBCCW,
            RotateSegBCCW => RotateSegBCW,
        }
    }
}

impl fmt::Display for Transformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Applies `t` to `wall`. Rotations turn arms about the pivot, so a segment
/// rotation can turn a straight wall into an L and back.
pub fn apply_transform(size: PlanSize, wall: &LaserWall, t: Transformation) -> Result<LaserWall, GeometryError> {
    let mut out = *wall;
    if let Some((dx, dy)) = t.move_delta() {
        out.pivot = wall.pivot.step(dx, dy);
    } else {
        match t {
            Transformation::RotateWholeCW => {
                out.arm_a.dir = wall.arm_a.dir.cw();
                out.arm_b.dir = wall.arm_b.dir.cw();
            }
            Transformation::RotateWholeCCW => {
                out.arm_a.dir = wall.arm_a.dir.ccw();
                out.arm_b.dir = wall.arm_b.dir.ccw();
            }
            Transformation::RotateSegACW => out.arm_a.dir = wall.arm_a.dir.cw(),
            Transformation::RotateSegACCW => out.arm_a.dir = wall.arm_a.dir.ccw(),
            Transformation::RotateSegBCW => out.arm_b.dir = wall.arm_b.dir.cw(),
            Transformation::RotateSegBCCW => out.arm_b.dir = wall.arm_b.dir.ccw(),
            _ => unreachable!("moves handled above"),
        }
    }
    out.validate(size)
}

/// Extra constraints on top of the always-on collision and entrance rules.
#[derive(Clone, Debug, Default)]
pub struct PlacementRules {
    /// Cells no body may cover, e.g. regions already claimed by rooms.
    pub forbidden: HashSet<CellCoord>,
    /// Reject bodies crossing the wall's own beams (on-light context).
    pub block_own_beams: bool,
}

/// Why a wall cannot stand where it is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    OutOfBounds,
    Degenerate,
    WallCollision,
    EntranceBlockage,
    Forbidden,
    OwnBeam,
}

impl From<&GeometryError> for Violation {
    fn from(e: &GeometryError) -> Self {
        match e {
            GeometryError::Degenerate(_) | GeometryError::ZeroLength => Violation::Degenerate,
            _ => Violation::OutOfBounds,
        }
    }
}

/// First rule `wall` breaks on `grid`, if any. The wall's own body cells
/// (when it is already on the grid) never conflict.
pub fn placement_violation(grid: &PlanGrid, wall: &LaserWall, rules: &PlacementRules) -> Option<Violation> {
    if wall.shape().is_none() || wall.arm_a.length == 0 || wall.arm_b.length == 0 {
        return Some(Violation::Degenerate);
    }
    let size = grid.size();
    for c in wall.body() {
        if !size.contains(c) {
            return Some(Violation::OutOfBounds);
        }
        match *grid.at(size.index(c)) {
            CellState::WallBody(id) if id != wall.id => return Some(Violation::WallCollision),
            CellState::EntranceOpening => return Some(Violation::EntranceBlockage),
            CellState::BeamLight { wall: owner, .. } if rules.block_own_beams && owner == wall.id => {
                return Some(Violation::OwnBeam)
            }
            _ => {}
        }
        if rules.forbidden.contains(&c) {
            return Some(Violation::Forbidden);
        }
    }
    None
}

/// True iff `wall` can stand on `grid`: inside the plan, not over another
/// wall's body, not over the entrance opening and not over a forbidden cell.
pub fn placement_legal(grid: &PlanGrid, wall: &LaserWall, rules: &PlacementRules) -> bool {
    placement_violation(grid, wall, rules).is_none()
}
