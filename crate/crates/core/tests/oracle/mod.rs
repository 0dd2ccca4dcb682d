//! A deliberately naive reference partitioner, written without the crate's
//! grid types, plus a generator of random legal wall sets.

#![allow(dead_code)]

use std::collections::VecDeque;

use laserwall_core::geometry::{placement_legal, PlacementRules};
use laserwall_core::partition::InfiltrationMode;
use laserwall_core::{CellCoord, LaserWall, PlanGrid, WallId, WallShape};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Free,
    Body,
    Entrance,
    /// (wall, end, distance, rate)
    Beam(u32, u8, u32, f64),
}

pub struct Reference {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Cell>,
    pub labels: Vec<usize>,
    pub n_regions: usize,
}

fn delta(w: &LaserWall, end: u8) -> (i32, i32) {
    let dir = if end == 0 { w.arm_a.dir } else { w.arm_b.dir };
    dir.delta()
}

fn rate(d: u32, mode: InfiltrationMode) -> f64 {
    match mode {
        InfiltrationMode::Fixed => 1.0,
        InfiltrationMode::Decreasing { horizon } => {
            let h = horizon.max(1) as f64;
            let r = 1.0 - d as f64 / h;
            if r < 0.0 {
                0.0
            } else {
                r
            }
        }
    }
}

/// Builds the reference labeling for `walls` on the plan `outline`.
pub fn reference(outline: &PlanGrid, walls: &[LaserWall], mode: InfiltrationMode) -> Reference {
    let width = outline.width() as usize;
    let height = outline.height() as usize;
    let at = |x: i32, y: i32| -> Option<usize> {
        (x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height).then(|| y as usize * width + x as usize)
    };
    let mut cells = vec![Cell::Free; width * height];
    for o in &outline.entrance().openings {
        cells[at(o.x, o.y).unwrap()] = Cell::Entrance;
    }
    for w in walls {
        cells[at(w.pivot.x, w.pivot.y).unwrap()] = Cell::Body;
        for (arm, _) in [(w.arm_a, 0), (w.arm_b, 1)] {
            let (dx, dy) = arm.dir.delta();
            for k in 1..=arm.length as i32 {
                cells[at(w.pivot.x + dx * k, w.pivot.y + dy * k).unwrap()] = Cell::Body;
            }
        }
    }
    for w in walls {
        for end in 0..2u8 {
            let arm = if end == 0 { w.arm_a } else { w.arm_b };
            let (dx, dy) = delta(w, end);
            let ox = w.pivot.x + dx * arm.length as i32;
            let oy = w.pivot.y + dy * arm.length as i32;
            let mut d = 1u32;
            while let Some(i) = at(ox + dx * d as i32, oy + dy * d as i32) {
                let r = rate(d, mode);
                match cells[i] {
                    Cell::Free => {}
                    Cell::Body | Cell::Entrance => break,
                    Cell::Beam(ow, oe, od, or) => {
                        let stronger = matches!(mode, InfiltrationMode::Decreasing { .. }) && r > or;
                        if ow == w.id.0 || !stronger {
                            break;
                        }
                        for c in cells.iter_mut() {
                            if let Cell::Beam(a, b, dd, _) = *c {
                                if a == ow && b == oe && dd > od {
                                    *c = Cell::Free;
                                }
                            }
                        }
                    }
                }
                cells[i] = Cell::Beam(w.id.0, end, d, r);
                d += 1;
            }
        }
    }

    let nbrs = |i: usize| -> Vec<usize> {
        let (x, y) = ((i % width) as i32, (i / width) as i32);
        [(0, -1), (1, 0), (0, 1), (-1, 0)].iter().filter_map(|&(dx, dy)| at(x + dx, y + dy)).collect()
    };
    const NONE: usize = usize::MAX;
    let mut labels = vec![NONE; width * height];
    let mut n_regions = 0;
    for s in 0..cells.len() {
        if labels[s] != NONE || cells[s] != Cell::Free {
            continue;
        }
        let mut q = VecDeque::from([s]);
        labels[s] = n_regions;
        while let Some(i) = q.pop_front() {
            for j in nbrs(i) {
                if labels[j] == NONE && cells[j] == Cell::Free {
                    labels[j] = n_regions;
                    q.push_back(j);
                }
            }
        }
        n_regions += 1;
    }
    if n_regions == 0 {
        return Reference { width, height, cells, labels: vec![0; width * height], n_regions: 1 };
    }
    // multi-source BFS distance to the nearest free cell
    let mut dist = vec![usize::MAX; cells.len()];
    let mut q: VecDeque<usize> = (0..cells.len()).filter(|&i| cells[i] == Cell::Free).collect();
    for &i in &q {
        dist[i] = 0;
    }
    while let Some(i) = q.pop_front() {
        for j in nbrs(i) {
            if dist[j] == usize::MAX {
                dist[j] = dist[i] + 1;
                q.push_back(j);
            }
        }
    }
    let mut order: Vec<usize> = (0..cells.len()).filter(|&i| dist[i] > 0).collect();
    order.sort_by_key(|&i| dist[i]);
    for i in order {
        let j = nbrs(i).into_iter().find(|&j| dist[j] + 1 == dist[i]).unwrap();
        labels[i] = labels[j];
    }
    Reference { width, height, cells, labels, n_regions }
}

/// Up to `n` walls with random shapes and pivots, each legal against the
/// bodies placed before it.
pub fn random_walls<R: Rng>(rng: &mut R, outline: &PlanGrid, n: usize, len: u32) -> Vec<LaserWall> {
    let size = outline.size();
    let mut grid = outline.clone();
    let mut walls = Vec::new();
    let mut tries = 0;
    while walls.len() < n && tries < 200 * n.max(1) {
        tries += 1;
        let shape = WallShape::ALL[rng.gen_range(0..6)];
        let pivot = CellCoord::new(rng.gen_range(0..size.width), rng.gen_range(0..size.height));
        let w = LaserWall::new(WallId(walls.len() as u32), shape, pivot, len, None);
        if placement_legal(&grid, &w, &PlacementRules::default()) {
            laserwall_core::partition::activate_wall(&mut grid, &w, InfiltrationMode::Fixed).unwrap();
            walls.push(w);
        }
    }
    walls
}
