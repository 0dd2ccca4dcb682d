//! Raster, text and SVG views of a layout.
//!
//! Every cell maps to one colour: free cells take their room colour, beam
//! cells a lighter tint of it, wall bodies are black and entrance openings
//! magenta. The mapping is injective, so a raster decodes back to the label
//! view exactly.

use std::fmt::Write as _;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::geometry::{CellState, PlanSize};
use crate::metrics::LayoutMetrics;
use crate::planner::{LayoutState, LIVING_ROOM};
use crate::scenario::Connection;

pub const WALL_COLOR: [u8; 3] = [0, 0, 0];
pub const ENTRANCE_COLOR: [u8; 3] = [255, 0, 255];
pub const UNASSIGNED_COLOR: [u8; 3] = [60, 60, 60];

const ROOM_COLORS: [[u8; 3]; 16] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [188, 189, 34],
    [23, 190, 207],
    [127, 127, 127],
    [0, 90, 50],
    [120, 0, 90],
    [90, 60, 0],
    [0, 60, 120],
    [180, 160, 100],
    [100, 180, 160],
];

/// Rooms the palette can tell apart.
pub const MAX_PALETTE_ROOMS: usize = ROOM_COLORS.len();

/// What occupies a cell, as seen by an observer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellKind {
    Free = 0,
    Beam = 1,
    Wall = 2,
    Entrance = 3,
}

/// Per-cell labels (`room + 1`, 0 for unassigned, wall and entrance cells)
/// plus an auxiliary channel of [`CellKind`] codes. Row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelView {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
    pub aux: Vec<u8>,
}

impl LabelView {
    pub fn of(state: &LayoutState) -> Self {
        let size = state.grid.size();
        let rooms = state.room_grid();
        let mut labels = Vec::with_capacity(size.area());
        let mut aux = Vec::with_capacity(size.area());
        for (i, room) in rooms.iter().enumerate() {
            let kind = match state.grid.at(i) {
                CellState::Free => CellKind::Free,
                CellState::BeamLight { .. } => CellKind::Beam,
                CellState::WallBody(_) => CellKind::Wall,
                CellState::EntranceOpening => CellKind::Entrance,
            };
            let label = match kind {
                CellKind::Free | CellKind::Beam => room.map_or(0, |r| (r + 1).min(255) as u8),
                _ => 0,
            };
            labels.push(label);
            aux.push(kind as u8);
        }
        Self { width: size.width as usize, height: size.height as usize, labels, aux }
    }

    pub fn kind(&self, i: usize) -> CellKind {
        match self.aux[i] {
            0 => CellKind::Free,
            1 => CellKind::Beam,
            2 => CellKind::Wall,
            _ => CellKind::Entrance,
        }
    }
}

fn base_color(label: u8) -> [u8; 3] {
    match label {
        0 => UNASSIGNED_COLOR,
        l => ROOM_COLORS[(l as usize - 1) % ROOM_COLORS.len()],
    }
}

fn tint(c: [u8; 3]) -> [u8; 3] {
    c.map(|v| ((u16::from(v) + 255) / 2) as u8)
}

pub fn cell_color(kind: CellKind, label: u8) -> [u8; 3] {
    match kind {
        CellKind::Wall => WALL_COLOR,
        CellKind::Entrance => ENTRANCE_COLOR,
        CellKind::Free => base_color(label),
        CellKind::Beam => tint(base_color(label)),
    }
}

/// Inverse of [`cell_color`]; `None` for colours outside the palette.
pub fn decode_color(c: [u8; 3]) -> Option<(CellKind, u8)> {
    if c == WALL_COLOR {
        return Some((CellKind::Wall, 0));
    }
    if c == ENTRANCE_COLOR {
        return Some((CellKind::Entrance, 0));
    }
    (0..=MAX_PALETTE_ROOMS as u8).find_map(|label| {
        let base = base_color(label);
        if c == base {
            Some((CellKind::Free, label))
        } else if c == tint(base) {
            Some((CellKind::Beam, label))
        } else {
            None
        }
    })
}

/// Renders the label view with `cell_px` pixels per cell side.
pub fn raster(view: &LabelView, cell_px: u32) -> RgbImage {
    let px = cell_px.max(1);
    let mut img = RgbImage::new(view.width as u32 * px, view.height as u32 * px);
    for y in 0..view.height {
        for x in 0..view.width {
            let i = y * view.width + x;
            let color = Rgb(cell_color(view.kind(i), view.labels[i]));
            for dy in 0..px {
                for dx in 0..px {
                    img.put_pixel(x as u32 * px + dx, y as u32 * px + dy, color);
                }
            }
        }
    }
    img
}

/// Reads a raster produced by [`raster`] back into labels.
pub fn decode_raster(img: &RgbImage, cell_px: u32) -> Option<LabelView> {
    let px = cell_px.max(1);
    let (w, h) = ((img.width() / px) as usize, (img.height() / px) as usize);
    let mut labels = Vec::with_capacity(w * h);
    let mut aux = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (kind, label) = decode_color(img.get_pixel(x as u32 * px, y as u32 * px).0)?;
            labels.push(label);
            aux.push(kind as u8);
        }
    }
    Some(LabelView { width: w, height: h, labels, aux })
}

/// One glyph per room (`0`-`9`, then letters), `#` for walls, `+` for beams,
/// `E` for the entrance and `?` for unassigned cells.
pub fn ascii(view: &LabelView) -> String {
    let mut out = String::with_capacity((view.width + 1) * view.height);
    for y in 0..view.height {
        for x in 0..view.width {
            let i = y * view.width + x;
            let ch = match view.kind(i) {
                CellKind::Wall => '#',
                CellKind::Entrance => 'E',
                CellKind::Beam => '+',
                CellKind::Free => match view.labels[i] {
                    0 => '?',
                    l => std::char::from_digit(u32::from(l - 1), 36).unwrap_or('*'),
                },
            };
            out.push(ch);
        }
        out.push('\n');
    }
    out
}

pub const SATISFIED_STROKE: &str = "green";
pub const MISSED_STROKE: &str = "red";

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// SVG drawing of the layout with one dashed line per required connection:
/// green when satisfied, red when missed.
pub fn svg(state: &LayoutState, metrics: &LayoutMetrics, cell_px: u32) -> String {
    let view = LabelView::of(state);
    let size = state.grid.size();
    let px = f64::from(cell_px.max(1));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        f64::from(size.width) * px,
        f64::from(size.height) * px,
        f64::from(size.width) * px,
        f64::from(size.height) * px
    );
    let _ = writeln!(s, r#"<g class="cells" shape-rendering="crispEdges">"#);
    for y in 0..view.height {
        for x in 0..view.width {
            let i = y * view.width + x;
            let kind = view.kind(i);
            let class = match kind {
                CellKind::Wall => "wall",
                CellKind::Entrance => "entrance",
                CellKind::Beam => "beam",
                CellKind::Free => "room",
            };
            let _ = writeln!(
                s,
                r#"<rect class="{class}" x="{}" y="{}" width="{px}" height="{px}" fill="{}"/>"#,
                x as f64 * px,
                y as f64 * px,
                hex(cell_color(kind, view.labels[i]))
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let centroids = room_centroids(state, metrics.areas.len());
    let _ = writeln!(s, r#"<g class="connections" fill="none" stroke-width="{}">"#, px / 3.0);
    for (conn, ok) in metrics.satisfied.iter().map(|c| (c, true)).chain(metrics.missed.iter().map(|c| (c, false))) {
        let (room, target) = match *conn {
            Connection::RoomToLiving(r) => (r, centroids[LIVING_ROOM]),
            Connection::RoomToFacade(r) => (r, centroids[r].map(|c| nearest_outline_point(c, size))),
        };
        // rooms without a region are anchored at the plan centre
        let centre = (f64::from(size.width) / 2.0, f64::from(size.height) / 2.0);
        let from = centroids[room].unwrap_or(centre);
        let to = target.unwrap_or(centre);
        connection_line(&mut s, conn, ok, from, to, px);
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

fn connection_line(s: &mut String, conn: &Connection, ok: bool, from: (f64, f64), to: (f64, f64), px: f64) {
    let (class, stroke) = if ok { ("satisfied", SATISFIED_STROKE) } else { ("missed", MISSED_STROKE) };
    let label = match conn {
        Connection::RoomToLiving(r) => format!("room {r} to living"),
        Connection::RoomToFacade(r) => format!("room {r} to facade"),
    };
    let _ = writeln!(
        s,
        r#"<line class="connection {class}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{stroke}" stroke-dasharray="{:.2},{:.2}"><title>{label}</title></line>"#,
        from.0 * px,
        from.1 * px,
        to.0 * px,
        to.1 * px,
        px,
        px / 2.0
    );
}

/// Centre of mass (in cell units) of each room's cells.
pub fn room_centroids(state: &LayoutState, n_rooms: usize) -> Vec<Option<(f64, f64)>> {
    let size = state.grid.size();
    let mut acc = vec![(0.0f64, 0.0f64, 0usize); n_rooms];
    for (i, room) in state.room_grid().into_iter().enumerate() {
        if let Some(r) = room.filter(|&r| r < n_rooms) {
            let c = size.coord(i);
            acc[r].0 += f64::from(c.x) + 0.5;
            acc[r].1 += f64::from(c.y) + 0.5;
            acc[r].2 += 1;
        }
    }
    acc.into_iter().map(|(x, y, n)| (n > 0).then(|| (x / n as f64, y / n as f64))).collect()
}

fn nearest_outline_point(c: (f64, f64), size: PlanSize) -> (f64, f64) {
    let (w, h) = (f64::from(size.width), f64::from(size.height));
    let options = [(c.0, 0.0), (w, c.1), (c.0, h), (0.0, c.1)];
    options
        .into_iter()
        .min_by(|a, b| {
            let da = (a.0 - c.0).abs() + (a.1 - c.1).abs();
            let db = (b.0 - c.0).abs() + (b.1 - c.1).abs();
            da.total_cmp(&db)
        })
        .expect("four options")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn palette_is_injective() {
        let mut seen = HashSet::new();
        assert!(seen.insert(WALL_COLOR));
        assert!(seen.insert(ENTRANCE_COLOR));
        for label in 0..=MAX_PALETTE_ROOMS as u8 {
            for kind in [CellKind::Free, CellKind::Beam] {
                let c = cell_color(kind, label);
                assert!(seen.insert(c), "duplicate colour for {kind:?} {label}");
                assert_eq!(decode_color(c), Some((kind, label)));
            }
        }
    }
}
