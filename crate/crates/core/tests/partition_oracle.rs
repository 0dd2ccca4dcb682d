mod oracle;

use laserwall_core::partition::InfiltrationMode;
use laserwall_core::{builtins, repartition, CellState, Facade, PlanGrid, PlanSize};
use oracle::{random_walls, reference, Cell};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn same_cells(grid: &PlanGrid, cells: &[Cell]) -> bool {
    grid.cells().iter().zip(cells).all(|(a, b)| match (a, b) {
        (CellState::Free, Cell::Free) | (CellState::WallBody(_), Cell::Body) => true,
        (CellState::EntranceOpening, Cell::Entrance) => true,
        (CellState::BeamLight { wall, distance, rate, .. }, Cell::Beam(w, _, d, r)) => {
            wall.0 == *w && distance == d && (rate - r).abs() < 1e-12
        }
        _ => false,
    })
}

fn check(outline: &PlanGrid, seed: u64, mode: InfiltrationMode) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(0..9);
    let len = rng.gen_range(1..6);
    let walls = random_walls(&mut rng, outline, n, len);
    let (grid, part) = repartition(outline, &walls, mode).unwrap();
    let want = reference(outline, &walls, mode);
    assert!(same_cells(&grid, &want.cells), "cell states differ, seed {seed}");
    assert_eq!(part.region_count(), want.n_regions, "seed {seed}");
    assert_eq!(part.labels, want.labels, "labels differ, seed {seed}");
    assert_eq!(part.areas().iter().sum::<usize>(), outline.size().area());
}

#[test]
fn fixed_mode_matches_reference_on_builtin_plans() {
    for s in builtins() {
        let outline = s.plan_grid();
        for seed in 0..150 {
            check(&outline, seed * 31 + u64::from(s.id), InfiltrationMode::Fixed);
        }
    }
}

#[test]
fn decreasing_mode_matches_reference() {
    for s in builtins() {
        let outline = s.plan_grid();
        let mode = InfiltrationMode::decreasing_for(outline.size());
        for seed in 0..150 {
            check(&outline, seed * 17 + u64::from(s.id), mode);
        }
    }
    let outline = PlanGrid::new(PlanSize::new(12, 9), Facade::North).unwrap();
    for horizon in [1, 3, 6, 20] {
        for seed in 0..100 {
            check(&outline, seed, InfiltrationMode::Decreasing { horizon });
        }
    }
}

#[test]
fn small_and_degenerate_plans() {
    for (w, h) in [(1, 1), (2, 1), (1, 5), (3, 3), (4, 7)] {
        let outline = PlanGrid::new(PlanSize::new(w, h), Facade::South).unwrap();
        for seed in 0..40 {
            check(&outline, seed, InfiltrationMode::Fixed);
        }
    }
}
