mod oracle;

use laserwall_core::partition::{activate_wall, extract_regions, infiltration_rate, InfiltrationMode};
use laserwall_core::{builtin, builtins, LaserWall};
use laserwall_core::{
    dynamic_step, repartition, AssignmentMode, CellState, EnvConfig, LayoutEnv, LayoutState, LightMode, StepOutcome,
    Transformation, WallId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rooms whose region is unchanged cell-for-cell must keep their index.
fn continuity_violations(prev: &LayoutState, next: &LayoutState) -> usize {
    let mut bad = 0;
    for (&old_region, &room) in &prev.assignment.rooms {
        let members = &prev.partition.regions[old_region].members;
        if let Some(r) = next.partition.regions.iter().find(|r| &r.members == members) {
            if next.assignment.room_of(r.id) != Some(room) {
                bad += 1;
            }
        }
    }
    bad
}

fn random_steps(light: LightMode, mode: InfiltrationMode, seed: u64, steps: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut applied, mut violations) = (0, 0);
    for s in builtins() {
        let mut cfg = EnvConfig::new(s.clone());
        cfg.light_mode = light;
        cfg.infiltration = mode;
        let mut env = LayoutEnv::new(cfg).unwrap();
        env.reset(rng.gen()).unwrap();
        let mut state = env.state().unwrap().clone();
        let outline = s.plan_grid();
        for _ in 0..steps {
            let wall = WallId(rng.gen_range(0..s.n_walls() as u32));
            let t = Transformation::ALL[rng.gen_range(0..14)];
            let (next, outcome) = dynamic_step(&state, wall, t).unwrap();
            if outcome != StepOutcome::Applied {
                assert_eq!(next, state);
                continue;
            }
            applied += 1;
            // moved wall last, everyone else in previous relative order
            assert_eq!(next.walls.last().unwrap().id, wall);
            let rest: Vec<WallId> = state.walls.iter().map(|w| w.id).filter(|&id| id != wall).collect();
            let got: Vec<WallId> = next.walls[..next.walls.len() - 1].iter().map(|w| w.id).collect();
            assert_eq!(got, rest);
            let (grid, part) = repartition(&outline, &next.walls, mode).unwrap();
            assert_eq!(grid, next.grid);
            assert_eq!(part.labels, next.partition.labels);
            violations += continuity_violations(&state, &next);
            state = next;
        }
    }
    (applied, violations)
}

#[test]
fn dynamic_steps_equal_reordered_repartition() {
    for light in [LightMode::OffLight, LightMode::OnLight] {
        let (applied, bad) = random_steps(light, InfiltrationMode::Fixed, 1, 120);
        assert!(applied >= 200, "only {applied} applied steps");
        assert_eq!(bad, 0);
    }
    let (_, bad) = random_steps(LightMode::OffLight, InfiltrationMode::Decreasing { horizon: 36 }, 2, 60);
    assert_eq!(bad, 0);
}

#[test]
fn identityless_dynamics_keep_every_room() {
    let s = builtin(1).unwrap();
    let mut cfg = EnvConfig::new(s.clone());
    cfg.wall_types = laserwall_core::WallTypes::StraightOnly;
    let mut env = LayoutEnv::new(cfg).unwrap();
    env.reset(4).unwrap();
    let walls: Vec<LaserWall> =
        env.state().unwrap().walls.iter().map(|w| LaserWall { room_index: None, ..*w }).collect();
    let mut state = LayoutState::build(
        &s.plan_grid(),
        walls,
        InfiltrationMode::Fixed,
        LightMode::OffLight,
        AssignmentMode::IdentityLess,
        &s,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let wall = WallId(rng.gen_range(0..3));
        let (next, out) = dynamic_step(&state, wall, Transformation::ALL[rng.gen_range(0..14)]).unwrap();
        if out == StepOutcome::Applied {
            assert_eq!(continuity_violations(&state, &next), 0);
            let rooms: std::collections::BTreeSet<usize> = next.assignment.rooms.values().copied().collect();
            assert_eq!(rooms.len(), next.assignment.rooms.len(), "a room got two regions");
        }
        state = next;
    }
}

#[test]
fn recorded_rates_follow_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for s in builtins() {
        let outline = s.plan_grid();
        for mode in [InfiltrationMode::Fixed, InfiltrationMode::decreasing_for(outline.size())] {
            for _ in 0..50 {
                let walls = oracle::random_walls(&mut rng, &outline, s.n_walls(), s.segment_length);
                let (grid, _) = repartition(&outline, &walls, mode).unwrap();
                for c in grid.cells() {
                    if let CellState::BeamLight { rate, distance, .. } = *c {
                        assert_eq!(rate, infiltration_rate(distance, mode));
                    }
                }
            }
        }
    }
}

/// Sequential activation usually adds one region per wall; the exceptions
/// are walls whose beams close no new cut (zero-length or redundant beams)
/// or close two at once.
#[test]
fn activation_mostly_adds_one_region() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut total, mut exact) = (0usize, 0usize);
    for s in builtins() {
        let outline = s.plan_grid();
        for _ in 0..60 {
            let walls = oracle::random_walls(&mut rng, &outline, s.n_walls(), s.segment_length);
            let mut grid = outline.clone();
            let mut count = extract_regions(&grid).region_count();
            for w in &walls {
                activate_wall(&mut grid, w, InfiltrationMode::Fixed).unwrap();
                let next = extract_regions(&grid).region_count();
                total += 1;
                if next == count + 1 {
                    exact += 1;
                }
                count = next;
            }
        }
    }
    let frac = exact as f64 / total as f64;
    eprintln!("activations adding exactly one region: {exact}/{total} ({frac:.3})");
    assert!(frac > 0.8, "{frac}");
}
