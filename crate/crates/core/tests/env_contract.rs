use std::io::BufReader;

use laserwall_core::env::{decode_action, encode_action};
use laserwall_core::geometry::{apply_transform, placement_legal, PlacementRules};
use laserwall_core::planner::prepare_step;
use laserwall_core::render::{decode_raster, raster, LabelView};
use laserwall_core::trajectory::{read_trajectory, TrajectoryWriter};
use laserwall_core::{
    builtin, EnvConfig, EnvError, LayoutEnv, LightMode, Observation, ObservationMode, StepOutcome, Transformation,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn env(id: u32) -> LayoutEnv {
    LayoutEnv::new(EnvConfig::new(builtin(id).unwrap())).unwrap()
}

#[test]
fn mask_matches_independent_legality() {
    for light in [LightMode::OffLight, LightMode::OnLight] {
        let mut cfg = EnvConfig::new(builtin(3).unwrap());
        cfg.light_mode = light;
        let mut e = LayoutEnv::new(cfg).unwrap();
        e.reset(11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let state = e.state().unwrap().clone();
            let mask = e.action_mask();
            for (a, &legal) in mask.iter().enumerate() {
                let (wall, t) = decode_action(a);
                let w = state.wall(wall).unwrap();
                let expected = match apply_transform(state.grid.size(), w, t) {
                    Err(_) => false,
                    Ok(moved) => {
                        let mut g = state.grid.clone();
                        let rules = match light {
                            LightMode::OffLight => {
                                g.clear_lights_of(wall);
                                PlacementRules::default()
                            }
                            LightMode::OnLight => PlacementRules { block_own_beams: true, ..Default::default() },
                        };
                        placement_legal(&g, &moved, &rules)
                    }
                };
                assert_eq!(legal, expected, "action {a}");
                assert_eq!(legal, matches!(prepare_step(&state, wall, t), Ok(Ok(_))));
            }
            let legal: Vec<usize> = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
            if legal.is_empty() {
                break;
            }
            let tr = e.step(legal[rng.gen_range(0..legal.len())]).unwrap();
            assert_eq!(tr.info.outcome, Some(StepOutcome::Applied));
            if tr.terminated || tr.truncated {
                e.reset(rng.gen()).unwrap();
            }
        }
    }
}

#[test]
fn masked_actions_are_penalised_noops() {
    let mut e = env(1);
    e.reset(2).unwrap();
    let before = e.state().unwrap().clone();
    let c = e.closeness();
    let a = e.action_mask().iter().position(|&m| !m).expect("some illegal action");
    let tr = e.step(a).unwrap();
    assert!(matches!(tr.info.outcome, Some(StepOutcome::Violation(_))));
    assert_eq!(tr.reward, -5.0);
    assert_eq!(e.state().unwrap(), &before);
    assert_eq!(e.closeness(), c);
}

#[test]
fn fuzzed_steps_respect_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for id in 1..=6 {
        let mut e = env(id);
        let (lo, hi) = e.config().reward.bounds();
        e.reset(id as u64).unwrap();
        let mut episode_steps = 0;
        for _ in 0..300 {
            let a = rng.gen_range(0..e.n_actions());
            let tr = e.step(a).unwrap();
            episode_steps += 1;
            assert!(tr.reward >= lo - 1e-9 && tr.reward <= hi + 1e-9, "reward {} outside [{lo}, {hi}]", tr.reward);
            assert!((tr.reward - tr.info.reward.total()).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&tr.info.closeness));
            assert_eq!(tr.info.action_mask.len(), e.n_actions());
            assert!(!(tr.terminated && tr.truncated));
            assert_eq!(tr.info.step, episode_steps);
            let state = e.state().unwrap();
            let areas: usize = state.partition.areas().iter().sum();
            assert_eq!(areas, state.grid.size().area());
            if tr.terminated || tr.truncated {
                assert!(matches!(e.step(0), Err(EnvError::EpisodeFinished)));
                e.reset(rng.gen()).unwrap();
                episode_steps = 0;
            }
        }
    }
}

#[test]
fn same_seed_same_episode() {
    let run = || {
        let mut e = env(2);
        e.reset(42).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut out = Vec::new();
        for _ in 0..40 {
            let tr = e.step(rng.gen_range(0..e.n_actions())).unwrap();
            out.push((tr.reward, tr.info.closeness, tr.observation));
            if tr.terminated || tr.truncated {
                break;
            }
        }
        out
    };
    assert_eq!(run(), run());
}

#[test]
fn reset_layouts_have_every_room() {
    for id in 1..=6 {
        let mut e = env(id);
        for seed in 0..5 {
            let (_, info) = e.reset(seed).unwrap();
            let st = e.state().unwrap();
            let s = &e.config().scenario;
            assert_eq!(st.partition.region_count(), s.n_rooms);
            assert!(info.metrics.assigned.iter().all(|&a| a));
            assert!(info.metrics.entrance_ok);
            for (i, w) in st.walls.iter().enumerate() {
                assert_eq!(w.room_index, Some(i + 1));
            }
        }
    }
}

#[test]
fn raster_observation_decodes_to_labels() {
    let mut cfg = EnvConfig::new(builtin(4).unwrap());
    cfg.observation_mode = ObservationMode::RgbImage { cell_px: 3 };
    let mut e = LayoutEnv::new(cfg).unwrap();
    let (obs, _) = e.reset(8).unwrap();
    let view = LabelView::of(e.state().unwrap());
    let Observation::Raster { width, height, pixels, .. } = obs else { panic!("expected raster") };
    assert_eq!((width, height), (35 * 3, 33 * 3));
    let img = image::RgbImage::from_raw(width, height, pixels).unwrap();
    assert_eq!(img, raster(&view, 3));
    assert_eq!(decode_raster(&img, 3).unwrap(), view);
}

#[test]
fn trajectory_log_replays() {
    let mut e = env(1);
    let mut buf = Vec::new();
    let mut actions = Vec::new();
    {
        let mut log = TrajectoryWriter::new(&mut buf, e.config(), 13).unwrap();
        e.reset(13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..25 {
            let a = rng.gen_range(0..e.n_actions());
            let tr = e.step(a).unwrap();
            log.record(a, &tr).unwrap();
            actions.push((a, tr.reward, tr.info.closeness));
            if tr.terminated || tr.truncated {
                break;
            }
        }
        log.finish().unwrap();
    }
    let (header, steps) = read_trajectory(BufReader::new(&buf[..])).unwrap();
    assert_eq!(header.seed, 13);
    let mut replay = LayoutEnv::new(header.config).unwrap();
    replay.reset(header.seed).unwrap();
    for (rec, (a, r, c)) in steps.iter().zip(&actions) {
        assert_eq!(rec.action, *a);
        assert_eq!(encode_action(rec.wall, rec.transformation), *a);
        let tr = replay.step(rec.action).unwrap();
        assert_eq!(tr.reward, *r);
        assert_eq!(tr.info.closeness, *c);
    }
    assert_eq!(steps.len(), actions.len());
}

#[test]
fn action_space_size() {
    for id in 1..=6 {
        let e = env(id);
        let s = builtin(id).unwrap();
        assert_eq!(e.n_actions(), (s.n_rooms - 1) * Transformation::COUNT);
    }
}
