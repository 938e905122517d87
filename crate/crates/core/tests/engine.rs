use std::f64::consts::PI;
use std::sync::Arc;

use drivesim::dynamics::{Action, DynamicsModel};
use drivesim::engine::{
    benchmark, compute_metrics, CollisionBehavior, EngineError, InitMode, Policy, PolicyRunner, SimBatch, SimConfig,
    INFO_GOAL, INFO_OFFROAD, INFO_VEH_COLLISION,
};
use drivesim::geometry::{obb_overlap, obb_segment_intersect, Vec2};
use drivesim::observation::{ObsConfig, ObsMode};
use drivesim::scenario::{
    generate_synthetic, preprocess, LoggedStep, MapTemplate, ObjectKind, ObjectLog, PreparedScenario, RoadElement,
    RoadKind, Scenario, SyntheticSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn straight_log(pos: Vec2, heading: f64, speed: f64, n: usize) -> Vec<LoggedStep> {
    (0..n)
        .map(|t| LoggedStep {
            position: pos + Vec2::from_angle(heading) * (speed * 0.1 * t as f64),
            heading,
            velocity: Vec2::from_angle(heading) * speed,
            valid: true,
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn object(id: i64, kind: ObjectKind, length: f64, width: f64, pos: Vec2, heading: f64, speed: f64, goal: Vec2, n: usize) -> ObjectLog {
    ObjectLog {
        id,
        kind,
        length,
        width,
        goal,
        states: straight_log(pos, heading, speed, n),
        force_replay: false,
    }
}

fn scene(objects: Vec<ObjectLog>, roads: Vec<RoadElement>, n: usize) -> PreparedScenario {
    let s = Scenario {
        name: "scripted".into(),
        timestep: 0.1,
        num_steps: n,
        objects,
        roads,
    };
    preprocess(&s, 0.0, 2.0)
}

fn synth(t: MapTemplate, n: usize, seed: u64) -> PreparedScenario {
    preprocess(&generate_synthetic(&SyntheticSpec::new(t, n, seed)).unwrap(), 0.05, 2.0)
}

fn all_valid() -> SimConfig {
    SimConfig {
        init_mode: InitMode::AllValid,
        ..SimConfig::default()
    }
}

#[test]
fn one_straight_road_world() {
    let p = synth(MapTemplate::StraightRoad, 1, 7);
    let batch = SimBatch::from_prepared(std::slice::from_ref(&p), SimConfig::default()).unwrap();
    assert_eq!(batch.num_worlds(), 1);
    let w = &batch.worlds()[0];
    assert_eq!(w.controlled(), &[0]);
    assert_eq!(w.states()[0].position, p.base.objects[0].states[0].position);
    assert_eq!(w.states()[0].heading, 0.0);
    assert_eq!(batch.observations().len(), batch.obs_width());
}

#[test]
fn nontrivial_init_skips_agents_near_their_goal() {
    let objs = vec![
        object(1, ObjectKind::Vehicle, 4.5, 2.0, Vec2::ZERO, 0.0, 0.0, Vec2::new(1.5, 0.0), 5),
        object(2, ObjectKind::Vehicle, 4.5, 2.0, Vec2::new(0.0, 10.0), 0.0, 0.0, Vec2::new(2.0, 10.0), 5),
    ];
    let p = scene(objs, vec![], 5);
    let batch = SimBatch::from_prepared(std::slice::from_ref(&p), SimConfig::default()).unwrap();
    assert_eq!(batch.total_controlled(), 0);
    assert_eq!(batch.total_agents(), 2);
    let batch = SimBatch::from_prepared(&[p], all_valid()).unwrap();
    assert_eq!(batch.total_controlled(), 2);
}

#[test]
fn controlled_set_is_truncated_by_lowest_id() {
    let objs: Vec<ObjectLog> = [9, 3, 7, 1]
        .iter()
        .enumerate()
        .map(|(k, &id)| object(id, ObjectKind::Vehicle, 4.5, 2.0, Vec2::new(0.0, 10.0 * k as f64), 0.0, 5.0, Vec2::new(40.0, 10.0 * k as f64), 5))
        .collect();
    let cfg = SimConfig { max_controlled_per_world: 2, ..SimConfig::default() };
    let batch = SimBatch::from_prepared(&[scene(objs, vec![], 5)], cfg).unwrap();
    let w = &batch.worlds()[0];
    let ids: Vec<i64> = w.controlled().iter().map(|&i| w.agents()[i].id).collect();
    assert_eq!(ids, vec![1, 3]);
}

#[test]
fn sixty_four_identical_worlds() {
    let p = Arc::new(synth(MapTemplate::StraightRoad, 6, 1));
    let mut batch = SimBatch::round_robin(&[p], 64, SimConfig::default()).unwrap();
    let mut runner = PolicyRunner::new(Policy::Constant(Action::new(1.0, 0.05)), &batch, 0);
    for _ in 0..20 {
        let a = runner.act(&batch).to_vec();
        batch.step(&a).unwrap();
    }
    let first = batch.worlds()[0].states().to_vec();
    for w in batch.worlds() {
        assert_eq!(w.states(), &first[..]);
    }
    let width = batch.obs_width() * 6;
    let obs = batch.observations();
    for w in 1..64 {
        assert_eq!(&obs[w * width..(w + 1) * width], &obs[..width]);
    }
}

#[test]
fn goal_within_tolerance_rewards_then_removes() {
    let objs = vec![
        object(1, ObjectKind::Vehicle, 4.5, 2.0, Vec2::ZERO, 0.0, 0.0, Vec2::new(1.9, 0.0), 10),
        object(2, ObjectKind::Vehicle, 4.5, 2.0, Vec2::new(0.0, 8.0), 0.0, 0.0, Vec2::new(50.0, 8.0), 10),
    ];
    let mut batch = SimBatch::from_prepared(&[scene(objs, vec![], 10)], all_valid()).unwrap();
    let w = batch.obs_width();
    let out = batch.step(&[Action::new(-1.0, 0.3), Action::default()]).unwrap();
    assert_eq!(out.rewards, &[1.0, 0.0]);
    assert_eq!(out.dones, &[true, false]);
    assert_eq!(out.infos[0] & INFO_GOAL, INFO_GOAL);
    assert!(out.observations[..w].iter().all(|v| *v == 0.0));
    // The partner no longer sees the removed agent.
    assert_eq!(out.observations[w + 7 + 6], 0.0);

    let out = batch.step(&[Action::new(4.0, 0.0), Action::default()]).unwrap();
    assert_eq!(out.rewards, &[0.0, 0.0]);
    assert!(batch.worlds()[0].is_removed(0));
    assert!(!batch.worlds()[0].active()[0]);
}

#[test]
fn head_on_collision_flags_and_removal() {
    let objs = || {
        vec![
            object(1, ObjectKind::Vehicle, 4.5, 2.0, Vec2::ZERO, 0.0, 10.0, Vec2::new(60.0, 0.0), 10),
            object(2, ObjectKind::Vehicle, 4.5, 2.0, Vec2::new(6.0, 0.0), PI, 10.0, Vec2::new(-60.0, 0.0), 10),
        ]
    };
    let mut batch = SimBatch::from_prepared(&[scene(objs(), vec![], 10)], all_valid()).unwrap();
    let out = batch.step(&[Action::default(); 2]).unwrap();
    assert!(out.infos.iter().all(|f| f & INFO_VEH_COLLISION != 0));
    assert_eq!(out.dones, &[false, false]);
    assert_eq!(batch.worlds()[0].last_collisions().vehicle_pairs, vec![(0, 1)]);

    let cfg = SimConfig { collision_behavior: CollisionBehavior::RemoveAgent, ..all_valid() };
    let mut batch = SimBatch::from_prepared(&[scene(objs(), vec![], 10)], cfg).unwrap();
    let out = batch.step(&[Action::default(); 2]).unwrap();
    assert_eq!(out.dones, &[true, true]);
    assert!(out.infos.iter().all(|f| f & INFO_VEH_COLLISION != 0));
    // Both removed: the episode is over and later events are empty.
    assert!(batch.worlds()[0].is_finished());
    let m = compute_metrics(batch.episodes());
    assert_eq!(m.veh_collision_rate, 1.0);
    assert_eq!(m.goal_rate, 0.0);

    let cfg = SimConfig { collision_behavior: CollisionBehavior::EndEpisode, ..all_valid() };
    let mut batch = SimBatch::from_prepared(&[scene(objs(), vec![], 10)], cfg).unwrap();
    batch.step(&[Action::default(); 2]).unwrap();
    assert!(batch.all_finished());
    assert_eq!(batch.episodes()[0].steps, 1);
}

#[test]
fn pedestrians_may_cross_road_edges() {
    let edge = RoadElement {
        id: 1,
        kind: RoadKind::RoadEdge,
        geometry: vec![Vec2::new(-10.0, 5.0), Vec2::new(10.0, 5.0)],
    };
    for (kind, length, width, expect) in [(ObjectKind::Pedestrian, 0.8, 0.8, false), (ObjectKind::Vehicle, 4.5, 2.0, true)] {
        let o = object(1, kind, length, width, Vec2::new(0.0, 4.0), PI / 2.0, 1.5, Vec2::new(0.0, 30.0), 10);
        let mut batch = SimBatch::from_prepared(&[scene(vec![o], vec![edge.clone()], 10)], SimConfig::default()).unwrap();
        let mut seen = false;
        for _ in 0..9 {
            let out = batch.step(&[Action::default()]).unwrap();
            seen |= out.infos[0] & INFO_OFFROAD != 0;
        }
        assert_eq!(seen, expect, "{kind}");
    }
}

#[test]
fn action_count_is_checked() {
    let mut batch = SimBatch::from_prepared(&[synth(MapTemplate::StraightRoad, 3, 0)], SimConfig::default()).unwrap();
    assert_eq!(
        batch.step(&[Action::default()]).unwrap_err(),
        EngineError::ActionCountMismatch { expected: 3, got: 1 }
    );
}

fn run_episode(batch: &mut SimBatch, policy: Policy, seed: u64) {
    let mut runner = PolicyRunner::new(policy, batch, seed);
    while !batch.all_finished() {
        let a = runner.act(batch).to_vec();
        batch.step(&a).unwrap();
    }
}

#[test]
fn reset_restores_initial_state() {
    let scenarios = vec![synth(MapTemplate::Intersection, 8, 2), synth(MapTemplate::StraightRoad, 5, 3)];
    let mut batch = SimBatch::from_prepared(&scenarios, SimConfig::default()).unwrap();
    let obs0 = batch.observations().to_vec();
    let states0: Vec<_> = batch.worlds().iter().map(|w| w.states().to_vec()).collect();
    run_episode(&mut batch, Policy::Random, 5);
    batch.reset(None).unwrap();
    assert_eq!(batch.observations(), &obs0[..]);
    for (w, s) in batch.worlds().iter().zip(&states0) {
        assert_eq!(w.states(), &s[..]);
        assert_eq!(w.t(), 0);
        assert_eq!(w.episode(), 1);
    }

    // Partial reset touches only the listed world.
    let mut runner = PolicyRunner::new(Policy::Random, &batch, 1);
    for _ in 0..5 {
        let a = runner.act(&batch).to_vec();
        batch.step(&a).unwrap();
    }
    let other = batch.worlds()[0].states().to_vec();
    let r0 = batch.controlled_range(0);
    let other_obs = batch.observations()[r0.start * batch.obs_width()..r0.end * batch.obs_width()].to_vec();
    batch.reset(Some(&[1])).unwrap();
    assert_eq!(batch.worlds()[0].states(), &other[..]);
    assert_eq!(batch.worlds()[0].t(), 5);
    assert_eq!(&batch.observations()[r0.start * batch.obs_width()..r0.end * batch.obs_width()], &other_obs[..]);
    assert_eq!(batch.worlds()[1].states(), &states0[1][..]);
    assert!(batch.reset(Some(&[7])).is_err());
}

#[test]
fn same_seed_same_buffers() {
    let scenarios = vec![synth(MapTemplate::ParkingLot, 10, 4), synth(MapTemplate::Intersection, 6, 4)];
    let cfg = SimConfig { obs: ObsConfig { mode: ObsMode::Lidar, n_rays: 16, ..ObsConfig::default() }, ..SimConfig::default() };
    let run = || {
        let mut b = SimBatch::from_prepared(&scenarios, cfg.clone()).unwrap();
        let mut r = PolicyRunner::new(Policy::Random, &b, 11);
        let mut trace = Vec::new();
        for _ in 0..30 {
            let a = r.act(&b).to_vec();
            let out = b.step(&a).unwrap();
            trace.extend(out.observations.iter().map(|v| v.to_bits()));
            trace.extend(out.rewards.iter().map(|v| v.to_bits()));
        }
        trace
    };
    assert_eq!(run(), run());
}

#[test]
fn expert_replay_reaches_every_goal() {
    for dynamics in [DynamicsModel::Classic, DynamicsModel::Invertible] {
        let scenarios: Vec<PreparedScenario> = MapTemplate::ALL
            .iter()
            .map(|&t| synth(t, t.capacity().min(8), 13))
            .collect();
        let cfg = SimConfig { dynamics, ..SimConfig::default() };
        let mut batch = SimBatch::from_prepared(&scenarios, cfg).unwrap();
        run_episode(&mut batch, Policy::Replay, 0);
        let m = compute_metrics(batch.episodes());
        assert_eq!(m.goal_rate, 1.0, "{dynamics:?}");
        assert_eq!(m.veh_collision_rate + m.offroad_rate, 0.0);
    }
}

#[test]
fn replay_agents_reproduce_their_logs_exactly() {
    let mut s = generate_synthetic(&SyntheticSpec::new(MapTemplate::Intersection, 8, 1)).unwrap();
    // Blink one track out for a few frames.
    for t in 20..25 {
        s.objects[3].states[t].valid = false;
    }
    let p = preprocess(&s, 0.05, 1e9);
    let mut batch = SimBatch::from_prepared(&[p], SimConfig::default()).unwrap();
    assert_eq!(batch.total_controlled(), 0);
    for t in 1..s.num_steps {
        batch.step(&[]).unwrap();
        let w = &batch.worlds()[0];
        for (i, a) in w.agents().iter().enumerate() {
            let log = &s.objects[a.object].states[t];
            if log.valid {
                assert_eq!(w.states()[i].position, log.position);
                assert_eq!(w.states()[i].heading, log.heading);
                assert!(w.active()[i]);
            } else {
                assert_eq!(w.states()[i].position, s.objects[a.object].states[19].position);
                assert!(!w.active()[i]);
            }
        }
    }
    assert!(batch.all_finished());
}

#[test]
fn worker_count_and_batching_do_not_change_results() {
    let scenarios: Vec<Arc<PreparedScenario>> = (0..4)
        .map(|k| Arc::new(synth(MapTemplate::ALL[k % 3], 4 + k, k as u64)))
        .collect();
    let trace = |workers: usize, worlds: usize| {
        let cfg = SimConfig { workers, ..SimConfig::default() };
        let mut b = SimBatch::round_robin(&scenarios, worlds, cfg).unwrap();
        let mut r = PolicyRunner::new(Policy::Constant(Action::new(0.5, 0.02)), &b, 0);
        for _ in 0..40 {
            let a = r.act(&b).to_vec();
            b.step(&a).unwrap();
        }
        let obs = b.observations().to_vec();
        let states: Vec<_> = b.worlds().iter().map(|w| w.states().to_vec()).collect();
        (obs, states)
    };
    let base = trace(1, 16);
    assert_eq!(trace(2, 16), base);
    assert_eq!(trace(4, 16), base);
    assert_eq!(trace(0, 16), base);
    // A lone world evolves exactly like its copy inside the batch.
    let (solo_obs, solo_states) = trace(1, 1);
    assert_eq!(solo_states[0], base.1[0]);
    assert_eq!(&base.0[..solo_obs.len()], &solo_obs[..]);
}

fn random_scene(rng: &mut ChaCha8Rng) -> PreparedScenario {
    let n_steps = 6;
    let objects: Vec<ObjectLog> = (0..rng.gen_range(1..40))
        .map(|i| {
            let kind = ObjectKind::ALL[rng.gen_range(0..3)];
            let length = rng.gen_range(1.0..6.0);
            let mut o = object(
                i,
                kind,
                length,
                rng.gen_range(0.5..length.min(2.5)),
                Vec2::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)),
                rng.gen_range(-PI..PI),
                rng.gen_range(0.0..15.0),
                Vec2::new(rng.gen_range(-60.0..60.0), rng.gen_range(-60.0..60.0)),
                n_steps,
            );
            o.force_replay = rng.gen_bool(0.3);
            if rng.gen_bool(0.1) {
                o.states[2].valid = false;
            }
            o
        })
        .collect();
    let roads: Vec<RoadElement> = (0..rng.gen_range(0..12))
        .map(|i| RoadElement {
            id: i,
            kind: if rng.gen_bool(0.7) { RoadKind::RoadEdge } else { RoadKind::Lane },
            geometry: (0..rng.gen_range(2..10))
                .map(|k| Vec2::new(rng.gen_range(-40.0..40.0) + k as f64 * 0.01, rng.gen_range(-40.0..40.0)))
                .collect(),
        })
        .collect();
    scene(objects, roads, n_steps)
}

#[test]
fn collision_events_match_brute_force_every_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..200 {
        let p = random_scene(&mut rng);
        let cfg = SimConfig { init_mode: InitMode::AllValid, ..SimConfig::default() };
        let mut batch = SimBatch::from_prepared(&[p], cfg).unwrap();
        let mut runner = PolicyRunner::new(Policy::Random, &batch, trial);
        while !batch.all_finished() {
            let a = runner.act(&batch).to_vec();
            batch.step(&a).unwrap();
            let w = &batch.worlds()[0];
            let (boxes, active) = (w.boxes(), w.active());
            let mut pairs = Vec::new();
            let mut off = Vec::new();
            for i in 0..boxes.len() {
                for j in i + 1..boxes.len() {
                    if active[i] && active[j] && obb_overlap(&boxes[i], &boxes[j]) {
                        pairs.push((i as u32, j as u32));
                    }
                }
                if active[i] && w.agents()[i].kind != ObjectKind::Pedestrian {
                    for (e, seg) in w.map().edges().iter().enumerate() {
                        if obb_segment_intersect(&boxes[i], seg) {
                            off.push((i as u32, e as u32));
                        }
                    }
                }
            }
            // Removal happens after detection, so compare against the
            // pre-removal activity: re-add agents removed this very step.
            let ev = w.last_collisions();
            let removed_now: Vec<bool> = (0..boxes.len()).map(|i| w.is_removed(i) && !active[i]).collect();
            let keep = |i: u32| !removed_now[i as usize];
            let got_pairs: Vec<_> = ev.vehicle_pairs.iter().copied().filter(|&(i, j)| keep(i) && keep(j)).collect();
            let got_off: Vec<_> = ev.offroad.iter().copied().filter(|&(i, _)| keep(i)).collect();
            assert_eq!(got_pairs, pairs, "trial {trial}");
            assert_eq!(got_off, off, "trial {trial}");
        }
    }
}

#[test]
fn rewards_are_binary_and_at_most_one_per_episode() {
    let scenarios = vec![synth(MapTemplate::StraightRoad, 10, 8), synth(MapTemplate::Intersection, 8, 8)];
    let mut batch = SimBatch::from_prepared(&scenarios, SimConfig::default()).unwrap();
    let mut totals = vec![0.0; batch.total_controlled()];
    let mut runner = PolicyRunner::new(Policy::GoalSeek, &batch, 0);
    while !batch.all_finished() {
        let a = runner.act(&batch).to_vec();
        let out = batch.step(&a).unwrap();
        for (t, r) in totals.iter_mut().zip(out.rewards) {
            assert!(*r == 0.0 || *r == 1.0);
            *t += r;
        }
    }
    assert!(totals.iter().all(|t| *t <= 1.0));
}

#[test]
fn goal_seek_solves_straight_road_and_intersection() {
    for (t, n) in [(MapTemplate::StraightRoad, 20), (MapTemplate::Intersection, 8), (MapTemplate::StraightRoad, 1)] {
        for seed in 0..5 {
            for dynamics in [DynamicsModel::Classic, DynamicsModel::Invertible] {
                let cfg = SimConfig { dynamics, ..SimConfig::default() };
                let mut batch = SimBatch::from_prepared(&[synth(t, n, seed)], cfg).unwrap();
                run_episode(&mut batch, Policy::GoalSeek, 0);
                let m = compute_metrics(batch.episodes());
                assert_eq!(m.goal_rate, 1.0, "{t} seed {seed} {dynamics:?}");
                assert_eq!(m.veh_collision_rate, 0.0, "{t} seed {seed} {dynamics:?}");
                assert_eq!(m.offroad_rate, 0.0, "{t} seed {seed} {dynamics:?}");
            }
        }
    }
}

#[test]
fn benchmark_report_satisfies_its_formula() {
    let scenarios = vec![Arc::new(synth(MapTemplate::StraightRoad, 3, 0)), Arc::new(synth(MapTemplate::StraightRoad, 5, 1))];
    let r = benchmark(&scenarios, &SimConfig::default(), 2, 100, Policy::Random, 0).unwrap();
    assert_eq!(r.total_agents, 8);
    assert_eq!(r.asps, 100.0 * 8.0 / r.elapsed_s);
    assert!(r.casps <= r.asps);
    // Episodes end at step 90, so 100 steps exercise automatic resets.
    let r = benchmark(&scenarios, &SimConfig::default(), 3, 200, Policy::Replay, 0).unwrap();
    assert_eq!(r.worlds, 3);
    assert_eq!(r.total_agents, 11);
}

#[test]
fn view_cone_head_rotation_is_clamped() {
    let cfg = SimConfig { obs: ObsConfig { mode: ObsMode::ViewCone, n_rays: 8, ..ObsConfig::default() }, ..SimConfig::default() };
    let mut batch = SimBatch::from_prepared(&[synth(MapTemplate::StraightRoad, 1, 0)], cfg).unwrap();
    for _ in 0..5 {
        batch.step(&[Action { head_rotation: 0.5, ..Action::default() }]).unwrap();
    }
    assert_eq!(batch.worlds()[0].head_angles()[0], PI / 2.0);
}
