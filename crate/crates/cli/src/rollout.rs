use std::io::Write;

use drivesim::engine::{compute_metrics, metrics_csv_row, Policy, PolicyRunner, SimBatch, METRICS_CSV_HEADER};
use drivesim::scenario::scenario_to_value;
use serde_json::{json, Value};

use crate::{append_csv, load_config, load_prepared, say, write_file, RolloutArgs, Result};

pub const TRAJECTORY_FORMAT: &str = "drivesim-trajectory";

/// Runs one episode and writes a trajectory document:
///
/// ```text
/// { format, policy, seed, dynamics, timestep, goal_tolerance,
///   scenario: <scenario JSON>,
///   agents: [{ object, id, controlled }],
///   steps: [{ t, poses: [[x, y, heading, speed, active]], infos: [u8] }],
///   metrics: { goal_rate, veh_collision_rate, offroad_rate, controlled } }
/// ```
///
/// `object` indexes `scenario.objects`; `active` is 1 or 0.
pub fn run_rollout(args: &RolloutArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    cfg.seed = args.seed;
    let policy: Policy = args.policy.parse()?;
    let prepared = load_prepared(&args.scenario)?;
    let scenario_value = scenario_to_value(&prepared.base);
    let mut batch = SimBatch::from_prepared(&[prepared], cfg.clone())?;
    let mut runner = PolicyRunner::new(policy, &batch, args.seed);

    let frame = |batch: &SimBatch| {
        let w = &batch.worlds()[0];
        let poses: Vec<Value> = w
            .states()
            .iter()
            .zip(w.active())
            .map(|(s, &a)| json!([s.position.x, s.position.y, s.heading, s.speed, a as u8]))
            .collect();
        json!({ "t": w.t(), "poses": poses, "infos": batch.output().infos })
    };
    let mut steps = vec![frame(&batch)];
    while !batch.all_finished() {
        let actions = runner.act(&batch).to_vec();
        batch.step(&actions)?;
        steps.push(frame(&batch));
    }

    let world = &batch.worlds()[0];
    let agents: Vec<Value> = world
        .agents()
        .iter()
        .map(|a| json!({ "object": a.object, "id": a.id, "controlled": a.controlled }))
        .collect();
    let episode = &batch.episodes()[0];
    let m = compute_metrics(batch.episodes());
    let doc = json!({
        "format": TRAJECTORY_FORMAT,
        "policy": args.policy,
        "seed": args.seed,
        "dynamics": world.dynamics(),
        "timestep": world.timestep(),
        "goal_tolerance": cfg.goal_tolerance,
        "scenario": scenario_value,
        "agents": agents,
        "steps": steps,
        "metrics": {
            "goal_rate": m.goal_rate,
            "veh_collision_rate": m.veh_collision_rate,
            "offroad_rate": m.offroad_rate,
            "controlled": m.controlled,
        },
    });
    let text = serde_json::to_string_pretty(&doc).expect("trajectory is serializable");
    write_file(&args.out, &text)?;

    let row = metrics_csv_row(episode);
    if let Some(path) = &args.metrics_csv {
        append_csv(path, METRICS_CSV_HEADER, &row)?;
    }
    say(out, format_args!("{METRICS_CSV_HEADER}"))?;
    say(out, format_args!("{row}"))
}
