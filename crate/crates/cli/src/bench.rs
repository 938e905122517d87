use std::io::Write;
use std::sync::Arc;

use drivesim::engine::{benchmark, estimate_buffer_bytes, EngineError, Policy, SimConfig, ThroughputReport, BENCH_CSV_HEADER};
use drivesim::observation::{ObsLayout, ObsMode};
use drivesim::scenario::PreparedScenario;

use crate::{append_csv, load_config, load_scenario_dir, say, BenchArgs, CliError, Result};

/// Bytes a road point costs once per world (point, segment and tree node).
const MAP_BYTES_PER_POINT: usize = 160;

pub(crate) fn parse_world_list(s: &str) -> Result<Vec<usize>> {
    let list: Option<Vec<usize>> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().ok().filter(|&n| n > 0))
        .collect();
    list.filter(|l| !l.is_empty())
        .ok_or_else(|| CliError::Domain(format!("--worlds expects positive integers like 1,2,4,8, got {s:?}")))
}

/// Upper bound on the memory of a `worlds`-world batch, assuming every
/// object is instantiated.
fn estimate_bytes(scenarios: &[Arc<PreparedScenario>], worlds: usize, cfg: &SimConfig) -> u64 {
    let (mut agents, mut controlled, mut points) = (0, 0, 0);
    for w in 0..worlds {
        let s = &scenarios[w % scenarios.len()];
        agents += s.base.objects.len();
        controlled += s.base.objects.len().min(cfg.max_controlled_per_world);
        points += s.stats.n_road_points_after;
    }
    estimate_buffer_bytes(agents, controlled, &ObsLayout::new(&cfg.obs)) + (points * MAP_BYTES_PER_POINT) as u64
}

pub fn run_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(obs) = &args.obs {
        cfg.obs.mode = ObsMode::parse(obs).ok_or_else(|| CliError::Domain(format!("unknown observation mode {obs:?}")))?;
    }
    cfg.seed = args.seed;
    cfg.validate()?;
    let policy: Policy = args.policy.parse()?;
    let worlds = parse_world_list(&args.worlds)?;
    if args.steps == 0 {
        return Err(CliError::Domain("--steps must be >= 1".into()));
    }
    let scenarios = load_scenario_dir(&args.scenarios)?;
    for &w in &worlds {
        let needed_mb = estimate_bytes(&scenarios, w, &cfg).div_ceil(1 << 20);
        if needed_mb > args.mem_cap_mb {
            return Err(EngineError::MemoryCap {
                needed_mb,
                cap_mb: args.mem_cap_mb,
            }
            .into());
        }
    }

    say(out, format_args!("{BENCH_CSV_HEADER}"))?;
    let mut peak: Option<ThroughputReport> = None;
    for &w in &worlds {
        let report = benchmark(&scenarios, &cfg, w, args.steps, policy, args.seed)?;
        let row = report.csv_row();
        say(out, format_args!("{row}"))?;
        if let Some(path) = &args.csv {
            append_csv(path, BENCH_CSV_HEADER, &row)?;
        }
        if peak.is_none_or(|p| report.asps > p.asps) {
            peak = Some(report);
        }
    }
    let p = peak.expect("world list is non-empty");
    say(
        out,
        format_args!(
            "peak: {:.0} ASPS, {:.0} CASPS at {} worlds ({} obs)",
            p.asps,
            p.casps,
            p.worlds,
            cfg.obs.mode.as_str()
        ),
    )
}
