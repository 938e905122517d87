use std::fs;
use std::io::Write;

use drivesim::scenario::{parse_scenario, prepared_to_json, preprocess};

use crate::{json_files, read_file, say, scenario_error, write_file, CliError, PreprocessArgs, Result};

/// Writes one prepared scenario per input file, named like the input, and
/// prints a stats line per file plus a total.
pub fn run_preprocess(args: &PreprocessArgs, out: &mut dyn Write) -> Result<()> {
    for (name, v) in [("decimate-eps", args.decimate_eps), ("controllable-threshold", args.controllable_threshold)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(CliError::Domain(format!("--{name} must be finite and >= 0, got {v}")));
        }
    }
    let files = json_files(&args.input)?;
    fs::create_dir_all(&args.output).map_err(CliError::io(&args.output))?;
    let (mut before, mut after, mut written, mut skipped) = (0, 0, 0, 0);
    for path in &files {
        let text = read_file(path)?;
        let scenario = match parse_scenario(&text) {
            Ok(s) => s,
            Err(e) if args.skip_bad => {
                log::warn!("skipping {}: {e}", path.display());
                say(out, format_args!("{}: skipped ({e})", path.display()))?;
                skipped += 1;
                continue;
            }
            Err(e) => return Err(scenario_error(path, e)),
        };
        let prepared = preprocess(&scenario, args.decimate_eps, args.controllable_threshold);
        let target = args.output.join(path.file_name().expect("listed files have names"));
        write_file(&target, &prepared_to_json(&prepared))?;
        let st = prepared.stats;
        say(
            out,
            format_args!(
                "{}: points {} -> {} ({:.2}x), controllable {}/{}",
                path.display(),
                st.n_road_points_before,
                st.n_road_points_after,
                st.reduction(),
                st.n_controllable,
                st.n_objects
            ),
        )?;
        before += st.n_road_points_before;
        after += st.n_road_points_after;
        written += 1;
    }
    let ratio = if after == 0 { 1.0 } else { before as f64 / after as f64 };
    say(
        out,
        format_args!("total: {written} written, {skipped} skipped, points {before} -> {after} ({ratio:.2}x)"),
    )
}
