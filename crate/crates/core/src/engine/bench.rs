use std::sync::Arc;
use std::time::Instant;

use super::{EngineError, Policy, PolicyRunner, SimBatch, SimConfig};
use crate::scenario::PreparedScenario;

pub const BENCH_CSV_HEADER: &str = "worlds,steps,total_agents,controlled_agents,elapsed_s,asps,casps";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputReport {
    pub worlds: usize,
    pub steps: usize,
    /// Agents instantiated across all worlds.
    pub total_agents: usize,
    pub controlled_agents: usize,
    pub elapsed_s: f64,
    /// `steps · total_agents / elapsed_s`.
    pub asps: f64,
    /// `steps · controlled_agents / elapsed_s`.
    pub casps: f64,
}

impl ThroughputReport {
    pub fn new(worlds: usize, steps: usize, total_agents: usize, controlled_agents: usize, elapsed_s: f64) -> Self {
        Self {
            worlds,
            steps,
            total_agents,
            controlled_agents,
            elapsed_s,
            asps: steps as f64 * total_agents as f64 / elapsed_s,
            casps: steps as f64 * controlled_agents as f64 / elapsed_s,
        }
    }

    /// CSV row matching [`BENCH_CSV_HEADER`]. Floats use shortest round-trip
    /// formatting so the rates can be recomputed exactly from the row.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.worlds, self.steps, self.total_agents, self.controlled_agents, self.elapsed_s, self.asps, self.casps
        )
    }
}

/// Steps `worlds` worlds (round-robin over `scenarios`) for `steps` steps
/// under `policy`, resetting worlds as their episodes end.
///
/// The timed region covers action generation, stepping (including every
/// observation) and resets; batch construction is excluded.
pub fn benchmark(
    scenarios: &[Arc<PreparedScenario>],
    cfg: &SimConfig,
    worlds: usize,
    steps: usize,
    policy: Policy,
    seed: u64,
) -> Result<ThroughputReport, EngineError> {
    if steps == 0 {
        return Err(EngineError::Config("steps must be >= 1".into()));
    }
    let mut batch = SimBatch::round_robin(scenarios, worlds, cfg.clone())?;
    let mut runner = PolicyRunner::new(policy, &batch, seed);
    let start = Instant::now();
    for _ in 0..steps {
        let actions = runner.act(&batch);
        batch.step(actions)?;
        batch.reset_finished();
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(ThroughputReport::new(
        worlds,
        steps,
        batch.total_agents(),
        batch.total_controlled(),
        elapsed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_example() {
        let r = ThroughputReport::new(2, 100, 8, 5, 0.5);
        assert_eq!(r.asps, 1600.0);
        assert_eq!(r.casps, 1000.0);
        assert_eq!(r.csv_row(), "2,100,8,5,0.5,1600,1000");
    }
}
