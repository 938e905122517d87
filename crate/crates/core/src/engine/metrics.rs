use super::world::EpisodeSummary;

pub const METRICS_CSV_HEADER: &str = "scenario,episode,controlled,goal_rate,veh_collision_rate,offroad_rate";

/// Rates are fractions of controlled agents; each agent counts at most once
/// per episode and category.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub goal_rate: f64,
    pub veh_collision_rate: f64,
    pub offroad_rate: f64,
    pub episodes: usize,
    pub controlled: usize,
}

fn rate(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Pools every episode's controlled agents and reports the three rates.
pub fn compute_metrics(episodes: &[EpisodeSummary]) -> Metrics {
    let controlled: usize = episodes.iter().map(|e| e.controlled).sum();
    let sum = |f: fn(&EpisodeSummary) -> usize| episodes.iter().map(f).sum::<usize>();
    Metrics {
        goal_rate: rate(sum(|e| e.goals), controlled),
        veh_collision_rate: rate(sum(|e| e.veh_collisions), controlled),
        offroad_rate: rate(sum(|e| e.offroads), controlled),
        episodes: episodes.len(),
        controlled,
    }
}

/// One CSV row (no trailing newline) matching [`METRICS_CSV_HEADER`].
pub fn metrics_csv_row(e: &EpisodeSummary) -> String {
    let m = compute_metrics(std::slice::from_ref(e));
    format!(
        "{},{},{},{},{},{}",
        e.scenario, e.episode, e.controlled, m.goal_rate, m.veh_collision_rate, m.offroad_rate
    )
}
