use super::{RoadElement, RoadKind, Scenario};
use crate::geometry::decimate_polyline;

/// Default Visvalingam-Whyatt area threshold in square meters.
pub const DEFAULT_DECIMATION_THRESHOLD: f64 = 0.05;
/// Default start-to-goal distance an agent must exceed to be controllable.
pub const DEFAULT_CONTROLLABLE_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PrepStats {
    pub n_objects: usize,
    pub n_controllable: usize,
    pub n_road_points_before: usize,
    pub n_road_points_after: usize,
}

impl PrepStats {
    /// Points before over points after; 1.0 for an empty map.
    pub fn reduction(&self) -> f64 {
        if self.n_road_points_after == 0 {
            1.0
        } else {
            self.n_road_points_before as f64 / self.n_road_points_after as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedScenario {
    pub base: Scenario,
    pub decimated_roads: Vec<RoadElement>,
    pub controllable: Vec<bool>,
    pub stats: PrepStats,
}

/// An object is controllable when its first logged frame is valid, it is not
/// forced to replay, and it starts strictly farther than `threshold` from its goal.
pub fn mark_controllable(s: &Scenario, threshold: f64) -> Vec<bool> {
    s.objects
        .iter()
        .map(|o| match o.states.first() {
            Some(first) if first.valid && !o.force_replay => first.position.distance(o.goal) > threshold,
            _ => false,
        })
        .collect()
}

pub fn preprocess(s: &Scenario, decimation_threshold: f64, controllable_threshold: f64) -> PreparedScenario {
    let decimated_roads: Vec<RoadElement> = s
        .roads
        .iter()
        .map(|r| {
            let geometry = if r.kind == RoadKind::StopSign || r.geometry.len() < 3 {
                r.geometry.clone()
            } else {
                decimate_polyline(&r.geometry, decimation_threshold)
            };
            RoadElement {
                id: r.id,
                kind: r.kind,
                geometry,
            }
        })
        .collect();
    let controllable = mark_controllable(s, controllable_threshold);
    let stats = PrepStats {
        n_objects: s.objects.len(),
        n_controllable: controllable.iter().filter(|c| **c).count(),
        n_road_points_before: s.road_point_count(),
        n_road_points_after: decimated_roads.iter().map(|r| r.geometry.len()).sum(),
    };
    PreparedScenario {
        base: s.clone(),
        decimated_roads,
        controllable,
        stats,
    }
}
