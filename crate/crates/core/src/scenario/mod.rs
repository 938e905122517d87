//! Scenario data model: road polylines, logged object trajectories and goals.
//!
//! Scenarios are immutable once built. [`parse_scenario`] reads the JSON
//! interchange format, [`preprocess`] turns a scenario into the decimated,
//! controllability-annotated form the engine runs on, and
//! [`generate_synthetic`] produces deterministic test scenes.

mod json;
mod prepare;
mod synth;
mod validate;

use std::fmt;

use thiserror::Error;

use crate::geometry::Vec2;

pub use json::{
    parse_prepared, parse_scenario, prepared_to_json, scenario_to_json, scenario_to_value,
    scenario_from_value,
};
pub use prepare::{
    mark_controllable, preprocess, PrepStats, PreparedScenario, DEFAULT_CONTROLLABLE_THRESHOLD,
    DEFAULT_DECIMATION_THRESHOLD,
};
pub use synth::{generate_synthetic, MapTemplate, SyntheticSpec};
pub use validate::{validate_scenario, Issue, IssueKind, Severity, ValidationReport};

pub const DEFAULT_TIMESTEP: f64 = 0.1;
pub const DEFAULT_NUM_STEPS: usize = 91;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("missing field `{path}`")]
    MissingField { path: String },
    #[error("type mismatch at `{path}`: expected {expected}")]
    TypeMismatch { path: String, expected: &'static str },
    #[error("length mismatch at `{path}`: expected {expected}, found {found}")]
    LengthMismatch {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown value {value:?} at `{path}`")]
    UnknownVariant { path: String, value: String },
    #[error("scenario failed validation: {0}")]
    Invalid(ValidationReport),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectKind {
    Vehicle,
    Pedestrian,
    Cyclist,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 3] = [ObjectKind::Vehicle, ObjectKind::Pedestrian, ObjectKind::Cyclist];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Vehicle => "vehicle",
            ObjectKind::Pedestrian => "pedestrian",
            ObjectKind::Cyclist => "cyclist",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Vehicles and cyclists go off-road by crossing a road edge; pedestrians may.
    pub fn collides_with_road_edges(self) -> bool {
        !matches!(self, ObjectKind::Pedestrian)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RoadKind {
    RoadEdge,
    Lane,
    RoadLine,
    Crosswalk,
    SpeedBump,
    StopSign,
    Driveway,
}

impl RoadKind {
    pub const ALL: [RoadKind; 7] = [
        RoadKind::RoadEdge,
        RoadKind::Lane,
        RoadKind::RoadLine,
        RoadKind::Crosswalk,
        RoadKind::SpeedBump,
        RoadKind::StopSign,
        RoadKind::Driveway,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoadKind::RoadEdge => "road_edge",
            RoadKind::Lane => "lane",
            RoadKind::RoadLine => "road_line",
            RoadKind::Crosswalk => "crosswalk",
            RoadKind::SpeedBump => "speed_bump",
            RoadKind::StopSign => "stop_sign",
            RoadKind::Driveway => "driveway",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Position in [`RoadKind::ALL`], used for one-hot encodings.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Minimum number of geometry points.
    pub fn min_points(self) -> usize {
        if self == RoadKind::StopSign {
            1
        } else {
            2
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for RoadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One logged frame of an object. Other fields are meaningless when
/// `valid` is false.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LoggedStep {
    pub position: Vec2,
    pub heading: f64,
    pub velocity: Vec2,
    pub valid: bool,
}

impl LoggedStep {
    /// Signed speed along the logged heading.
    pub fn speed(&self) -> f64 {
        self.velocity.dot(Vec2::from_angle(self.heading))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectLog {
    pub id: i64,
    pub kind: ObjectKind,
    pub length: f64,
    pub width: f64,
    pub goal: Vec2,
    pub states: Vec<LoggedStep>,
    /// Replay the log instead of controlling this object.
    pub force_replay: bool,
}

impl ObjectLog {
    pub fn first_valid(&self) -> Option<(usize, &LoggedStep)> {
        self.states.iter().enumerate().find(|(_, s)| s.valid)
    }

    pub fn last_valid(&self) -> Option<(usize, &LoggedStep)> {
        self.states.iter().enumerate().rev().find(|(_, s)| s.valid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadElement {
    pub id: i64,
    pub kind: RoadKind,
    pub geometry: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub timestep: f64,
    pub num_steps: usize,
    pub objects: Vec<ObjectLog>,
    pub roads: Vec<RoadElement>,
}

impl Scenario {
    pub fn road_point_count(&self) -> usize {
        self.roads.iter().map(|r| r.geometry.len()).sum()
    }
}
