use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;

use super::{ObjectKind, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    NonFinite,
    ZeroLengthSegment,
    DuplicateId,
    LengthMismatch,
    NoValidStep,
    BadDimensions,
    HeadingOutOfRange,
    TooFewPoints,
    BadTimestep,
    BadNumSteps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub kind: IssueKind,
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn count(&self, kind: IssueKind) -> usize {
        self.issues.iter().filter(|i| i.kind == kind).count()
    }

    fn push(&mut self, kind: IssueKind, severity: Severity, path: String, message: impl Into<String>) {
        self.issues.push(Issue {
            kind,
            severity,
            path,
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", issue.path, issue.message)?;
        }
        Ok(())
    }
}

/// Checks every scenario invariant. Never fails; an empty report means the
/// scenario is fully valid. Out-of-range headings are warnings.
pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    use IssueKind::*;
    use Severity::*;
    let mut r = ValidationReport::default();

    if !(s.timestep.is_finite() && s.timestep > 0.0) {
        r.push(BadTimestep, Error, "timestep_s".into(), format!("must be > 0, got {}", s.timestep));
    }
    if s.num_steps == 0 {
        r.push(BadNumSteps, Error, "num_steps".into(), "must be >= 1");
    }

    let mut ids = HashSet::new();
    for (i, o) in s.objects.iter().enumerate() {
        let path = format!("objects[{i}]");
        if !ids.insert(o.id) {
            r.push(DuplicateId, Error, format!("{path}.id"), format!("duplicate object id {}", o.id));
        }
        if !(o.length.is_finite() && o.width.is_finite() && o.length > 0.0 && o.width > 0.0) {
            r.push(BadDimensions, Error, path.clone(), "length and width must be positive");
        } else if o.kind == ObjectKind::Vehicle && o.length < o.width {
            r.push(BadDimensions, Error, path.clone(), "vehicle length must be >= width");
        }
        if !o.goal.is_finite() {
            r.push(NonFinite, Error, format!("{path}.goal"), "non-finite goal");
        }
        if o.states.len() != s.num_steps {
            r.push(
                LengthMismatch,
                Error,
                format!("{path}.states"),
                format!("expected {} states, found {}", s.num_steps, o.states.len()),
            );
        }
        if !o.states.iter().any(|st| st.valid) {
            r.push(NoValidStep, Error, format!("{path}.states"), "no valid step");
        }
        for (t, st) in o.states.iter().enumerate().filter(|(_, st)| st.valid) {
            let sp = format!("{path}.states[{t}]");
            if !(st.position.is_finite() && st.velocity.is_finite() && st.heading.is_finite()) {
                r.push(NonFinite, Error, sp, "non-finite value");
            } else if !(st.heading > -PI && st.heading <= PI) {
                r.push(
                    HeadingOutOfRange,
                    Warning,
                    format!("{sp}.heading"),
                    format!("heading {} outside (-pi, pi]", st.heading),
                );
            }
        }
    }

    let mut road_ids = HashSet::new();
    for (i, road) in s.roads.iter().enumerate() {
        let path = format!("roads[{i}]");
        if !road_ids.insert(road.id) {
            r.push(DuplicateId, Error, format!("{path}.id"), format!("duplicate road id {}", road.id));
        }
        if road.geometry.len() < road.kind.min_points() {
            r.push(
                TooFewPoints,
                Error,
                format!("{path}.geometry"),
                format!("{} needs at least {} points", road.kind, road.kind.min_points()),
            );
        }
        if road.geometry.iter().any(|p| !p.is_finite()) {
            r.push(NonFinite, Error, format!("{path}.geometry"), "non-finite point");
        }
        for (k, w) in road.geometry.windows(2).enumerate() {
            if w[0] == w[1] {
                r.push(
                    ZeroLengthSegment,
                    Error,
                    format!("{path}.geometry[{}]", k + 1),
                    "repeats the previous point",
                );
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use crate::scenario::{generate_synthetic, MapTemplate, SyntheticSpec};

    fn sample() -> Scenario {
        generate_synthetic(&SyntheticSpec::new(MapTemplate::StraightRoad, 3, 11)).unwrap()
    }

    #[test]
    fn synthetic_scenario_is_clean() {
        assert!(validate_scenario(&sample()).is_empty());
    }

    #[test]
    fn out_of_range_heading_warns() {
        let mut s = sample();
        s.objects[0].states[4].heading = 7.0;
        let r = validate_scenario(&s);
        assert_eq!(r.issues.len(), 1);
        assert_eq!(r.issues[0].kind, IssueKind::HeadingOutOfRange);
        assert_eq!(r.issues[0].severity, Severity::Warning);
        assert!(!r.has_errors());
    }

    #[test]
    fn duplicate_object_id() {
        let mut s = sample();
        s.objects[1].id = s.objects[0].id;
        let r = validate_scenario(&s);
        assert_eq!(r.count(IssueKind::DuplicateId), 1);
        assert!(r.has_errors());
    }

    #[test]
    fn nan_and_zero_length_segments() {
        let mut s = sample();
        s.roads[0].geometry[1] = s.roads[0].geometry[0];
        s.objects[0].states[0].position = Vec2::new(f64::NAN, 0.0);
        let r = validate_scenario(&s);
        assert_eq!(r.count(IssueKind::ZeroLengthSegment), 1);
        assert_eq!(r.count(IssueKind::NonFinite), 1);
    }

    #[test]
    fn invalid_steps_are_not_inspected() {
        let mut s = sample();
        s.objects[0].states[5].valid = false;
        s.objects[0].states[5].heading = f64::NAN;
        assert!(validate_scenario(&s).is_empty());
    }

    #[test]
    fn structural_problems() {
        let mut s = sample();
        s.objects[0].states.pop();
        s.objects[1].width = s.objects[1].length + 1.0;
        s.timestep = 0.0;
        let r = validate_scenario(&s);
        assert_eq!(r.count(IssueKind::LengthMismatch), 1);
        assert_eq!(r.count(IssueKind::BadDimensions), 1);
        assert_eq!(r.count(IssueKind::BadTimestep), 1);
    }
}
