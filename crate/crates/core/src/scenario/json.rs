//! JSON interchange for scenarios and prepared scenarios.
//!
//! Decoding walks a `serde_json::Value` by hand so every error can name the
//! offending path (`objects[3].states[10].p`). Unknown keys are ignored.

use serde_json::{json, Map, Value};

use super::{
    validate_scenario, LoggedStep, ObjectKind, ObjectLog, PrepStats, PreparedScenario, RoadElement,
    RoadKind, Scenario, ScenarioError, Severity, ValidationReport, DEFAULT_NUM_STEPS,
    DEFAULT_TIMESTEP,
};
use crate::geometry::{normalize_angle, Vec2};

type Result<T> = std::result::Result<T, ScenarioError>;

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| ScenarioError::MissingField {
        path: join(path, key),
    })
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn mismatch(path: impl Into<String>, expected: &'static str) -> ScenarioError {
    ScenarioError::TypeMismatch {
        path: path.into(),
        expected,
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| mismatch(path, "object"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| mismatch(path, "array"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| mismatch(path, "number"))
}

fn as_i64(v: &Value, path: &str) -> Result<i64> {
    v.as_i64().ok_or_else(|| mismatch(path, "integer"))
}

fn as_bool(v: &Value, path: &str) -> Result<bool> {
    v.as_bool().ok_or_else(|| mismatch(path, "boolean"))
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| mismatch(path, "string"))
}

fn as_point(v: &Value, path: &str) -> Result<Vec2> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([x, y]) => Ok(Vec2::new(
            as_f64(x, &format!("{path}[0]"))?,
            as_f64(y, &format!("{path}[1]"))?,
        )),
        _ => Err(mismatch(path, "[x, y] pair")),
    }
}

/// Warnings collected while normalizing upstream data.
#[derive(Default)]
struct Fixups {
    headings: usize,
    duplicate_points: usize,
}

fn decode_step(v: &Value, path: &str, fix: &mut Fixups) -> Result<LoggedStep> {
    let o = as_object(v, path)?;
    let valid = as_bool(field(o, "valid", path)?, &join(path, "valid"))?;
    // Invalid frames may omit their payload.
    let get = |key: &str| -> Result<Option<&Value>> {
        match o.get(key) {
            Some(Value::Null) | None if !valid => Ok(None),
            Some(v) => Ok(Some(v)),
            None => Err(ScenarioError::MissingField { path: join(path, key) }),
        }
    };
    let position = get("p")?.map(|v| as_point(v, &join(path, "p"))).transpose()?;
    let heading = get("heading")?.map(|v| as_f64(v, &join(path, "heading"))).transpose()?;
    let velocity = get("v")?.map(|v| as_point(v, &join(path, "v"))).transpose()?;
    let mut heading = heading.unwrap_or(0.0);
    if valid && heading.is_finite() {
        let h = normalize_angle(heading);
        if h != heading {
            fix.headings += 1;
            heading = h;
        }
    }
    Ok(LoggedStep {
        position: position.unwrap_or_default(),
        heading,
        velocity: velocity.unwrap_or_default(),
        valid,
    })
}

fn decode_object(v: &Value, path: &str, num_steps: usize, fix: &mut Fixups) -> Result<ObjectLog> {
    let o = as_object(v, path)?;
    let id = as_i64(field(o, "id", path)?, &join(path, "id"))?;
    let kind_path = join(path, "type");
    let kind_str = as_str(field(o, "type", path)?, &kind_path)?;
    let kind = ObjectKind::parse(kind_str).ok_or_else(|| ScenarioError::UnknownVariant {
        path: kind_path,
        value: kind_str.to_string(),
    })?;
    let length = as_f64(field(o, "length_m", path)?, &join(path, "length_m"))?;
    let width = as_f64(field(o, "width_m", path)?, &join(path, "width_m"))?;
    let force_replay = match o.get("force_replay") {
        None | Some(Value::Null) => false,
        Some(v) => as_bool(v, &join(path, "force_replay"))?,
    };
    let states_path = join(path, "states");
    let raw_states = as_array(field(o, "states", path)?, &states_path)?;
    if raw_states.len() != num_steps {
        return Err(ScenarioError::LengthMismatch {
            path: states_path,
            expected: num_steps,
            found: raw_states.len(),
        });
    }
    let states = raw_states
        .iter()
        .enumerate()
        .map(|(t, s)| decode_step(s, &format!("{states_path}[{t}]"), fix))
        .collect::<Result<Vec<_>>>()?;
    let goal = match o.get("goal") {
        None | Some(Value::Null) => states
            .iter()
            .rev()
            .find(|s| s.valid)
            .map(|s| s.position)
            .unwrap_or_default(),
        Some(g) => as_point(g, &join(path, "goal"))?,
    };
    Ok(ObjectLog {
        id,
        kind,
        length,
        width,
        goal,
        states,
        force_replay,
    })
}

fn decode_road(v: &Value, path: &str, fix: &mut Fixups) -> Result<RoadElement> {
    let o = as_object(v, path)?;
    let id = as_i64(field(o, "id", path)?, &join(path, "id"))?;
    let kind_path = join(path, "type");
    let kind_str = as_str(field(o, "type", path)?, &kind_path)?;
    let kind = RoadKind::parse(kind_str).ok_or_else(|| ScenarioError::UnknownVariant {
        path: kind_path,
        value: kind_str.to_string(),
    })?;
    let geo_path = join(path, "geometry");
    let raw = as_array(field(o, "geometry", path)?, &geo_path)?;
    let mut geometry: Vec<Vec2> = Vec::with_capacity(raw.len());
    for (k, p) in raw.iter().enumerate() {
        let p = as_point(p, &format!("{geo_path}[{k}]"))?;
        if geometry.last() == Some(&p) {
            fix.duplicate_points += 1;
            continue;
        }
        geometry.push(p);
    }
    Ok(RoadElement { id, kind, geometry })
}

/// Decodes a scenario from an already-parsed JSON value.
pub fn scenario_from_value(v: &Value) -> Result<Scenario> {
    let o = as_object(v, "")?;
    let name = as_str(field(o, "name", "")?, "name")?.to_string();
    let timestep = match o.get("timestep_s") {
        None | Some(Value::Null) => DEFAULT_TIMESTEP,
        Some(v) => as_f64(v, "timestep_s")?,
    };
    let num_steps = match o.get("num_steps") {
        None | Some(Value::Null) => DEFAULT_NUM_STEPS,
        Some(v) => v.as_u64().ok_or_else(|| mismatch("num_steps", "non-negative integer"))? as usize,
    };
    let mut fix = Fixups::default();
    let objects = as_array(field(o, "objects", "")?, "objects")?
        .iter()
        .enumerate()
        .map(|(i, v)| decode_object(v, &format!("objects[{i}]"), num_steps, &mut fix))
        .collect::<Result<Vec<_>>>()?;
    let roads = as_array(field(o, "roads", "")?, "roads")?
        .iter()
        .enumerate()
        .map(|(i, v)| decode_road(v, &format!("roads[{i}]"), &mut fix))
        .collect::<Result<Vec<_>>>()?;

    if fix.headings > 0 {
        log::warn!("scenario {name}: normalized {} heading(s) into (-pi, pi]", fix.headings);
    }
    if fix.duplicate_points > 0 {
        log::warn!("scenario {name}: dropped {} repeated road point(s)", fix.duplicate_points);
    }

    let scenario = Scenario {
        name,
        timestep,
        num_steps,
        objects,
        roads,
    };
    let report = validate_scenario(&scenario);
    if report.has_errors() {
        return Err(ScenarioError::Invalid(ValidationReport {
            issues: report.issues.into_iter().filter(|i| i.severity == Severity::Error).collect(),
        }));
    }
    Ok(scenario)
}

/// Parses and validates a scenario document.
pub fn parse_scenario(json_text: &str) -> Result<Scenario> {
    let v: Value = serde_json::from_str(json_text).map_err(|e| ScenarioError::Json(e.to_string()))?;
    scenario_from_value(&v)
}

fn point(p: Vec2) -> Value {
    json!([p.x, p.y])
}

fn road_to_value(r: &RoadElement) -> Value {
    json!({
        "id": r.id,
        "type": r.kind.as_str(),
        "geometry": r.geometry.iter().map(|p| point(*p)).collect::<Vec<_>>(),
    })
}

pub fn scenario_to_value(s: &Scenario) -> Value {
    let objects: Vec<Value> = s
        .objects
        .iter()
        .map(|o| {
            json!({
                "id": o.id,
                "type": o.kind.as_str(),
                "length_m": o.length,
                "width_m": o.width,
                "goal": point(o.goal),
                "force_replay": o.force_replay,
                "states": o.states.iter().map(|st| json!({
                    "p": point(st.position),
                    "heading": st.heading,
                    "v": point(st.velocity),
                    "valid": st.valid,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "name": s.name,
        "timestep_s": s.timestep,
        "num_steps": s.num_steps,
        "objects": objects,
        "roads": s.roads.iter().map(road_to_value).collect::<Vec<_>>(),
    })
}

pub fn scenario_to_json(s: &Scenario) -> String {
    serde_json::to_string(&scenario_to_value(s)).expect("scenario values are serializable")
}

pub fn prepared_to_json(p: &PreparedScenario) -> String {
    let v = json!({
        "scenario": scenario_to_value(&p.base),
        "decimated_roads": p.decimated_roads.iter().map(road_to_value).collect::<Vec<_>>(),
        "controllable": p.controllable,
        "stats": {
            "n_objects": p.stats.n_objects,
            "n_controllable": p.stats.n_controllable,
            "n_road_points_before": p.stats.n_road_points_before,
            "n_road_points_after": p.stats.n_road_points_after,
        },
    });
    serde_json::to_string(&v).expect("prepared values are serializable")
}

/// Reads a document written by [`prepared_to_json`].
pub fn parse_prepared(json_text: &str) -> Result<PreparedScenario> {
    let v: Value = serde_json::from_str(json_text).map_err(|e| ScenarioError::Json(e.to_string()))?;
    let o = as_object(&v, "")?;
    let base = scenario_from_value(field(o, "scenario", "")?)?;
    let mut fix = Fixups::default();
    let decimated_roads = as_array(field(o, "decimated_roads", "")?, "decimated_roads")?
        .iter()
        .enumerate()
        .map(|(i, r)| decode_road(r, &format!("decimated_roads[{i}]"), &mut fix))
        .collect::<Result<Vec<_>>>()?;
    if decimated_roads.len() != base.roads.len() {
        return Err(ScenarioError::LengthMismatch {
            path: "decimated_roads".into(),
            expected: base.roads.len(),
            found: decimated_roads.len(),
        });
    }
    let raw_mask = as_array(field(o, "controllable", "")?, "controllable")?;
    if raw_mask.len() != base.objects.len() {
        return Err(ScenarioError::LengthMismatch {
            path: "controllable".into(),
            expected: base.objects.len(),
            found: raw_mask.len(),
        });
    }
    let controllable = raw_mask
        .iter()
        .enumerate()
        .map(|(i, b)| as_bool(b, &format!("controllable[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let stats = PrepStats {
        n_objects: base.objects.len(),
        n_controllable: controllable.iter().filter(|c| **c).count(),
        n_road_points_before: base.road_point_count(),
        n_road_points_after: decimated_roads.iter().map(|r| r.geometry.len()).sum(),
    };
    Ok(PreparedScenario {
        base,
        decimated_roads,
        controllable,
        stats,
    })
}
