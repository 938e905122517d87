//! Bird's-eye SVG snapshots.
//!
//! Coordinates are written in meters with three decimals inside a group that
//! flips the y axis, so the numbers in the file are world coordinates.

use std::fmt::Write as _;
use std::io::Write;

use drivesim::geometry::{Obb, Vec2};
use drivesim::scenario::{
    parse_prepared, parse_scenario, scenario_from_value, ObjectKind, RoadElement, RoadKind, Scenario,
};
use serde_json::Value;

use crate::rollout::TRAJECTORY_FORMAT;
use crate::{read_file, say, scenario_error, write_file, CliError, RenderArgs, Result};

const MARGIN: f64 = 5.0;
const PIXELS_PER_METER: f64 = 8.0;
const DEFAULT_GOAL_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameAgent {
    pub id: i64,
    pub kind: ObjectKind,
    pub obb: Obb,
    pub goal: Vec2,
}

/// Everything drawn in one picture.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub roads: Vec<RoadElement>,
    pub agents: Vec<FrameAgent>,
    pub goal_radius: f64,
}

fn road_style(kind: RoadKind) -> (&'static str, f64) {
    match kind {
        RoadKind::RoadEdge => ("#222222", 0.30),
        RoadKind::Lane => ("#9ab0c8", 0.10),
        RoadKind::RoadLine => ("#d8b13a", 0.15),
        RoadKind::Crosswalk => ("#7a7a7a", 0.20),
        RoadKind::SpeedBump => ("#b0602c", 0.25),
        RoadKind::Driveway => ("#6c8e5a", 0.20),
        RoadKind::StopSign => ("#c0392b", 0.20),
    }
}

fn agent_fill(kind: ObjectKind) -> &'static str {
    match kind {
        ObjectKind::Vehicle => "#3a6ea5",
        ObjectKind::Pedestrian => "#c0392b",
        ObjectKind::Cyclist => "#27ae60",
    }
}

fn points_attr(points: &[Vec2]) -> String {
    let mut s = String::new();
    for (k, p) in points.iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.3},{:.3}", p.x, p.y);
    }
    s
}

/// Renders a frame. Output bytes depend only on the frame.
pub fn render_svg(frame: &Frame) -> String {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: Vec2, r: f64| {
        lo = Vec2::new(lo.x.min(p.x - r), lo.y.min(p.y - r));
        hi = Vec2::new(hi.x.max(p.x + r), hi.y.max(p.y + r));
    };
    for r in &frame.roads {
        r.geometry.iter().for_each(|&p| grow(p, 0.0));
    }
    for a in &frame.agents {
        a.obb.corners().iter().for_each(|&p| grow(p, 0.0));
        grow(a.goal, frame.goal_radius);
    }
    if !lo.x.is_finite() {
        lo = Vec2::new(-10.0, -10.0);
        hi = Vec2::new(10.0, 10.0);
    }
    let (x0, y0) = (lo.x - MARGIN, lo.y - MARGIN);
    let (w, h) = (hi.x - lo.x + 2.0 * MARGIN, hi.y - lo.y + 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.3} {:.3} {:.3} {:.3}" width="{:.0}" height="{:.0}">"#,
        x0,
        -(y0 + h),
        w,
        h,
        w * PIXELS_PER_METER,
        h * PIXELS_PER_METER
    );
    let _ = writeln!(s, r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#f4f4f0"/>"##, x0, -(y0 + h), w, h);
    s.push_str("<g transform=\"scale(1,-1)\">\n");
    for r in &frame.roads {
        let (color, width) = road_style(r.kind);
        if r.geometry.len() == 1 {
            let p = r.geometry[0];
            let _ = writeln!(
                s,
                r#"<circle class="{}" data-id="{}" cx="{:.3}" cy="{:.3}" r="0.800" fill="{color}"/>"#,
                r.kind.as_str(),
                r.id,
                p.x,
                p.y
            );
        } else {
            let _ = writeln!(
                s,
                r#"<polyline class="{}" data-id="{}" fill="none" stroke="{color}" stroke-width="{width:.2}" points="{}"/>"#,
                r.kind.as_str(),
                r.id,
                points_attr(&r.geometry)
            );
        }
    }
    for a in &frame.agents {
        let _ = writeln!(
            s,
            r##"<circle class="goal" data-id="{}" cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="#2c3e50" stroke-width="0.10" stroke-dasharray="0.4 0.3"/>"##,
            a.id, a.goal.x, a.goal.y, frame.goal_radius
        );
    }
    for a in &frame.agents {
        let _ = writeln!(
            s,
            r##"<polygon class="agent {}" data-id="{}" fill="{}" stroke="#111111" stroke-width="0.05" points="{}"/>"##,
            a.kind.as_str(),
            a.id,
            agent_fill(a.kind),
            points_attr(&a.obb.corners())
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

/// Logged objects valid at `step`, drawn over `roads`.
pub fn scenario_frame(s: &Scenario, roads: &[RoadElement], step: usize) -> Result<Frame> {
    if step >= s.num_steps {
        return Err(CliError::Domain(format!("step {step} out of range, scenario has {} steps", s.num_steps)));
    }
    let agents = s
        .objects
        .iter()
        .filter(|o| o.states[step].valid)
        .map(|o| {
            let st = &o.states[step];
            FrameAgent {
                id: o.id,
                kind: o.kind,
                obb: Obb::new(st.position, o.length, o.width, st.heading),
                goal: o.goal,
            }
        })
        .collect();
    Ok(Frame {
        roads: roads.to_vec(),
        agents,
        goal_radius: DEFAULT_GOAL_RADIUS,
    })
}

/// Active agents of a rollout trajectory at `step`.
pub fn trajectory_frame(doc: &Value, step: usize) -> Result<Frame> {
    let bad = |what: &str| CliError::Domain(format!("malformed trajectory: {what}"));
    let scenario = scenario_from_value(doc.get("scenario").ok_or_else(|| bad("missing scenario"))?)
        .map_err(|e| CliError::Domain(format!("malformed trajectory scenario: {e}")))?;
    let steps = doc["steps"].as_array().ok_or_else(|| bad("missing steps"))?;
    let frame = steps.get(step).ok_or_else(|| {
        CliError::Domain(format!("step {step} out of range, trajectory has {} frames", steps.len()))
    })?;
    let agents = doc["agents"].as_array().ok_or_else(|| bad("missing agents"))?;
    let poses = frame["poses"].as_array().ok_or_else(|| bad("missing poses"))?;
    if poses.len() != agents.len() {
        return Err(bad("pose count differs from agent count"));
    }
    let mut out = Vec::new();
    for (a, p) in agents.iter().zip(poses) {
        let idx = a["object"].as_u64().ok_or_else(|| bad("agent without object index"))? as usize;
        let o = scenario.objects.get(idx).ok_or_else(|| bad("object index out of range"))?;
        let num = |k: usize| p.get(k).and_then(Value::as_f64).ok_or_else(|| bad("pose entry is not a number"));
        if num(4)? == 0.0 {
            continue;
        }
        out.push(FrameAgent {
            id: o.id,
            kind: o.kind,
            obb: Obb::new(Vec2::new(num(0)?, num(1)?), o.length, o.width, num(2)?),
            goal: o.goal,
        });
    }
    Ok(Frame {
        roads: scenario.roads,
        agents: out,
        goal_radius: doc["goal_tolerance"].as_f64().unwrap_or(DEFAULT_GOAL_RADIUS),
    })
}

pub fn run_render(args: &RenderArgs, out: &mut dyn Write) -> Result<()> {
    let text = read_file(&args.input)?;
    let value: Option<Value> = serde_json::from_str(&text).ok();
    let frame = match &value {
        Some(v) if v["format"] == TRAJECTORY_FORMAT => trajectory_frame(v, args.step)?,
        Some(v) if v.get("decimated_roads").is_some() => {
            let p = parse_prepared(&text).map_err(|e| scenario_error(&args.input, e))?;
            scenario_frame(&p.base, &p.decimated_roads, args.step)?
        }
        _ => {
            let s = parse_scenario(&text).map_err(|e| scenario_error(&args.input, e))?;
            scenario_frame(&s, &s.roads, args.step)?
        }
    };
    let svg = render_svg(&frame);
    write_file(&args.out, &svg)?;
    say(
        out,
        format_args!("{}: {} agents, {} road elements", args.out.display(), frame.agents.len(), frame.roads.len()),
    )
}
