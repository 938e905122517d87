//! Deterministic synthetic scenes.
//!
//! Every template places agents in fixed slots, picks a seeded subset and
//! seeded vehicle sizes, then rolls each agent forward with the classic
//! bicycle model at constant speed and zero steering. The final logged
//! position is the goal, so every goal is reachable by construction.
//! Slot layouts are chosen so that no two logged boxes ever overlap and no
//! vehicle touches a road edge.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    LoggedStep, ObjectKind, ObjectLog, RoadElement, RoadKind, Scenario, ScenarioError, DEFAULT_NUM_STEPS,
    DEFAULT_TIMESTEP,
};
use crate::dynamics::{step_classic, Action, AgentState, VehicleParams};
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapTemplate {
    StraightRoad,
    Intersection,
    ParkingLot,
}

impl MapTemplate {
    pub const ALL: [MapTemplate; 3] = [MapTemplate::StraightRoad, MapTemplate::Intersection, MapTemplate::ParkingLot];

    pub fn as_str(self) -> &'static str {
        match self {
            MapTemplate::StraightRoad => "straight_road",
            MapTemplate::Intersection => "intersection",
            MapTemplate::ParkingLot => "parking_lot",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// Maximum number of agents the template can place.
    pub fn capacity(self) -> usize {
        match self {
            MapTemplate::StraightRoad => STRAIGHT_LANES.len() * STRAIGHT_SLOTS_X.len(),
            MapTemplate::Intersection => 8,
            MapTemplate::ParkingLot => 2 + 2 * PARKING_SLOTS_PER_SIDE,
        }
    }
}

impl fmt::Display for MapTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub template: MapTemplate,
    pub n_agents: usize,
    pub seed: u64,
    pub num_steps: usize,
    pub timestep: f64,
}

impl SyntheticSpec {
    pub fn new(template: MapTemplate, n_agents: usize, seed: u64) -> Self {
        Self {
            template,
            n_agents,
            seed,
            num_steps: DEFAULT_NUM_STEPS,
            timestep: DEFAULT_TIMESTEP,
        }
    }
}

const STRAIGHT_LANES: [f64; 4] = [-5.25, -1.75, 1.75, 5.25];
const STRAIGHT_SLOTS_X: [f64; 5] = [0.0, 12.0, 24.0, 36.0, 48.0];
const STRAIGHT_TRAVEL: f64 = 40.0;
const INTERSECTION_HALF_WIDTH: f64 = 4.0;
const INTERSECTION_EXTENT: f64 = 100.0;
const PARKING_SLOTS_PER_SIDE: usize = 18;

/// Where an agent starts, which way it faces and how far it travels.
#[derive(Debug, Clone, Copy)]
struct Slot {
    start: Vec2,
    heading: f64,
    travel: f64,
}

impl Slot {
    fn new(x: f64, y: f64, heading: f64, travel: f64) -> Self {
        Self {
            start: Vec2::new(x, y),
            heading,
            travel,
        }
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Scenario, ScenarioError> {
    let cap = spec.template.capacity();
    if spec.n_agents == 0 || spec.n_agents > cap {
        return Err(ScenarioError::InvalidSpec(format!(
            "{} holds 1..={cap} agents, requested {}",
            spec.template, spec.n_agents
        )));
    }
    if spec.num_steps < 2 {
        return Err(ScenarioError::InvalidSpec("num_steps must be at least 2".into()));
    }
    if !(spec.timestep.is_finite() && spec.timestep > 0.0) {
        return Err(ScenarioError::InvalidSpec("timestep must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (slots, roads) = match spec.template {
        MapTemplate::StraightRoad => straight_road(spec.n_agents, &mut rng),
        MapTemplate::Intersection => intersection(spec.n_agents, &mut rng),
        MapTemplate::ParkingLot => parking_lot(spec.n_agents, &mut rng),
    };

    let objects = slots
        .iter()
        .enumerate()
        .map(|(i, slot)| {
            let length = rng.gen_range(4.2..5.2);
            let width = rng.gen_range(1.8..2.1);
            let states = roll_out(slot, length, spec.num_steps, spec.timestep);
            ObjectLog {
                id: i as i64,
                kind: ObjectKind::Vehicle,
                length,
                width,
                goal: states.last().expect("num_steps >= 2").position,
                states,
                force_replay: false,
            }
        })
        .collect();

    Ok(Scenario {
        name: format!("{}_n{}_s{}", spec.template, spec.n_agents, spec.seed),
        timestep: spec.timestep,
        num_steps: spec.num_steps,
        objects,
        roads,
    })
}

fn roll_out(slot: &Slot, length: f64, num_steps: usize, dt: f64) -> Vec<LoggedStep> {
    let speed = slot.travel / ((num_steps - 1) as f64 * dt);
    let params = VehicleParams::new(length);
    let mut state = AgentState::new(slot.start, slot.heading, speed);
    let mut out = Vec::with_capacity(num_steps);
    for t in 0..num_steps {
        out.push(LoggedStep {
            position: state.position,
            heading: state.heading,
            velocity: state.velocity,
            valid: true,
        });
        if t + 1 < num_steps {
            state = step_classic(&state, Action::default(), dt, &params);
        }
    }
    out
}

/// Straight polyline sampled every `spacing` meters, both endpoints included.
fn sampled(a: Vec2, b: Vec2, spacing: f64) -> Vec<Vec2> {
    let n = (a.distance(b) / spacing).round().max(1.0) as usize;
    (0..=n)
        .map(|k| {
            let t = k as f64 / n as f64;
            a + (b - a) * t
        })
        .collect()
}

struct RoadBuilder {
    roads: Vec<RoadElement>,
}

impl RoadBuilder {
    fn new() -> Self {
        Self { roads: Vec::new() }
    }

    fn push(&mut self, kind: RoadKind, geometry: Vec<Vec2>) {
        let id = 1000 + self.roads.len() as i64;
        self.roads.push(RoadElement { id, kind, geometry });
    }
}

fn pick<R: Rng>(mut slots: Vec<Slot>, n: usize, rng: &mut R) -> Vec<Slot> {
    slots.shuffle(rng);
    slots.truncate(n);
    slots
}

fn straight_road(n: usize, rng: &mut ChaCha8Rng) -> (Vec<Slot>, Vec<RoadElement>) {
    let (x0, x1) = (-30.0, 250.0);
    let line = |y: f64| sampled(Vec2::new(x0, y), Vec2::new(x1, y), 1.0);
    let mut b = RoadBuilder::new();
    b.push(RoadKind::RoadEdge, line(-7.0));
    b.push(RoadKind::RoadEdge, line(7.0));
    for y in STRAIGHT_LANES {
        b.push(RoadKind::Lane, line(y));
    }
    for y in [-3.5, 0.0, 3.5] {
        b.push(RoadKind::RoadLine, line(y));
    }
    let slots = STRAIGHT_LANES
        .iter()
        .flat_map(|&y| STRAIGHT_SLOTS_X.iter().map(move |&x| Slot::new(x, y, 0.0, STRAIGHT_TRAVEL)))
        .collect();
    (pick(slots, n, rng), b.roads)
}

/// Quarter circle joining two road-edge legs at a corner, excluding its endpoints.
fn corner_arc(center: Vec2, radius: f64, from: f64, to: f64) -> Vec<Vec2> {
    const SEGMENTS: usize = 8;
    (1..SEGMENTS)
        .map(|k| {
            let a = from + (to - from) * k as f64 / SEGMENTS as f64;
            center + Vec2::from_angle(a) * radius
        })
        .collect()
}

fn intersection(n: usize, rng: &mut ChaCha8Rng) -> (Vec<Slot>, Vec<RoadElement>) {
    let h = INTERSECTION_HALF_WIDTH;
    let e = INTERSECTION_EXTENT;
    let r = 4.0;
    let mut b = RoadBuilder::new();
    for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
        // Horizontal leg toward the corner, rounded turn, vertical leg outward.
        let mut g = sampled(Vec2::new(sx * e, sy * h), Vec2::new(sx * (h + r), sy * h), 1.0);
        let center = Vec2::new(sx * (h + r), sy * (h + r));
        let start = Vec2::new(0.0, -sy).angle();
        let end = Vec2::new(-sx, 0.0).angle();
        let sweep = crate::geometry::angle_diff(end, start);
        g.extend(corner_arc(center, r, start, start + sweep));
        g.extend(sampled(Vec2::new(sx * h, sy * (h + r)), Vec2::new(sx * h, sy * e), 1.0));
        b.push(RoadKind::RoadEdge, g);
    }
    for off in [-2.0, 2.0] {
        b.push(RoadKind::Lane, sampled(Vec2::new(-e, off), Vec2::new(e, off), 1.0));
        b.push(RoadKind::Lane, sampled(Vec2::new(off, -e), Vec2::new(off, e), 1.0));
    }
    for s in [-1.0, 1.0] {
        b.push(RoadKind::RoadLine, sampled(Vec2::new(s * e, 0.0), Vec2::new(s * (h + 2.0), 0.0), 1.0));
        b.push(RoadKind::RoadLine, sampled(Vec2::new(0.0, s * e), Vec2::new(0.0, s * (h + 2.0)), 1.0));
    }
    for s in [-1.0, 1.0] {
        let c = s * (h + 1.0);
        b.push(RoadKind::Crosswalk, vec![Vec2::new(c, -h), Vec2::new(c, h)]);
        b.push(RoadKind::Crosswalk, vec![Vec2::new(-h, c), Vec2::new(h, c)]);
    }
    for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
        b.push(RoadKind::StopSign, vec![Vec2::new(sx * (h + 0.5), sy * (h + 0.5))]);
    }

    // East-west traffic clears the box before north-south traffic arrives.
    let slots = vec![
        Slot::new(-12.0, -2.0, 0.0, 70.0),
        Slot::new(12.0, 2.0, PI, 70.0),
        Slot::new(2.0, -60.0, FRAC_PI_2, 90.0),
        Slot::new(-2.0, 60.0, -FRAC_PI_2, 90.0),
        Slot::new(-24.0, -2.0, 0.0, 70.0),
        Slot::new(24.0, 2.0, PI, 70.0),
        Slot::new(2.0, -72.0, FRAC_PI_2, 90.0),
        Slot::new(-2.0, 72.0, -FRAC_PI_2, 90.0),
    ];
    (pick(slots, n, rng), b.roads)
}

fn parking_lot(n: usize, rng: &mut ChaCha8Rng) -> (Vec<Slot>, Vec<RoadElement>) {
    let (hx, hy) = (30.0, 20.0);
    let mut b = RoadBuilder::new();
    let corners = [
        Vec2::new(-hx, -hy),
        Vec2::new(hx, -hy),
        Vec2::new(hx, hy),
        Vec2::new(-hx, hy),
        Vec2::new(-hx, -hy),
    ];
    let perimeter = corners.windows(2).flat_map(|w| {
        let mut s = sampled(w[0], w[1], 2.0);
        s.pop();
        s
    });
    let mut perimeter: Vec<Vec2> = perimeter.collect();
    perimeter.push(corners[4]);
    b.push(RoadKind::RoadEdge, perimeter);
    b.push(RoadKind::RoadLine, sampled(Vec2::new(-hx + 2.0, 0.0), Vec2::new(hx - 2.0, 0.0), 1.0));
    b.push(RoadKind::SpeedBump, vec![Vec2::new(0.0, -3.5), Vec2::new(0.0, 3.5)]);
    b.push(RoadKind::Driveway, vec![Vec2::new(-hx - 10.0, 0.0), Vec2::new(-hx, 0.0)]);

    let movers = [Slot::new(-20.0, -1.75, 0.0, 40.0), Slot::new(20.0, 1.75, PI, 40.0)];
    let mut parked: Vec<Slot> = [-6.75, 6.75]
        .iter()
        .flat_map(|&y| {
            (0..PARKING_SLOTS_PER_SIDE).map(move |k| Slot::new(-25.5 + 3.0 * k as f64, y, FRAC_PI_2, 0.0))
        })
        .collect();
    let n_movers = n.min(movers.len());
    let mut slots = pick(movers.to_vec(), n_movers, rng);
    parked.shuffle(rng);
    slots.extend(parked.into_iter().take(n - n_movers));
    (slots, b.roads)
}
