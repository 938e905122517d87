//! Ego-frame observations: radial filter, 360° lidar and a steerable view cone.
//!
//! Every observation is a flat `f64` vector whose layout depends only on the
//! [`ObsConfig`]. The ego block comes first, followed either by partner and
//! road-point slots (radial) or by one block per ray (lidar, view cone):
//!
//! | block    | per-slot features                                                        |
//! |----------|--------------------------------------------------------------------------|
//! | ego      | speed, length, width, goal x, goal y, goal distance, collided            |
//! | partner  | rel x, rel y, rel heading, rel speed, length, width, valid               |
//! | road     | rel x, rel y, rel heading, one-hot over the 7 road kinds, valid          |
//! | ray      | distance, hit agent, hit road edge, hit other road, no hit               |
//!
//! Unused slots are zero, including their valid flag. Relative speed is the
//! partner's signed speed minus the ego's.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::Bvh;
use crate::geometry::{angle_diff, ray_box_distance, ray_segment_distance, Hit, HitTarget, Obb, Ray, Vec2};
use crate::map::RoadMap;
use crate::scenario::RoadKind;

pub const EGO_FEATURES: usize = 7;
pub const PARTNER_FEATURES: usize = 7;
pub const ROAD_FEATURES: usize = 3 + RoadKind::ALL.len() + 1;
pub const RAY_FEATURES: usize = 5;
/// Largest magnitude the integrated head angle may reach.
pub const MAX_HEAD_ANGLE: f64 = FRAC_PI_2;

#[derive(Debug, Error, PartialEq)]
pub enum ObservationError {
    #[error("agent {0} is not alive")]
    AgentNotAlive(usize),
    #[error("invalid observation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsMode {
    #[default]
    Radial,
    Lidar,
    ViewCone,
}

impl ObsMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ObsMode::Radial => "radial",
            ObsMode::Lidar => "lidar",
            ObsMode::ViewCone => "view_cone",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [ObsMode::Radial, ObsMode::Lidar, ObsMode::ViewCone].into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsConfig {
    pub mode: ObsMode,
    pub radius: f64,
    pub n_rays: usize,
    pub fov: f64,
    pub max_range: f64,
    pub max_agents_obs: usize,
    pub max_road_points_obs: usize,
}

impl Default for ObsConfig {
    fn default() -> Self {
        Self {
            mode: ObsMode::Radial,
            radius: 50.0,
            n_rays: 64,
            fov: TAU / 3.0,
            max_range: 100.0,
            max_agents_obs: 16,
            max_road_points_obs: 64,
        }
    }
}

impl ObsConfig {
    pub fn validate(&self) -> Result<(), ObservationError> {
        let bad = |m: &str| Err(ObservationError::InvalidConfig(m.to_string()));
        if !(self.radius.is_finite() && self.radius >= 0.0) {
            return bad("radius must be finite and >= 0");
        }
        if self.n_rays == 0 {
            return bad("n_rays must be >= 1");
        }
        if !(self.fov > 0.0 && self.fov <= TAU) {
            return bad("fov must lie in (0, 2π]");
        }
        if !(self.max_range.is_finite() && self.max_range > 0.0) {
            return bad("max_range must be finite and > 0");
        }
        Ok(())
    }
}

/// Offsets of each block inside the flat observation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObsLayout {
    pub mode: ObsMode,
    pub partner_slots: usize,
    pub road_slots: usize,
    pub rays: usize,
}

impl ObsLayout {
    pub fn new(cfg: &ObsConfig) -> Self {
        match cfg.mode {
            ObsMode::Radial => Self {
                mode: cfg.mode,
                partner_slots: cfg.max_agents_obs,
                road_slots: cfg.max_road_points_obs,
                rays: 0,
            },
            ObsMode::Lidar | ObsMode::ViewCone => Self {
                mode: cfg.mode,
                partner_slots: 0,
                road_slots: 0,
                rays: cfg.n_rays,
            },
        }
    }

    pub const fn ego_offset(&self) -> usize {
        0
    }

    pub const fn partner_offset(&self) -> usize {
        EGO_FEATURES
    }

    pub const fn road_offset(&self) -> usize {
        EGO_FEATURES + self.partner_slots * PARTNER_FEATURES
    }

    pub const fn ray_offset(&self) -> usize {
        self.road_offset() + self.road_slots * ROAD_FEATURES
    }

    pub const fn width(&self) -> usize {
        self.ray_offset() + self.rays * RAY_FEATURES
    }

    /// `(block, offset, slots, features per slot)` rows describing the layout.
    pub fn blocks(&self) -> Vec<(&'static str, usize, usize, usize)> {
        vec![
            ("ego", self.ego_offset(), 1, EGO_FEATURES),
            ("partners", self.partner_offset(), self.partner_slots, PARTNER_FEATURES),
            ("road_points", self.road_offset(), self.road_slots, ROAD_FEATURES),
            ("rays", self.ray_offset(), self.rays, RAY_FEATURES),
        ]
    }
}

/// What other agents see of one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSnapshot {
    pub id: i64,
    pub obb: Obb,
    pub speed: f64,
    /// False for removed agents and replay agents on invalid logged steps.
    pub visible: bool,
}

/// Read-only view of one world at one instant.
#[derive(Clone, Copy)]
pub struct SceneView<'a> {
    pub agents: &'a [AgentSnapshot],
    /// Tree whose leaf refs index `agents`; a linear scan is used when absent.
    pub agent_bvh: Option<&'a Bvh<u32>>,
    pub map: &'a RoadMap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoQuery {
    pub index: usize,
    pub goal: Vec2,
    pub collided: bool,
    pub head_angle: f64,
}

impl EgoQuery {
    pub fn new(index: usize, goal: Vec2) -> Self {
        Self {
            index,
            goal,
            collided: false,
            head_angle: 0.0,
        }
    }
}

/// Reusable buffers for radial sorting.
#[derive(Debug, Default, Clone)]
pub struct ObsScratch {
    partners: Vec<(f64, i64, usize)>,
    roads: Vec<(f64, usize)>,
}

/// Ray directions in world radians for an agent heading `heading`.
pub fn ray_angles(cfg: &ObsConfig, heading: f64, head_angle: f64) -> Vec<f64> {
    let n = cfg.n_rays;
    let center = match cfg.mode {
        ObsMode::ViewCone => heading + head_angle,
        _ => heading,
    };
    if cfg.mode != ObsMode::ViewCone || cfg.fov >= TAU {
        return (0..n).map(|k| center + TAU * k as f64 / n as f64).collect();
    }
    if n == 1 {
        return vec![center];
    }
    let lo = center - 0.5 * cfg.fov;
    (0..n).map(|k| lo + cfg.fov * k as f64 / (n - 1) as f64).collect()
}

struct Nearest(Option<Hit>);

impl Nearest {
    #[inline]
    fn offer(&mut self, distance: Option<f64>, target: HitTarget) {
        if let Some(distance) = distance {
            let hit = Hit { distance, target };
            if self.0.as_ref().is_none_or(|b| hit.closer_than(b)) {
                self.0 = Some(hit);
            }
        }
    }
}

/// Nearest hit along `ray` among visible agents other than `ego` and all road
/// segments, pruned through the scene's trees.
pub fn cast_ray(scene: &SceneView<'_>, ego: usize, ray: &Ray) -> Option<Hit> {
    let mut best = Nearest(None);
    let mut try_agent = |i: usize| {
        let a = &scene.agents[i];
        if i != ego && a.visible {
            best.offer(ray_box_distance(ray, &a.obb), HitTarget::Box(i));
        }
    };
    match scene.agent_bvh {
        Some(bvh) => bvh.for_each_ray_candidate(ray, |_, i| try_agent(i as usize)),
        None => (0..scene.agents.len()).for_each(try_agent),
    }
    if let Some(bvh) = scene.map.segment_bvh() {
        let segs = scene.map.segments();
        bvh.for_each_ray_candidate(ray, |_, j| {
            let j = j as usize;
            best.offer(ray_segment_distance(ray, &segs[j]), HitTarget::Segment(j));
        });
    }
    best.0
}

fn write_ego(scene: &SceneView<'_>, ego: &EgoQuery, out: &mut [f64]) -> (Vec2, f64, f64) {
    let me = &scene.agents[ego.index];
    let (s, c) = me.obb.heading.sin_cos();
    let goal = (ego.goal - me.obb.center).rotate_sc(-s, c);
    out[0] = me.speed;
    out[1] = 2.0 * me.obb.half_length;
    out[2] = 2.0 * me.obb.half_width;
    out[3] = goal.x;
    out[4] = goal.y;
    out[5] = goal.length();
    out[6] = if ego.collided { 1.0 } else { 0.0 };
    (me.obb.center, s, c)
}

/// Fills `out` (exactly `ObsLayout::new(cfg).width()` long) with the
/// observation of `ego.index`.
pub fn write_observation(
    scene: &SceneView<'_>,
    ego: &EgoQuery,
    cfg: &ObsConfig,
    scratch: &mut ObsScratch,
    out: &mut [f64],
) -> Result<(), ObservationError> {
    let layout = ObsLayout::new(cfg);
    assert_eq!(out.len(), layout.width(), "observation buffer width");
    if !scene.agents.get(ego.index).is_some_and(|a| a.visible) {
        return Err(ObservationError::AgentNotAlive(ego.index));
    }
    out.fill(0.0);
    let (origin, s, c) = write_ego(scene, ego, out);
    let me = scene.agents[ego.index];
    let to_local = |p: Vec2| (p - origin).rotate_sc(-s, c);

    match cfg.mode {
        ObsMode::Radial => {
            let partners = &mut scratch.partners;
            partners.clear();
            for (i, a) in scene.agents.iter().enumerate() {
                if i != ego.index && a.visible {
                    let d = a.obb.center.distance(origin);
                    if d <= cfg.radius {
                        partners.push((d, a.id, i));
                    }
                }
            }
            sort_nearest(partners, layout.partner_slots, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (slot, &(_, _, i)) in partners.iter().take(layout.partner_slots).enumerate() {
                let a = &scene.agents[i];
                let p = to_local(a.obb.center);
                let o = layout.partner_offset() + slot * PARTNER_FEATURES;
                out[o..o + PARTNER_FEATURES].copy_from_slice(&[
                    p.x,
                    p.y,
                    angle_diff(a.obb.heading, me.obb.heading),
                    a.speed - me.speed,
                    2.0 * a.obb.half_length,
                    2.0 * a.obb.half_width,
                    1.0,
                ]);
            }

            let roads = &mut scratch.roads;
            roads.clear();
            scene.map.for_each_point_within(origin, cfg.radius, |i, d| roads.push((d, i)));
            sort_nearest(roads, layout.road_slots, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let points = scene.map.points();
            for (slot, &(_, i)) in roads.iter().take(layout.road_slots).enumerate() {
                let rp = &points[i];
                let p = to_local(rp.position);
                let o = layout.road_offset() + slot * ROAD_FEATURES;
                out[o] = p.x;
                out[o + 1] = p.y;
                out[o + 2] = angle_diff(rp.heading, me.obb.heading);
                out[o + 3 + rp.kind.index()] = 1.0;
                out[o + ROAD_FEATURES - 1] = 1.0;
            }
        }
        ObsMode::Lidar | ObsMode::ViewCone => {
            let angles = ray_angles(cfg, me.obb.heading, ego.head_angle);
            for (k, angle) in angles.into_iter().enumerate() {
                let ray = Ray::from_angle(origin, angle, cfg.max_range);
                let o = layout.ray_offset() + k * RAY_FEATURES;
                match cast_ray(scene, ego.index, &ray) {
                    None => {
                        out[o] = cfg.max_range;
                        out[o + 4] = 1.0;
                    }
                    Some(hit) => {
                        out[o] = hit.distance;
                        let class = match hit.target {
                            HitTarget::Box(_) => 1,
                            HitTarget::Segment(j) if scene.map.segment_kind(j) == RoadKind::RoadEdge => 2,
                            HitTarget::Segment(_) => 3,
                        };
                        out[o + class] = 1.0;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Orders the `keep` smallest entries first under `cmp`.
fn sort_nearest<T>(v: &mut [T], keep: usize, cmp: impl Fn(&T, &T) -> std::cmp::Ordering) {
    if keep == 0 {
        return;
    }
    if v.len() > keep {
        v.select_nth_unstable_by(keep - 1, &cmp);
        v[..keep].sort_unstable_by(&cmp);
    } else {
        v.sort_unstable_by(&cmp);
    }
}

/// Allocating convenience wrapper around [`write_observation`].
pub fn observe(scene: &SceneView<'_>, ego: &EgoQuery, cfg: &ObsConfig) -> Result<Vec<f64>, ObservationError> {
    let mut out = vec![0.0; ObsLayout::new(cfg).width()];
    write_observation(scene, ego, cfg, &mut ObsScratch::default(), &mut out)?;
    Ok(out)
}
