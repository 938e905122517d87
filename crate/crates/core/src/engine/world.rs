//! One independent simulation instance of one scenario.

use std::sync::Arc;

use super::collision::{detect_collisions, CollisionEvents};
use super::config::{CollisionBehavior, InitMode, SimConfig};
use crate::bvh::{Aabb, Bvh};
use crate::dynamics::{invert_action, invert_action_classic, step, Action, AgentState, DynamicsModel, VehicleParams};
use crate::geometry::{Obb, Vec2};
use crate::map::{RoadMap, LEAF_MARGIN};
use crate::observation::{
    write_observation, AgentSnapshot, EgoQuery, ObsConfig, ObsLayout, ObsScratch, SceneView, MAX_HEAD_ANGLE,
};
use crate::scenario::{LoggedStep, ObjectKind, PreparedScenario};

/// Per-agent info bits written each step.
pub const INFO_GOAL: u8 = 1;
pub const INFO_VEH_COLLISION: u8 = 2;
pub const INFO_OFFROAD: u8 = 4;

/// Immutable description of one instantiated agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentInfo {
    pub id: i64,
    pub kind: ObjectKind,
    pub length: f64,
    pub width: f64,
    pub goal: Vec2,
    pub controlled: bool,
    /// Index into the scenario's object list.
    pub object: usize,
}

/// Outcome of one finished episode, counted over controlled agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeSummary {
    pub scenario: String,
    pub episode: usize,
    pub controlled: usize,
    pub goals: usize,
    pub veh_collisions: usize,
    pub offroads: usize,
    pub steps: usize,
}

/// Output slices of one world for one step.
pub(crate) struct WorldOut<'a> {
    pub obs: &'a mut [f64],
    pub rewards: &'a mut [f64],
    pub dones: &'a mut [bool],
    pub infos: &'a mut [u8],
}

#[derive(Debug, Clone)]
pub struct World {
    scenario: Arc<PreparedScenario>,
    map: RoadMap,
    agents: Vec<AgentInfo>,
    params: Vec<VehicleParams>,
    controlled: Vec<usize>,
    dynamics: DynamicsModel,
    obs_cfg: ObsConfig,
    goal_tolerance: f64,
    collision_behavior: CollisionBehavior,

    states: Vec<AgentState>,
    head_angle: Vec<f64>,
    removed: Vec<bool>,
    present: Vec<bool>,
    goal_reached: Vec<bool>,
    collided: Vec<bool>,
    offroad: Vec<bool>,
    done: Vec<bool>,
    t: usize,
    episode: usize,
    finished: bool,
    pending: Option<EpisodeSummary>,

    snapshots: Vec<AgentSnapshot>,
    boxes: Vec<Obb>,
    active: Vec<bool>,
    edge_checked: Vec<bool>,
    agent_bvh: Option<Bvh<u32>>,
    events: CollisionEvents,
    step_flags: Vec<u8>,
    scratch: ObsScratch,
}

fn logged_state(s: &LoggedStep) -> AgentState {
    AgentState {
        position: s.position,
        heading: s.heading,
        speed: s.speed(),
        velocity: s.velocity,
    }
}

impl World {
    pub fn new(scenario: Arc<PreparedScenario>, map: RoadMap, cfg: &SimConfig) -> Self {
        let base = &scenario.base;
        let mut agents: Vec<AgentInfo> = base
            .objects
            .iter()
            .enumerate()
            .filter(|(_, o)| o.first_valid().is_some())
            .map(|(object, o)| AgentInfo {
                id: o.id,
                kind: o.kind,
                length: o.length,
                width: o.width,
                goal: o.goal,
                controlled: false,
                object,
            })
            .collect();

        let mut candidates: Vec<usize> = (0..agents.len())
            .filter(|&i| {
                let o = &base.objects[agents[i].object];
                let first = &o.states[0];
                let usable = first.valid && !o.force_replay;
                usable
                    && match cfg.init_mode {
                        InitMode::AllValid => true,
                        InitMode::AllNontrivial => {
                            scenario.controllable[agents[i].object]
                                && first.position.distance(o.goal) > cfg.nontrivial_threshold
                        }
                    }
            })
            .collect();
        candidates.sort_by_key(|&i| agents[i].id);
        candidates.truncate(cfg.max_controlled_per_world);
        for &i in &candidates {
            agents[i].controlled = true;
        }
        if candidates.is_empty() {
            log::warn!("scenario {}: no controllable agents, world is replay-only", base.name);
        }

        let n = agents.len();
        let params = agents.iter().map(|a| VehicleParams::new(a.length)).collect();
        let mut w = Self {
            map,
            agents,
            params,
            controlled: candidates,
            dynamics: cfg.dynamics,
            obs_cfg: cfg.obs.clone(),
            goal_tolerance: cfg.goal_tolerance,
            collision_behavior: cfg.collision_behavior,
            states: vec![AgentState::default(); n],
            head_angle: vec![0.0; n],
            removed: vec![false; n],
            present: vec![false; n],
            goal_reached: vec![false; n],
            collided: vec![false; n],
            offroad: vec![false; n],
            done: vec![false; n],
            t: 0,
            episode: 0,
            finished: false,
            pending: None,
            snapshots: Vec::with_capacity(n),
            boxes: Vec::with_capacity(n),
            active: vec![false; n],
            edge_checked: vec![false; n],
            agent_bvh: None,
            events: CollisionEvents::default(),
            step_flags: vec![0; n],
            scratch: ObsScratch::default(),
            scenario,
        };
        w.restart();
        let leaves: Vec<(u32, Aabb)> =
            w.boxes.iter().enumerate().map(|(i, b)| (i as u32, b.aabb(LEAF_MARGIN))).collect();
        w.agent_bvh = Bvh::build(&leaves).ok();
        w
    }

    /// Restores the initial state without touching the episode counter.
    fn restart(&mut self) {
        let base = &self.scenario.base;
        for (i, a) in self.agents.iter().enumerate() {
            let o = &base.objects[a.object];
            let (first, s) = o.first_valid().expect("agents have a valid step");
            self.states[i] = logged_state(s);
            self.present[i] = first == 0;
        }
        self.head_angle.fill(0.0);
        self.removed.fill(false);
        self.goal_reached.fill(false);
        self.collided.fill(false);
        self.offroad.fill(false);
        self.done.fill(false);
        self.t = 0;
        self.finished = false;
        self.pending = None;
        self.events.clear();
        self.refresh_geometry();
    }

    /// Starts the next episode from the initial state.
    pub fn reset(&mut self) {
        self.episode += 1;
        self.restart();
        if let Some(bvh) = &mut self.agent_bvh {
            let aabbs: Vec<Aabb> = self.boxes.iter().map(|b| b.aabb(LEAF_MARGIN)).collect();
            bvh.refit(&aabbs).expect("agent count is fixed");
        }
    }

    fn refresh_geometry(&mut self) {
        self.boxes.clear();
        self.snapshots.clear();
        for (i, a) in self.agents.iter().enumerate() {
            let s = &self.states[i];
            let obb = Obb::new(s.position, a.length, a.width, s.heading);
            self.boxes.push(obb);
            self.active[i] = self.present[i] && !self.removed[i];
            self.edge_checked[i] = a.kind.collides_with_road_edges();
            self.snapshots.push(AgentSnapshot {
                id: a.id,
                obb,
                speed: s.speed,
                visible: self.active[i],
            });
        }
    }

    pub fn scenario(&self) -> &PreparedScenario {
        &self.scenario
    }

    pub fn name(&self) -> &str {
        &self.scenario.base.name
    }

    pub fn map(&self) -> &RoadMap {
        &self.map
    }

    pub fn agents(&self) -> &[AgentInfo] {
        &self.agents
    }

    /// Agent indices of controlled agents, in buffer order (ascending id).
    pub fn controlled(&self) -> &[usize] {
        &self.controlled
    }

    pub fn states(&self) -> &[AgentState] {
        &self.states
    }

    pub fn boxes(&self) -> &[Obb] {
        &self.boxes
    }

    /// Agents taking part in collisions and observations right now.
    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn head_angles(&self) -> &[f64] {
        &self.head_angle
    }

    pub fn is_removed(&self, i: usize) -> bool {
        self.removed[i]
    }

    pub fn is_done(&self, i: usize) -> bool {
        self.done[i]
    }

    pub fn goal_reached(&self, i: usize) -> bool {
        self.goal_reached[i]
    }

    /// Current log index.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Number of steps in a full episode.
    pub fn horizon(&self) -> usize {
        self.scenario.base.num_steps - 1
    }

    pub fn dynamics(&self) -> DynamicsModel {
        self.dynamics
    }

    pub fn timestep(&self) -> f64 {
        self.scenario.base.timestep
    }

    /// Collision events detected by the most recent step.
    pub fn last_collisions(&self) -> &CollisionEvents {
        &self.events
    }

    pub fn agent_bvh(&self) -> Option<&Bvh<u32>> {
        self.agent_bvh.as_ref()
    }

    pub(crate) fn take_summary(&mut self) -> Option<EpisodeSummary> {
        self.pending.take()
    }

    pub fn scene(&self) -> SceneView<'_> {
        SceneView {
            agents: &self.snapshots,
            agent_bvh: self.agent_bvh.as_ref(),
            map: &self.map,
        }
    }

    /// Action that moves controlled agent `i` onto its next logged state.
    pub fn expert_action(&self, i: usize) -> Action {
        let o = &self.scenario.base.objects[self.agents[i].object];
        let Some(next) = o.states.get(self.t + 1).filter(|s| s.valid) else {
            return Action::default();
        };
        let to = logged_state(next);
        let dt = self.timestep();
        match self.dynamics {
            DynamicsModel::Classic => invert_action_classic(&self.states[i], &to, dt, self.agents[i].length),
            DynamicsModel::Invertible => invert_action(&self.states[i], &to, dt),
        }
    }

    pub(crate) fn write_observations(&mut self, obs: &mut [f64]) {
        let width = ObsLayout::new(&self.obs_cfg).width();
        let scene = SceneView {
            agents: &self.snapshots,
            agent_bvh: self.agent_bvh.as_ref(),
            map: &self.map,
        };
        for (k, &i) in self.controlled.iter().enumerate() {
            let out = &mut obs[k * width..(k + 1) * width];
            if self.done[i] {
                out.fill(0.0);
                continue;
            }
            let q = EgoQuery {
                index: i,
                goal: self.agents[i].goal,
                collided: self.collided[i] || self.offroad[i],
                head_angle: self.head_angle[i],
            };
            write_observation(&scene, &q, &self.obs_cfg, &mut self.scratch, out)
                .expect("live controlled agents are visible");
        }
    }

    /// Advances one step. `actions` holds one entry per controlled agent;
    /// entries for agents that are already done are ignored.
    pub(crate) fn step(&mut self, actions: &[Action], out: WorldOut<'_>) {
        out.rewards.fill(0.0);
        out.infos.fill(0);
        if self.finished {
            out.dones.fill(true);
            out.obs.fill(0.0);
            return;
        }
        let next = self.t + 1;
        let dt = self.timestep();

        for (k, &i) in self.controlled.iter().enumerate() {
            if self.done[i] {
                continue;
            }
            let a = actions[k];
            self.states[i] = step(self.dynamics, &self.states[i], a, dt, &self.params[i]);
            if a.head_rotation.is_finite() {
                self.head_angle[i] = (self.head_angle[i] + a.head_rotation).clamp(-MAX_HEAD_ANGLE, MAX_HEAD_ANGLE);
            }
        }
        let objects = &self.scenario.base.objects;
        for (i, a) in self.agents.iter().enumerate() {
            if a.controlled {
                continue;
            }
            let s = &objects[a.object].states[next];
            if s.valid {
                self.states[i] = logged_state(s);
                self.present[i] = true;
            } else {
                self.present[i] = false;
            }
        }

        self.refresh_geometry();
        if let Some(bvh) = &mut self.agent_bvh {
            let aabbs: Vec<Aabb> = self.boxes.iter().map(|b| b.aabb(LEAF_MARGIN)).collect();
            bvh.refit(&aabbs).expect("agent count is fixed");
        }
        detect_collisions(
            &self.boxes,
            &self.active,
            &self.edge_checked,
            self.agent_bvh.as_ref(),
            &self.map,
            &mut self.events,
        );
        self.step_flags.fill(0);
        for &(i, j) in &self.events.vehicle_pairs {
            self.step_flags[i as usize] |= INFO_VEH_COLLISION;
            self.step_flags[j as usize] |= INFO_VEH_COLLISION;
        }
        for &(i, _) in &self.events.offroad {
            self.step_flags[i as usize] |= INFO_OFFROAD;
        }

        let mut end_episode = false;
        for (k, &i) in self.controlled.iter().enumerate() {
            if self.done[i] {
                continue;
            }
            let flags = self.step_flags[i];
            self.collided[i] |= flags & INFO_VEH_COLLISION != 0;
            self.offroad[i] |= flags & INFO_OFFROAD != 0;
            let hit = flags != 0;
            let ended_by_hit = hit && self.collision_behavior != CollisionBehavior::Ignore;
            match (hit, self.collision_behavior) {
                (true, CollisionBehavior::RemoveAgent) => {
                    self.done[i] = true;
                    self.removed[i] = true;
                }
                (true, CollisionBehavior::EndEpisode) => end_episode = true,
                _ => {}
            }
            if !ended_by_hit && self.states[i].position.distance(self.agents[i].goal) <= self.goal_tolerance {
                out.rewards[k] = 1.0;
                self.step_flags[i] |= INFO_GOAL;
                self.goal_reached[i] = true;
                self.done[i] = true;
                self.removed[i] = true;
            }
        }
        out.infos.copy_from_slice(&self.step_flags);
        self.t = next;

        let all_done = !self.controlled.is_empty() && self.controlled.iter().all(|&i| self.done[i]);
        if self.t >= self.horizon() || end_episode || all_done {
            self.finished = true;
            self.done.fill(true);
            self.pending = Some(self.summary());
        }
        // Removed agents leave the scene before anyone observes it.
        for i in 0..self.agents.len() {
            if self.removed[i] {
                self.active[i] = false;
                self.snapshots[i].visible = false;
            }
        }
        out.dones.copy_from_slice(&self.done);
        self.write_observations(out.obs);
    }

    fn summary(&self) -> EpisodeSummary {
        let count = |v: &[bool]| self.controlled.iter().filter(|&&i| v[i]).count();
        EpisodeSummary {
            scenario: self.scenario.base.name.clone(),
            episode: self.episode,
            controlled: self.controlled.len(),
            goals: count(&self.goal_reached),
            veh_collisions: count(&self.collided),
            offroads: count(&self.offroad),
            steps: self.t,
        }
    }
}
