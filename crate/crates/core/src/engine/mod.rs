//! Batched multi-world simulation.
//!
//! A [`SimBatch`] owns W independent [`World`]s, possibly of different
//! scenarios, and flat output buffers sized by the agents actually
//! instantiated. Worlds are stepped in parallel, one task per world, and
//! each task writes only its own slice of every buffer, so results do not
//! depend on the worker count.
//!
//! Buffer layout, concatenated over worlds in batch order:
//!
//! * observations: `controlled × ObsLayout::width()` (`f64`)
//! * rewards: one `f64` per controlled agent
//! * dones, infos: one entry per instantiated agent; infos hold
//!   [`INFO_GOAL`] | [`INFO_VEH_COLLISION`] | [`INFO_OFFROAD`] bits
//!
//! Controlled agents appear in ascending id order within each world.
//! Episodes last `num_steps - 1` steps, the number of logged transitions.

mod bench;
mod collision;
mod config;
mod metrics;
mod policy;
mod world;

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::Action;
use crate::map::RoadMap;
use crate::observation::ObsLayout;
use crate::scenario::PreparedScenario;

pub use bench::{benchmark, ThroughputReport, BENCH_CSV_HEADER};
pub use collision::{detect_collisions, CollisionEvents};
pub use config::{CollisionBehavior, InitMode, SimConfig};
pub use metrics::{compute_metrics, metrics_csv_row, Metrics, METRICS_CSV_HEADER};
pub use policy::{goal_seek_action, Policy, PolicyRunner};
pub use world::{AgentInfo, EpisodeSummary, World, INFO_GOAL, INFO_OFFROAD, INFO_VEH_COLLISION};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("a batch needs at least one scenario")]
    EmptyBatch,
    #[error("expected {expected} actions (one per controlled agent), got {got}")]
    ActionCountMismatch { expected: usize, got: usize },
    #[error("world index {0} out of range")]
    WorldIndex(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown policy {0:?}")]
    UnknownPolicy(String),
    #[error("estimated buffers need {needed_mb} MB, above the {cap_mb} MB cap")]
    MemoryCap { needed_mb: u64, cap_mb: u64 },
}

/// Read-only views of the buffers written by the latest step or reset.
#[derive(Debug, Clone, Copy)]
pub struct StepOutput<'a> {
    pub observations: &'a [f64],
    pub rewards: &'a [f64],
    pub dones: &'a [bool],
    pub infos: &'a [u8],
}

pub struct SimBatch {
    cfg: SimConfig,
    layout: ObsLayout,
    worlds: Vec<World>,
    /// Prefix sums of controlled and total agent counts, length W + 1.
    ctrl_offsets: Vec<usize>,
    agent_offsets: Vec<usize>,
    observations: Vec<f64>,
    rewards: Vec<f64>,
    dones: Vec<bool>,
    infos: Vec<u8>,
    episodes: Vec<EpisodeSummary>,
    pool: Option<rayon::ThreadPool>,
}

fn prefix(counts: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v = vec![0];
    for c in counts {
        v.push(v.last().unwrap() + c);
    }
    v
}

/// Bytes held by the flat buffers of a batch with these agent counts.
pub fn estimate_buffer_bytes(total_agents: usize, controlled: usize, layout: &ObsLayout) -> u64 {
    let per_controlled = (layout.width() + 1) * std::mem::size_of::<f64>();
    // Per-agent state, geometry, snapshot and bookkeeping, rounded up.
    let per_agent = 256;
    (controlled * per_controlled + total_agents * per_agent) as u64
}

impl SimBatch {
    /// One world per entry of `scenarios`. The same `Arc` may appear many
    /// times; each world still builds and owns its own trees.
    pub fn new(scenarios: &[Arc<PreparedScenario>], cfg: SimConfig) -> Result<Self, EngineError> {
        if scenarios.is_empty() {
            return Err(EngineError::EmptyBatch);
        }
        cfg.validate()?;
        let pool = if cfg.workers > 0 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(cfg.workers)
                    .build()
                    .map_err(|e| EngineError::Config(e.to_string()))?,
            )
        } else {
            None
        };
        // Maps are built once per distinct scenario, then cloned into each world.
        let mut maps: HashMap<*const PreparedScenario, RoadMap> = HashMap::new();
        let worlds: Vec<World> = scenarios
            .iter()
            .map(|s| {
                let map = maps
                    .entry(Arc::as_ptr(s))
                    .or_insert_with(|| RoadMap::new(&s.decimated_roads))
                    .clone();
                World::new(Arc::clone(s), map, &cfg)
            })
            .collect();
        let layout = ObsLayout::new(&cfg.obs);
        let ctrl_offsets = prefix(worlds.iter().map(|w| w.controlled().len()));
        let agent_offsets = prefix(worlds.iter().map(|w| w.agents().len()));
        let n_ctrl = *ctrl_offsets.last().unwrap();
        let n_agents = *agent_offsets.last().unwrap();
        let mut batch = Self {
            observations: vec![0.0; n_ctrl * layout.width()],
            rewards: vec![0.0; n_ctrl],
            dones: vec![false; n_agents],
            infos: vec![0; n_agents],
            cfg,
            layout,
            worlds,
            ctrl_offsets,
            agent_offsets,
            episodes: Vec::new(),
            pool,
        };
        let width = batch.layout.width();
        for (w, world) in batch.worlds.iter_mut().enumerate() {
            let (a, b) = (batch.ctrl_offsets[w], batch.ctrl_offsets[w + 1]);
            world.write_observations(&mut batch.observations[a * width..b * width]);
        }
        Ok(batch)
    }

    /// Convenience constructor taking owned scenarios, one world each.
    pub fn from_prepared(scenarios: &[PreparedScenario], cfg: SimConfig) -> Result<Self, EngineError> {
        let arcs: Vec<Arc<PreparedScenario>> = scenarios.iter().cloned().map(Arc::new).collect();
        Self::new(&arcs, cfg)
    }

    /// `worlds` worlds assigned round-robin over `scenarios`.
    pub fn round_robin(scenarios: &[Arc<PreparedScenario>], worlds: usize, cfg: SimConfig) -> Result<Self, EngineError> {
        if scenarios.is_empty() || worlds == 0 {
            return Err(EngineError::EmptyBatch);
        }
        let list: Vec<Arc<PreparedScenario>> = (0..worlds).map(|w| Arc::clone(&scenarios[w % scenarios.len()])).collect();
        Self::new(&list, cfg)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn layout(&self) -> ObsLayout {
        self.layout
    }

    pub fn obs_width(&self) -> usize {
        self.layout.width()
    }

    pub fn worlds(&self) -> &[World] {
        &self.worlds
    }

    pub fn world(&self, w: usize) -> Option<&World> {
        self.worlds.get(w)
    }

    pub fn num_worlds(&self) -> usize {
        self.worlds.len()
    }

    pub fn total_agents(&self) -> usize {
        *self.agent_offsets.last().unwrap()
    }

    pub fn total_controlled(&self) -> usize {
        *self.ctrl_offsets.last().unwrap()
    }

    /// Range of world `w`'s controlled agents in the reward/observation rows.
    pub fn controlled_range(&self, w: usize) -> std::ops::Range<usize> {
        self.ctrl_offsets[w]..self.ctrl_offsets[w + 1]
    }

    /// Range of world `w`'s agents in the done/info buffers.
    pub fn agent_range(&self, w: usize) -> std::ops::Range<usize> {
        self.agent_offsets[w]..self.agent_offsets[w + 1]
    }

    pub fn output(&self) -> StepOutput<'_> {
        StepOutput {
            observations: &self.observations,
            rewards: &self.rewards,
            dones: &self.dones,
            infos: &self.infos,
        }
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    /// Every episode completed so far, in completion order.
    pub fn episodes(&self) -> &[EpisodeSummary] {
        &self.episodes
    }

    pub fn take_episodes(&mut self) -> Vec<EpisodeSummary> {
        std::mem::take(&mut self.episodes)
    }

    pub fn all_finished(&self) -> bool {
        self.worlds.iter().all(|w| w.is_finished())
    }

    /// Expert actions for every controlled agent, in buffer order.
    pub fn expert_actions(&self) -> Vec<Action> {
        self.worlds
            .iter()
            .flat_map(|w| w.controlled().iter().map(move |&i| w.expert_action(i)))
            .collect()
    }

    /// Steps every world once. `actions` has one entry per controlled agent
    /// across the batch; entries of finished agents are ignored.
    pub fn step(&mut self, actions: &[Action]) -> Result<StepOutput<'_>, EngineError> {
        let expected = self.total_controlled();
        if actions.len() != expected {
            return Err(EngineError::ActionCountMismatch {
                expected,
                got: actions.len(),
            });
        }
        let width = self.layout.width();
        let mut tasks = Vec::with_capacity(self.worlds.len());
        let (mut obs, mut rew, mut dones, mut infos) = (
            &mut self.observations[..],
            &mut self.rewards[..],
            &mut self.dones[..],
            &mut self.infos[..],
        );
        for (w, world) in self.worlds.iter_mut().enumerate() {
            let nc = self.ctrl_offsets[w + 1] - self.ctrl_offsets[w];
            let na = self.agent_offsets[w + 1] - self.agent_offsets[w];
            let (o, ro) = std::mem::take(&mut obs).split_at_mut(nc * width);
            let (r, rr) = std::mem::take(&mut rew).split_at_mut(nc);
            let (d, rd) = std::mem::take(&mut dones).split_at_mut(na);
            let (i, ri) = std::mem::take(&mut infos).split_at_mut(na);
            obs = ro;
            rew = rr;
            dones = rd;
            infos = ri;
            let acts = &actions[self.ctrl_offsets[w]..self.ctrl_offsets[w + 1]];
            tasks.push((world, acts, world::WorldOut { obs: o, rewards: r, dones: d, infos: i }));
        }
        let run = move || {
            tasks.into_par_iter().for_each(|(world, acts, out)| world.step(acts, out));
        };
        match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        }
        for world in &mut self.worlds {
            if let Some(s) = world.take_summary() {
                self.episodes.push(s);
            }
        }
        Ok(self.output())
    }

    /// Resets the listed worlds (all when `None`) and rewrites their
    /// observations. Other worlds' buffers are left untouched.
    pub fn reset(&mut self, world_ids: Option<&[usize]>) -> Result<&[f64], EngineError> {
        let ids: Vec<usize> = match world_ids {
            Some(ids) => ids.to_vec(),
            None => (0..self.worlds.len()).collect(),
        };
        if let Some(&bad) = ids.iter().find(|&&w| w >= self.worlds.len()) {
            return Err(EngineError::WorldIndex(bad));
        }
        let width = self.layout.width();
        for w in ids {
            let world = &mut self.worlds[w];
            world.reset();
            let (a, b) = (self.ctrl_offsets[w], self.ctrl_offsets[w + 1]);
            world.write_observations(&mut self.observations[a * width..b * width]);
            self.rewards[a..b].fill(0.0);
            let (a, b) = (self.agent_offsets[w], self.agent_offsets[w + 1]);
            self.dones[a..b].fill(false);
            self.infos[a..b].fill(0);
        }
        Ok(&self.observations)
    }

    /// Resets every finished world; returns how many were reset.
    pub fn reset_finished(&mut self) -> usize {
        let ids: Vec<usize> = (0..self.worlds.len()).filter(|&w| self.worlds[w].is_finished()).collect();
        let n = ids.len();
        if n > 0 {
            self.reset(Some(&ids)).expect("indices are in range");
        }
        n
    }
}
