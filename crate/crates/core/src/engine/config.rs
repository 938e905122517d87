use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::dynamics::DynamicsModel;
use crate::observation::{ObsConfig, ObsMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionBehavior {
    /// Flag the event and keep simulating the agent.
    #[default]
    Ignore,
    /// The agent is done and leaves the scene.
    RemoveAgent,
    /// A controlled agent's collision ends the whole world's episode.
    EndEpisode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Controllable agents that start farther than `nontrivial_threshold` from their goal.
    #[default]
    AllNontrivial,
    /// Every agent with a valid first step that is not forced to replay.
    AllValid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dynamics: DynamicsModel,
    pub obs: ObsConfig,
    pub goal_tolerance: f64,
    pub collision_behavior: CollisionBehavior,
    pub init_mode: InitMode,
    pub nontrivial_threshold: f64,
    pub max_controlled_per_world: usize,
    pub seed: u64,
    /// Worker threads for batch stepping; 0 uses every available core.
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dynamics: DynamicsModel::Classic,
            obs: ObsConfig::default(),
            goal_tolerance: 2.0,
            collision_behavior: CollisionBehavior::Ignore,
            init_mode: InitMode::AllNontrivial,
            nontrivial_threshold: 2.0,
            max_controlled_per_world: 128,
            seed: 0,
            workers: 0,
        }
    }
}

/// Flat key-value form used by config files. Every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FlatConfig {
    dynamics: DynamicsModel,
    obs_mode: ObsMode,
    radius: f64,
    n_rays: usize,
    fov: f64,
    max_range: f64,
    max_agents_obs: usize,
    max_road_points_obs: usize,
    goal_tolerance: f64,
    collision_behavior: CollisionBehavior,
    init_mode: InitMode,
    nontrivial_threshold: f64,
    max_controlled_per_world: usize,
    seed: u64,
    workers: usize,
}

impl Default for FlatConfig {
    fn default() -> Self {
        SimConfig::default().into()
    }
}

impl From<SimConfig> for FlatConfig {
    fn from(c: SimConfig) -> Self {
        Self {
            dynamics: c.dynamics,
            obs_mode: c.obs.mode,
            radius: c.obs.radius,
            n_rays: c.obs.n_rays,
            fov: c.obs.fov,
            max_range: c.obs.max_range,
            max_agents_obs: c.obs.max_agents_obs,
            max_road_points_obs: c.obs.max_road_points_obs,
            goal_tolerance: c.goal_tolerance,
            collision_behavior: c.collision_behavior,
            init_mode: c.init_mode,
            nontrivial_threshold: c.nontrivial_threshold,
            max_controlled_per_world: c.max_controlled_per_world,
            seed: c.seed,
            workers: c.workers,
        }
    }
}

impl From<FlatConfig> for SimConfig {
    fn from(f: FlatConfig) -> Self {
        Self {
            dynamics: f.dynamics,
            obs: ObsConfig {
                mode: f.obs_mode,
                radius: f.radius,
                n_rays: f.n_rays,
                fov: f.fov,
                max_range: f.max_range,
                max_agents_obs: f.max_agents_obs,
                max_road_points_obs: f.max_road_points_obs,
            },
            goal_tolerance: f.goal_tolerance,
            collision_behavior: f.collision_behavior,
            init_mode: f.init_mode,
            nontrivial_threshold: f.nontrivial_threshold,
            max_controlled_per_world: f.max_controlled_per_world,
            seed: f.seed,
            workers: f.workers,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        self.obs.validate().map_err(|e| EngineError::Config(e.to_string()))?;
        if !(self.goal_tolerance.is_finite() && self.goal_tolerance > 0.0) {
            return Err(EngineError::Config("goal_tolerance must be > 0".into()));
        }
        if !(self.nontrivial_threshold.is_finite() && self.nontrivial_threshold >= 0.0) {
            return Err(EngineError::Config("nontrivial_threshold must be >= 0".into()));
        }
        Ok(())
    }

    /// Parses a flat TOML document; missing keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, EngineError> {
        let flat: FlatConfig = toml::from_str(text).map_err(|e| EngineError::Config(e.to_string()))?;
        let cfg = SimConfig::from(flat);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&FlatConfig::from(self.clone())).expect("flat config is serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = SimConfig {
            dynamics: DynamicsModel::Invertible,
            goal_tolerance: 1.5,
            collision_behavior: CollisionBehavior::EndEpisode,
            init_mode: InitMode::AllValid,
            seed: 9,
            workers: 3,
            obs: ObsConfig {
                mode: ObsMode::ViewCone,
                n_rays: 12,
                ..ObsConfig::default()
            },
            ..SimConfig::default()
        };
        let text = cfg.to_toml_string();
        assert!(text.contains("obs_mode = \"view_cone\""));
        assert_eq!(SimConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = SimConfig::from_toml_str("collision_behavior = \"remove_agent\"\nn_rays = 8\n").unwrap();
        assert_eq!(cfg.collision_behavior, CollisionBehavior::RemoveAgent);
        assert_eq!(cfg.obs.n_rays, 8);
        assert_eq!(cfg.goal_tolerance, 2.0);
    }

    #[test]
    fn bad_files_are_rejected() {
        assert!(SimConfig::from_toml_str("no_such_key = 1").is_err());
        assert!(SimConfig::from_toml_str("goal_tolerance = 0.0").is_err());
        assert!(SimConfig::from_toml_str("init_mode = \"some\"").is_err());
    }
}
