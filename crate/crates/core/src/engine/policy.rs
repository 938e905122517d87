//! Scripted policies used by the benchmark, rollouts and sanity checks.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EngineError, SimBatch, World};
use crate::dynamics::{Action, ActionLimits, DynamicsModel};
use crate::geometry::{angle_diff, Vec2};

/// Cruise speed cap of the goal-seeking controller, m/s.
const SEEK_MAX_SPEED: f64 = 15.0;
/// Desired speed per meter of remaining distance, 1/s.
const SEEK_SPEED_GAIN: f64 = 1.0;
/// Acceleration per m/s of speed error, 1/s.
const SEEK_ACCEL_GAIN: f64 = 2.0;
/// Commanded curvature per radian of heading error, 1/m.
const SEEK_HEADING_GAIN: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    /// Uniform actions within the default limits.
    Random,
    Constant(Action),
    /// Inverted expert actions that track each agent's log.
    Replay,
    /// Proportional heading and speed control toward the goal.
    GoalSeek,
}

impl FromStr for Policy {
    type Err = EngineError;

    /// Accepts `random`, `replay`, `goal_seek`, `constant` and `constant:A:S`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || EngineError::UnknownPolicy(s.to_string());
        let mut parts = s.split(':');
        let policy = match parts.next().unwrap_or_default() {
            "random" => Policy::Random,
            "replay" | "expert" => Policy::Replay,
            "goal_seek" => Policy::GoalSeek,
            "constant" => {
                let rest: Vec<&str> = parts.by_ref().collect();
                let action = match rest.as_slice() {
                    [] => Action::default(),
                    [a, st] => {
                        let a: f64 = a.parse().map_err(|_| unknown())?;
                        let st: f64 = st.parse().map_err(|_| unknown())?;
                        if !(a.is_finite() && st.is_finite()) {
                            return Err(unknown());
                        }
                        Action::new(a, st)
                    }
                    _ => return Err(unknown()),
                };
                return Ok(Policy::Constant(action));
            }
            _ => return Err(unknown()),
        };
        if parts.next().is_some() {
            return Err(unknown());
        }
        Ok(policy)
    }
}

/// Goal-seeking action for controlled agent `i` of `world`.
pub fn goal_seek_action(world: &World, i: usize) -> Action {
    let s = &world.states()[i];
    let a = &world.agents()[i];
    let to_goal: Vec2 = a.goal - s.position;
    let dist = to_goal.length();
    let heading_error = if dist > 1e-9 { angle_diff(to_goal.angle(), s.heading) } else { 0.0 };
    let desired = (SEEK_SPEED_GAIN * dist).min(SEEK_MAX_SPEED);
    let limits = ActionLimits::default();
    let accel = (SEEK_ACCEL_GAIN * (desired - s.speed)).clamp(limits.accel.0, limits.accel.1);
    let curvature = SEEK_HEADING_GAIN * heading_error;
    let steering = match world.dynamics() {
        DynamicsModel::Classic => (curvature * a.length).atan(),
        DynamicsModel::Invertible => curvature,
    };
    Action::new(accel, steering.clamp(limits.steer.0, limits.steer.1))
}

/// Produces one action per controlled agent of a batch, deterministically.
pub struct PolicyRunner {
    policy: Policy,
    rngs: Vec<ChaCha8Rng>,
    actions: Vec<Action>,
}

impl PolicyRunner {
    pub fn new(policy: Policy, batch: &SimBatch, seed: u64) -> Self {
        let rngs = (0..batch.num_worlds())
            .map(|w| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(w as u64);
                r
            })
            .collect();
        Self {
            policy,
            rngs,
            actions: Vec::with_capacity(batch.total_controlled()),
        }
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn act(&mut self, batch: &SimBatch) -> &[Action] {
        self.actions.clear();
        let limits = ActionLimits::default();
        for (w, world) in batch.worlds().iter().enumerate() {
            for &i in world.controlled() {
                let a = match self.policy {
                    Policy::Random => {
                        let rng = &mut self.rngs[w];
                        Action::new(
                            rng.gen_range(limits.accel.0..=limits.accel.1),
                            rng.gen_range(limits.steer.0..=limits.steer.1),
                        )
                    }
                    Policy::Constant(a) => a,
                    Policy::Replay => world.expert_action(i),
                    Policy::GoalSeek => goal_seek_action(world, i),
                };
                self.actions.push(a);
            }
        }
        &self.actions
    }
}
