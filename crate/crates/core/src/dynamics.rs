//! Vehicle state propagation.
//!
//! Two models are provided:
//!
//! * [`step_classic`]: kinematic bicycle referenced at the centre of gravity,
//!   with the rear axle at half the vehicle length. Speed is integrated with a
//!   midpoint estimate and clipped to `±v_max`.
//! * [`step_invertible`]: a double integrator along the heading whose yaw
//!   changes by `steering × displacement`. Consecutive states determine the
//!   action uniquely (see [`invert_action`]), which makes it the model of
//!   choice for recovering expert actions from logs.
//!
//! Pedestrians and cyclists use the same steppers with their own sizes.

use thiserror::Error;

use crate::geometry::{angle_diff, normalize_angle, Vec2};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("action index {index} out of range for a grid of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("action grid levels must be non-empty and strictly increasing")]
    InvalidGrid,
}

/// Mutable per-step state of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgentState {
    pub position: Vec2,
    /// Radians in `(-π, π]`.
    pub heading: f64,
    /// Signed speed along the heading, m/s.
    pub speed: f64,
    /// World-frame velocity, m/s.
    pub velocity: Vec2,
}

impl AgentState {
    pub fn new(position: Vec2, heading: f64, speed: f64) -> Self {
        let heading = normalize_angle(heading);
        Self {
            position,
            heading,
            speed,
            velocity: Vec2::from_angle(heading) * speed,
        }
    }
}

/// Acceleration (m/s²), steering, and view-cone head rotation (radians).
///
/// `steering` is the front-wheel angle δ for the classic model and the yaw
/// command (rad/m) for the invertible model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Action {
    pub acceleration: f64,
    pub steering: f64,
    pub head_rotation: f64,
}

impl Action {
    pub const fn new(acceleration: f64, steering: f64) -> Self {
        Self {
            acceleration,
            steering,
            head_rotation: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionLimits {
    pub accel: (f64, f64),
    pub steer: (f64, f64),
}

impl Default for ActionLimits {
    fn default() -> Self {
        Self {
            accel: (-4.0, 4.0),
            steer: (-0.7, 0.7),
        }
    }
}

impl ActionLimits {
    pub fn clamp(&self, a: Action) -> Action {
        Action {
            acceleration: a.acceleration.clamp(self.accel.0, self.accel.1),
            steering: a.steering.clamp(self.steer.0, self.steer.1),
            head_rotation: a.head_rotation,
        }
    }

    pub fn contains(&self, a: &Action) -> bool {
        (self.accel.0..=self.accel.1).contains(&a.acceleration)
            && (self.steer.0..=self.steer.1).contains(&a.steering)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Wheelbase, taken as the vehicle length.
    pub length: f64,
    pub v_max: f64,
    pub limits: ActionLimits,
}

impl VehicleParams {
    pub const DEFAULT_V_MAX: f64 = 100.0;

    pub fn new(length: f64) -> Self {
        Self {
            length,
            v_max: Self::DEFAULT_V_MAX,
            limits: ActionLimits::default(),
        }
    }

    /// Distance from the centre of gravity to the rear axle.
    pub fn rear_axle_offset(&self) -> f64 {
        0.5 * self.length
    }
}

/// Which stepper drives controlled agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsModel {
    #[default]
    Classic,
    Invertible,
}

/// Kinematic bicycle step. The action is clamped to `params.limits` first.
pub fn step_classic(state: &AgentState, action: Action, dt: f64, params: &VehicleParams) -> AgentState {
    let action = params.limits.clamp(action);
    let accel = action.acceleration;
    let v_mid = (state.speed + 0.5 * accel * dt).clamp(-params.v_max, params.v_max);
    let tan_delta = action.steering.tan();
    let beta = (params.rear_axle_offset() * tan_delta / params.length).atan();
    let x_dot = v_mid * (state.heading + beta).cos();
    let y_dot = v_mid * (state.heading + beta).sin();
    let yaw_rate = v_mid * beta.cos() * tan_delta / params.length;

    let heading = normalize_angle(state.heading + yaw_rate * dt);
    let speed = (state.speed + accel * dt).clamp(-params.v_max, params.v_max);
    AgentState {
        position: Vec2::new(state.position.x + x_dot * dt, state.position.y + y_dot * dt),
        heading,
        speed,
        velocity: Vec2::from_angle(heading) * speed,
    }
}

/// Double-integrator step with yaw update `θ' = θ + s·(v·dt + ½·a·dt²)`.
/// The action is clamped to `params.limits`; `params.length` is unused.
pub fn step_invertible(state: &AgentState, action: Action, dt: f64, params: &VehicleParams) -> AgentState {
    let action = params.limits.clamp(action);
    let accel = action.acceleration;
    let displacement = state.speed * dt + 0.5 * accel * dt * dt;
    let (s, c) = state.heading.sin_cos();
    let heading = normalize_angle(state.heading + action.steering * displacement);
    let speed = (state.speed + accel * dt).clamp(-params.v_max, params.v_max);
    AgentState {
        position: Vec2::new(state.position.x + displacement * c, state.position.y + displacement * s),
        heading,
        speed,
        velocity: Vec2::from_angle(heading) * speed,
    }
}

pub fn step(model: DynamicsModel, state: &AgentState, action: Action, dt: f64, params: &VehicleParams) -> AgentState {
    match model {
        DynamicsModel::Classic => step_classic(state, action, dt, params),
        DynamicsModel::Invertible => step_invertible(state, action, dt, params),
    }
}

/// Displacements below this are treated as "no motion" when inverting.
pub const DEGENERATE_DISPLACEMENT: f64 = 1e-9;

/// Recovers the invertible-model action that maps `from` to `to`.
///
/// When the implied displacement vanishes the yaw command is unidentifiable
/// and is reported as zero.
pub fn invert_action(from: &AgentState, to: &AgentState, dt: f64) -> Action {
    let accel = (to.speed - from.speed) / dt;
    let displacement = from.speed * dt + 0.5 * accel * dt * dt;
    let steering = if displacement.abs() < DEGENERATE_DISPLACEMENT {
        0.0
    } else {
        angle_diff(to.heading, from.heading) / displacement
    };
    Action::new(accel, steering)
}

/// Closed-form classic-model action whose heading and speed updates map
/// `from` to `to`. Positions are reproduced exactly only for straight motion.
pub fn invert_action_classic(from: &AgentState, to: &AgentState, dt: f64, length: f64) -> Action {
    let accel = (to.speed - from.speed) / dt;
    let v_mid = from.speed + 0.5 * accel * dt;
    if v_mid.abs() < DEGENERATE_DISPLACEMENT {
        return Action::new(accel, 0.0);
    }
    // yaw_rate·L / v̄ = cos(β)·tan(δ) = T / sqrt(1 + T²/4) with T = tan(δ).
    let c = angle_diff(to.heading, from.heading) / dt * length / v_mid;
    let c2 = (c * c).min(3.999_999);
    let t = (c2 / (1.0 - 0.25 * c2)).sqrt().copysign(c);
    Action::new(accel, t.atan())
}

/// A discrete joint grid of acceleration × steering levels.
///
/// Joint indices are row-major: `index = accel_level · n_steer + steer_level`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGrid {
    accel: Vec<f64>,
    steer: Vec<f64>,
}

impl Default for ActionGrid {
    fn default() -> Self {
        let l = ActionLimits::default();
        Self::linear(7, l.accel, 13, l.steer).expect("default grid")
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    !v.is_empty() && v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

fn linspace(n: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    // Weighted form hits both endpoints exactly.
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            lo * (1.0 - t) + hi * t
        })
        .collect()
}

fn nearest_level(levels: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, l) in levels.iter().enumerate() {
        if (l - x).abs() < (levels[best] - x).abs() {
            best = i;
        }
    }
    best
}

impl ActionGrid {
    pub fn new(accel: Vec<f64>, steer: Vec<f64>) -> Result<Self, DynamicsError> {
        if !strictly_increasing(&accel) || !strictly_increasing(&steer) {
            return Err(DynamicsError::InvalidGrid);
        }
        Ok(Self { accel, steer })
    }

    pub fn linear(n_accel: usize, accel: (f64, f64), n_steer: usize, steer: (f64, f64)) -> Result<Self, DynamicsError> {
        Self::new(linspace(n_accel, accel), linspace(n_steer, steer))
    }

    pub fn len(&self) -> usize {
        self.accel.len() * self.steer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn accel_levels(&self) -> &[f64] {
        &self.accel
    }

    pub fn steer_levels(&self) -> &[f64] {
        &self.steer
    }

    pub fn discretize(&self, index: usize) -> Result<Action, DynamicsError> {
        if index >= self.len() {
            return Err(DynamicsError::IndexOutOfRange { index, len: self.len() });
        }
        let n = self.steer.len();
        Ok(Action::new(self.accel[index / n], self.steer[index % n]))
    }

    /// Index of the grid action nearest to `action`, component-wise.
    /// Equidistant levels resolve to the lower one.
    pub fn action_index(&self, action: &Action) -> usize {
        nearest_level(&self.accel, action.acceleration) * self.steer.len()
            + nearest_level(&self.steer, action.steering)
    }
}
