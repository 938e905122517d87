//! Computational-geometry kernels: vectors and poses, polyline decimation,
//! oriented-box predicates and ray casting.
//!
//! Everything here is a pure function over `f64` values.

mod decimate;
mod obb;
mod ray;

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

pub use decimate::{decimate_indices, decimate_polyline, triangle_area, Decimation, Removal};
pub use obb::{obb_overlap, obb_segment_intersect, Obb, Segment};
pub use ray::{ray_box_distance, ray_cast, ray_segment_distance, Hit, HitTarget, Ray};

/// A point or displacement in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along `angle` (radians, counter-clockwise from +x).
    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn length(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).length()
    }

    #[inline]
    pub fn distance_squared(self, o: Vec2) -> f64 {
        (self - o).length_squared()
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Rotates by the angle whose sine and cosine are given.
    #[inline]
    pub fn rotate_sc(self, sin: f64, cos: f64) -> Vec2 {
        Vec2::new(cos * self.x - sin * self.y, sin * self.x + cos * self.y)
    }

    #[inline]
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        self.rotate_sc(s, c)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(p: [f64; 2]) -> Self {
        Vec2::new(p[0], p[1])
    }
}

/// Wraps an angle into `(-π, π]`.
///
/// Angles already inside the interval are returned bit-for-bit unchanged.
#[inline]
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    if !angle.is_finite() {
        return angle;
    }
    let r = angle.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Shortest signed arc from `from` to `to`, in `(-π, π]`.
#[inline]
pub fn angle_diff(to: f64, from: f64) -> f64 {
    normalize_angle(to - from)
}

/// A position plus heading.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

impl Pose {
    pub fn new(position: Vec2, heading: f64) -> Self {
        Self {
            position,
            heading: normalize_angle(heading),
        }
    }
}

/// Expresses `target` in the frame of `ego` (ego at the origin facing +x).
pub fn to_ego_frame(target: Pose, ego: Pose) -> Pose {
    let (s, c) = ego.heading.sin_cos();
    Pose {
        position: (target.position - ego.position).rotate_sc(-s, c),
        heading: angle_diff(target.heading, ego.heading),
    }
}

/// Inverse of [`to_ego_frame`].
pub fn from_ego_frame(local: Pose, ego: Pose) -> Pose {
    let (s, c) = ego.heading.sin_cos();
    Pose {
        position: local.position.rotate_sc(s, c) + ego.position,
        heading: normalize_angle(local.heading + ego.heading),
    }
}

/// Ego-frame coordinates of a bare point.
#[inline]
pub fn point_to_ego_frame(p: Vec2, ego: Pose) -> Vec2 {
    let (s, c) = ego.heading.sin_cos();
    (p - ego.position).rotate_sc(-s, c)
}
