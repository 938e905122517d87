//! Oriented boxes and separating-axis predicates. Boundary contact counts as
//! intersection everywhere in this module.

use super::{normalize_angle, Vec2};
use crate::bvh::Aabb;

/// Oriented bounding box: the footprint of every physical object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub center: Vec2,
    pub half_length: f64,
    pub half_width: f64,
    pub heading: f64,
}

impl Obb {
    pub fn new(center: Vec2, length: f64, width: f64, heading: f64) -> Self {
        Self {
            center,
            half_length: 0.5 * length,
            half_width: 0.5 * width,
            heading: normalize_angle(heading),
        }
    }

    /// Unit vectors along the box's length and width.
    #[inline]
    pub fn axes(&self) -> (Vec2, Vec2) {
        let u = Vec2::from_angle(self.heading);
        (u, u.perp())
    }

    /// Corners in counter-clockwise order starting at rear-right.
    pub fn corners(&self) -> [Vec2; 4] {
        let (u, v) = self.axes();
        let l = u * self.half_length;
        let w = v * self.half_width;
        [
            self.center - l - w,
            self.center + l - w,
            self.center + l + w,
            self.center - l + w,
        ]
    }

    /// Projection radius onto a unit `axis`.
    #[inline]
    fn radius_on(&self, u: Vec2, v: Vec2, axis: Vec2) -> f64 {
        self.half_length * u.dot(axis).abs() + self.half_width * v.dot(axis).abs()
    }

    /// Tight axis-aligned bounds grown by `margin` on every side.
    pub fn aabb(&self, margin: f64) -> Aabb {
        let (u, v) = self.axes();
        let ex = self.half_length * u.x.abs() + self.half_width * v.x.abs() + margin;
        let ey = self.half_length * u.y.abs() + self.half_width * v.y.abs() + margin;
        Aabb::new(
            Vec2::new(self.center.x - ex, self.center.y - ey),
            Vec2::new(self.center.x + ex, self.center.y + ey),
        )
    }

    /// True if `p` lies inside or on the box.
    pub fn contains(&self, p: Vec2) -> bool {
        let (u, v) = self.axes();
        let d = p - self.center;
        d.dot(u).abs() <= self.half_length && d.dot(v).abs() <= self.half_width
    }
}

/// A directed line segment between two distinct points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Self { a, b }
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::new(
            Vec2::new(self.a.x.min(self.b.x), self.a.y.min(self.b.y)),
            Vec2::new(self.a.x.max(self.b.x), self.a.y.max(self.b.y)),
        )
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn heading(&self) -> f64 {
        (self.b - self.a).angle()
    }
}

/// Separating-axis overlap test between two oriented boxes.
pub fn obb_overlap(a: &Obb, b: &Obb) -> bool {
    let (ua, va) = a.axes();
    let (ub, vb) = b.axes();
    let d = b.center - a.center;
    for axis in [ua, va, ub, vb] {
        let dist = d.dot(axis).abs();
        if dist > a.radius_on(ua, va, axis) + b.radius_on(ub, vb, axis) {
            return false;
        }
    }
    true
}

/// True iff `seg` touches the boundary or interior of `obb`.
pub fn obb_segment_intersect(obb: &Obb, seg: &Segment) -> bool {
    let (u, v) = obb.axes();
    let pa = seg.a - obb.center;
    let pb = seg.b - obb.center;
    for (axis, r) in [(u, obb.half_length), (v, obb.half_width)] {
        let (x, y) = (pa.dot(axis), pb.dot(axis));
        if x.min(y) > r || x.max(y) < -r {
            return false;
        }
    }
    let dir = seg.b - seg.a;
    let len = dir.length();
    if len > 0.0 {
        let n = dir.perp() * (1.0 / len);
        // Both endpoints project to (nearly) the same value on the normal.
        let (x, y) = (pa.dot(n), pb.dot(n));
        let r = obb.radius_on(u, v, n);
        if x.min(y) > r || x.max(y) < -r {
            return false;
        }
    }
    true
}
