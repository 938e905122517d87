//! Bounding volume hierarchy used to prune collision pairs and ray-cast
//! candidates.
//!
//! Trees are built once by median split over the longer axis of the centroid
//! bounds, with one entity per leaf. Topology is fixed after construction;
//! [`Bvh::refit`] replaces leaf bounds and recomputes internal bounds, which is
//! all the per-step update an agent tree needs since agent sets never change
//! within a scenario.

use thiserror::Error;

use crate::geometry::{Ray, Vec2};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BvhError {
    #[error("cannot build a hierarchy over zero entities")]
    EmptyInput,
    #[error("refit expects {expected} bounds, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub const fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    pub fn from_points(points: &[Vec2]) -> Self {
        let mut b = Aabb::new(
            Vec2::new(f64::INFINITY, f64::INFINITY),
            Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in points {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        b
    }

    /// Square box of half-extent `r` around `c`.
    pub fn around(c: Vec2, r: f64) -> Self {
        Aabb::new(Vec2::new(c.x - r, c.y - r), Vec2::new(c.x + r, c.y + r))
    }

    #[inline]
    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb::new(
            Vec2::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            Vec2::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        )
    }

    /// Overlap test; touching boxes overlap.
    #[inline]
    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }

    #[inline]
    pub fn contains(&self, o: &Aabb) -> bool {
        self.min.x <= o.min.x && self.min.y <= o.min.y && self.max.x >= o.max.x && self.max.y >= o.max.y
    }

    #[inline]
    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * (self.min.x + self.max.x), 0.5 * (self.min.y + self.max.y))
    }

    pub fn translated(&self, d: Vec2) -> Aabb {
        Aabb::new(self.min + d, self.max + d)
    }

    /// Slab test: does `ray` touch this box within `[0, max_range]`?
    #[inline]
    pub fn intersects_ray(&self, ray: &Ray) -> bool {
        let mut t0 = 0.0f64;
        let mut t1 = ray.max_range;
        let o = [ray.origin.x, ray.origin.y];
        let d = [ray.direction.x, ray.direction.y];
        let lo = [self.min.x, self.min.y];
        let hi = [self.max.x, self.max.y];
        for k in 0..2 {
            if d[k] == 0.0 {
                if o[k] < lo[k] || o[k] > hi[k] {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / d[k];
            let a = (lo[k] - o[k]) * inv;
            let b = (hi[k] - o[k]) * inv;
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    aabb: Aabb,
    /// Left child, or the entity slot for leaves.
    a: u32,
    /// Right child, or `LEAF`.
    b: u32,
}

impl Node {
    #[inline]
    fn is_leaf(&self) -> bool {
        self.b == LEAF
    }
}

/// A binary BVH over entity references of type `T`.
///
/// Entities keep their input order: slot `i` always holds the `i`-th entity
/// passed to [`Bvh::build`], and refit bounds are given in the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct Bvh<T> {
    nodes: Vec<Node>,
    refs: Vec<T>,
    leaf_of: Vec<u32>,
}

impl<T: Copy> Bvh<T> {
    pub fn build(entities: &[(T, Aabb)]) -> Result<Self, BvhError> {
        if entities.is_empty() {
            return Err(BvhError::EmptyInput);
        }
        let n = entities.len();
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * n - 1),
            refs: entities.iter().map(|e| e.0).collect(),
            leaf_of: vec![0; n],
        };
        let centers: Vec<Vec2> = entities.iter().map(|e| e.1.center()).collect();
        let aabbs: Vec<Aabb> = entities.iter().map(|e| e.1).collect();
        let mut order: Vec<u32> = (0..n as u32).collect();
        bvh.build_node(&mut order, &aabbs, &centers);
        Ok(bvh)
    }

    fn build_node(&mut self, slots: &mut [u32], aabbs: &[Aabb], centers: &[Vec2]) -> u32 {
        let id = self.nodes.len() as u32;
        if slots.len() == 1 {
            let s = slots[0];
            self.nodes.push(Node {
                aabb: aabbs[s as usize],
                a: s,
                b: LEAF,
            });
            self.leaf_of[s as usize] = id;
            return id;
        }
        let cb = slots
            .iter()
            .map(|&s| Aabb::new(centers[s as usize], centers[s as usize]))
            .reduce(|a, b| a.union(&b))
            .unwrap();
        let split_x = cb.max.x - cb.min.x >= cb.max.y - cb.min.y;
        let key = |s: &u32| {
            let c = centers[*s as usize];
            if split_x {
                c.x
            } else {
                c.y
            }
        };
        slots.sort_by(|p, q| key(p).total_cmp(&key(q)).then(p.cmp(q)));
        self.nodes.push(Node {
            aabb: aabbs[slots[0] as usize],
            a: 0,
            b: 0,
        });
        let mid = slots.len() / 2;
        let (left, right) = slots.split_at_mut(mid);
        let l = self.build_node(left, aabbs, centers);
        let r = self.build_node(right, aabbs, centers);
        let aabb = self.nodes[l as usize].aabb.union(&self.nodes[r as usize].aabb);
        self.nodes[id as usize] = Node { aabb, a: l, b: r };
        id
    }

    /// Replaces every leaf's bounds (given in entity order) and recomputes
    /// internal bounds bottom-up. Topology is unchanged.
    pub fn refit(&mut self, aabbs: &[Aabb]) -> Result<(), BvhError> {
        if aabbs.len() != self.refs.len() {
            return Err(BvhError::LengthMismatch {
                expected: self.refs.len(),
                got: aabbs.len(),
            });
        }
        for (slot, aabb) in aabbs.iter().enumerate() {
            self.nodes[self.leaf_of[slot] as usize].aabb = *aabb;
        }
        // Children always have larger indices than their parent.
        for i in (0..self.nodes.len()).rev() {
            let n = self.nodes[i];
            if !n.is_leaf() {
                self.nodes[i].aabb = self.nodes[n.a as usize].aabb.union(&self.nodes[n.b as usize].aabb);
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }

    pub fn root_aabb(&self) -> Aabb {
        self.nodes[0].aabb
    }

    /// Entity references in slot (input) order.
    pub fn refs(&self) -> &[T] {
        &self.refs
    }

    /// Current bounds of the entity in `slot`.
    pub fn leaf_aabb(&self, slot: usize) -> Aabb {
        self.nodes[self.leaf_of[slot] as usize].aabb
    }

    /// All unordered pairs of leaves whose bounds overlap (touching counts).
    pub fn query_pairs(&self) -> Vec<(T, T)> {
        let mut out = Vec::new();
        self.for_each_pair(|a, b| out.push((a, b)));
        out
    }

    /// Visits every overlapping leaf pair once, in a deterministic order.
    pub fn for_each_pair(&self, mut f: impl FnMut(T, T)) {
        let mut stack: Vec<(u32, u32)> = Vec::new();
        // Self-pairs of internal nodes expand into two self-pairs and a cross pair.
        let mut selfs: Vec<u32> = vec![0];
        while let Some(n) = selfs.pop() {
            let node = self.nodes[n as usize];
            if node.is_leaf() {
                continue;
            }
            selfs.push(node.b);
            selfs.push(node.a);
            stack.push((node.a, node.b));
            while let Some((p, q)) = stack.pop() {
                let (np, nq) = (self.nodes[p as usize], self.nodes[q as usize]);
                if !np.aabb.overlaps(&nq.aabb) {
                    continue;
                }
                match (np.is_leaf(), nq.is_leaf()) {
                    (true, true) => f(self.refs[np.a as usize], self.refs[nq.a as usize]),
                    (true, false) => {
                        stack.push((p, nq.b));
                        stack.push((p, nq.a));
                    }
                    (false, true) => {
                        stack.push((np.b, q));
                        stack.push((np.a, q));
                    }
                    (false, false) => {
                        stack.push((np.b, q));
                        stack.push((np.a, q));
                    }
                }
            }
        }
    }

    /// Visits every leaf whose bounds overlap `region`.
    pub fn for_each_overlapping(&self, region: &Aabb, mut f: impl FnMut(usize, T)) {
        let mut stack = vec![0u32];
        while let Some(i) = stack.pop() {
            let n = self.nodes[i as usize];
            if !n.aabb.overlaps(region) {
                continue;
            }
            if n.is_leaf() {
                f(n.a as usize, self.refs[n.a as usize]);
            } else {
                stack.push(n.b);
                stack.push(n.a);
            }
        }
    }

    pub fn query_aabb(&self, region: &Aabb) -> Vec<T> {
        let mut out = Vec::new();
        self.for_each_overlapping(region, |_, r| out.push(r));
        out
    }

    /// Visits every leaf whose bounds the ray touches within its range.
    pub fn for_each_ray_candidate(&self, ray: &Ray, mut f: impl FnMut(usize, T)) {
        let mut stack = vec![0u32];
        while let Some(i) = stack.pop() {
            let n = self.nodes[i as usize];
            if !n.aabb.intersects_ray(ray) {
                continue;
            }
            if n.is_leaf() {
                f(n.a as usize, self.refs[n.a as usize]);
            } else {
                stack.push(n.b);
                stack.push(n.a);
            }
        }
    }

    pub fn query_ray(&self, ray: &Ray) -> Vec<T> {
        let mut out = Vec::new();
        self.for_each_ray_candidate(ray, |_, r| out.push(r));
        out
    }

    /// Recursively checks that every node contains its children.
    pub fn check_containment(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.is_leaf()
                || (n.aabb.contains(&self.nodes[n.a as usize].aabb)
                    && n.aabb.contains(&self.nodes[n.b as usize].aabb))
        })
    }
}
