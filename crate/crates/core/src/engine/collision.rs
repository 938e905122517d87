//! Discrete collision detection on post-step poses.

use crate::bvh::Bvh;
use crate::geometry::{obb_overlap, obb_segment_intersect, Obb};
use crate::map::{RoadMap, LEAF_MARGIN};

/// One step's collision events, sorted and duplicate-free.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollisionEvents {
    /// Agent index pairs `(i, j)` with `i < j` whose boxes overlap.
    pub vehicle_pairs: Vec<(u32, u32)>,
    /// `(agent, edge)` pairs where an agent box touches a road-edge segment;
    /// `edge` indexes [`RoadMap::edges`].
    pub offroad: Vec<(u32, u32)>,
}

impl CollisionEvents {
    pub fn clear(&mut self) {
        self.vehicle_pairs.clear();
        self.offroad.clear();
    }

    pub fn is_empty(&self) -> bool {
        self.vehicle_pairs.is_empty() && self.offroad.is_empty()
    }
}

/// Broad phase through `agent_bvh` (leaf refs index `boxes`) and the map's
/// edge tree, narrow phase by separating axes.
///
/// `active[i]` says whether agent `i` takes part at all; `edge_checked[i]`
/// whether it can go off-road.
pub fn detect_collisions(
    boxes: &[Obb],
    active: &[bool],
    edge_checked: &[bool],
    agent_bvh: Option<&Bvh<u32>>,
    map: &RoadMap,
    out: &mut CollisionEvents,
) {
    out.clear();
    if let Some(bvh) = agent_bvh {
        bvh.for_each_pair(|a, b| {
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            let (iu, ju) = (i as usize, j as usize);
            if active[iu] && active[ju] && obb_overlap(&boxes[iu], &boxes[ju]) {
                out.vehicle_pairs.push((i, j));
            }
        });
        out.vehicle_pairs.sort_unstable();
    }
    if let Some(edge_bvh) = map.edge_bvh() {
        let edges = map.edges();
        for (i, b) in boxes.iter().enumerate() {
            if !(active[i] && edge_checked[i]) {
                continue;
            }
            let start = out.offroad.len();
            edge_bvh.for_each_overlapping(&b.aabb(LEAF_MARGIN), |_, e| {
                if obb_segment_intersect(b, &edges[e as usize]) {
                    out.offroad.push((i as u32, e));
                }
            });
            out.offroad[start..].sort_unstable();
        }
    }
}
