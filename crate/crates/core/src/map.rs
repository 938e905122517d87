//! Static road geometry of one scenario, indexed for collision and sensing.
//!
//! Segments come from the decimated polylines. Road edges get their own
//! segment list and tree because they are the only collision-relevant
//! class; every segment (edges included) is ray-castable.

use crate::bvh::{Aabb, Bvh};
use crate::geometry::{Segment, Vec2};
use crate::scenario::{RoadElement, RoadKind};

/// Conservative growth applied to every leaf bound.
pub const LEAF_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadPoint {
    pub position: Vec2,
    /// Heading of the segment leaving this point (entering it, for the last point).
    pub heading: f64,
    pub kind: RoadKind,
}

#[derive(Debug, Clone)]
pub struct RoadMap {
    segments: Vec<Segment>,
    segment_kinds: Vec<RoadKind>,
    edges: Vec<Segment>,
    points: Vec<RoadPoint>,
    segment_bvh: Option<Bvh<u32>>,
    edge_bvh: Option<Bvh<u32>>,
    point_bvh: Option<Bvh<u32>>,
}

fn tree(bounds: impl Iterator<Item = Aabb>) -> Option<Bvh<u32>> {
    let entities: Vec<(u32, Aabb)> = bounds.enumerate().map(|(i, b)| (i as u32, b)).collect();
    Bvh::build(&entities).ok()
}

fn grow(b: Aabb, m: f64) -> Aabb {
    Aabb::new(b.min - Vec2::new(m, m), b.max + Vec2::new(m, m))
}

impl RoadMap {
    pub fn new(roads: &[RoadElement]) -> Self {
        let mut segments = Vec::new();
        let mut segment_kinds = Vec::new();
        let mut points = Vec::new();
        for road in roads {
            let g = &road.geometry;
            for (k, &p) in g.iter().enumerate() {
                let heading = if k + 1 < g.len() {
                    (g[k + 1] - p).angle()
                } else if k > 0 {
                    (p - g[k - 1]).angle()
                } else {
                    0.0
                };
                points.push(RoadPoint {
                    position: p,
                    heading,
                    kind: road.kind,
                });
            }
            for w in g.windows(2) {
                segments.push(Segment::new(w[0], w[1]));
                segment_kinds.push(road.kind);
            }
        }
        let edges: Vec<Segment> = segments
            .iter()
            .zip(&segment_kinds)
            .filter(|(_, k)| **k == RoadKind::RoadEdge)
            .map(|(s, _)| *s)
            .collect();
        Self {
            segment_bvh: tree(segments.iter().map(|s| grow(s.aabb(), LEAF_MARGIN))),
            edge_bvh: tree(edges.iter().map(|s| grow(s.aabb(), LEAF_MARGIN))),
            point_bvh: tree(points.iter().map(|p| Aabb::new(p.position, p.position))),
            segments,
            segment_kinds,
            edges,
            points,
        }
    }

    pub fn empty() -> Self {
        Self::new(&[])
    }

    /// Every segment, in polyline order.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment_kind(&self, i: usize) -> RoadKind {
        self.segment_kinds[i]
    }

    pub fn segment_kinds(&self) -> &[RoadKind] {
        &self.segment_kinds
    }

    /// Road-edge segments only.
    pub fn edges(&self) -> &[Segment] {
        &self.edges
    }

    pub fn points(&self) -> &[RoadPoint] {
        &self.points
    }

    pub fn segment_bvh(&self) -> Option<&Bvh<u32>> {
        self.segment_bvh.as_ref()
    }

    pub fn edge_bvh(&self) -> Option<&Bvh<u32>> {
        self.edge_bvh.as_ref()
    }

    /// Calls `f` with the index of every road point within `radius` of `center`.
    pub fn for_each_point_within(&self, center: Vec2, radius: f64, mut f: impl FnMut(usize, f64)) {
        let Some(bvh) = &self.point_bvh else { return };
        bvh.for_each_overlapping(&Aabb::around(center, radius), |_, i| {
            let d = self.points[i as usize].position.distance(center);
            if d <= radius {
                f(i as usize, d);
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn road(id: i64, kind: RoadKind, pts: &[(f64, f64)]) -> RoadElement {
        RoadElement {
            id,
            kind,
            geometry: pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect(),
        }
    }

    #[test]
    fn segments_edges_and_points() {
        let m = RoadMap::new(&[
            road(1, RoadKind::Lane, &[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]),
            road(2, RoadKind::RoadEdge, &[(0.0, 5.0), (10.0, 5.0)]),
            road(3, RoadKind::StopSign, &[(3.0, 3.0)]),
        ]);
        assert_eq!(m.segments().len(), 3);
        assert_eq!(m.edges(), &[Segment::new(Vec2::new(0.0, 5.0), Vec2::new(10.0, 5.0))]);
        assert_eq!(m.points().len(), 6);
        assert_eq!(m.points()[1].heading, std::f64::consts::FRAC_PI_2);
        assert_eq!(m.points()[2].heading, std::f64::consts::FRAC_PI_2);
        assert_eq!(m.points()[5].heading, 0.0);
        assert_eq!(m.segment_kind(2), RoadKind::RoadEdge);
    }

    #[test]
    fn point_radius_query_matches_scan() {
        let pts: Vec<(f64, f64)> = (0..200).map(|i| ((i % 20) as f64 * 3.0, (i / 20) as f64 * 3.0)).collect();
        let roads: Vec<RoadElement> = pts.iter().enumerate().map(|(i, p)| road(i as i64, RoadKind::StopSign, &[*p])).collect();
        let m = RoadMap::new(&roads);
        let c = Vec2::new(17.0, 11.0);
        let mut got = Vec::new();
        m.for_each_point_within(c, 9.0, |i, _| got.push(i));
        got.sort_unstable();
        let want: Vec<usize> = (0..200).filter(|&i| m.points()[i].position.distance(c) <= 9.0).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn empty_map_has_no_trees() {
        let m = RoadMap::empty();
        assert!(m.segment_bvh().is_none() && m.edge_bvh().is_none());
        let mut n = 0;
        m.for_each_point_within(Vec2::ZERO, 100.0, |_, _| n += 1);
        assert_eq!(n, 0);
    }
}
