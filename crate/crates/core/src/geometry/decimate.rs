//! Visvalingam-Whyatt polyline decimation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Vec2;

/// Unsigned area of the triangle `abc`.
#[inline]
pub fn triangle_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    0.5 * (b - a).cross(c - a).abs()
}

/// A point dropped by decimation, with its effective area at removal time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Removal {
    pub index: usize,
    pub area: f64,
}

/// Result of [`decimate_indices`]: surviving indices in input order plus the
/// removal log in the order points were dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Decimation {
    pub kept: Vec<usize>,
    pub removed: Vec<Removal>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    area: f64,
    index: usize,
    generation: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Reversed so the max-heap pops the smallest area, then the smallest index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .area
            .total_cmp(&self.area)
            .then_with(|| other.index.cmp(&self.index))
    }
}

const NONE: usize = usize::MAX;

/// Runs Visvalingam-Whyatt over `points`, repeatedly removing the interior
/// point with the smallest effective triangle area while that area is below
/// `area_threshold`. Neighbour areas are recomputed after every removal.
/// Endpoints are always kept; equal areas are broken by the lower index.
pub fn decimate_indices(points: &[Vec2], area_threshold: f64) -> Decimation {
    let n = points.len();
    if n < 3 {
        return Decimation {
            kept: (0..n).collect(),
            removed: Vec::new(),
        };
    }

    let mut prev: Vec<usize> = (0..n).map(|i| if i == 0 { NONE } else { i - 1 }).collect();
    let mut next: Vec<usize> = (0..n).map(|i| if i + 1 == n { NONE } else { i + 1 }).collect();
    let mut generation = vec![0u32; n];
    let mut alive = vec![true; n];

    let mut heap = BinaryHeap::with_capacity(n);
    for i in 1..n - 1 {
        heap.push(Candidate {
            area: triangle_area(points[i - 1], points[i], points[i + 1]),
            index: i,
            generation: 0,
        });
    }

    let mut removed = Vec::new();
    while let Some(c) = heap.pop() {
        if !alive[c.index] || c.generation != generation[c.index] {
            continue;
        }
        // Stops on NaN areas as well.
        if c.area.partial_cmp(&area_threshold) != Some(Ordering::Less) {
            break;
        }
        alive[c.index] = false;
        removed.push(Removal {
            index: c.index,
            area: c.area,
        });
        let (p, q) = (prev[c.index], next[c.index]);
        next[p] = q;
        prev[q] = p;
        for j in [p, q] {
            if prev[j] == NONE || next[j] == NONE {
                continue;
            }
            generation[j] += 1;
            heap.push(Candidate {
                area: triangle_area(points[prev[j]], points[j], points[next[j]]),
                index: j,
                generation: generation[j],
            });
        }
    }

    Decimation {
        kept: (0..n).filter(|&i| alive[i]).collect(),
        removed,
    }
}

/// Decimated copy of `points`; see [`decimate_indices`].
pub fn decimate_polyline(points: &[Vec2], area_threshold: f64) -> Vec<Vec2> {
    decimate_indices(points, area_threshold)
        .kept
        .into_iter()
        .map(|i| points[i])
        .collect()
}
