//! Directed non-backtracking balls and roots.
//!
//! The ball of radius `r` around `x` is explored breadth-first along the
//! walk's successor relation: from `z`, step to every neighbour of
//! `mate(z)`. Every successor edge out of a node at depth `< r` is
//! counted; `cycle_count` is the surplus of explored edges over the
//! `visited - 1` edges of a spanning tree, so the ball is a tree exactly
//! when no half-edge is reached twice.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use super::{HalfEdgeSpace, Pairing};
use crate::error::Result;
use crate::walk::distribution_at;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BallReport {
    pub center: usize,
    pub radius: usize,
    /// Reached half-edges, sorted.
    pub visited: Vec<usize>,
    pub is_tree: bool,
    pub cycle_count: usize,
}

pub fn directed_ball(
    space: &HalfEdgeSpace,
    pairing: &Pairing,
    x: usize,
    radius: usize,
) -> Result<BallReport> {
    pairing.ensure_complete()?;
    let mut seen: HashSet<usize> = HashSet::from([x]);
    let mut frontier = vec![x];
    let mut edges = 0usize;
    for _ in 0..radius {
        let mut next = Vec::new();
        for &z in &frontier {
            for y in space.neighbours(pairing.mate_of(z)) {
                edges += 1;
                if seen.insert(y) {
                    next.push(y);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    let cycle_count = edges + 1 - seen.len();
    let mut visited: Vec<usize> = seen.into_iter().collect();
    visited.sort_unstable();
    Ok(BallReport { center: x, radius, visited, is_tree: cycle_count == 0, cycle_count })
}

/// `⌊ log N / (10 log Δ) ∧ log log N ⌋`, clamped to at least 1.
pub fn default_root_radius(half_edges: usize, max_degree: usize) -> usize {
    let log_n = (half_edges as f64).ln();
    let by_degree = if max_degree > 1 {
        log_n / (10.0 * (max_degree as f64).ln())
    } else {
        f64::INFINITY
    };
    let h = by_degree.min(log_n.ln()).floor();
    if h.is_finite() && h >= 1.0 {
        h as usize
    } else {
        1
    }
}

/// Whether the radius-`h` ball around `x` is a tree.
pub fn is_root(space: &HalfEdgeSpace, pairing: &Pairing, x: usize, h: usize) -> Result<bool> {
    Ok(directed_ball(space, pairing, x, h)?.is_tree)
}

/// Root indicator for every half-edge.
pub fn root_set(space: &HalfEdgeSpace, pairing: &Pairing, h: usize) -> Result<Vec<bool>> {
    pairing.ensure_complete()?;
    (0..space.len()).into_par_iter().map(|x| is_root(space, pairing, x, h)).collect()
}

/// Probability that the walk started at `x` sits on a non-root after `h`
/// steps, where roots use the same radius `h`.
pub fn non_root_mass(space: &HalfEdgeSpace, pairing: &Pairing, x: usize, h: usize) -> Result<f64> {
    let dist = distribution_at(space, pairing, x, h)?;
    let mut mass = 0.0;
    for (y, &p) in dist.mass().iter().enumerate() {
        if p > 0.0 && !is_root(space, pairing, y, h)? {
            mass += p;
        }
    }
    Ok(mass.clamp(0.0, 1.0))
}
