//! Half-edges, pairings and the multigraph they induce.
//!
//! A [`Pairing`] may be partial. Unpaired half-edges are kept in a pool with
//! O(1) uniform selection and removal, so the same structure serves eager
//! sampling, pair-by-pair revelation along a walk, and the exposure process.

mod ball;
mod io;

pub use ball::{default_root_radius, directed_ball, is_root, non_root_mass, root_set, BallReport};

use std::collections::HashMap;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::degree::DegreeSequence;
use crate::error::{Error, Result};

/// Marker for an unpaired entry in a raw mate array.
pub const UNPAIRED: usize = usize::MAX;

/// Indexed half-edges `(v, i)`, laid out contiguously per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfEdgeSpace {
    offsets: Vec<usize>,
    owner: Vec<u32>,
}

impl HalfEdgeSpace {
    pub fn new(seq: &DegreeSequence) -> Self {
        let n = seq.half_edge_count() as usize;
        let mut offsets = Vec::with_capacity(seq.len() + 1);
        let mut owner = Vec::with_capacity(n);
        offsets.push(0);
        for (v, &d) in seq.degrees().iter().enumerate() {
            owner.extend(std::iter::repeat_n(v as u32, d as usize));
            offsets.push(owner.len());
        }
        Self { offsets, owner }
    }

    /// `N`.
    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    #[inline]
    pub fn owner(&self, x: usize) -> usize {
        self.owner[x] as usize
    }

    #[inline]
    pub fn slot(&self, x: usize) -> usize {
        x - self.offsets[self.owner(x)]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Half-edges of vertex `v`.
    #[inline]
    pub fn range(&self, v: usize) -> Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    /// `deg(x) = deg(owner(x)) - 1`, the number of neighbours of `x`.
    #[inline]
    pub fn he_deg(&self, x: usize) -> usize {
        self.degree(self.owner(x)) - 1
    }

    /// Half-edges sharing `x`'s vertex, excluding `x`.
    pub fn neighbours(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.range(self.owner(x)).filter(move |&y| y != x)
    }

    /// The `k`-th neighbour of `x` in slot order, `k < he_deg(x)`.
    #[inline]
    pub fn neighbour(&self, x: usize, k: usize) -> usize {
        let y = self.offsets[self.owner(x)] + k;
        if y >= x {
            y + 1
        } else {
            y
        }
    }

    #[inline]
    pub fn are_neighbours(&self, x: usize, y: usize) -> bool {
        x != y && self.owner[x] == self.owner[y]
    }

    pub fn min_degree(&self) -> usize {
        (0..self.vertex_count()).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.vertex_count()).map(|v| self.degree(v)).max().unwrap_or(0)
    }
}

/// Convenience for [`HalfEdgeSpace::new`].
pub fn half_edge_space(seq: &DegreeSequence) -> HalfEdgeSpace {
    HalfEdgeSpace::new(seq)
}

/// A (possibly partial) fixed-point-free involution on `0..N`.
#[derive(Debug, Clone)]
pub struct Pairing {
    mate: Vec<usize>,
    pool: Vec<usize>,
    pos: Vec<usize>,
}

impl PartialEq for Pairing {
    fn eq(&self, other: &Self) -> bool {
        self.mate == other.mate
    }
}

impl Eq for Pairing {}

impl Pairing {
    /// Nothing paired.
    pub fn empty(n: usize) -> Self {
        Self { mate: vec![UNPAIRED; n], pool: (0..n).collect(), pos: (0..n).collect() }
    }

    /// From a raw mate array; `UNPAIRED` entries are allowed.
    pub fn from_mates(mate: Vec<usize>) -> Result<Self> {
        let n = mate.len();
        for (x, &y) in mate.iter().enumerate() {
            if y == UNPAIRED {
                continue;
            }
            if y >= n {
                return Err(Error::InvalidPairing(format!("mate({x}) = {y} out of range")));
            }
            if y == x {
                return Err(Error::InvalidPairing(format!("{x} is a fixed point")));
            }
            if mate[y] != x {
                return Err(Error::InvalidPairing(format!("mate(mate({x})) != {x}")));
            }
        }
        Ok(Self::from_mates_unchecked(mate))
    }

    /// From a raw mate array without checking the involution property.
    /// Only meant for exercising checkers with corrupted input.
    pub fn from_mates_unchecked(mate: Vec<usize>) -> Self {
        let mut pool = Vec::new();
        let mut pos = vec![UNPAIRED; mate.len()];
        for (x, &y) in mate.iter().enumerate() {
            if y == UNPAIRED {
                pos[x] = pool.len();
                pool.push(x);
            }
        }
        Self { mate, pool, pos }
    }

    pub fn len(&self) -> usize {
        self.mate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mate.is_empty()
    }

    #[inline]
    pub fn mate(&self, x: usize) -> Option<usize> {
        let y = self.mate[x];
        (y != UNPAIRED).then_some(y)
    }

    /// Mate of `x` in a complete pairing.
    #[inline]
    pub fn mate_of(&self, x: usize) -> usize {
        self.mate[x]
    }

    pub fn mates(&self) -> &[usize] {
        &self.mate
    }

    #[inline]
    pub fn is_paired(&self, x: usize) -> bool {
        self.mate[x] != UNPAIRED
    }

    pub fn paired_count(&self) -> usize {
        self.mate.len() - self.pool.len()
    }

    pub fn unpaired_count(&self) -> usize {
        self.pool.len()
    }

    /// Unpaired half-edges, in pool order.
    pub fn unpaired(&self) -> &[usize] {
        &self.pool
    }

    pub fn is_complete(&self) -> bool {
        self.pool.is_empty()
    }

    pub fn ensure_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::IncompletePairing { paired: self.paired_count(), total: self.len() })
        }
    }

    fn take_from_pool(&mut self, x: usize) {
        let p = self.pos[x];
        let last = self.pool.pop().expect("pool non-empty");
        if last != x {
            self.pool[p] = last;
            self.pos[last] = p;
        }
        self.pos[x] = UNPAIRED;
    }

    fn return_to_pool(&mut self, x: usize) {
        self.pos[x] = self.pool.len();
        self.pool.push(x);
    }

    /// Pairs two unpaired half-edges.
    pub fn pair(&mut self, x: usize, y: usize) -> Result<()> {
        if x == y {
            return Err(Error::InvalidPairing(format!("cannot pair {x} with itself")));
        }
        for z in [x, y] {
            if self.is_paired(z) {
                return Err(Error::AlreadyPaired(z));
            }
        }
        self.take_from_pool(x);
        self.take_from_pool(y);
        self.mate[x] = y;
        self.mate[y] = x;
        Ok(())
    }

    /// Dissolves the pair containing `x`.
    pub fn unpair(&mut self, x: usize) -> Result<usize> {
        let y = self.mate(x).ok_or(Error::NotPaired(x))?;
        self.mate[x] = UNPAIRED;
        self.mate[y] = UNPAIRED;
        self.return_to_pool(x);
        self.return_to_pool(y);
        Ok(y)
    }

    /// Pairs `x` with a uniformly chosen other unpaired half-edge and
    /// returns it.
    pub fn pair_on_demand<R: Rng + ?Sized>(&mut self, x: usize, rng: &mut R) -> Result<usize> {
        if self.is_paired(x) {
            return Err(Error::AlreadyPaired(x));
        }
        if self.pool.len() < 2 {
            return Err(Error::NoUnpairedLeft(x));
        }
        self.take_from_pool(x);
        let y = self.pool[rng.random_range(0..self.pool.len())];
        self.take_from_pool(y);
        self.mate[x] = y;
        self.mate[y] = x;
        Ok(y)
    }

    /// Matches all remaining unpaired half-edges uniformly at random.
    pub fn complete_uniformly<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if self.pool.len() % 2 == 1 {
            return Err(Error::OddResidue(self.pool.len()));
        }
        let mut rest = std::mem::take(&mut self.pool);
        rest.shuffle(rng);
        for pair in rest.chunks_exact(2) {
            self.mate[pair[0]] = pair[1];
            self.mate[pair[1]] = pair[0];
            self.pos[pair[0]] = UNPAIRED;
            self.pos[pair[1]] = UNPAIRED;
        }
        Ok(())
    }

    /// Checks the involution property on every paired entry.
    pub fn check_involution(&self) -> Result<()> {
        for (x, &y) in self.mate.iter().enumerate() {
            if y == UNPAIRED {
                continue;
            }
            if y == x || y >= self.mate.len() || self.mate[y] != x {
                return Err(Error::InvalidPairing(format!("broken at {x}")));
            }
        }
        Ok(())
    }
}

/// Uniform pairing over all `(N-1)!!` pairings.
pub fn uniform_pairing<R: Rng + ?Sized>(space: &HalfEdgeSpace, rng: &mut R) -> Result<Pairing> {
    let mut p = Pairing::empty(space.len());
    p.complete_uniformly(rng)?;
    Ok(p)
}

/// Every pairing of `0..n` as a raw mate array, in lexicographic order.
/// Meant for small `n`: there are `(n-1)!!` of them.
pub fn all_pairings(n: usize) -> Vec<Vec<usize>> {
    fn rec(mate: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some(x) = mate.iter().position(|&m| m == UNPAIRED) else {
            out.push(mate.clone());
            return;
        };
        for y in x + 1..mate.len() {
            if mate[y] == UNPAIRED {
                mate[x] = y;
                mate[y] = x;
                rec(mate, out);
                mate[x] = UNPAIRED;
                mate[y] = UNPAIRED;
            }
        }
    }
    let mut out = Vec::new();
    if n % 2 == 0 {
        rec(&mut vec![UNPAIRED; n], &mut out);
    }
    out
}

/// Loop and multi-edge counts of the multigraph induced by a pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MultigraphSummary {
    pub loops: usize,
    /// Sum over unordered vertex pairs of `(multiplicity - 1)`.
    pub multi_edges: usize,
    pub is_simple: bool,
}

pub fn build_graph(space: &HalfEdgeSpace, pairing: &Pairing) -> Result<MultigraphSummary> {
    pairing.ensure_complete()?;
    let mut loops = 0;
    let mut mult: HashMap<(usize, usize), usize> = HashMap::new();
    for x in 0..space.len() {
        let y = pairing.mate_of(x);
        if x > y {
            continue;
        }
        let (u, v) = (space.owner(x), space.owner(y));
        if u == v {
            loops += 1;
        }
        *mult.entry((u.min(v), u.max(v))).or_insert(0) += 1;
    }
    let multi_edges = mult.values().map(|&m| m - 1).sum();
    Ok(MultigraphSummary { loops, multi_edges, is_simple: loops == 0 && multi_edges == 0 })
}
