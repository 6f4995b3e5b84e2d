//! Two-stage exposure of a uniform pairing around two half-edges.
//!
//! Stage one grows a forest rooted at `x` and `y`. Each iteration selects the
//! unpaired forest node of largest weight (smallest index on ties) among
//! those with height below `t/2` and weight above `w_min`, and reveals its
//! mate `z'`. When neither `z'` nor any neighbour of `z'` is already in the
//! forest, the neighbours of `z'` become children of weight `w(z)/deg(z')`.
//! Stage two pairs everything that is left uniformly.
//!
//! A node's weight is the product of `1/deg` along its forest path, which is
//! the quenched probability that the walk follows that path. Pairing the
//! height-`t/2` frontiers against each other therefore lower-bounds
//! `P^t(x, π(y))`.

use std::cmp::Reverse;
use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pairing::{HalfEdgeSpace, Pairing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Root {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForestNode {
    #[serde(rename = "node")]
    pub half_edge: usize,
    /// Index of the parent in [`ExposureForest::nodes`].
    pub parent: Option<usize>,
    pub root: Root,
    pub height: usize,
    pub weight: f64,
}

const ABSENT: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct ExposureForest {
    nodes: Vec<ForestNode>,
    member: Vec<u32>,
}

impl ExposureForest {
    fn new(n: usize) -> Self {
        Self { nodes: Vec::new(), member: vec![ABSENT; n] }
    }

    fn add(&mut self, node: ForestNode) -> usize {
        let idx = self.nodes.len();
        self.member[node.half_edge] = idx as u32;
        self.nodes.push(node);
        idx
    }

    pub fn nodes(&self) -> &[ForestNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.member[x] != ABSENT
    }

    pub fn index_of(&self, x: usize) -> Option<usize> {
        (self.member[x] != ABSENT).then_some(self.member[x] as usize)
    }

    pub fn node_of(&self, x: usize) -> Option<&ForestNode> {
        self.index_of(x).map(|i| &self.nodes[i])
    }

    /// Half-edges from the root down to node `idx`.
    pub fn path(&self, idx: usize) -> Vec<usize> {
        let mut out = vec![self.nodes[idx].half_edge];
        let mut cur = idx;
        while let Some(p) = self.nodes[cur].parent {
            out.push(self.nodes[p].half_edge);
            cur = p;
        }
        out.reverse();
        out
    }

    /// Total weight at each height, both trees together.
    pub fn height_weight_sums(&self) -> Vec<f64> {
        let mut sums = Vec::new();
        for n in &self.nodes {
            if sums.len() <= n.height {
                sums.resize(n.height + 1, 0.0);
            }
            sums[n.height] += n.weight;
        }
        sums
    }

    pub fn max_height(&self) -> usize {
        self.nodes.iter().map(|n| n.height).max().unwrap_or(0)
    }
}

/// One iteration of the first stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExposureStep {
    pub selected: usize,
    pub weight: f64,
    pub mate: usize,
    pub fresh: bool,
}

#[derive(Debug, Clone)]
pub struct ExposureResult {
    pub forest: ExposureForest,
    pub h_x: Vec<usize>,
    pub h_y: Vec<usize>,
    pub partial_pairing: Pairing,
    pub tau: usize,
    pub steps: Vec<ExposureStep>,
    pub x: usize,
    pub y: usize,
    pub t: usize,
    pub w_min: f64,
}

impl ExposureResult {
    pub fn weights(&self, root: Root) -> Vec<f64> {
        let h = match root {
            Root::X => &self.h_x,
            Root::Y => &self.h_y,
        };
        h.iter().map(|&u| self.forest.node_of(u).expect("frontier node").weight).collect()
    }
}

pub fn default_w_min(n: usize) -> f64 {
    (n as f64).powf(-2.0 / 3.0)
}

pub fn default_theta(n: usize) -> f64 {
    let l = (n as f64).ln();
    1.0 / (n as f64 * l * l)
}

type Key = (Reverse<u64>, usize);

fn key(node: &ForestNode) -> Key {
    (Reverse(node.weight.to_bits()), node.half_edge)
}

fn check_args(space: &HalfEdgeSpace, x: usize, y: usize, t: usize, w_min: f64) -> Result<()> {
    let n = space.len();
    if x >= n || y >= n || x == y {
        return Err(Error::InvalidArgument(format!("need distinct roots below {n}, got {x}, {y}")));
    }
    if t % 2 == 1 {
        return Err(Error::InvalidArgument(format!("t must be even, got {t}")));
    }
    if !(w_min > 0.0 && w_min < 1.0) {
        return Err(Error::InvalidArgument(format!("w_min must lie in (0,1), got {w_min}")));
    }
    Ok(())
}

pub fn run_exposure<R: Rng + ?Sized>(
    space: &HalfEdgeSpace,
    x: usize,
    y: usize,
    t: usize,
    w_min: f64,
    rng: &mut R,
) -> Result<ExposureResult> {
    run_exposure_observed(space, x, y, t, w_min, rng, |_, _, _| {})
}

/// As [`run_exposure`], calling `observe` after every iteration.
pub fn run_exposure_observed<R, F>(
    space: &HalfEdgeSpace,
    x: usize,
    y: usize,
    t: usize,
    w_min: f64,
    rng: &mut R,
    mut observe: F,
) -> Result<ExposureResult>
where
    R: Rng + ?Sized,
    F: FnMut(&ExposureStep, &ExposureForest, &Pairing),
{
    check_args(space, x, y, t, w_min)?;
    let half = t / 2;
    let mut forest = ExposureForest::new(space.len());
    let mut pairing = Pairing::empty(space.len());
    let mut frontier: BTreeSet<Key> = BTreeSet::new();
    let selectable = |n: &ForestNode| n.height < half && n.weight > w_min;

    for (he, root) in [(x, Root::X), (y, Root::Y)] {
        let node = ForestNode { half_edge: he, parent: None, root, height: 0, weight: 1.0 };
        if selectable(&node) {
            frontier.insert(key(&node));
        }
        forest.add(node);
    }

    let mut steps = Vec::new();
    while let Some((_, z)) = frontier.pop_first() {
        let zi = forest.index_of(z).expect("frontier nodes are in the forest");
        let (w, height, root) = {
            let n = &forest.nodes[zi];
            (n.weight, n.height, n.root)
        };
        let m = pairing.pair_on_demand(z, rng)?;
        if let Some(mn) = forest.node_of(m) {
            frontier.remove(&key(mn));
        }
        let fresh = !forest.contains(m) && space.neighbours(m).all(|c| !forest.contains(c));
        if fresh {
            let cw = w / space.he_deg(m) as f64;
            for c in space.neighbours(m) {
                let node = ForestNode { half_edge: c, parent: Some(zi), root, height: height + 1, weight: cw };
                if selectable(&node) && !pairing.is_paired(c) {
                    frontier.insert(key(&node));
                }
                forest.add(node);
            }
        }
        let step = ExposureStep { selected: z, weight: w, mate: m, fresh };
        steps.push(step);
        observe(&step, &forest, &pairing);
    }

    let frontier_of = |root: Root| -> Vec<usize> {
        forest
            .nodes
            .iter()
            .filter(|n| n.root == root && n.height == half && !pairing.is_paired(n.half_edge))
            .map(|n| n.half_edge)
            .collect()
    };
    let h_x = frontier_of(Root::X);
    let h_y = frontier_of(Root::Y);
    Ok(ExposureResult {
        tau: steps.len(),
        forest,
        h_x,
        h_y,
        partial_pairing: pairing,
        steps,
        x,
        y,
        t,
        w_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedSums {
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "W_bar")]
    pub w_bar: f64,
}

/// Splits `Σ_{u,v} a_u b_v` by whether `a_u b_v <= θ`, using sorted prefix
/// sums of `b`.
pub fn truncated_sums_of(a: &[f64], b: &[f64], theta: f64) -> TruncatedSums {
    let mut sorted = b.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut prefix = Vec::with_capacity(sorted.len() + 1);
    prefix.push(0.0);
    for &v in &sorted {
        prefix.push(prefix.last().unwrap() + v);
    }
    let total = *prefix.last().unwrap();
    let (mut w, mut w_bar) = (0.0, 0.0);
    for &u in a {
        let k = sorted.partition_point(|&v| u * v <= theta);
        w += u * prefix[k];
        w_bar += u * (total - prefix[k]);
    }
    TruncatedSums { w, w_bar }
}

/// Quadratic reference for [`truncated_sums_of`].
pub fn truncated_sums_quadratic(a: &[f64], b: &[f64], theta: f64) -> TruncatedSums {
    let (mut w, mut w_bar) = (0.0, 0.0);
    for &u in a {
        for &v in b {
            if u * v <= theta {
                w += u * v;
            } else {
                w_bar += u * v;
            }
        }
    }
    TruncatedSums { w, w_bar }
}

pub fn truncated_sums(result: &ExposureResult, theta: f64) -> TruncatedSums {
    truncated_sums_of(&result.weights(Root::X), &result.weights(Root::Y), theta)
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub pt_lower: f64,
    pub pairing: Pairing,
    /// Number of half-edges paired during completion.
    pub residual: usize,
}

/// Completes the pairing uniformly and returns
/// `Σ_{u∈H_x, v∈H_y} w(u)w(v)·1{w(u)w(v) <= θ}·1{π(u) = v}`.
pub fn completion_estimate<R: Rng + ?Sized>(
    result: &ExposureResult,
    theta: f64,
    rng: &mut R,
) -> Result<Completion> {
    let mut pairing = result.partial_pairing.clone();
    let residual = pairing.unpaired_count();
    pairing.complete_uniformly(rng)?;
    let half = result.t / 2;
    let mut pt_lower = 0.0;
    for &u in &result.h_x {
        let wu = result.forest.node_of(u).expect("frontier node").weight;
        let v = pairing.mate_of(u);
        if let Some(nv) = result.forest.node_of(v) {
            if nv.root == Root::Y && nv.height == half && !result.partial_pairing.is_paired(v) {
                let p = wu * nv.weight;
                if p <= theta {
                    pt_lower += p;
                }
            }
        }
    }
    Ok(Completion { pt_lower, pairing, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplayReport {
    pub iterations: usize,
    pub tau: usize,
    pub tau_bound: f64,
    pub max_height: usize,
    pub max_height_weight: f64,
}

/// Re-runs the first stage from the recorded mates with a brute-force
/// selection rule, checking after every iteration that the recorded choice
/// is the argmax, weights at each height sum to at most 2, selected weights
/// never increase and `tau <= t/w_min`.
pub fn replay_check(space: &HalfEdgeSpace, result: &ExposureResult) -> Result<ReplayReport> {
    struct Node {
        he: usize,
        height: usize,
        weight: f64,
        parent: Option<usize>,
    }
    let (t, w_min) = (result.t, result.w_min);
    check_args(space, result.x, result.y, t, w_min)?;
    let half = t / 2;
    let fail = |msg: String| Err(Error::InvariantViolation(msg));
    let mut nodes = vec![
        Node { he: result.x, height: 0, weight: 1.0, parent: None },
        Node { he: result.y, height: 0, weight: 1.0, parent: None },
    ];
    let mut mate = vec![usize::MAX; space.len()];
    let mut last = f64::INFINITY;
    let mut max_height_weight: f64 = 2.0;
    let select = |nodes: &[Node], mate: &[usize]| -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, n) in nodes.iter().enumerate() {
            if n.height >= half || n.weight <= w_min || mate[n.he] != usize::MAX {
                continue;
            }
            best = match best {
                Some(b) if (nodes[b].weight, Reverse(nodes[b].he)) >= (n.weight, Reverse(n.he)) => Some(b),
                _ => Some(i),
            };
        }
        best
    };
    let tau_bound = t as f64 / w_min;

    for (k, step) in result.steps.iter().enumerate() {
        let Some(b) = select(&nodes, &mate) else {
            return fail(format!("iteration {k}: nothing selectable but a step was recorded"));
        };
        if nodes[b].he != step.selected {
            return fail(format!("iteration {k}: selected {} but argmax is {}", step.selected, nodes[b].he));
        }
        let (z, w, m) = (step.selected, nodes[b].weight, step.mate);
        if w > last {
            return fail(format!("iteration {k}: selected weight {w} exceeds previous {last}"));
        }
        last = w;
        if m == z || m >= space.len() || mate[m] != usize::MAX {
            return fail(format!("iteration {k}: recorded mate {m} was not available"));
        }
        mate[z] = m;
        mate[m] = z;
        let in_forest = |h: usize| nodes.iter().any(|n| n.he == h);
        let fresh = !in_forest(m) && space.neighbours(m).all(|c| !in_forest(c));
        if fresh != step.fresh {
            return fail(format!("iteration {k}: freshness mismatch"));
        }
        if fresh {
            let d = space.he_deg(m) as f64;
            let kids: Vec<Node> = space
                .neighbours(m)
                .map(|c| Node { he: c, height: nodes[b].height + 1, weight: w / d, parent: Some(b) })
                .collect();
            let kid_sum: f64 = kids.iter().map(|n| n.weight).sum();
            if (kid_sum - w).abs() > 1e-15 * w.max(1.0) * d {
                return fail(format!("iteration {k}: children carry {kid_sum}, parent {w}"));
            }
            nodes.extend(kids);
        }
        let mut sums = vec![0.0; half + 2];
        for n in &nodes {
            sums[n.height] += n.weight;
        }
        for (h, &s) in sums.iter().enumerate() {
            if s > 2.0 + 1e-12 {
                return fail(format!("iteration {k}: height {h} carries weight {s}"));
            }
            if h > 0 {
                max_height_weight = max_height_weight.max(s);
            }
        }
        if (k + 1) as f64 > tau_bound {
            return fail(format!("iteration {k}: tau exceeds t/w_min = {tau_bound}"));
        }
    }
    if let Some(b) = select(&nodes, &mate) {
        return fail(format!("stage ended with {} still selectable", nodes[b].he));
    }
    // Stored weights against the product along each path.
    for (i, n) in nodes.iter().enumerate() {
        let mut prod = 1.0;
        let mut cur = i;
        while let Some(p) = nodes[cur].parent {
            prod /= space.he_deg(nodes[cur].he) as f64;
            cur = p;
        }
        let stored = result.forest.node_of(n.he).map(|s| s.weight);
        if stored.map_or(true, |s| (s - prod).abs() > 1e-14) {
            return fail(format!("weight of {} differs from its path product", n.he));
        }
    }
    if nodes.len() != result.forest.len() {
        return fail("forest size differs from replay".into());
    }
    Ok(ReplayReport {
        iterations: result.steps.len(),
        tau: result.tau,
        tau_bound,
        max_height: nodes.iter().map(|n| n.height).max().unwrap_or(0),
        max_height_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::tests::seq;
    use crate::rng::stream;
    use crate::walk::distribution_at;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn zero_horizon_has_roots_only() {
        let space = HalfEdgeSpace::new(&seq(&[3, 3, 3, 3]));
        let r = run_exposure(&space, 0, 5, 0, 0.5, &mut stream(1, "exp", 0)).unwrap();
        assert_eq!(r.tau, 0);
        assert_eq!(r.forest.len(), 2);
        assert_eq!(r.h_x, vec![0]);
        assert_eq!(r.h_y, vec![5]);
        let ts = truncated_sums(&r, 1.0);
        assert_eq!((ts.w, ts.w_bar), (1.0, 0.0));
    }

    #[test]
    fn rejects_bad_arguments() {
        let space = HalfEdgeSpace::new(&seq(&[3, 3, 3, 3]));
        let mut rng = stream(1, "exp", 0);
        assert!(run_exposure(&space, 0, 0, 2, 0.5, &mut rng).is_err());
        assert!(run_exposure(&space, 0, 1, 3, 0.5, &mut rng).is_err());
        assert!(run_exposure(&space, 0, 1, 2, 1.0, &mut rng).is_err());
    }

    #[test]
    fn replay_on_small_instance() {
        let space = HalfEdgeSpace::new(&seq(&[3, 4, 4, 3]));
        assert_eq!(space.len(), 14);
        for s in 0..200 {
            let mut rng = stream(s, "exp-replay", 0);
            let x = rng.random_range(0..14);
            let y = (x + 1 + rng.random_range(0..13)) % 14;
            let r = run_exposure(&space, x, y, 4, default_w_min(14), &mut rng).unwrap();
            let rep = replay_check(&space, &r).unwrap();
            assert!(rep.max_height <= 2);
            assert!(r.forest.max_height() <= 2);
            assert!(r.tau as f64 <= 4.0 / default_w_min(14));
            for (i, n) in r.forest.nodes().iter().enumerate() {
                let prod: f64 = r.forest.path(i)[1..].iter().map(|&z| 1.0 / space.he_deg(z) as f64).product();
                assert!((n.weight - prod).abs() <= 1e-14);
                if !r.partial_pairing.is_paired(n.half_edge) {
                    assert!(n.height == 2 || n.weight <= r.w_min);
                }
            }
        }
    }

    #[test]
    fn replay_detects_tampering() {
        let space = HalfEdgeSpace::new(&seq(&[3, 4, 4, 3, 5, 5]));
        let mut r = run_exposure(&space, 0, 7, 6, 0.01, &mut stream(3, "exp", 0)).unwrap();
        assert!(r.steps.len() >= 2);
        r.steps.swap(0, 1);
        assert!(matches!(replay_check(&space, &r), Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn observer_sees_invariants_on_larger_instance() {
        let degrees: Vec<u32> = (0..2000).map(|i| 3 + (i % 4) as u32).collect();
        let space = HalfEdgeSpace::new(&seq(&degrees));
        let n = space.len();
        let w_min = default_w_min(n);
        let t = 12;
        let mut last = f64::INFINITY;
        let mut iters = 0;
        let r = run_exposure_observed(&space, 11, 4000, t, w_min, &mut stream(4, "exp", 0), |s, f, _| {
            assert!(s.weight <= last);
            last = s.weight;
            iters += 1;
            assert!(iters as f64 <= t as f64 / w_min);
            if iters % 50 == 0 {
                assert!(f.height_weight_sums().iter().all(|&h| h <= 2.0 + 1e-12));
            }
        })
        .unwrap();
        assert_eq!(iters, r.tau);
        assert!(!r.h_x.is_empty() && !r.h_y.is_empty());
        replay_check(&space, &r).unwrap();
    }

    #[test]
    fn pt_lower_bounded_by_exact_transition() {
        let mut violations = 0;
        for s in 0..150 {
            let mut rng = stream(s, "exp-bound", 0);
            let n_vert = rng.random_range(4..10);
            let mut d: Vec<u32> = (0..n_vert).map(|_| rng.random_range(3..6)).collect();
            if d.iter().sum::<u32>() % 2 == 1 {
                d[0] += 1;
            }
            let space = HalfEdgeSpace::new(&seq(&d));
            let n = space.len();
            let x = rng.random_range(0..n);
            let y = (x + 1 + rng.random_range(0..n - 1)) % n;
            let t = 2 * rng.random_range(1..4);
            let r = run_exposure(&space, x, y, t, 1e-3, &mut rng).unwrap();
            for theta in [1.0, 0.05, default_theta(n)] {
                let c = completion_estimate(&r, theta, &mut rng).unwrap();
                let exact = distribution_at(&space, &c.pairing, x, t).unwrap().mass()[c.pairing.mate_of(y)];
                if c.pt_lower > exact + 1e-12 {
                    violations += 1;
                }
            }
        }
        assert_eq!(violations, 0);
    }

    #[test]
    fn completion_mean_matches_truncated_sum() {
        let degrees: Vec<u32> = (0..30).map(|i| 3 + (i % 3) as u32).collect();
        let space = HalfEdgeSpace::new(&seq(&degrees));
        let mut rng = stream(6, "exp-mean", 0);
        let r = run_exposure(&space, 0, 50, 4, 0.02, &mut rng).unwrap();
        let theta = 0.02;
        let ts = truncated_sums(&r, theta);
        let w = ts.w;
        assert!(w > 0.0 && ts.w_bar > 0.0);
        let trials = 20_000;
        let mut xs = Vec::with_capacity(trials);
        let mut residual = 0;
        for _ in 0..trials {
            let c = completion_estimate(&r, theta, &mut rng).unwrap();
            residual = c.residual;
            xs.push(c.pt_lower * (residual - 1) as f64);
        }
        let mean = xs.iter().sum::<f64>() / trials as f64;
        let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        assert!((mean - w).abs() <= 3.0 * (var / trials as f64).sqrt(), "{mean} vs {w}");
        assert_eq!(residual, r.partial_pairing.unpaired_count());
    }

    #[test]
    fn empty_frontier_gives_zero() {
        let space = HalfEdgeSpace::new(&seq(&[3, 3, 3, 3]));
        let mut rng = stream(7, "exp", 0);
        // Weight 1/2 per step: with w_min = 0.6 the roots are the only
        // selectable nodes and their children never reach height 2.
        let r = run_exposure(&space, 0, 6, 4, 0.6, &mut rng).unwrap();
        assert!(r.h_x.is_empty() && r.h_y.is_empty());
        assert_eq!(completion_estimate(&r, 1.0, &mut rng).unwrap().pt_lower, 0.0);
        assert_eq!(truncated_sums(&r, 1.0), TruncatedSums { w: 0.0, w_bar: 0.0 });
    }

    proptest! {
        #[test]
        fn sorted_sums_match_quadratic(
            a in prop::collection::vec(1e-6f64..1.0, 0..40),
            b in prop::collection::vec(1e-6f64..1.0, 0..40),
            theta in 1e-6f64..1.0,
        ) {
            let fast = truncated_sums_of(&a, &b, theta);
            let slow = truncated_sums_quadratic(&a, &b, theta);
            prop_assert!((fast.w - slow.w).abs() <= 1e-12);
            prop_assert!((fast.w_bar - slow.w_bar).abs() <= 1e-12);
            let total = a.iter().sum::<f64>() * b.iter().sum::<f64>();
            prop_assert!((fast.w + fast.w_bar - total).abs() <= 1e-12);
            let all = truncated_sums_of(&a, &b, 1.0);
            prop_assert!(all.w_bar == 0.0);
            prop_assert!(truncated_sums_of(&a, &b, 0.0).w == 0.0);
        }
    }
}
