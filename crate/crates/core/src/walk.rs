//! The non-backtracking walk on half-edges.
//!
//! From state `x` the walk moves to a uniform neighbour of `mate(x)`, so
//! `P(x, y) = 1 / deg(mate(x))` when `y` is a neighbour of `mate(x)`.
//! Exact evolution pushes the mass of every `x` through its mate: the mass
//! entering vertex `v` through slot `z = mate(x)` is split evenly over the
//! other `deg(z)` slots of `v`. Each output entry is a sum over a fixed slot
//! order, so results are bit-identical run to run and independent of how
//! many threads evaluate distinct starts.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{sum, CompensatedSum};
use crate::pairing::{HalfEdgeSpace, Pairing};

/// Mass drift beyond this is reported as an error, never renormalised.
pub const MASS_TOLERANCE: f64 = 1e-9;

// Above this degree the per-vertex push uses total-minus-own instead of the
// quadratic loop.
const DIRECT_PUSH_MAX_DEGREE: usize = 32;

/// A probability vector over half-edges after `t` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    mass: Vec<f64>,
    t: usize,
}

impl Distribution {
    pub fn point(n: usize, x: usize) -> Self {
        let mut mass = vec![0.0; n];
        mass[x] = 1.0;
        Self { mass, t: 0 }
    }

    pub fn uniform(n: usize) -> Self {
        Self { mass: vec![1.0 / n as f64; n], t: 0 }
    }

    /// Wraps a vector; entries must be non-negative and sum to 1.
    pub fn from_vec(mass: Vec<f64>, t: usize) -> Result<Self> {
        if mass.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidArgument("negative or NaN mass".into()));
        }
        let total = sum(&mass);
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::MassDrift(total));
        }
        Ok(Self { mass, t })
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn into_mass(self) -> Vec<f64> {
        self.mass
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total(&self) -> f64 {
        sum(&self.mass)
    }
}

fn check_walkable(space: &HalfEdgeSpace, pairing: &Pairing) -> Result<()> {
    pairing.ensure_complete()?;
    if pairing.len() != space.len() {
        return Err(Error::InvalidArgument(format!(
            "pairing has {} entries for {} half-edges",
            pairing.len(),
            space.len()
        )));
    }
    if let Some(v) = (0..space.vertex_count()).find(|&v| space.degree(v) < 2) {
        return Err(Error::DegreeTooSmall { vertex: v, degree: space.degree(v) as u32, min: 2 });
    }
    Ok(())
}

/// One step of `src` into `dst`; `share` is scratch of the same length.
fn push(space: &HalfEdgeSpace, pairing: &Pairing, src: &[f64], share: &mut [f64], dst: &mut [f64]) {
    let mates = pairing.mates();
    for (z, s) in share.iter_mut().enumerate() {
        *s = src[mates[z]] / space.he_deg(z) as f64;
    }
    for v in 0..space.vertex_count() {
        let r = space.range(v);
        let slots = &share[r.clone()];
        let out = &mut dst[r];
        if slots.len() <= DIRECT_PUSH_MAX_DEGREE {
            for (j, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, &s) in slots.iter().enumerate() {
                    if i != j {
                        acc += s;
                    }
                }
                *o = acc;
            }
        } else {
            let total = slots.iter().copied().collect::<CompensatedSum>().value();
            for (o, &s) in out.iter_mut().zip(slots) {
                *o = (total - s).max(0.0);
            }
        }
    }
}

/// Double-buffered exact evolution from one distribution.
pub struct Evolver<'a> {
    space: &'a HalfEdgeSpace,
    pairing: &'a Pairing,
    cur: Vec<f64>,
    next: Vec<f64>,
    share: Vec<f64>,
    t: usize,
    max_drift: f64,
}

impl<'a> Evolver<'a> {
    pub fn new(space: &'a HalfEdgeSpace, pairing: &'a Pairing, start: Distribution) -> Result<Self> {
        check_walkable(space, pairing)?;
        if start.len() != space.len() {
            return Err(Error::InvalidArgument("distribution length differs from N".into()));
        }
        let n = space.len();
        Ok(Self {
            space,
            pairing,
            t: start.t,
            cur: start.mass,
            next: vec![0.0; n],
            share: vec![0.0; n],
            max_drift: 0.0,
        })
    }

    pub fn from_point(space: &'a HalfEdgeSpace, pairing: &'a Pairing, x: usize) -> Result<Self> {
        if x >= space.len() {
            return Err(Error::InvalidArgument(format!("half-edge {x} out of range")));
        }
        Self::new(space, pairing, Distribution::point(space.len(), x))
    }

    /// Advances one step, checking mass conservation.
    pub fn step(&mut self) -> Result<()> {
        push(self.space, self.pairing, &self.cur, &mut self.share, &mut self.next);
        std::mem::swap(&mut self.cur, &mut self.next);
        self.t += 1;
        let drift = (sum(&self.cur) - 1.0).abs();
        self.max_drift = self.max_drift.max(drift);
        if drift > MASS_TOLERANCE {
            return Err(Error::MassDrift(1.0 + drift));
        }
        Ok(())
    }

    pub fn mass(&self) -> &[f64] {
        &self.cur
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Largest `|Σ mass - 1|` seen after any step so far.
    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    pub fn tv(&self) -> f64 {
        tv_of(&self.cur)
    }

    pub fn into_distribution(self) -> Distribution {
        Distribution { mass: self.cur, t: self.t }
    }
}

/// `dist · P`.
pub fn step(dist: &Distribution, space: &HalfEdgeSpace, pairing: &Pairing) -> Result<Distribution> {
    let mut ev = Evolver::new(space, pairing, dist.clone())?;
    ev.step()?;
    Ok(ev.into_distribution())
}

/// `P^t(x, ·)`.
pub fn distribution_at(
    space: &HalfEdgeSpace,
    pairing: &Pairing,
    x: usize,
    t: usize,
) -> Result<Distribution> {
    let mut ev = Evolver::from_point(space, pairing, x)?;
    for _ in 0..t {
        ev.step()?;
    }
    Ok(ev.into_distribution())
}

fn tv_of(mass: &[f64]) -> f64 {
    let u = 1.0 / mass.len() as f64;
    0.5 * mass.iter().map(|&p| (p - u).abs()).collect::<CompensatedSum>().value()
}

/// Half-L1 distance to the uniform law on the `dist.len()` half-edges.
pub fn tv_distance(dist: &Distribution) -> f64 {
    tv_of(&dist.mass)
}

/// Distance-to-uniform curves for a set of starts. `d_max` is the worst
/// case over the given starts only (a sampled worst case when the starts do
/// not cover every half-edge).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvCurve {
    pub starts: Vec<usize>,
    /// `per_start[i][t]`.
    pub per_start: Vec<Vec<f64>>,
    pub d_max: Vec<f64>,
    pub d_mean: Vec<f64>,
    /// Largest mass drift observed over all evolutions.
    pub max_mass_drift: f64,
}

impl TvCurve {
    pub fn t_max(&self) -> usize {
        self.d_max.len() - 1
    }

    pub fn d(&self, t: usize) -> f64 {
        self.d_max[t]
    }

    /// `(t, d_max(t))` pairs.
    pub fn points(&self) -> Vec<(usize, f64)> {
        self.d_max.iter().copied().enumerate().collect()
    }

    pub fn mixing_time(&self, eps: f64) -> Result<usize> {
        mixing_time(self, eps)
    }
}

/// Evolves every start for `t_max` steps. Starts run in parallel; the
/// result does not depend on the thread count.
pub fn tv_curve(
    space: &HalfEdgeSpace,
    pairing: &Pairing,
    starts: &[usize],
    t_max: usize,
) -> Result<TvCurve> {
    if starts.is_empty() {
        return Err(Error::InvalidArgument("no start half-edges".into()));
    }
    check_walkable(space, pairing)?;
    let runs: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|&x| {
            let mut ev = Evolver::from_point(space, pairing, x)?;
            let mut curve = Vec::with_capacity(t_max + 1);
            curve.push(ev.tv());
            for _ in 0..t_max {
                ev.step()?;
                curve.push(ev.tv());
            }
            Ok((curve, ev.max_drift()))
        })
        .collect::<Result<_>>()?;
    let max_mass_drift = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    let per_start: Vec<Vec<f64>> = runs.into_iter().map(|r| r.0).collect();
    let d_max = (0..=t_max)
        .map(|t| per_start.iter().map(|c| c[t]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let d_mean = (0..=t_max)
        .map(|t| per_start.iter().map(|c| c[t]).sum::<f64>() / per_start.len() as f64)
        .collect();
    Ok(TvCurve { starts: starts.to_vec(), per_start, d_max, d_mean, max_mass_drift })
}

/// Smallest `t` with `d(t) < eps`.
pub fn mixing_time(curve: &TvCurve, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("ε = {eps} outside (0, 1)")));
    }
    curve
        .d_max
        .iter()
        .position(|&d| d < eps)
        .ok_or(Error::CurveTooShort { eps, t_max: curve.t_max() })
}

/// A quenched trajectory `X_0 = x, …, X_t`.
pub fn walk<R: Rng + ?Sized>(
    space: &HalfEdgeSpace,
    pairing: &Pairing,
    x: usize,
    t: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_walkable(space, pairing)?;
    let mut path = Vec::with_capacity(t + 1);
    let mut cur = x;
    path.push(cur);
    for _ in 0..t {
        let z = pairing.mate_of(cur);
        cur = space.neighbour(z, rng.random_range(0..space.he_deg(z)));
        path.push(cur);
    }
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub pairs_checked: usize,
    pub exhaustive: bool,
    pub columns_checked: usize,
    pub max_column_error: f64,
}

/// Largest `N` for which every `(x, y)` is checked.
pub const EXHAUSTIVE_SYMMETRY_MAX: usize = 64;

// Denominator of P(x, y) read straight off the mate array, None when zero.
fn transition(space: &HalfEdgeSpace, mate: &[usize], x: usize, y: usize) -> Option<usize> {
    let z = *mate.get(x)?;
    (z < space.len() && space.are_neighbours(z, y)).then(|| space.he_deg(z))
}

/// Checks `P(mate(y), mate(x)) = P(x, y)` as exact rationals `1/deg`, on
/// every pair when `N <= 64` and on `sample_size` random pairs otherwise,
/// plus unit column sums for every column.
pub fn verify_symmetry<R: Rng + ?Sized>(
    space: &HalfEdgeSpace,
    pairing: &Pairing,
    sample_size: usize,
    rng: &mut R,
) -> Result<SymmetryReport> {
    let n = space.len();
    let mate = pairing.mates();
    if mate.len() != n {
        return Err(Error::InvalidArgument("pairing length differs from N".into()));
    }
    let check = |x: usize, y: usize| -> Result<()> {
        let (mx, my) = (mate[x], mate[y]);
        if mx >= n || my >= n {
            return Err(Error::SymmetryViolation { x, y, detail: "unpaired half-edge".into() });
        }
        let fwd = transition(space, mate, x, y);
        let back = transition(space, mate, my, mx);
        if fwd != back {
            return Err(Error::SymmetryViolation {
                x,
                y,
                detail: format!("P(x,y) = 1/{fwd:?}, P(π(y),π(x)) = 1/{back:?}"),
            });
        }
        Ok(())
    };
    let exhaustive = n <= EXHAUSTIVE_SYMMETRY_MAX;
    let mut pairs_checked = 0;
    if exhaustive {
        for x in 0..n {
            for y in 0..n {
                check(x, y)?;
                pairs_checked += 1;
            }
        }
    } else {
        for _ in 0..sample_size {
            let x = rng.random_range(0..n);
            let y = if rng.random_bool(0.5) && mate[x] < n {
                let z = mate[x];
                space.neighbour(z, rng.random_range(0..space.he_deg(z)))
            } else {
                rng.random_range(0..n)
            };
            check(x, y)?;
            pairs_checked += 1;
        }
    }
    let mut cols = vec![0.0; n];
    for x in 0..n {
        let z = mate[x];
        if z >= n {
            return Err(Error::SymmetryViolation { x, y: x, detail: "unpaired half-edge".into() });
        }
        let w = 1.0 / space.he_deg(z) as f64;
        for y in space.neighbours(z) {
            cols[y] += w;
        }
    }
    let mut max_column_error: f64 = 0.0;
    for (y, &c) in cols.iter().enumerate() {
        let err = (c - 1.0).abs();
        if err > 1e-12 {
            return Err(Error::SymmetryViolation { x: y, y, detail: format!("column sum {c}") });
        }
        max_column_error = max_column_error.max(err);
    }
    Ok(SymmetryReport { pairs_checked, exhaustive, columns_checked: n, max_column_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::DegreeSequence;
    use crate::pairing::uniform_pairing;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn k4() -> (HalfEdgeSpace, Pairing) {
        crate::pairing::tests::k4()
    }

    fn dense(space: &HalfEdgeSpace, p: &Pairing) -> Vec<Vec<f64>> {
        let n = space.len();
        let mut m = vec![vec![0.0; n]; n];
        for (x, row) in m.iter_mut().enumerate() {
            let z = p.mate_of(x);
            for y in 0..n {
                if space.are_neighbours(z, y) {
                    row[y] = 1.0 / space.he_deg(z) as f64;
                }
            }
        }
        m
    }

    fn dense_row_power(m: &[Vec<f64>], x: usize, t: usize) -> Vec<f64> {
        let n = m.len();
        let mut row = vec![0.0; n];
        row[x] = 1.0;
        for _ in 0..t {
            let mut next = vec![0.0; n];
            for (k, &r) in row.iter().enumerate() {
                for y in 0..n {
                    next[y] += r * m[k][y];
                }
            }
            row = next;
        }
        row
    }

    fn l1(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    }

    #[test]
    fn uniform_is_fixed() {
        let (s, p) = k4();
        let u = Distribution::uniform(12);
        let out = step(&u, &s, &p).unwrap();
        assert!(out.mass().iter().all(|&m| (m - 1.0 / 12.0).abs() < 1e-14));
    }

    #[test]
    fn point_mass_spreads_over_neighbours_of_mate() {
        let (s, p) = k4();
        for x in 0..12 {
            let out = step(&Distribution::point(12, x), &s, &p).unwrap();
            let z = p.mate_of(x);
            for y in 0..12 {
                let expected = if s.are_neighbours(z, y) { 0.5 } else { 0.0 };
                assert_eq!(out.mass()[y], expected);
            }
            assert_eq!(out.t(), 1);
        }
    }

    #[test]
    fn k4_matches_dense_powers() {
        let (s, p) = k4();
        let m = dense(&s, &p);
        for x in 0..12 {
            assert_eq!(distribution_at(&s, &p, x, 0).unwrap().mass(), Distribution::point(12, x).mass());
            for t in [1, 2, 3, 5] {
                let d = distribution_at(&s, &p, x, t).unwrap();
                assert!(l1(d.mass(), &dense_row_power(&m, x, t)) < 1e-12);
            }
        }
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&Distribution::uniform(10)), 0.0);
        assert!((tv_distance(&Distribution::point(10, 3)) - 0.9).abs() < 1e-15);
        let (s, p) = k4();
        let m = dense(&s, &p);
        let oracle = dense_row_power(&m, 0, 3);
        let expect = 0.5 * oracle.iter().map(|q| (q - 1.0 / 12.0).abs()).sum::<f64>();
        assert!((tv_distance(&distribution_at(&s, &p, 0, 3).unwrap()) - expect).abs() < 1e-14);
    }

    #[test]
    fn curve_examples() {
        let (s, p) = k4();
        let c = tv_curve(&s, &p, &[4], 0).unwrap();
        assert_eq!(c.points(), vec![(0, 1.0 - 1.0 / 12.0)]);

        let all: Vec<usize> = (0..12).collect();
        let full = tv_curve(&s, &p, &all, 8).unwrap();
        let sub = tv_curve(&s, &p, &[0, 5], 8).unwrap();
        let m = dense(&s, &p);
        for t in 0..=8 {
            assert!(sub.d(t) <= full.d(t));
            let oracle = (0..12)
                .map(|x| {
                    0.5 * dense_row_power(&m, x, t).iter().map(|q| (q - 1.0 / 12.0).abs()).sum::<f64>()
                })
                .fold(0.0, f64::max);
            assert!((full.d(t) - oracle).abs() < 1e-12);
        }
        assert!(matches!(tv_curve(&s, &p, &[], 3), Err(Error::InvalidArgument(_))));
    }

    fn synthetic(d: Vec<f64>) -> TvCurve {
        TvCurve { starts: vec![0], per_start: vec![d.clone()], d_mean: d.clone(), d_max: d, max_mass_drift: 0.0 }
    }

    #[test]
    fn mixing_time_examples() {
        assert_eq!(mixing_time(&synthetic(vec![0.1, 0.05]), 0.25), Ok(0));
        let c = synthetic(vec![0.99, 0.9, 0.8, 0.6, 0.3, 0.2, 0.1]);
        assert_eq!(mixing_time(&c, 0.25), Ok(5));
        assert_eq!(
            mixing_time(&c, 0.05),
            Err(Error::CurveTooShort { eps: 0.05, t_max: 6 })
        );
        // K4 against the dense oracle.
        let (s, p) = k4();
        let all: Vec<usize> = (0..12).collect();
        let curve = tv_curve(&s, &p, &all, 30).unwrap();
        let crossing = curve.d_max.iter().position(|&d| d < 0.25).unwrap();
        assert_eq!(mixing_time(&curve, 0.25).unwrap(), crossing);
    }

    #[test]
    fn walk_zero_and_rules() {
        let (s, p) = k4();
        let mut rng = stream(1, "walk", 0);
        assert_eq!(walk(&s, &p, 3, 0, &mut rng).unwrap(), vec![3]);
        let path = walk(&s, &p, 3, 50, &mut rng).unwrap();
        for w in path.windows(2) {
            assert!(s.are_neighbours(p.mate_of(w[0]), w[1]));
        }
    }

    #[test]
    fn walk_endpoint_law_matches_exact() {
        let (s, p) = k4();
        let samples = 100_000;
        for t in [1, 5] {
            let exact = distribution_at(&s, &p, 0, t).unwrap();
            let mut rng = stream(2, "walk", t as u64);
            let mut counts = vec![0usize; 12];
            for _ in 0..samples {
                counts[*walk(&s, &p, 0, t, &mut rng).unwrap().last().unwrap()] += 1;
            }
            for y in 0..12 {
                let q = exact.mass()[y];
                let f = counts[y] as f64 / samples as f64;
                let sd = (q * (1.0 - q) / samples as f64).sqrt();
                assert!((f - q).abs() <= 3.0 * sd + 1e-12, "t={t} y={y} f={f} q={q}");
            }
        }
    }

    #[test]
    fn symmetry_checks() {
        let (s, p) = k4();
        let mut rng = stream(3, "sym", 0);
        let r = verify_symmetry(&s, &p, 0, &mut rng).unwrap();
        assert!(r.exhaustive);
        assert_eq!(r.pairs_checked, 144);

        let s2 = HalfEdgeSpace::new(&DegreeSequence::validate(vec![3, 4, 5, 4], false).unwrap());
        let p2 = uniform_pairing(&s2, &mut rng).unwrap();
        assert!(verify_symmetry(&s2, &p2, 0, &mut rng).is_ok());

        let mut bad = p.mates().to_vec();
        // 0 -> 1's mate while 1's mate still points at 1.
        bad[0] = p.mate_of(1);
        let corrupted = Pairing::from_mates_unchecked(bad);
        assert!(matches!(
            verify_symmetry(&s, &corrupted, 0, &mut rng),
            Err(Error::SymmetryViolation { .. })
        ));
    }

    #[test]
    fn sampled_symmetry_on_large_instance() {
        let seq = DegreeSequence::validate((0..500).map(|i| 3 + (i % 4)).collect(), false).unwrap();
        let s = HalfEdgeSpace::new(&seq);
        let mut rng = stream(4, "sym", 0);
        let p = uniform_pairing(&s, &mut rng).unwrap();
        let r = verify_symmetry(&s, &p, 10_000, &mut rng).unwrap();
        assert!(!r.exhaustive);
        assert_eq!(r.pairs_checked, 10_000);
    }

    #[test]
    fn incomplete_pairing_rejected() {
        let (s, _) = k4();
        let p = Pairing::empty(12);
        assert!(matches!(
            step(&Distribution::uniform(12), &s, &p),
            Err(Error::IncompletePairing { .. })
        ));
    }

    #[test]
    fn high_degree_vertices_use_total_minus_own() {
        let s = HalfEdgeSpace::new(&DegreeSequence::validate(vec![40, 40, 3, 3], false).unwrap());
        let p = uniform_pairing(&s, &mut stream(9, "big", 0)).unwrap();
        let m = dense(&s, &p);
        let d = distribution_at(&s, &p, 0, 4).unwrap();
        assert!(l1(d.mass(), &dense_row_power(&m, 0, 4)) < 1e-12);
    }

    proptest! {
        #[test]
        fn per_start_tv_is_monotone(seed in any::<u64>(), n in 4usize..30) {
            let degs: Vec<u32> = (0..n).map(|i| 3 + (i as u32 * 7 + seed as u32) % 4).collect();
            let mut degs = degs;
            if degs.iter().map(|&d| d as u64).sum::<u64>() % 2 == 1 { degs[0] += 1; }
            let s = HalfEdgeSpace::new(&DegreeSequence::validate(degs, false).unwrap());
            let p = uniform_pairing(&s, &mut stream(seed, "prop", 0)).unwrap();
            let starts: Vec<usize> = (0..s.len()).step_by(3).collect();
            let c = tv_curve(&s, &p, &starts, 25).unwrap();
            for curve in &c.per_start {
                for w in curve.windows(2) {
                    prop_assert!(w[1] <= w[0] + 1e-9);
                }
            }
            prop_assert!(c.max_mass_drift <= 1e-12);
        }
    }
}
