//! Annealed walk/pairing co-generation and its coupling with IID uniform
//! half-edges.
//!
//! At step `k` a uniform half-edge `u` and a uniform neighbour `s` of `u`
//! are drawn; `s` is the IID shadow `X⋆_k`, uniform on all half-edges. While
//! the coupling holds, the walk pairs `X_{k-1}` with `u` and moves to `s`.
//! The coupling breaks the first time `u` is already paired (or is `X_{k-1}`
//! itself), or `s` is already paired. On a mate collision the walk redraws
//! its mate uniformly among the other unpaired half-edges, which keeps the
//! walk exactly annealed; after the break both processes run independently.

use rand::Rng;
use serde::Serialize;

use crate::degree::DegreeStats;
use crate::error::{Error, Result};
use crate::gaussian::gaussian_tail;
use crate::pairing::{HalfEdgeSpace, Pairing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    /// The uniform half-edge drawn as mate was unavailable.
    MateCollision,
    /// The uniform neighbour chosen next was already paired.
    NeighbourCollision,
}

#[derive(Debug, Clone)]
pub struct AnnealedRun {
    /// `X_0, …, X_t`.
    pub trajectory: Vec<usize>,
    /// `X⋆_1, …, X⋆_t` (index `k - 1` holds `X⋆_k`).
    pub iid_shadow: Vec<usize>,
    pub failure_time: Option<usize>,
    pub failure_cause: Option<FailureCause>,
    pub partial_pairing: Pairing,
}

/// Reusable state for many annealed runs on one half-edge space.
pub struct AnnealedSampler<'a> {
    space: &'a HalfEdgeSpace,
    pairing: Pairing,
    formed: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Failure {
    pub time: usize,
    pub cause: FailureCause,
}

impl<'a> AnnealedSampler<'a> {
    pub fn new(space: &'a HalfEdgeSpace) -> Self {
        Self { space, pairing: Pairing::empty(space.len()), formed: Vec::new() }
    }

    fn reset(&mut self) {
        for x in self.formed.drain(..).rev() {
            self.pairing.unpair(x).expect("recorded pair");
        }
    }

    fn pair_recorded(&mut self, x: usize, y: usize) {
        self.pairing.pair(x, y).expect("both unpaired");
        self.formed.push(x);
    }

    /// One run of length `t` from `x` on a fresh pairing. `visit(k, X_k,
    /// X⋆_k)` is called for `k = 1..=t`.
    pub fn run<R, F>(&mut self, x: usize, t: usize, rng: &mut R, mut visit: F) -> Result<Option<Failure>>
    where
        R: Rng + ?Sized,
        F: FnMut(usize, usize, usize),
    {
        self.reset();
        let space = self.space;
        let n = space.len();
        if x >= n {
            return Err(Error::InvalidArgument(format!("half-edge {x} out of range")));
        }
        let mut failure: Option<Failure> = None;
        let mut prev = x;
        for k in 1..=t {
            let u = rng.random_range(0..n);
            let shadow = space.neighbour(u, rng.random_range(0..space.he_deg(u)));
            let next = if let Some(m) = self.pairing.mate(prev) {
                failure.get_or_insert(Failure { time: k, cause: FailureCause::NeighbourCollision });
                space.neighbour(m, rng.random_range(0..space.he_deg(m)))
            } else if failure.is_none() && u != prev && !self.pairing.is_paired(u) {
                self.pair_recorded(prev, u);
                if self.pairing.is_paired(shadow) {
                    failure = Some(Failure { time: k, cause: FailureCause::NeighbourCollision });
                }
                shadow
            } else {
                failure.get_or_insert(Failure { time: k, cause: FailureCause::MateCollision });
                let m = self.pairing.pair_on_demand(prev, rng)?;
                self.formed.push(prev);
                space.neighbour(m, rng.random_range(0..space.he_deg(m)))
            };
            visit(k, next, shadow);
            prev = next;
        }
        Ok(failure)
    }

    pub fn pairing(&self) -> &Pairing {
        &self.pairing
    }
}

/// Walk of length `t` from `x`, revealing pairs as needed, with its IID
/// shadow and the coupling failure time.
pub fn annealed_walk<R: Rng + ?Sized>(
    space: &HalfEdgeSpace,
    x: usize,
    t: usize,
    rng: &mut R,
) -> Result<AnnealedRun> {
    let mut sampler = AnnealedSampler::new(space);
    let mut trajectory = Vec::with_capacity(t + 1);
    let mut iid_shadow = Vec::with_capacity(t);
    trajectory.push(x);
    let failure = sampler.run(x, t, rng, |_, next, shadow| {
        trajectory.push(next);
        iid_shadow.push(shadow);
    })?;
    Ok(AnnealedRun {
        trajectory,
        iid_shadow,
        failure_time: failure.map(|f| f.time),
        failure_cause: failure.map(|f| f.cause),
        partial_pairing: sampler.pairing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReport {
    #[serde(rename = "N")]
    pub half_edges: usize,
    pub t: usize,
    pub replicates: usize,
    pub failures: usize,
    pub mate_collisions: usize,
    pub neighbour_collisions: usize,
    pub empirical: f64,
    /// `2t²/N`.
    pub bound: f64,
    /// `3·√(p̂(1-p̂)/replicates)`.
    pub mc_slack: f64,
    pub pass: bool,
    /// Empirical `P(T <= k)` for `k = 1..=t`.
    pub cdf: Vec<f64>,
}

/// Estimates `P(T <= t)` over `replicates` runs from uniform starts and
/// compares it with `2t²/N` (also at every intermediate time).
pub fn coupling_experiment<R: Rng + ?Sized>(
    space: &HalfEdgeSpace,
    t: usize,
    replicates: usize,
    rng: &mut R,
) -> Result<CouplingReport> {
    if replicates == 0 {
        return Err(Error::InvalidArgument("replicates must be positive".into()));
    }
    let n = space.len();
    let mut sampler = AnnealedSampler::new(space);
    let mut hist = vec![0usize; t + 1];
    let (mut mate_c, mut nb_c) = (0, 0);
    for _ in 0..replicates {
        let x = rng.random_range(0..n);
        if let Some(f) = sampler.run(x, t, rng, |_, _, _| {})? {
            hist[f.time] += 1;
            match f.cause {
                FailureCause::MateCollision => mate_c += 1,
                FailureCause::NeighbourCollision => nb_c += 1,
            }
        }
    }
    let mut cdf = Vec::with_capacity(t);
    let mut acc = 0;
    for &h in &hist[1..] {
        acc += h;
        cdf.push(acc as f64 / replicates as f64);
    }
    let failures = acc;
    let empirical = failures as f64 / replicates as f64;
    let bound = 2.0 * (t * t) as f64 / n as f64;
    let mc_slack = 3.0 * (empirical * (1.0 - empirical) / replicates as f64).sqrt();
    Ok(CouplingReport {
        half_edges: n,
        t,
        replicates,
        failures,
        mate_collisions: mate_c,
        neighbour_collisions: nb_c,
        empirical,
        bound,
        mc_slack,
        pass: empirical <= bound + mc_slack,
        cdf,
    })
}

/// `ln deg(x)` for every possible half-edge degree of a space.
#[derive(Debug, Clone)]
pub struct LogDegrees {
    table: Vec<f64>,
}

impl LogDegrees {
    pub fn new(space: &HalfEdgeSpace) -> Self {
        let max = space.max_degree();
        Self { table: (0..max.max(1)).map(|d| (d as f64).ln()).collect() }
    }

    #[inline]
    pub fn of(&self, space: &HalfEdgeSpace, x: usize) -> f64 {
        self.table[space.he_deg(x)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogWeightSample {
    /// `Σ_{k=1}^t ln deg(X⋆_k)`.
    pub s: f64,
    pub t: usize,
}

fn draw_log_weight<R: Rng + ?Sized>(
    space: &HalfEdgeSpace,
    logs: &LogDegrees,
    t: usize,
    rng: &mut R,
) -> f64 {
    let n = space.len();
    (0..t).map(|_| logs.of(space, rng.random_range(0..n))).sum()
}

/// Minus the log-weight of `t` IID uniform half-edges.
pub fn iid_log_weight<R: Rng + ?Sized>(space: &HalfEdgeSpace, t: usize, rng: &mut R) -> LogWeightSample {
    let logs = LogDegrees::new(space);
    LogWeightSample { s: draw_log_weight(space, &logs, t, rng), t }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerryEsseenReport {
    pub t: usize,
    pub theta: f64,
    /// Fraction of samples with `∏ 1/deg > θ`, i.e. `s < -ln θ`.
    pub empirical: f64,
    /// `Φ((μt + ln θ)/(σ√t))`.
    pub gaussian: f64,
    /// `ϱ/(σ³√t)`.
    pub be_bound: f64,
    /// `3·√(1/(4·samples))`.
    pub mc_slack: f64,
    pub pass: bool,
}

/// Compares the IID tail `P(∏ 1/deg(X⋆_k) > θ)` with its Gaussian
/// approximation, allowing the Berry-Esseen error plus Monte Carlo noise.
pub fn berry_esseen_check<R: Rng + ?Sized>(
    stats: &DegreeStats,
    space: &HalfEdgeSpace,
    t: usize,
    theta: f64,
    samples: usize,
    rng: &mut R,
) -> Result<BerryEsseenReport> {
    if stats.sigma2 <= 0.0 {
        return Err(Error::DegenerateSigma);
    }
    if t == 0 || samples == 0 || !(theta > 0.0) {
        return Err(Error::InvalidArgument("need t >= 1, samples >= 1, θ > 0".into()));
    }
    let logs = LogDegrees::new(space);
    let threshold = -theta.ln();
    let hits = (0..samples)
        .filter(|_| draw_log_weight(space, &logs, t, rng) < threshold)
        .count();
    let empirical = hits as f64 / samples as f64;
    let sigma = stats.sigma();
    let rt = (t as f64).sqrt();
    let gaussian = gaussian_tail((stats.mu * t as f64 + theta.ln()) / (sigma * rt));
    let be_bound = stats.rho / (sigma.powi(3) * rt);
    let mc_slack = 3.0 * (1.0 / (4.0 * samples as f64)).sqrt();
    Ok(BerryEsseenReport {
        t,
        theta,
        empirical,
        gaussian,
        be_bound,
        mc_slack,
        pass: (empirical - gaussian).abs() <= be_bound + mc_slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundEstimate {
    /// Annealed `P(∏_{k=1}^t 1/deg(X_k) > θ)`.
    pub probability: f64,
    /// `1/(θN)`.
    pub correction: f64,
    /// `probability - correction`, clamped to `[0, 1]`.
    pub estimate: f64,
}

/// Monte Carlo version of the annealed lower bound on `E[D_x(t)]`.
pub fn lower_bound_estimate<R: Rng + ?Sized>(
    space: &HalfEdgeSpace,
    x: usize,
    t: usize,
    theta: f64,
    samples: usize,
    rng: &mut R,
) -> Result<LowerBoundEstimate> {
    if t == 0 || samples == 0 || !(theta > 0.0) {
        return Err(Error::InvalidArgument("need t >= 1, samples >= 1, θ > 0".into()));
    }
    let logs = LogDegrees::new(space);
    let threshold = -theta.ln();
    let mut sampler = AnnealedSampler::new(space);
    let mut hits = 0usize;
    for _ in 0..samples {
        let mut s = 0.0;
        sampler.run(x, t, rng, |_, next, _| s += logs.of(space, next))?;
        if s < threshold {
            hits += 1;
        }
    }
    let probability = hits as f64 / samples as f64;
    let correction = 1.0 / (theta * space.len() as f64);
    Ok(LowerBoundEstimate {
        probability,
        correction,
        estimate: (probability - correction).clamp(0.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::{stats, DegreeSequence};
    use crate::pairing::uniform_pairing;
    use crate::rng::stream;
    use crate::walk::{distribution_at, tv_distance, walk};
    use std::collections::BTreeMap;

    fn mix_space(n3: u64, n4: u64) -> (DegreeSequence, HalfEdgeSpace) {
        let seq = DegreeSequence::from_counts(&BTreeMap::from([(3, n3), (4, n4)]), false).unwrap();
        let space = HalfEdgeSpace::new(&seq);
        (seq, space)
    }

    #[test]
    fn shadow_matches_trajectory_before_failure() {
        let (_, space) = mix_space(30, 30);
        let mut rng = stream(1, "ann", 0);
        let mut failures = 0;
        for _ in 0..2000 {
            let run = annealed_walk(&space, 0, 20, &mut rng).unwrap();
            let stop = run.failure_time.unwrap_or(21);
            for k in 1..stop {
                assert_eq!(run.trajectory[k], run.iid_shadow[k - 1]);
            }
            if let Some(t) = run.failure_time {
                failures += 1;
                assert!(t >= 1 && t <= 20);
                assert!(run.failure_cause.is_some());
            }
            assert!(run.partial_pairing.check_involution().is_ok());
            for w in run.trajectory.windows(2) {
                let m = run.partial_pairing.mate(w[0]).expect("walked half-edges are paired");
                assert!(space.are_neighbours(m, w[1]));
            }
        }
        assert!(failures > 0);
    }

    #[test]
    fn one_step_failure_only_by_self_draw_or_loop() {
        // At t = 1 nothing is paired beforehand, so the only ways to break
        // are drawing x itself as mate or stepping back onto x via a loop.
        let (_, space) = mix_space(500, 500);
        let n = space.len() as f64;
        let mut rng = stream(2, "ann", 0);
        let reps = 200_000;
        let mut fails = 0;
        for _ in 0..reps {
            let run = annealed_walk(&space, 7, 1, &mut rng).unwrap();
            if run.failure_time.is_some() {
                fails += 1;
            } else {
                assert_eq!(run.trajectory[1], run.iid_shadow[0]);
            }
        }
        let p = fails as f64 / reps as f64;
        // P = 1/N + (he_deg(x) / N) · (1 - 1/N) <= 4/N for degree <= 4.
        let exact = 1.0 / n + space.he_deg(7) as f64 / n * (1.0 - 1.0 / n);
        let sd = (exact * (1.0 - exact) / reps as f64).sqrt();
        assert!((p - exact).abs() <= 4.0 * sd, "p = {p}, exact = {exact}");
    }

    #[test]
    fn failure_cdf_below_union_bound() {
        let (_, space) = mix_space(400, 400);
        let n = space.len();
        let t = (n as f64).sqrt() as usize;
        let r = coupling_experiment(&space, t, 20_000, &mut stream(3, "cpl", 0)).unwrap();
        for (k, &p) in r.cdf.iter().enumerate() {
            let k = k + 1;
            let bound = 2.0 * (k * k) as f64 / n as f64;
            let slack = 3.0 * (p * (1.0 - p) / 20_000.0).sqrt();
            assert!(p <= bound + slack, "k = {k}: {p} > {bound}");
        }
        assert!(r.pass);
        assert_eq!(r.failures, r.mate_collisions + r.neighbour_collisions);
    }

    #[test]
    fn annealed_law_matches_averaged_quenched_law() {
        let (_, space) = mix_space(60, 60);
        let n = space.len();
        let t = 6;
        let samples = 200_000;
        let mut rng = stream(4, "ann", 0);
        let mut annealed = vec![0.0; n];
        let mut sampler = AnnealedSampler::new(&space);
        for _ in 0..samples {
            let mut last = 0;
            sampler.run(0, t, &mut rng, |_, next, _| last = next).unwrap();
            annealed[last] += 1.0 / samples as f64;
        }
        // Quenched walks over freshly drawn pairings.
        let mut quenched = vec![0.0; n];
        for _ in 0..samples {
            let p = uniform_pairing(&space, &mut rng).unwrap();
            let path = walk(&space, &p, 0, t, &mut rng).unwrap();
            quenched[path[t]] += 1.0 / samples as f64;
        }
        let l1: f64 = annealed.iter().zip(&quenched).map(|(a, b)| (a - b).abs()).sum();
        assert!(l1 <= 4.0 * (n as f64 / samples as f64).sqrt(), "L1 = {l1}");
    }

    #[test]
    fn shadow_is_uniform() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let (_, space) = mix_space(20, 20);
        let n = space.len();
        let mut rng = stream(5, "shadow", 0);
        let mut counts = vec![0usize; n];
        let mut draws = 0usize;
        while draws < 1_000_000 {
            let run = annealed_walk(&space, 0, 50, &mut rng).unwrap();
            for &s in &run.iid_shadow {
                counts[s] += 1;
            }
            draws += 50;
        }
        let e = draws as f64 / n as f64;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        let p = 1.0 - ChiSquared::new((n - 1) as f64).unwrap().cdf(stat);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn regular_log_weight_is_deterministic() {
        let seq = DegreeSequence::from_counts(&BTreeMap::from([(4, 10)]), false).unwrap();
        let space = HalfEdgeSpace::new(&seq);
        let s = iid_log_weight(&space, 17, &mut stream(6, "lw", 0));
        assert!((s.s - 17.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_weight_moments() {
        let (seq, space) = mix_space(500, 500);
        let st = stats(&seq).unwrap();
        let mut rng = stream(7, "lw", 0);
        let t = 100;
        let samples = 100_000;
        let xs: Vec<f64> = (0..samples).map(|_| iid_log_weight(&space, t, &mut rng).s).collect();
        let mean = xs.iter().sum::<f64>() / samples as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        let tf = t as f64;
        assert!((mean - tf * st.mu).abs() <= 3.0 * st.sigma() * tf.sqrt() / (samples as f64).sqrt());
        assert!(var >= 0.9 * tf * st.sigma2 && var <= 1.1 * tf * st.sigma2, "var = {var}");
        assert!(xs.iter().all(|&s| s >= tf * 2f64.ln() - 1e-9));
    }

    #[test]
    fn berry_esseen_cases() {
        let reg = DegreeSequence::from_counts(&BTreeMap::from([(3, 10)]), false).unwrap();
        let rs = HalfEdgeSpace::new(&reg);
        let mut rng = stream(8, "be", 0);
        assert_eq!(
            berry_esseen_check(&stats(&reg).unwrap(), &rs, 5, 0.5, 10, &mut rng),
            Err(Error::DegenerateSigma)
        );
        let (seq, space) = mix_space(500, 500);
        let st = stats(&seq).unwrap();
        let r = berry_esseen_check(&st, &space, 50, 1.0, 10_000, &mut rng).unwrap();
        assert_eq!(r.empirical, 0.0);
        assert!(r.gaussian < 1e-12);
        assert!(r.pass);
        let r = berry_esseen_check(&st, &space, 50, 1e-300, 10_000, &mut rng).unwrap();
        assert_eq!(r.empirical, 1.0);
        assert!(r.gaussian > 1.0 - 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn lower_bound_trivial_cases() {
        let (_, space) = mix_space(50, 50);
        let mut rng = stream(9, "lb", 0);
        let r = lower_bound_estimate(&space, 0, 5, 1.0, 1000, &mut rng).unwrap();
        assert_eq!(r.probability, 0.0);
        assert_eq!(r.estimate, 0.0);

        let reg = DegreeSequence::from_counts(&BTreeMap::from([(3, 1000)]), false).unwrap();
        let rs = HalfEdgeSpace::new(&reg);
        // 10 steps of weight 1/2: product 2^-10 > θ iff θ < 2^-10.
        let hi = lower_bound_estimate(&rs, 0, 10, 2f64.powi(-11), 200, &mut rng).unwrap();
        assert_eq!(hi.probability, 1.0);
        assert!((hi.estimate - (1.0 - 2048.0 / 3000.0)).abs() < 1e-12);
        let lo = lower_bound_estimate(&rs, 0, 10, 2f64.powi(-9), 200, &mut rng).unwrap();
        assert_eq!(lo.probability, 0.0);
        assert_eq!(lo.estimate, 0.0);
    }

    #[test]
    fn lower_bound_does_not_exceed_expected_distance() {
        let (seq, space) = mix_space(1000, 1000);
        let st = stats(&seq).unwrap();
        let n = space.len() as f64;
        let pred = crate::degree::cutoff_prediction(&st).unwrap();
        let theta = n.ln() / n;
        let mut rng = stream(10, "lb", 0);
        for t in [(pred.t_star - 3.0).round() as usize, pred.t_star.round() as usize] {
            let est = lower_bound_estimate(&space, 0, t, theta, 20_000, &mut rng).unwrap();
            let pairings = 20;
            let mean_d: f64 = (0..pairings)
                .map(|_| {
                    let p = uniform_pairing(&space, &mut rng).unwrap();
                    tv_distance(&distribution_at(&space, &p, 0, t).unwrap())
                })
                .sum::<f64>()
                / pairings as f64;
            let slack = 3.0 * (0.25f64 / 20_000.0).sqrt() + 0.05;
            assert!(est.estimate <= mean_d + slack, "t={t}: {} > {mean_d}", est.estimate);
        }
    }
}
