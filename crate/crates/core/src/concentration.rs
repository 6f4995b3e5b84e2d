//! Lower-tail concentration of `Σ_i w_{i,π(i)}` over a uniform pairing `π`
//! of an index set, and the random switch that generates an exchangeable
//! pair.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pairing::{all_pairings, Pairing};

/// Dense non-negative `n × n` weights on the index set `0..n`; the diagonal
/// is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightArray {
    n: usize,
    w: Vec<f64>,
}

impl WeightArray {
    pub fn new(n: usize, w: Vec<f64>) -> Result<Self> {
        if n % 2 == 1 || n == 0 {
            return Err(Error::InvalidArgument(format!("index set size must be even and positive, got {n}")));
        }
        if w.len() != n * n {
            return Err(Error::InvalidArgument(format!("expected {} weights, got {}", n * n, w.len())));
        }
        if let Some(bad) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("weights must be finite and non-negative, got {bad}")));
        }
        Ok(Self { n, w })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(n, (0..n * n).map(|k| f(k / n, k % n)).collect())
    }

    /// IID uniform weights in `[0, 1)`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Self::new(n, (0..n * n).map(|_| rng.random::<f64>()).collect())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    /// `m = Σ_i Σ_{j≠i} w_ij / (n - 1)`, the mean of the pairing sum.
    pub fn mean(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j);
                }
            }
        }
        s / (self.n - 1) as f64
    }

    /// `max_{i≠j} (w_ij + w_ji)`.
    pub fn theta(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                best = best.max(self.get(i, j) + self.get(j, i));
            }
        }
        best
    }

    /// `exp(-a²/(4θm))`.
    pub fn tail_bound(&self, a: f64) -> f64 {
        let (m, theta) = (self.mean(), self.theta());
        if m == 0.0 || theta == 0.0 {
            return if a > 0.0 { 0.0 } else { 1.0 };
        }
        (-a * a / (4.0 * theta * m)).exp()
    }
}

fn check_complete(weights: &WeightArray, pairing: &Pairing) -> Result<()> {
    if pairing.len() != weights.len() {
        return Err(Error::InvalidArgument("pairing and weights differ in size".into()));
    }
    pairing.ensure_complete()
}

/// `Σ_i w_{i,π(i)}`.
pub fn pairing_weight_sum(weights: &WeightArray, pairing: &Pairing) -> Result<f64> {
    check_complete(weights, pairing)?;
    Ok((0..weights.len()).map(|i| weights.get(i, pairing.mate_of(i))).sum())
}

/// Change in the pairing sum caused by [`switch`]`(i, j)`.
pub fn switch_delta(weights: &WeightArray, pairing: &Pairing, i: usize, j: usize) -> Result<f64> {
    let pi = pairing.mate(i).ok_or(Error::NotPaired(i))?;
    let pj = pairing.mate(j).ok_or(Error::NotPaired(j))?;
    let w = |a, b| weights.get(a, b);
    Ok(w(i, j) + w(j, i) + w(pi, pj) + w(pj, pi) - w(i, pi) - w(pi, i) - w(j, pj) - w(pj, j))
}

/// Replaces `{i, π(i)}` and `{j, π(j)}` by `{i, j}` and `{π(i), π(j)}`.
/// When `j = π(i)` the pairing is unchanged.
pub fn switch(pairing: &Pairing, i: usize, j: usize) -> Result<Pairing> {
    if i == j {
        return Err(Error::InvalidArgument(format!("switch needs distinct indices, got {i} twice")));
    }
    let pi = pairing.mate(i).ok_or(Error::NotPaired(i))?;
    let pj = pairing.mate(j).ok_or(Error::NotPaired(j))?;
    let mut out = pairing.clone();
    if pi == j {
        return Ok(out);
    }
    out.unpair(i)?;
    out.unpair(j)?;
    out.pair(i, j)?;
    out.pair(pi, pj)?;
    Ok(out)
}

/// Applies a switch at a uniformly chosen ordered pair `i ≠ j`.
pub fn random_switch<R: Rng + ?Sized>(pairing: &Pairing, rng: &mut R) -> Result<Pairing> {
    let n = pairing.len();
    let i = rng.random_range(0..n);
    let j = (i + 1 + rng.random_range(0..n - 1)) % n;
    switch(pairing, i, j)
}

/// Exact `P(Σ w_{i,π(i)} <= m - a)` by enumerating all pairings.
pub fn exhaustive_tail(weights: &WeightArray, a: f64) -> f64 {
    let level = weights.mean() - a;
    let all = all_pairings(weights.len());
    let hits = all
        .iter()
        .filter(|mate| (0..weights.len()).map(|i| weights.get(i, mate[i])).sum::<f64>() <= level)
        .count();
    hits as f64 / all.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub index_size: usize,
    pub a: f64,
    pub m: f64,
    pub theta: f64,
    pub trials: usize,
    pub empirical_tail: f64,
    pub bound: f64,
    pub mc_slack: f64,
    /// Exact tail, when the index set is small enough to enumerate.
    pub exact_tail: Option<f64>,
    pub pass: bool,
}

/// Largest index set for which the exact tail is enumerated (10395 pairings).
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Samples uniform pairings and compares the frequency of
/// `{Σ w_{i,π(i)} <= m - a}` with `exp(-a²/(4θm))`.
pub fn concentration_experiment<R: Rng + ?Sized>(
    weights: &WeightArray,
    a: f64,
    trials: usize,
    rng: &mut R,
) -> Result<ConcentrationReport> {
    if !(a > 0.0) || trials == 0 {
        return Err(Error::InvalidArgument("need a > 0 and trials >= 1".into()));
    }
    let n = weights.len();
    let m = weights.mean();
    let level = m - a;
    let mut hits = 0usize;
    for _ in 0..trials {
        let mut p = Pairing::empty(n);
        p.complete_uniformly(rng)?;
        if pairing_weight_sum(weights, &p)? <= level {
            hits += 1;
        }
    }
    let empirical_tail = hits as f64 / trials as f64;
    let bound = weights.tail_bound(a);
    let mc_slack = 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt();
    let exact_tail = (n <= EXHAUSTIVE_LIMIT).then(|| exhaustive_tail(weights, a));
    let exact_ok = exact_tail.map_or(true, |e| e <= bound);
    Ok(ConcentrationReport {
        index_size: n,
        a,
        m,
        theta: weights.theta(),
        trials,
        empirical_tail,
        bound,
        mc_slack,
        exact_tail,
        pass: empirical_tail <= bound + mc_slack && exact_ok,
    })
}
