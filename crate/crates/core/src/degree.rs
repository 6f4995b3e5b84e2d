//! Degree sequences, their log-degree moments and the predicted cutoff.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{gaussian_quantile, gaussian_tail};
use crate::numeric::CompensatedSum;

/// Minimum degree assumed by the cutoff theory.
pub const MIN_DEGREE: u32 = 3;

const PARITY_RETRIES: usize = 1000;

/// A validated degree sequence with an even number of half-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    degrees: Vec<u32>,
    half_edges: u64,
}

impl DegreeSequence {
    /// Validates `degrees`. Degrees below 3 are rejected unless
    /// `allow_small`, in which case anything `>= 1` is accepted.
    pub fn validate(degrees: Vec<u32>, allow_small: bool) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::EmptySequence);
        }
        let min = if allow_small { 1 } else { MIN_DEGREE };
        if let Some((vertex, &degree)) = degrees.iter().enumerate().find(|(_, &d)| d < min) {
            return Err(Error::DegreeTooSmall { vertex, degree, min });
        }
        let half_edges: u64 = degrees.iter().map(|&d| u64::from(d)).sum();
        if half_edges % 2 == 1 {
            return Err(Error::OddHalfEdgeCount(half_edges));
        }
        Ok(Self { degrees, half_edges })
    }

    /// Builds the sequence with `counts[d]` vertices of degree `d`, in
    /// ascending degree order.
    pub fn from_counts(counts: &BTreeMap<u32, u64>, allow_small: bool) -> Result<Self> {
        let total: u64 = counts.values().sum();
        let mut degrees = Vec::with_capacity(total as usize);
        for (&d, &c) in counts {
            degrees.extend(std::iter::repeat_n(d, c as usize));
        }
        Self::validate(degrees, allow_small)
    }

    /// `n` vertices split between degrees in proportion to `weights`.
    /// Rounding remainders go to the smallest degree.
    pub fn from_mix(weights: &BTreeMap<u32, u64>, n: u64, allow_small: bool) -> Result<Self> {
        let total: u64 = weights.values().sum();
        if total == 0 {
            return Err(Error::EmptySequence);
        }
        let mut counts: BTreeMap<u32, u64> = weights
            .iter()
            .map(|(&d, &w)| (d, (u128::from(n) * u128::from(w) / u128::from(total)) as u64))
            .collect();
        let assigned: u64 = counts.values().sum();
        if let Some(first) = counts.values_mut().next() {
            *first += n - assigned;
        }
        Self::from_counts(&counts, allow_small)
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    /// `N`, the number of half-edges.
    pub fn half_edge_count(&self) -> u64 {
        self.half_edges
    }

    pub fn max_degree(&self) -> u32 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> u32 {
        self.degrees.iter().copied().min().unwrap_or(0)
    }

    /// Number of vertices of each degree.
    pub fn counts(&self) -> BTreeMap<u32, u64> {
        let mut counts = BTreeMap::new();
        for &d in &self.degrees {
            *counts.entry(d).or_insert(0) += 1;
        }
        counts
    }

    /// Parses newline/whitespace separated integers, or a JSON object
    /// `{"counts": {"3": n3, ...}}`.
    pub fn parse(text: &str, allow_small: bool) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let doc: CountsDoc =
                serde_json::from_str(trimmed).map_err(|e| Error::Parse(e.to_string()))?;
            let mut counts = BTreeMap::new();
            for (k, v) in doc.counts {
                let d: u32 = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad degree key {k:?}")))?;
                counts.insert(d, v);
            }
            return Self::from_counts(&counts, allow_small);
        }
        let degrees = trimmed
            .split_whitespace()
            .map(|tok| tok.parse::<u32>().map_err(|_| Error::Parse(format!("bad degree {tok:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::validate(degrees, allow_small)
    }

    /// One degree per line.
    pub fn to_lines(&self) -> String {
        let mut out = String::with_capacity(self.degrees.len() * 2);
        for d in &self.degrees {
            out.push_str(&d.to_string());
            out.push('\n');
        }
        out
    }

    /// `{"counts": {...}}` form.
    pub fn to_counts_json(&self) -> String {
        let counts = self.counts().into_iter().map(|(d, c)| (d.to_string(), c)).collect();
        serde_json::to_string(&CountsDoc { counts }).expect("counts serialize")
    }
}

#[derive(Serialize, Deserialize)]
struct CountsDoc {
    counts: BTreeMap<String, u64>,
}

/// Half-edge-weighted moments of `log(deg - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    /// Number of vertices.
    pub n: u64,
    /// Number of half-edges.
    #[serde(rename = "N")]
    pub half_edges: u64,
    #[serde(rename = "delta")]
    pub max_degree: u32,
    pub mu: f64,
    pub sigma2: f64,
    pub rho: f64,
}

impl DegreeStats {
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

/// Moments from a histogram `degree -> vertex count`; all degrees `>= 2`.
fn stats_from_counts(counts: &BTreeMap<u32, u64>) -> DegreeStats {
    let n: u64 = counts.values().sum();
    let half_edges: u64 = counts.iter().map(|(&d, &c)| u64::from(d) * c).sum();
    let max_degree = counts.keys().next_back().copied().unwrap_or(0);
    // p_d: fraction of half-edges sitting on degree-d vertices.
    let terms: Vec<(f64, f64)> = counts
        .iter()
        .map(|(&d, &c)| {
            let p = (u64::from(d) * c) as f64 / half_edges as f64;
            (p, f64::from(d - 1).ln())
        })
        .collect();
    let mu = terms.iter().map(|&(p, l)| p * l).collect::<CompensatedSum>().value();
    let sigma2 = terms
        .iter()
        .map(|&(p, l)| p * (l - mu).powi(2))
        .collect::<CompensatedSum>()
        .value();
    let rho = terms
        .iter()
        .map(|&(p, l)| p * (l - mu).abs().powi(3))
        .collect::<CompensatedSum>()
        .value();
    DegreeStats { n, half_edges, max_degree, mu, sigma2, rho }
}

/// `N`, `Δ`, `μ`, `σ²` and `ϱ` of the sequence. Degree-1 vertices (only
/// reachable with `allow_small`) make `log(deg - 1)` infinite and are
/// rejected.
pub fn stats(seq: &DegreeSequence) -> Result<DegreeStats> {
    if let Some((vertex, &degree)) = seq.degrees.iter().enumerate().find(|(_, &d)| d < 2) {
        return Err(Error::DegreeTooSmall { vertex, degree, min: 2 });
    }
    Ok(stats_from_counts(&seq.counts()))
}

/// Limits `μ⋆`, `σ⋆²` (and the matching third moment) for IID degrees drawn
/// from `pmf`: moments of `log(D - 1)` under the size-biased law `d·Q(d)/E[D]`.
pub fn pmf_limit_stats(pmf: &BTreeMap<u32, f64>) -> Result<(f64, f64, f64)> {
    check_pmf(pmf, true)?;
    if let Some(&d) = pmf.keys().find(|&&d| d < 2) {
        return Err(Error::UnsupportedDegree(d));
    }
    let mean: f64 = pmf.iter().map(|(&d, &q)| f64::from(d) * q).sum();
    let terms: Vec<(f64, f64)> = pmf
        .iter()
        .map(|(&d, &q)| (f64::from(d) * q / mean, f64::from(d - 1).ln()))
        .collect();
    let mu: f64 = terms.iter().map(|&(p, l)| p * l).sum();
    let s2: f64 = terms.iter().map(|&(p, l)| p * (l - mu).powi(2)).sum();
    let r: f64 = terms.iter().map(|&(p, l)| p * (l - mu).abs().powi(3)).sum();
    Ok((mu, s2, r))
}

/// Predicted cutoff location and window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffPrediction {
    pub t_star: f64,
    pub omega_star: f64,
}

impl CutoffPrediction {
    /// `t⋆ + Φ⁻¹(ε)·ω⋆`.
    pub fn t_mix(&self, eps: f64) -> Result<f64> {
        Ok(self.t_star + gaussian_quantile(eps)? * self.omega_star)
    }

    /// Limit profile `Φ(λ)`.
    pub fn profile(&self, lambda: f64) -> f64 {
        gaussian_tail(lambda)
    }

    /// Predicted distance at (possibly fractional) time `t`. With a zero
    /// window the prediction is a step at `t⋆`.
    pub fn predicted_distance(&self, t: f64) -> f64 {
        if self.omega_star > 0.0 {
            gaussian_tail((t - self.t_star) / self.omega_star)
        } else if t < self.t_star {
            1.0
        } else if t > self.t_star {
            0.0
        } else {
            0.5
        }
    }

    /// Time `t⋆ + λ·ω⋆`.
    pub fn time_at(&self, lambda: f64) -> f64 {
        self.t_star + lambda * self.omega_star
    }
}

/// `t⋆ = log N / μ`, `ω⋆ = √(σ² log N / μ³)`.
pub fn cutoff_prediction(stats: &DegreeStats) -> Result<CutoffPrediction> {
    if stats.half_edges < 2 {
        return Err(Error::DegenerateStats(format!("N = {}", stats.half_edges)));
    }
    if !(stats.mu > 0.0) {
        return Err(Error::DegenerateStats(format!("μ = {}", stats.mu)));
    }
    let log_n = (stats.half_edges as f64).ln();
    let t_star = log_n / stats.mu;
    let omega_star = if stats.sigma2 > 0.0 {
        (stats.sigma2 * log_n / stats.mu.powi(3)).sqrt()
    } else {
        0.0
    };
    Ok(CutoffPrediction { t_star, omega_star })
}

/// Thresholds for the finite-size sparsity diagnostics. The asymptotic
/// conditions carry no constants, so these defaults are conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityThresholds {
    /// Largest acceptable `log Δ / log N`.
    pub max_degree_exponent: f64,
    /// Smallest acceptable `σ²/μ³ · log N / (log log N)²`.
    pub min_window_ratio: f64,
    /// Smallest acceptable `σ³/(ϱ√μ) · √(log N)`.
    pub min_berry_esseen_ratio: f64,
}

impl Default for SparsityThresholds {
    fn default() -> Self {
        Self { max_degree_exponent: 0.1, min_window_ratio: 10.0, min_berry_esseen_ratio: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub degree_exponent: f64,
    pub window_ratio: f64,
    pub berry_esseen_ratio: f64,
    /// `Σ deg² / N`; bounded values make simple graphs a positive fraction
    /// of the configuration model.
    pub second_moment_ratio: Option<f64>,
    pub sparse: bool,
    pub window_ok: bool,
    pub berry_esseen_ok: bool,
    pub thresholds: SparsityThresholds,
    pub notes: Vec<String>,
}

/// Finite-`N` versions of the sparsity and window conditions. A flag being
/// true only means the condition is plausibly satisfied at this size.
pub fn sparsity_report(stats: &DegreeStats, thresholds: SparsityThresholds) -> SparsityReport {
    let log_n = (stats.half_edges as f64).ln();
    let loglog = log_n.ln();
    let degree_exponent = f64::from(stats.max_degree).ln() / log_n;
    let regular = stats.sigma2 == 0.0;
    let (window_ratio, berry_esseen_ratio) = if regular {
        (0.0, 0.0)
    } else {
        let w = stats.sigma2 / stats.mu.powi(3) * log_n / (loglog * loglog);
        let s3 = stats.sigma2.powf(1.5);
        let b = if stats.rho > 0.0 {
            s3 / (stats.rho * stats.mu.sqrt()) * log_n.sqrt()
        } else {
            f64::INFINITY
        };
        (w, b)
    };
    let sparse = degree_exponent <= thresholds.max_degree_exponent;
    let window_ok = !regular && window_ratio >= thresholds.min_window_ratio;
    let berry_esseen_ok = !regular && berry_esseen_ratio >= thresholds.min_berry_esseen_ratio;
    let mut notes = Vec::new();
    if regular {
        notes.push("regular: window condition (9) fails; ω_star = 0".to_string());
    }
    if !sparse {
        notes.push(format!(
            "log Δ / log N = {degree_exponent:.3} exceeds {}",
            thresholds.max_degree_exponent
        ));
    }
    SparsityReport {
        degree_exponent,
        window_ratio,
        berry_esseen_ratio,
        second_moment_ratio: None,
        sparse,
        window_ok,
        berry_esseen_ok,
        thresholds,
        notes,
    }
}

/// [`sparsity_report`] plus the `Σ deg² / N` ratio, which needs the
/// sequence itself.
pub fn sparsity_report_for(
    seq: &DegreeSequence,
    stats: &DegreeStats,
    thresholds: SparsityThresholds,
) -> SparsityReport {
    let mut report = sparsity_report(stats, thresholds);
    let sq: u64 = seq.degrees.iter().map(|&d| u64::from(d) * u64::from(d)).sum();
    report.second_moment_ratio = Some(sq as f64 / seq.half_edges as f64);
    report
}

fn check_pmf(pmf: &BTreeMap<u32, f64>, allow_small: bool) -> Result<()> {
    if pmf.is_empty() {
        return Err(Error::InvalidPmf(0.0));
    }
    if pmf.values().any(|&p| !(p >= 0.0)) {
        return Err(Error::InvalidPmf(f64::NAN));
    }
    let total: f64 = pmf.values().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidPmf(total));
    }
    let min = if allow_small { 1 } else { MIN_DEGREE };
    if let Some((&d, _)) = pmf.iter().find(|(&d, &p)| d < min && p > 0.0) {
        return Err(Error::UnsupportedDegree(d));
    }
    Ok(())
}

/// `n` IID degrees from `pmf`. An odd total is repaired by redrawing the
/// last degree, at most 1000 times.
pub fn sample_iid_degrees<R: Rng + ?Sized>(
    pmf: &BTreeMap<u32, f64>,
    n: usize,
    allow_small: bool,
    rng: &mut R,
) -> Result<DegreeSequence> {
    check_pmf(pmf, allow_small)?;
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let support: Vec<u32> = pmf.keys().copied().collect();
    let dist = WeightedIndex::new(pmf.values().copied())
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut degrees: Vec<u32> = (0..n).map(|_| support[dist.sample(rng)]).collect();
    let head: u64 = degrees[..n - 1].iter().map(|&d| u64::from(d)).sum();
    let mut retries = 0;
    while (head + u64::from(degrees[n - 1])) % 2 == 1 {
        if retries == PARITY_RETRIES {
            return Err(Error::ParityRetriesExhausted(PARITY_RETRIES));
        }
        degrees[n - 1] = support[dist.sample(rng)];
        retries += 1;
    }
    DegreeSequence::validate(degrees, allow_small)
}
