use std::collections::BTreeMap;

use nbrw_core::degree::{cutoff_prediction, stats, DegreeSequence};
use nbrw_core::pairing::{uniform_pairing, HalfEdgeSpace};
use nbrw_core::rng::stream;
use nbrw_core::walk::tv_curve;
use nbrw_core::Error;
use serde_json::json;

use super::{check_budget, max_starts, median, resolve_starts};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::Report;

pub const DEFAULT_SIZES: [u64; 3] = [2_000, 20_000, 200_000];
pub const DEFAULT_LAMBDAS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];
pub const DEFAULT_SEEDS: usize = 5;
/// Largest median error accepted at the biggest size.
pub const PROFILE_TOLERANCE: f64 = 0.25;

/// For each size and replicate, evaluates the sampled worst-case distance at
/// `t = round(t⋆ + λω⋆)` and compares it with `Φ(λ)`. Passes when the median
/// (over replicates) of the largest error over `λ` does not increase with
/// the size and ends at or below [`PROFILE_TOLERANCE`].
pub fn cmd_profile(cfg: &ExperimentConfig) -> CliResult<Report> {
    let sizes = cfg.sizes.clone().unwrap_or_else(|| DEFAULT_SIZES.to_vec());
    let mix = cfg.mix.clone().unwrap_or_else(|| BTreeMap::from([(3, 1), (4, 1)]));
    let lambdas = cfg.lambdas.clone().unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
    let reps = cfg.seeds.unwrap_or(DEFAULT_SEEDS).max(1);
    let seed = cfg.seed();

    // Validate everything before any evolution.
    let mut plans = Vec::new();
    for &n in &sizes {
        let seq = DegreeSequence::from_mix(&mix, n, cfg.allow_small())?;
        let st = stats(&seq)?;
        if st.sigma2 <= 0.0 {
            return Err(Error::DegenerateSigma.into());
        }
        let pred = cutoff_prediction(&st)?;
        let times: Vec<usize> = lambdas.iter().map(|&l| pred.time_at(l).round().max(0.0) as usize).collect();
        let t_max = times.iter().copied().max().unwrap_or(0);
        check_budget(st.half_edges as usize, t_max, max_starts(cfg.starts.as_ref()) * reps, cfg.budget())?;
        plans.push((seq, st, pred, times, t_max));
    }

    let mut records = Vec::new();
    let mut per_size = Vec::new();
    for (i, (seq, st, pred, times, t_max)) in plans.iter().enumerate() {
        let space = HalfEdgeSpace::new(seq);
        let mut worst = Vec::with_capacity(reps);
        for r in 0..reps {
            let idx = (i * reps + r) as u64;
            let pairing = uniform_pairing(&space, &mut stream(seed, "profile-pairing", idx))?;
            let starts = resolve_starts(&space, cfg.starts.as_ref(), seed, &format!("profile-starts-{idx}"))?;
            let curve = tv_curve(&space, &pairing, &starts, *t_max)?;
            let mut max_err: f64 = 0.0;
            for (&lambda, &t) in lambdas.iter().zip(times) {
                let d = curve.d(t);
                let phi = pred.profile(lambda);
                let err = (d - phi).abs();
                max_err = max_err.max(err);
                let phi_at_t = pred.predicted_distance(t as f64);
                records.push(json!({
                    "n": st.n,
                    "N": st.half_edges,
                    "replicate": r,
                    "lambda": lambda,
                    "t": t,
                    "d": d,
                    "phi": phi,
                    "err": err,
                    "phi_at_t": phi_at_t,
                    "err_at_t": (d - phi_at_t).abs(),
                }));
            }
            worst.push(max_err);
        }
        per_size.push(json!({
            "n": st.n,
            "N": st.half_edges,
            "t_star": pred.t_star,
            "omega_star": pred.omega_star,
            "max_err": worst.clone(),
            "median_max_err": median(worst),
        }));
    }
    let medians: Vec<f64> = per_size.iter().map(|s| s["median_max_err"].as_f64().unwrap_or(f64::NAN)).collect();
    let non_increasing = medians.windows(2).all(|w| w[1] <= w[0]);
    let last_ok = medians.last().is_some_and(|&m| m <= PROFILE_TOLERANCE);
    let summary = json!({
        "sizes": per_size,
        "non_increasing": non_increasing,
        "largest_within_tolerance": last_ok,
        "tolerance": PROFILE_TOLERANCE,
    });
    Ok(Report::new("profile", records, summary, non_increasing && last_ok))
}
