use std::io::Write;

use nbrw_core::exposure::{
    completion_estimate, default_theta, default_w_min, replay_check, run_exposure, truncated_sums,
};
use nbrw_core::pairing::HalfEdgeSpace;
use nbrw_core::rng::stream;
use nbrw_core::walk::distribution_at;
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{DegreeSpec, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::Report;

/// Largest half-edge count for which every run is replayed by brute force.
pub const REPLAY_LIMIT: usize = 4096;
/// Largest `N·t` for which the exact transition probability is evolved.
pub const EXACT_LIMIT: usize = 50_000_000;

pub fn cmd_exposure(cfg: &ExperimentConfig) -> CliResult<Report> {
    let seq = cfg.degree_sequence_or(DegreeSpec::Degrees(vec![3, 4, 4, 3]))?;
    let space = HalfEdgeSpace::new(&seq);
    let n = space.len();
    let t = cfg.t.unwrap_or(4);
    let runs = cfg.runs.unwrap_or(100);
    let w_min = cfg.w_min.unwrap_or_else(|| default_w_min(n));
    let theta = cfg.theta.unwrap_or_else(|| default_theta(n));
    if t % 2 == 1 {
        return Err(CliError::Config(format!("t must be even, got {t}")));
    }
    if !(theta > 0.0) {
        return Err(CliError::Config(format!("θ must be positive, got {theta}")));
    }
    let seed = cfg.seed();
    let results: Vec<(Value, Option<Vec<Value>>)> = (0..runs)
        .into_par_iter()
        .map(|k| -> CliResult<_> {
            let mut rng = stream(seed, "exposure", k as u64);
            let x = rng.random_range(0..n);
            let y = (x + 1 + rng.random_range(0..n - 1)) % n;
            let res = run_exposure(&space, x, y, t, w_min, &mut rng)?;
            let replay = if n <= REPLAY_LIMIT {
                match replay_check(&space, &res) {
                    Ok(_) => "ok".to_string(),
                    Err(e) => e.to_string(),
                }
            } else {
                "skipped".to_string()
            };
            let sums = res.forest.height_weight_sums();
            let max_height_weight = sums.iter().copied().fold(0.0, f64::max);
            let tau_bound = t as f64 / w_min;
            let ts = truncated_sums(&res, theta);
            let done = completion_estimate(&res, theta, &mut rng)?;
            let exact = if n.saturating_mul(t.max(1)) <= EXACT_LIMIT {
                Some(distribution_at(&space, &done.pairing, x, t)?.mass()[done.pairing.mate_of(y)])
            } else {
                None
            };
            let bound_ok = exact.map_or(true, |e| done.pt_lower <= e + 1e-12);
            let pass = (replay == "ok" || replay == "skipped")
                && max_height_weight <= 2.0 + 1e-12
                && res.tau as f64 <= tau_bound
                && bound_ok;
            let forest = (k == 0).then(|| {
                res.forest.nodes().iter().map(|node| serde_json::to_value(node).expect("plain data")).collect()
            });
            Ok((
                json!({
                    "run": k,
                    "x": x,
                    "y": y,
                    "tau": res.tau,
                    "tau_bound": tau_bound,
                    "forest_nodes": res.forest.len(),
                    "max_height": res.forest.max_height(),
                    "max_height_weight": max_height_weight,
                    "h_x": res.h_x.len(),
                    "h_y": res.h_y.len(),
                    "W": ts.w,
                    "W_bar": ts.w_bar,
                    "pt_lower": done.pt_lower,
                    "exact": exact,
                    "replay": replay,
                    "pass": pass,
                }),
                forest,
            ))
        })
        .collect::<CliResult<_>>()?;

    let mut records = Vec::with_capacity(results.len());
    let mut first_forest = None;
    for (record, forest) in results {
        records.push(record);
        if forest.is_some() {
            first_forest = forest;
        }
    }
    if let (Some(path), Some(nodes)) = (&cfg.forest_out, first_forest) {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for node in nodes {
            serde_json::to_writer(&mut f, &node)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
    }
    let failures = records.iter().filter(|r| r["pass"] != Value::Bool(true)).count();
    let bound_checks = records.iter().filter(|r| !r["exact"].is_null()).count();
    let summary = json!({
        "N": n,
        "t": t,
        "runs": runs,
        "w_min": w_min,
        "theta": theta,
        "failures": failures,
        "exact_bound_checks": bound_checks,
        "replayed": n <= REPLAY_LIMIT,
    });
    Ok(Report::new("exposure", records, summary, failures == 0))
}
