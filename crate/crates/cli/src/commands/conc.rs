use nbrw_core::concentration::{concentration_experiment, WeightArray};
use nbrw_core::rng::stream;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::Report;

pub const DEFAULT_A_FRACS: [f64; 3] = [0.25, 0.5, 0.75];

/// Random weight arrays in `[0, 1)` on an index set of the configured size;
/// for each array and each `a = f·m`, the sampled tail against
/// `exp(-a²/(4θm))` (and the exact tail for small index sets).
pub fn cmd_conc(cfg: &ExperimentConfig) -> CliResult<Report> {
    let size = cfg.index_size.unwrap_or(8);
    let arrays = cfg.arrays.unwrap_or(100);
    let trials = cfg.samples.unwrap_or(10_000);
    let fracs = cfg.a_fracs.clone().unwrap_or_else(|| DEFAULT_A_FRACS.to_vec());
    if size < 2 || size % 2 == 1 {
        return Err(CliError::Config(format!("index size must be even and at least 2, got {size}")));
    }
    if fracs.iter().any(|&f| !(f > 0.0)) {
        return Err(CliError::Config("a fractions must be positive".into()));
    }
    let seed = cfg.seed();
    let per_array: Vec<Vec<Value>> = (0..arrays)
        .into_par_iter()
        .map(|k| -> CliResult<Vec<Value>> {
            let w = WeightArray::random(size, &mut stream(seed, "conc-weights", k as u64))?;
            let m = w.mean();
            let mut rng = stream(seed, "conc-trials", k as u64);
            fracs
                .iter()
                .map(|&f| {
                    let r = concentration_experiment(&w, f * m, trials, &mut rng)?;
                    let mut v = json!({ "array": k, "a_frac": f });
                    if let (Value::Object(dst), Value::Object(src)) = (&mut v, serde_json::to_value(r)?) {
                        dst.extend(src);
                    }
                    Ok(v)
                })
                .collect()
        })
        .collect::<CliResult<_>>()?;
    let records: Vec<Value> = per_array.into_iter().flatten().collect();
    let failures = records.iter().filter(|r| r["pass"] != Value::Bool(true)).count();
    let exact_violations = records
        .iter()
        .filter(|r| r["exact_tail"].as_f64().is_some_and(|e| e > r["bound"].as_f64().unwrap_or(f64::NAN)))
        .count();
    let summary = json!({
        "index_size": size,
        "arrays": arrays,
        "trials": trials,
        "a_fracs": fracs,
        "checks": records.len(),
        "failures": failures,
        "exact_violations": exact_violations,
        "exact": size <= nbrw_core::concentration::EXHAUSTIVE_LIMIT,
    });
    Ok(Report::new("conc", records, summary, failures == 0))
}
