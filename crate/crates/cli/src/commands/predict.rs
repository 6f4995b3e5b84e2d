use nbrw_core::degree::{cutoff_prediction, sparsity_report_for, stats, SparsityThresholds};
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::Report;

pub const PREDICT_EPS: [f64; 5] = [0.9, 0.75, 0.5, 0.25, 0.1];

pub fn cmd_predict(cfg: &ExperimentConfig) -> CliResult<Report> {
    let seq = cfg.degree_sequence()?;
    let st = stats(&seq)?;
    let pred = cutoff_prediction(&st)?;
    let sparsity = sparsity_report_for(&seq, &st, SparsityThresholds::default());
    let mut t_mix = Map::new();
    for eps in PREDICT_EPS {
        t_mix.insert(eps.to_string(), json!(pred.t_mix(eps)?));
    }
    let mut record = serde_json::to_value(st)?;
    let obj = record.as_object_mut().expect("stats serialise to an object");
    obj.insert("t_star".into(), json!(pred.t_star));
    obj.insert("omega_star".into(), json!(pred.omega_star));
    obj.insert("t_mix_pred".into(), Value::Object(t_mix));
    obj.insert("sparsity".into(), serde_json::to_value(&sparsity)?);
    let summary = record.clone();
    Ok(Report::new("predict", vec![record], summary, true))
}
