use nbrw_core::degree::stats;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::Report;

pub fn cmd_gen_degrees(cfg: &ExperimentConfig) -> CliResult<Report> {
    let seq = cfg.degree_sequence()?;
    let raw = match cfg.emit.as_deref().unwrap_or("lines") {
        "lines" => seq.to_lines(),
        "counts" => seq.to_counts_json() + "\n",
        other => return Err(CliError::Config(format!("emit must be lines or counts, got {other:?}"))),
    };
    let summary = match stats(&seq) {
        Ok(st) => serde_json::to_value(st)?,
        Err(e) => serde_json::json!({ "n": seq.len(), "N": seq.half_edge_count(), "stats": e.to_string() }),
    };
    let mut report = Report::new("gen-degrees", Vec::new(), summary, true);
    report.raw = Some(raw);
    Ok(report)
}
