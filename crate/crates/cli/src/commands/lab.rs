use std::collections::BTreeMap;

use nbrw_core::coupling::{berry_esseen_check, coupling_experiment};
use nbrw_core::degree::stats;
use nbrw_core::pairing::HalfEdgeSpace;
use nbrw_core::rng::stream;
use serde_json::json;

use crate::config::{DegreeSpec, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::Report;

/// Equal 3/4 mix with exactly 10⁴ half-edges.
fn coupling_default() -> DegreeSpec {
    DegreeSpec::Counts(BTreeMap::from([(3, 1428), (4, 1429)]))
}

fn be_default() -> DegreeSpec {
    DegreeSpec::Counts(BTreeMap::from([(3, 10_000), (4, 10_000)]))
}

pub fn cmd_coupling(cfg: &ExperimentConfig) -> CliResult<Report> {
    let seq = cfg.degree_sequence_or(coupling_default())?;
    let space = HalfEdgeSpace::new(&seq);
    let t = cfg.t.unwrap_or(50);
    let replicates = cfg.replicates.unwrap_or(100_000);
    if t == 0 || 2 * t > space.len() {
        return Err(CliError::Config(format!("t must lie in 1..={}", space.len() / 2)));
    }
    let report = coupling_experiment(&space, t, replicates, &mut stream(cfg.seed(), "coupling", 0))?;
    let record = serde_json::to_value(&report)?;
    let summary = json!({
        "N": report.half_edges,
        "t": t,
        "replicates": replicates,
        "empirical": report.empirical,
        "bound": report.bound,
        "mc_slack": report.mc_slack,
        "mate_collisions": report.mate_collisions,
        "neighbour_collisions": report.neighbour_collisions,
    });
    Ok(Report::new("coupling", vec![record], summary, report.pass))
}

pub fn cmd_be(cfg: &ExperimentConfig) -> CliResult<Report> {
    let seq = cfg.degree_sequence_or(be_default())?;
    let st = stats(&seq)?;
    let space = HalfEdgeSpace::new(&seq);
    let t = cfg.t.unwrap_or(100);
    let samples = cfg.samples.unwrap_or(100_000);
    // θ = exp(λσ√t − μt) places the Gaussian prediction at Φ(λ).
    let lambda = cfg.lambda.unwrap_or(0.0);
    let theta = cfg
        .theta
        .unwrap_or_else(|| (lambda * st.sigma() * (t as f64).sqrt() - st.mu * t as f64).exp());
    let report = berry_esseen_check(&st, &space, t, theta, samples, &mut stream(cfg.seed(), "be", 0))?;
    let record = serde_json::to_value(report)?;
    let summary = json!({ "mu": st.mu, "sigma2": st.sigma2, "rho": st.rho, "report": record.clone() });
    Ok(Report::new("be", vec![record], summary, report.pass))
}
