//! One function per subcommand, each turning an [`ExperimentConfig`] into a
//! [`Report`].

mod conc;
mod curve;
mod exposure;
mod gen;
mod lab;
mod predict;
mod profile;

pub use conc::cmd_conc;
pub use curve::cmd_curve;
pub use exposure::cmd_exposure;
pub use gen::cmd_gen_degrees;
pub use lab::{cmd_be, cmd_coupling};
pub use predict::cmd_predict;
pub use profile::cmd_profile;

use nbrw_core::pairing::HalfEdgeSpace;
use nbrw_core::rng::stream;
use rand::seq::index::sample;

use crate::config::{ExperimentConfig, Starts};
use crate::error::{CliError, CliResult};
use crate::output::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Degree statistics, predicted cutoff location/window and sparsity diagnostics.
    Predict,
    /// Exact distance-to-uniform curve over sampled starts.
    Curve,
    /// Rescaled profile d(t⋆ + λω⋆) against Φ(λ) across sizes.
    Profile,
    /// Failure time of the IID coupling against 2t²/N.
    Coupling,
    /// Berry-Esseen comparison of the IID log-weight tail.
    Be,
    /// Weighted-pairing concentration tail against its bound.
    Conc,
    /// Exposure forest replay, truncated sums and completion bound.
    Exposure,
    /// Emit a degree sequence.
    GenDegrees,
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> CliResult<Report> {
    match command {
        Command::Predict => cmd_predict(cfg),
        Command::Curve => cmd_curve(cfg),
        Command::Profile => cmd_profile(cfg),
        Command::Coupling => cmd_coupling(cfg),
        Command::Be => cmd_be(cfg),
        Command::Conc => cmd_conc(cfg),
        Command::Exposure => cmd_exposure(cfg),
        Command::GenDegrees => cmd_gen_degrees(cfg),
    }
}

pub const DEFAULT_SAMPLED_STARTS: usize = 32;

/// `count` distinct uniform half-edges (sorted) followed by the first
/// half-edge of a maximum-degree and of a minimum-degree vertex, when not
/// already present. Every half-edge is used when `count >= N`.
pub fn default_starts(space: &HalfEdgeSpace, count: usize, seed: u64, tag: &str) -> Vec<usize> {
    let n = space.len();
    if count >= n {
        return (0..n).collect();
    }
    let mut starts = sample(&mut stream(seed, tag, 0), n, count).into_vec();
    starts.sort_unstable();
    let vertices = 0..space.vertex_count();
    let max_v = vertices.clone().max_by_key(|&v| (space.degree(v), std::cmp::Reverse(v)));
    let min_v = vertices.min_by_key(|&v| (space.degree(v), v));
    for v in [max_v, min_v].into_iter().flatten() {
        let x = space.range(v).start;
        if !starts.contains(&x) {
            starts.push(x);
        }
    }
    starts
}

pub(crate) fn resolve_starts(
    space: &HalfEdgeSpace,
    starts: Option<&Starts>,
    seed: u64,
    tag: &str,
) -> CliResult<Vec<usize>> {
    match starts {
        None => Ok(default_starts(space, DEFAULT_SAMPLED_STARTS, seed, tag)),
        Some(Starts::Count(0)) => Err(CliError::Config("need at least one start".into())),
        Some(Starts::Count(c)) => Ok(default_starts(space, *c, seed, tag)),
        Some(Starts::List(list)) => {
            if list.is_empty() {
                return Err(CliError::Config("empty start list".into()));
            }
            if let Some(&bad) = list.iter().find(|&&x| x >= space.len()) {
                return Err(CliError::Config(format!("start {bad} outside 0..{}", space.len())));
            }
            Ok(list.clone())
        }
    }
}

/// Upper bound on the number of starts [`resolve_starts`] returns.
pub(crate) fn max_starts(starts: Option<&Starts>) -> usize {
    match starts {
        None => DEFAULT_SAMPLED_STARTS + 2,
        Some(Starts::Count(c)) => c + 2,
        Some(Starts::List(l)) => l.len(),
    }
}

/// Rejects runs whose `N · t_max · starts` exceeds the budget.
pub(crate) fn check_budget(n: usize, t_max: usize, starts: usize, budget: u64) -> CliResult<()> {
    let ops = n as u128 * t_max as u128 * starts as u128;
    if ops > budget as u128 {
        return Err(CliError::BudgetExceeded { ops, budget });
    }
    Ok(())
}

pub(crate) fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nbrw_core::DegreeSequence;

    #[test]
    fn starts_include_extremes() {
        let mut d = vec![3u32; 100];
        d[40] = 7;
        d[41] = 5;
        let space = HalfEdgeSpace::new(&DegreeSequence::validate(d, false).unwrap());
        let s = default_starts(&space, 32, 1, "starts");
        assert!(s.len() >= 32 && s.len() <= 34);
        assert!(s.contains(&space.range(40).start));
        assert!(s.contains(&0));
        let mut u = s.clone();
        u.sort_unstable();
        u.dedup();
        assert_eq!(u.len(), s.len());
        assert_eq!(s, default_starts(&space, 32, 1, "starts"));
        assert_eq!(default_starts(&space, 10_000, 1, "starts").len(), space.len());
    }

    #[test]
    fn budget_and_median() {
        assert!(check_budget(1000, 10, 10, 100_000).is_ok());
        assert!(matches!(check_budget(1000, 10, 11, 100_000), Err(CliError::BudgetExceeded { .. })));
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
