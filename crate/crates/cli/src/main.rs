use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use nbrw_cli::config::{parse_map, OutputSpec};
use nbrw_cli::{execute, Command, DegreeSpec, ExperimentConfig, Format, Starts, TMax, EXIT_INVALID};

#[derive(Parser, Debug)]
#[command(name = "nbrw", version, about = "Non-backtracking random walk cutoff experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (1 gives the reference single-thread run).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Maximum N·t_max·starts for exact evolutions.
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[command(flatten)]
    degrees: DegreeArgs,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug)]
struct DegreeArgs {
    /// Vertex counts per degree, e.g. 3=1000,4=1000.
    #[arg(long, global = true, value_parser = parse_map::<u64>)]
    counts: Option<std::collections::BTreeMap<u32, u64>>,
    /// File with one degree per line or a {"counts": …} object.
    #[arg(long, global = true)]
    degrees_file: Option<PathBuf>,
    /// IID degree law, e.g. 3=0.5,4=0.5 (needs --n).
    #[arg(long, global = true, value_parser = parse_map::<f64>)]
    pmf: Option<std::collections::BTreeMap<u32, f64>>,
    /// Degree proportions, e.g. 3=1,4=1 (with --n for a single size, or --sizes for profile).
    #[arg(long, global = true, value_parser = parse_map::<u64>)]
    mix: Option<std::collections::BTreeMap<u32, u64>>,
    /// Number of vertices for --pmf or --mix.
    #[arg(long, global = true)]
    n: Option<u64>,
    /// Accept degrees below 3.
    #[arg(long, global = true)]
    allow_small: bool,
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// Curve horizon: AUTO or a number of steps.
    #[arg(long, global = true)]
    t_max: Option<TMax>,
    /// Number of sampled starts, or an explicit comma-separated list.
    #[arg(long, global = true)]
    starts: Option<Starts>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Walk length (coupling, be, exposure).
    #[arg(long = "t", global = true)]
    t: Option<usize>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    replicates: Option<usize>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[arg(long, global = true)]
    w_min: Option<f64>,
    /// Vertex counts for profile.
    #[arg(long, global = true, value_delimiter = ',')]
    sizes: Option<Vec<u64>>,
    /// Replicates per size for profile.
    #[arg(long, global = true)]
    seeds: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    lambdas: Option<Vec<f64>>,
    #[arg(long, global = true)]
    index_size: Option<usize>,
    #[arg(long, global = true)]
    arrays: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    a_fracs: Option<Vec<f64>>,
    /// Write the first exposure forest as JSON lines.
    #[arg(long, global = true)]
    forest_out: Option<PathBuf>,
    /// gen-degrees output: lines or counts.
    #[arg(long, global = true)]
    emit: Option<String>,
}

impl Cli {
    fn overrides(&self) -> Result<ExperimentConfig, String> {
        let d = &self.degrees;
        let given = [d.counts.is_some(), d.degrees_file.is_some(), d.pmf.is_some(), d.mix.is_some() && d.n.is_some()];
        if given.iter().filter(|&&g| g).count() > 1 {
            return Err("give at most one of --counts, --degrees-file, --pmf, --mix with --n".into());
        }
        let degree_spec = if let Some(c) = &d.counts {
            Some(DegreeSpec::Counts(c.clone()))
        } else if let Some(p) = &d.degrees_file {
            Some(DegreeSpec::File(p.clone()))
        } else if let Some(pmf) = &d.pmf {
            let n = d.n.ok_or("--pmf needs --n")?;
            Some(DegreeSpec::Pmf { pmf: pmf.clone(), n: n as usize })
        } else if let (Some(w), Some(n)) = (&d.mix, d.n) {
            Some(DegreeSpec::Mix { weights: w.clone(), n })
        } else {
            None
        };
        let output = (self.out.is_some() || self.format.is_some())
            .then(|| OutputSpec { path: self.out.clone(), format: self.format });
        let p = &self.params;
        Ok(ExperimentConfig {
            degree_spec,
            allow_small: d.allow_small.then_some(true),
            seed: self.seed,
            t_max: p.t_max,
            starts: p.starts.clone(),
            samples: p.samples,
            output,
            budget: self.budget,
            threads: self.threads,
            t: p.t,
            theta: p.theta,
            lambda: p.lambda,
            replicates: p.replicates,
            runs: p.runs,
            w_min: p.w_min,
            sizes: p.sizes.clone(),
            mix: d.mix.clone(),
            seeds: p.seeds,
            lambdas: p.lambdas.clone(),
            index_size: p.index_size,
            arrays: p.arrays,
            a_fracs: p.a_fracs.clone(),
            forest_out: p.forest_out.clone(),
            emit: p.emit.clone(),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match build_config(&cli) {
        Ok(cfg) => {
            if let Some(k) = cfg.threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_INVALID as u8);
                }
            }
            execute(cli.command, &cfg)
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    };
    ExitCode::from(code as u8)
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let base = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ExperimentConfig::from_json(&text).map_err(|e| e.to_string())?
        }
        None => ExperimentConfig::default(),
    };
    Ok(base.merged_with(cli.overrides()?))
}
