//! Experiment configuration, shared by the JSON config file and the command
//! line. Every field is optional; commands fill in their own defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nbrw_core::degree::{sample_iid_degrees, DegreeSequence};
use nbrw_core::rng::stream;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, CliResult};

/// Where the degree sequence comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DegreeSpec {
    /// Vertex count per degree.
    Counts(BTreeMap<u32, u64>),
    /// Explicit per-vertex degrees.
    Degrees(Vec<u32>),
    /// File holding newline-separated degrees or a `{"counts": …}` object.
    File(PathBuf),
    /// `n` IID degrees drawn from `pmf`.
    Pmf { pmf: BTreeMap<u32, f64>, n: usize },
    /// `n` vertices split between degrees in proportion to `weights`.
    Mix { weights: BTreeMap<u32, u64>, n: u64 },
}

impl DegreeSpec {
    /// Builds the sequence. IID draws use the stream tagged `degrees`.
    pub fn build(&self, seed: u64, allow_small: bool) -> CliResult<DegreeSequence> {
        Ok(match self {
            DegreeSpec::Counts(c) => DegreeSequence::from_counts(c, allow_small)?,
            DegreeSpec::Degrees(d) => DegreeSequence::validate(d.clone(), allow_small)?,
            DegreeSpec::File(p) => DegreeSequence::parse(&std::fs::read_to_string(p)?, allow_small)?,
            DegreeSpec::Pmf { pmf, n } => {
                sample_iid_degrees(pmf, *n, allow_small, &mut stream(seed, "degrees", 0))?
            }
            DegreeSpec::Mix { weights, n } => DegreeSequence::from_mix(weights, *n, allow_small)?,
        })
    }
}

/// Parses `3=10,4=20` (also accepts `:` as separator).
pub fn parse_map<V: FromStr>(text: &str) -> Result<BTreeMap<u32, V>, String> {
    let mut out = BTreeMap::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once(['=', ':'])
            .ok_or_else(|| format!("expected degree=value, got {item:?}"))?;
        let k: u32 = k.trim().parse().map_err(|_| format!("bad degree {k:?}"))?;
        let v: V = v.trim().parse().map_err(|_| format!("bad value {v:?}"))?;
        if out.insert(k, v).is_some() {
            return Err(format!("degree {k} given twice"));
        }
    }
    if out.is_empty() {
        return Err("empty degree map".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TMax {
    /// `⌈t⋆ + 6·max(ω⋆, 1)⌉`, at least `⌈t⋆ + 10⌉`.
    #[default]
    Auto,
    Steps(usize),
}

impl TMax {
    pub fn resolve(self, t_star: f64, omega_star: f64) -> usize {
        match self {
            TMax::Steps(t) => t,
            TMax::Auto => {
                let wide = (t_star + 6.0 * omega_star.max(1.0)).ceil();
                let floor = (t_star + 10.0).ceil();
                wide.max(floor) as usize
            }
        }
    }
}

impl FromStr for TMax {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            Ok(TMax::Auto)
        } else {
            s.parse().map(TMax::Steps).map_err(|_| format!("t_max must be AUTO or an integer, got {s:?}"))
        }
    }
}

impl fmt::Display for TMax {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TMax::Auto => f.write_str("AUTO"),
            TMax::Steps(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TMaxRepr {
    Steps(usize),
    Word(String),
}

impl<'de> Deserialize<'de> for TMax {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match TMaxRepr::deserialize(d)? {
            TMaxRepr::Steps(t) => Ok(TMax::Steps(t)),
            TMaxRepr::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for TMax {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TMax::Auto => s.serialize_str("AUTO"),
            TMax::Steps(t) => s.serialize_u64(*t as u64),
        }
    }
}

/// Start half-edges: a sample size or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Starts {
    Count(usize),
    List(Vec<usize>),
}

impl FromStr for Starts {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.contains(',') || s.starts_with('[') {
            let inner = s.trim_matches(|c| c == '[' || c == ']');
            inner
                .split(',')
                .map(|p| p.trim().parse().map_err(|_| format!("bad start {p:?}")))
                .collect::<Result<_, _>>()
                .map(Starts::List)
        } else {
            s.parse().map(Starts::Count).map_err(|_| format!("bad starts {s:?}"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// All knobs of every command. Fields left `None` take command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub degree_spec: Option<DegreeSpec>,
    pub allow_small: Option<bool>,
    pub seed: Option<u64>,
    pub t_max: Option<TMax>,
    pub starts: Option<Starts>,
    pub samples: Option<usize>,
    pub output: Option<OutputSpec>,
    pub budget: Option<u64>,
    pub threads: Option<usize>,
    /// Walk length for coupling, Berry-Esseen and exposure runs.
    pub t: Option<usize>,
    pub theta: Option<f64>,
    pub lambda: Option<f64>,
    pub replicates: Option<usize>,
    pub runs: Option<usize>,
    pub w_min: Option<f64>,
    /// Vertex counts for the profile sweep.
    pub sizes: Option<Vec<u64>>,
    /// Degree proportions for the profile sweep.
    pub mix: Option<BTreeMap<u32, u64>>,
    pub seeds: Option<usize>,
    pub lambdas: Option<Vec<f64>>,
    pub index_size: Option<usize>,
    pub arrays: Option<usize>,
    /// Deviations `a` as fractions of the mean `m`.
    pub a_fracs: Option<Vec<f64>>,
    pub forest_out: Option<PathBuf>,
    /// `lines` or `counts` for gen-degrees.
    pub emit: Option<String>,
}

/// Default compute budget in elementary half-edge updates.
pub const DEFAULT_BUDGET: u64 = 20_000_000_000;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Fields set in `other` take precedence.
    pub fn merged_with(self, other: ExperimentConfig) -> Self {
        macro_rules! pick {
            ($($f:ident),*) => { Self { $($f: other.$f.or(self.$f)),* } };
        }
        let output = match (self.output.clone(), other.output.clone()) {
            (Some(a), Some(b)) => Some(OutputSpec { path: b.path.or(a.path), format: b.format.or(a.format) }),
            (a, b) => b.or(a),
        };
        let mut merged = pick!(
            degree_spec, allow_small, seed, t_max, starts, samples, output, budget, threads, t, theta,
            lambda, replicates, runs, w_min, sizes, mix, seeds, lambdas, index_size, arrays, a_fracs,
            forest_out, emit
        );
        merged.output = output;
        merged
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn allow_small(&self) -> bool {
        self.allow_small.unwrap_or(false)
    }

    pub fn budget(&self) -> u64 {
        self.budget.unwrap_or(DEFAULT_BUDGET)
    }

    pub fn format(&self) -> Format {
        self.output.as_ref().and_then(|o| o.format).unwrap_or_default()
    }

    pub fn out_path(&self) -> Option<&PathBuf> {
        self.output.as_ref().and_then(|o| o.path.as_ref())
    }

    pub fn degree_sequence(&self) -> CliResult<DegreeSequence> {
        let spec = self
            .degree_spec
            .as_ref()
            .ok_or_else(|| CliError::Config("no degree sequence given".into()))?;
        spec.build(self.seed(), self.allow_small())
    }

    /// The configured sequence, or `fallback` when none is given.
    pub fn degree_sequence_or(&self, fallback: DegreeSpec) -> CliResult<DegreeSequence> {
        self.degree_spec.as_ref().unwrap_or(&fallback).build(self.seed(), self.allow_small())
    }
}
