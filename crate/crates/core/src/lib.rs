//! Configuration-model random multigraphs and the non-backtracking random
//! walk (NBRW) on their half-edges.
//!
//! The crate is organised bottom-up:
//!
//! * [`degree`] validates degree sequences, computes the log-degree moments
//!   and the predicted cutoff location and window.
//! * [`pairing`] indexes half-edges, samples uniform pairings (eagerly or one
//!   pair at a time) and inspects the resulting multigraph.
//! * [`walk`] evolves exact distributions of the NBRW, measures total
//!   variation to the uniform law and runs quenched trajectories.
//! * [`coupling`] co-generates the walk with its pairing and couples it with
//!   IID uniform half-edges.
//! * [`exposure`] grows the weight-greedy exploration forest from two
//!   half-edges and [`concentration`] handles weighted sums over uniform
//!   pairings.

pub mod concentration;
pub mod coupling;
pub mod degree;
pub mod error;
pub mod exposure;
pub mod gaussian;
pub mod numeric;
pub mod pairing;
pub mod rng;
pub mod walk;

pub use degree::{CutoffPrediction, DegreeSequence, DegreeStats};
pub use error::{Error, Result};
pub use pairing::{HalfEdgeSpace, Pairing};
pub use walk::{Distribution, TvCurve};
