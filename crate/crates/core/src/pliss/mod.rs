//! An explicit non-uniqueness example for a modulus that fails the Osgood
//! condition.
//!
//! In construction time the solution `u(t, x1, x2)` is supported in
//! `{t <= 0}` and solves `Łu + b·∇u + cu = 0` with
//! `Ł = ∂_t − ∂²_{x1} − l(t) ∂²_{x2}`. Segment `n` occupies `[a_n, a_{n+1}]`
//! and glues the cosine modes `v_n`, `w_n`, `v_{n+1}` with the cutoffs of
//! [`cutoffs`]. The [`Orientation::ReflectedTime`] view substitutes
//! `t → −t`, which turns the equation into the forward-looking form
//! `∂_t U + ∂²_{x1} U + l ∂²_{x2} U + b̃·∇U + c̃ U = 0` with
//! `supp U = {t >= 0}`.
//!
//! All values of `u` and its derivatives are returned in scaled form: the
//! true value is `field · exp(log_scale)`. On segment `n` the solution has
//! size `exp(−q_n)`, which underflows long before the first junction.

pub mod cutoffs;
mod export;
pub mod sequences;
mod solution;
mod verify;

pub use cutoffs::{make_cutoffs, CutoffFamily};
pub use export::{export_construction, ExportFormat, GridAxis, GridSpec};
pub use sequences::{build_sequences, choose_k0, default_segments, PlissSequences};
pub use solution::{Branch, Orientation, PlissConstruction, PointEval};
pub use verify::{verify_cmu_regularity, verify_conditions, verify_pde, PdeCheckConfig};

use crate::modulus::ModulusError;
use crate::quad::QuadError;
use thiserror::Error;

pub(crate) const MODULE_NAME: &str = "pliss";

#[derive(Debug, Error)]
pub enum PlissError {
    #[error("modulus `{0}` satisfies the Osgood condition; the series defining a_n diverges")]
    DivergentModulus(String),
    #[error("could not classify the Osgood integral of modulus `{0}`")]
    Unclassified(String),
    #[error("need at least 10 segments, got {0}")]
    TooFewSegments(usize),
    #[error("k0 = {k0} is too small: {reason}")]
    K0TooSmall { k0: u64, reason: String },
    #[error("no admissible k0 up to {cap}")]
    NoK0 { cap: u64 },
    #[error("tail of 1/μ near 0 is not geometrically summable (panel ratio {ratio})")]
    TailNotSummable { ratio: f64 },
    #[error("t = {t} lies in (a_{{N+1}}, 0) = ({limit}, 0), beyond the built horizon")]
    Horizon { t: f64, limit: f64 },
    #[error("t = {t} outside the evaluation window [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("segment index {n} outside 1..={max}")]
    BadSegment { n: usize, max: usize },
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Modulus(#[from] ModulusError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
