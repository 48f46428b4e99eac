//! Truncated multivariate complex power-series maps ("jets") in `k`
//! variables up to a degree cap, together with coefficient-level
//! Cauchy/Lipschitz estimates and sampled Lipschitz diagnostics.
//!
//! A [`JetMap`] fixes the origin: it stores coefficients for multi-indices
//! `alpha` with `1 <= |alpha| <= D` only. Coefficient storage is a sparse
//! map keyed by `(output component, alpha)` in graded-lexicographic order,
//! which keeps serialization canonical and composition deterministic.

mod bounds;
mod json;
mod map;
mod multiindex;
mod sample;

pub use bounds::{
    coeff_lipschitz_bound, coeff_sup_bound, lipschitz_radius, nonlinear_lipschitz_bound,
    radius_for_nonlinear_lip, CoeffBound,
};
pub use json::JetMapJson;
pub use map::{JetMap, LinearMap};
pub use multiindex::MultiIndex;
pub use sample::sampled_lipschitz;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum JetError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degree-cap mismatch: {left} vs {right}")]
    DegreeCapMismatch { left: usize, right: usize },
    #[error("degree {p} out of range 1..={cap}")]
    DegreeOutOfRange { p: usize, cap: usize },
    #[error("linear part is singular")]
    SingularLinearPart,
    #[error("linear part too ill-conditioned: cond = {cond:.3e}")]
    IllConditioned { cond: f64 },
    #[error("formal inverse needs equal input/output dimensions, got {dim_in} -> {dim_out}")]
    NotSquare { dim_in: usize, dim_out: usize },
    #[error("invalid term: {0}")]
    InvalidTerm(String),
    #[error("nonpositive parameter: {0}")]
    NonPositive(&'static str),
}

pub type JetResult<T> = Result<T, JetError>;
