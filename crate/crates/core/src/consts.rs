//! Default tolerances and numerical floors, in one place.
//!
//! Everything here is calibrated for binary64 arithmetic; generic code pulls
//! these in through `Real::lit`.

/// Absolute slack used when testing whether a resonance relation
/// `alpha . lambda = Lambda_j` holds between floating-point exponents.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Certified tail cutoff for the homological series.
pub const TAIL_TOL: f64 = 1e-12;

/// Pointwise residual tolerance for the conjugation diagram.
pub const DIAGRAM_TOL: f64 = 1e-8;

/// Coefficient norms below this count as a cancelled homogeneous part.
pub const COEFF_ZERO_TOL: f64 = 1e-10;

/// Condition-number cap above which a linear part is treated as singular
/// when inverting jets.
pub const COND_CAP: f64 = 1e8;

/// Jacobian-modulus floor below which a point counts as critical.
pub const CRITICAL_FLOOR: f64 = 1e-10;

/// Newton convergence tolerance for inverse-branch solves.
pub const NEWTON_TOL: f64 = 1e-13;

/// Off-block entries of a block-preserving linear map must vanish to this.
pub const BLOCK_EXACT_TOL: f64 = 1e-14;

/// Relative slack allowed when the measured bi-Lipschitz band of the
/// normalized maps is compared against its certified band.
pub const SANDWICH_SLACK: f64 = 1e-6;

/// Default cap fed to the tame-radius formula.
pub const KAPPA_DEFAULT: f64 = 0.25;

/// Multiplier-modulus floor separating repelling from non-repelling cycles.
pub const REPELLING_FLOOR: f64 = 1e-9;

/// Uniform safety factor `exp(SAFETY_MARGIN_LOG)` applied to the
/// Oseledec-Pesin change of basis. Keeps its lower Lipschitz bound strictly
/// above 1 so the distortion sandwich has one-sided headroom, and forces the
/// stabilization index of the distortion package to be at least 1.
pub const SAFETY_MARGIN_LOG: f64 = 1e-3;

/// Floor for the deterministic downward parameter search.
pub const PARAM_SEARCH_FLOOR: f64 = 1e-9;

/// The dimensional Cauchy constant `c = k^2` used by coefficient bounds.
///
/// Any polydisc Cauchy estimate only needs a constant depending on the
/// dimension; `k^2` is a safe choice and is recorded in output metadata.
pub fn cauchy_dim_constant(k: usize) -> f64 {
    (k * k) as f64
}
