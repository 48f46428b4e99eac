//! Linearization of nonautonomous chains of holomorphic contractions, applied
//! to the iterated inverse branches of holomorphic endomorphisms of projective
//! space.
//!
//! The crate is organized in five layers:
//!
//! * [`jets`] — truncated multivariate complex power-series maps (jets) with
//!   coefficient-level Cauchy/Lipschitz estimates,
//! * [`spectrum`] — Lyapunov-spectrum bookkeeping: resonance enumeration, the
//!   gap constant, the shifted spectrum and admissibility constants,
//! * [`chain`] — finite windows of contraction chains, slow sequences and the
//!   radius calculus used to conjugate them,
//! * [`normalform`] — the linearization pipeline: spectrum shift,
//!   degree-by-degree cancellation through homological equations, and tail
//!   linearization by Cauchy iteration,
//! * [`dynamics`] — endomorphisms of P^k, backward orbits, the chart cocycle,
//!   a numerical Oseledec-Pesin reduction and the distortion/convexity
//!   verification built on top of the pipeline.
//!
//! All core math is generic over the real scalar through [`Real`]; the
//! concrete aliases below fix binary64, which is the precision the bundled
//! tolerances in [`consts`] are calibrated for.

pub mod consts;
pub mod jets;
pub mod spectrum;
pub mod chain;
pub mod normalform;
pub mod dynamics;
pub mod synth;
pub mod util;

mod real;

pub use real::Real;

/// Crate version, embedded in every machine-readable report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Jet64 = jets::JetMap<f64>;
pub type Spectrum64 = spectrum::LyapunovSpectrum<f64>;
pub type ConstraintParams64 = spectrum::ConstraintParams<f64>;
pub type SlowSequence64 = chain::SlowSequence<f64>;
pub type Chain64 = chain::ContractionChain<f64>;
pub type NormalizationResult64 = normalform::NormalizationResult<f64>;
pub type Endomorphism64 = dynamics::ProjectiveEndomorphism<f64>;
pub type BackwardOrbit64 = dynamics::BackwardOrbit<f64>;
pub type DistortionData64 = dynamics::DistortionData<f64>;
