//! Holomorphic endomorphisms of projective space and the verification stack
//! built on top of the chain pipeline: backward orbits along inverse
//! branches, the chart cocycle, a numerical Oseledec-Pesin reduction, and
//! the distortion/convexity checks for the normalized inverse branches.

mod chart;
mod cocycle;
mod distortion;
mod endo;
mod orbit;
mod oseledec;

pub use chart::{Chart, ProjPoint};
pub use cocycle::{build_cocycle, estimate_spectrum, forward_chart_jet, forward_chart_jet_between, CocycleData, CocycleStep};
pub use distortion::{
    assemble_distortion, convexity_defect, follow_branch, verify_distortion, AssembleOptions,
    ConvexityOutcome, DistortionData, DistortionReport, DistortionRow,
};
pub use endo::{quadratic_family_p1, squaring_p1, squaring_p2, EndomorphismJson, ProjectiveEndomorphism};
pub use orbit::{
    backward_orbit, birkhoff_log_jacobian, chart_derivative, chart_derivative_between, critical_test,
    estimate_inverse_radius_constant, preimage_near, preimages, sample_equilibrium,
    BackwardOrbit, BranchRule, CriticalTest, OrbitOptions,
};
pub use oseledec::{oseledec_reduce, OseledecData, OseledecMode, OseledecOptions};

use thiserror::Error;

use crate::chain::ChainError;
use crate::jets::JetError;
use crate::normalform::NormalformError;
use crate::spectrum::SpectrumError;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("endomorphism invalid: {0}")]
    InvalidMap(String),
    #[error("Newton did not converge after {0} iterations")]
    NewtonDiverged(usize),
    #[error("all preimages of step {step} are critical")]
    AllPreimagesCritical { step: usize },
    #[error("point is critical (jacobian modulus {modulus:.3e})")]
    CriticalPoint { modulus: f64 },
    #[error("chart degenerates near the cut locus (|w0| = {w0:.3e})")]
    ChartDegenerate { w0: f64 },
    #[error("no preimage found for step {step}")]
    NoPreimage { step: usize },
    #[error("inverse branch strayed from the stored orbit at step {step} (distance {dist:.3e})")]
    BranchStray { step: usize, dist: f64 },
    #[error("stabilization index {n_hat} exceeds the orbit length {orbit_len}")]
    StabilizationBeyondOrbit { n_hat: usize, orbit_len: usize },
    #[error("off-block leakage {leakage:.3e} exceeds tolerance {tol:.3e}")]
    LeakageTooLarge { leakage: f64, tol: f64 },
    #[error("spectrum estimation failed: {0}")]
    SpectrumEstimation(String),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Normalform(#[from] NormalformError),
}

pub type DynResult<T> = Result<T, DynamicsError>;
