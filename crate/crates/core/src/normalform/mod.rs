//! The linearization pipeline for contraction chains.
//!
//! Three stages, each a conjugation of the chain:
//!
//! 1. **shift** — conjugate by `Delta_n = e^{n gamma} Id`. The linear parts
//!    become `A_n^g = e^gamma A_n`; the shifted exponents carry no resonance
//!    relation, which is the whole point of the shift.
//! 2. **contact improvement** — for `p = 2..=p*`, solve the homological
//!    equation `G_n^{(p)} + H_{n+1} o A_n^g - A_n^g o H_n = 0` by certified
//!    series averaging and conjugate the degree-`p` part away.
//! 3. **tail linearization** — once the chain agrees with its linear part to
//!    order `q = p*`, the compositions `(A^g_{p,n})^{-1} o X_{p,n}` converge
//!    geometrically (ratio `beta < 1`); iterate to tolerance.
//!
//! The assembled maps `phi_n = T^2_n o T^1_n o Delta_n` conjugate the chain
//! to its shifted linear parts; the diagram and the bi-Lipschitz sandwich are
//! re-measured, never assumed.

mod contact;
mod homological;
mod tail;

#[cfg(test)]
mod tests;

pub use contact::{improve_contact, ContactResult};
pub use homological::{kill_degree, solve_homological, HomologicalSolution, KillOutcome};
pub use tail::{linearize_tail, TailResult};

use num_complex::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::chain::{ChainError, ChainJson, ContractionChain, ExtensionPolicy, SlowSequence};
use crate::consts;
use crate::jets::{
    coeff_sup_bound, radius_for_nonlinear_lip, JetError, JetMap, JetMapJson, LinearMap,
};
use crate::spectrum::{ConstraintParams, LyapunovSpectrum, SpectrumError};
use crate::util::{dist2, norm_sup, polydisc_point, seeded_rng, slow_envelope};
use crate::Real;

#[derive(Debug, Error)]
pub enum NormalformError {
    #[error("input chain failed validation")]
    Validation,
    #[error("admissibility constraints fail: {0:?}")]
    Constraints(Vec<&'static str>),
    #[error("spectrum shift does not contract: theta e^gamma = {0} >= 1")]
    ShiftNotContracting(f64),
    #[error(
        "homological gap too small at degree {p}, block {block}, profile {profile:?}: \
         |sigma| = {sigma:.6e} <= b = {b:.6e} (resonant obstruction)"
    )]
    ResonantObstruction {
        p: usize,
        block: usize,
        profile: Vec<u32>,
        sigma: f64,
        b: f64,
    },
    #[error("certified series depth {needed} exceeds cap {cap}")]
    TailDepthExceeded { needed: usize, cap: usize },
    #[error("tail iteration diverges at index {index} after {iters} steps")]
    TailBreakdown { index: i64, iters: usize },
    #[error("contact order not reached: degree {degree} has coefficient norm {norm:.3e}")]
    ContactOrder { degree: usize, norm: f64 },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

impl NormalformError {
    /// Stable stage tag for CLI reporting.
    pub fn stage(&self) -> &'static str {
        match self {
            NormalformError::Validation => "validate",
            NormalformError::Constraints(_) => "constraints",
            NormalformError::ShiftNotContracting(_) => "shift_spectrum",
            NormalformError::ResonantObstruction { .. } => "solve_homological",
            NormalformError::TailDepthExceeded { .. } => "solve_homological",
            NormalformError::TailBreakdown { .. } => "linearize_tail",
            NormalformError::ContactOrder { .. } => "linearize_tail",
            NormalformError::Chain(_) => "chain",
            NormalformError::Jet(_) => "jets",
            NormalformError::Spectrum(_) => "spectrum",
        }
    }
}

pub type NormalformResult<T> = Result<T, NormalformError>;

/// The scaling family `Delta_n = e^{n gamma} Id`.
#[derive(Clone, Debug)]
pub struct ShiftFamily<R: Real> {
    pub gamma: R,
}

impl<R: Real> ShiftFamily<R> {
    pub fn factor(&self, n: i64) -> R {
        (R::from_i64(n).unwrap() * self.gamma).exp()
    }

    /// `Delta_{n+1} o Delta_n^{-1} = e^gamma Id`.
    pub fn step_factor(&self) -> R {
        self.gamma.exp()
    }

    /// Applies `T o Delta_n` by coefficient scaling (exact).
    pub fn precompose(&self, jet: &JetMap<R>, n: i64) -> JetMap<R> {
        let mut out = JetMap::zero(jet.dim_in(), jet.dim_out(), jet.degree_cap());
        for (i, alpha, c) in jet.terms() {
            let s = (R::from_i64(n).unwrap() * self.gamma * R::from_u32(alpha.order()).unwrap())
                .exp();
            out.set_coefficient(i, alpha.clone(), c * Complex::new(s, R::zero()))
                .expect("same shape");
        }
        out
    }
}

/// One stage of the pipeline: maps plus the context they live in.
///
/// `maps` sit at indices `first..first+maps.len()`; `radii` extends one
/// further so the last codomain radius is explicit. The extension policy is
/// applied to the stage maps themselves.
#[derive(Clone, Debug)]
pub struct ChainStage<R: Real> {
    pub first: i64,
    pub maps: Vec<JetMap<R>>,
    pub radii: Vec<R>,
    pub policy: ExtensionPolicy,
    pub spectrum: LyapunovSpectrum<R>,
    pub params: ConstraintParams<R>,
    /// Actual shift applied (zero in expert mode).
    pub gamma: R,
}

impl<R: Real> ChainStage<R> {
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn degree_cap(&self) -> usize {
        self.maps[0].degree_cap()
    }

    pub fn map_at(&self, n: i64) -> NormalformResult<&JetMap<R>> {
        let idx = self.policy.resolve(n, self.first, self.maps.len())?;
        Ok(&self.maps[idx])
    }

    pub fn linear_at(&self, n: i64) -> NormalformResult<LinearMap<R>> {
        Ok(self.map_at(n)?.linear_part())
    }

    /// Indices carrying transform-family entries: `first ..= first + len`.
    pub fn transform_indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.first..=(self.first + self.maps.len() as i64)
    }
}

/// Lemma-level spectrum shift: `W^g_n = Delta_{n+1} o W_n o Delta_n^{-1}`,
/// applied as exact coefficient scaling. Radii are unchanged (the shifted
/// chain acts on the same polydiscs); the scaled radii `rho_n e^{-n gamma}`
/// of the unshifted row are recorded alongside.
pub fn shift_spectrum<R: Real>(
    chain: &ContractionChain<R>,
) -> NormalformResult<ShiftedChain<R>> {
    let params = chain.params().clone();
    let gamma = if params.expert_zero_gamma {
        R::zero()
    } else {
        params.gamma
    };
    let theta_shift = params.theta * gamma.exp();
    if theta_shift >= R::one() {
        return Err(NormalformError::ShiftNotContracting(
            theta_shift.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let first = chain.first_index();
    let shift = ShiftFamily { gamma };
    let maps: Vec<JetMap<R>> = chain
        .maps()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let n = first + i as i64;
            // coefficient of alpha scales by e^{gamma (n+1)} e^{-gamma n |alpha|}
            let mut out = JetMap::zero(w.dim_in(), w.dim_out(), w.degree_cap());
            for (comp, alpha, c) in w.terms() {
                let e = R::from_i64(n + 1).unwrap()
                    - R::from_i64(n).unwrap() * R::from_u32(alpha.order()).unwrap();
                let s = (gamma * e).exp();
                out.set_coefficient(comp, alpha.clone(), c * Complex::new(s, R::zero()))
                    .expect("same shape");
            }
            out
        })
        .collect();
    let radii: Vec<R> = chain.radii().values().to_vec();
    let rho_gamma: Vec<R> = radii
        .iter()
        .enumerate()
        .map(|(i, r)| *r * (-gamma * R::from_i64(first + i as i64).unwrap()).exp())
        .collect();
    Ok(ShiftedChain {
        stage: ChainStage {
            first,
            maps,
            radii,
            policy: chain.policy(),
            spectrum: chain.spectrum().clone(),
            params,
            gamma,
        },
        rho_gamma,
        shift,
    })
}

/// Result of the shift stage.
pub struct ShiftedChain<R: Real> {
    pub stage: ChainStage<R>,
    /// `rho_n e^{-n gamma}`, the domains of the unshifted diagram row.
    pub rho_gamma: Vec<R>,
    pub shift: ShiftFamily<R>,
}

/// Everything the pipeline produces.
#[derive(Clone, Debug)]
pub struct NormalizationResult<R: Real> {
    pub chain: ContractionChain<R>,
    pub shift: ShiftFamily<R>,
    /// Tangent-to-identity contact transforms, indices `first..=first+len`.
    pub t1: Vec<JetMap<R>>,
    /// Tangent-to-identity tail transforms, same indices.
    pub t2: Vec<JetMap<R>>,
    /// `phi_n = T^2_n o T^1_n o Delta_n`, same indices.
    pub phi: Vec<JetMap<R>>,
    /// Final certified radius family `r_n` (eps-slow, below the chain radii).
    pub radii: SlowSequence<R>,
    pub diagnostics: Diagnostics<R>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics<R: Real> {
    /// Max coefficient-space residual of `phi_{n+1} o W_n - A^g_n o phi_n`.
    pub coeff_residuals: Vec<R>,
    /// Max sampled residual per map index, within radius `r_n^g`.
    pub sampled_residuals: Vec<R>,
    /// Sampled bi-Lipschitz band of `phi_n` per transform index.
    pub lip_bands: Vec<(R, R)>,
    /// Certified band `[min, max]{e^{n(g-2e)}, e^{n(g+2e)}}` per index.
    pub expected_bands: Vec<(R, R)>,
    pub sandwich_pass: bool,
    pub containment_pass: bool,
    /// Tail convergence ratio history per transform index.
    pub ratio_history: Vec<Vec<R>>,
    /// Measured geometric decay rate of the tail increments per index;
    /// the quantity the certified ratio `beta` bounds.
    pub envelope_ratios: Vec<R>,
    /// Residuals of the homological identity per contact degree.
    pub homological_residuals: Vec<(usize, R)>,
    /// Coefficient norms of degrees `2..=p*` after contact improvement.
    pub cancelled_degree_norms: Vec<(usize, R)>,
    pub sandwich_slack: R,
    pub diagram_tol: R,
    /// Dimensional Cauchy constant used by the radius calculus.
    pub cauchy_constant: f64,
}

/// Knobs for [`normalize`].
#[derive(Clone, Debug)]
pub struct NormalizeOptions<R: Real> {
    pub tail_tol: R,
    pub coeff_zero_tol: R,
    pub diagram_tol: R,
    /// Relative slack of the measured sandwich band; also caps the final
    /// radii so the band at `n = 0` is attainable.
    pub sandwich_slack: R,
    pub samples_per_index: usize,
    pub rng_seed: u64,
    pub validate_input: bool,
}

impl<R: Real> Default for NormalizeOptions<R> {
    fn default() -> Self {
        NormalizeOptions {
            tail_tol: R::lit(consts::TAIL_TOL),
            coeff_zero_tol: R::lit(consts::COEFF_ZERO_TOL),
            diagram_tol: R::lit(consts::DIAGRAM_TOL),
            sandwich_slack: R::lit(consts::SANDWICH_SLACK),
            samples_per_index: 200,
            rng_seed: 0x5eed,
            validate_input: true,
        }
    }
}

/// Runs shift -> contact improvement -> tail linearization, assembles
/// `phi_n`, and re-measures the sandwich and the conjugation diagram.
pub fn normalize<R: Real>(
    chain: &ContractionChain<R>,
    opts: &NormalizeOptions<R>,
) -> NormalformResult<NormalizationResult<R>> {
    let params = chain.params().clone();
    if !params.all_pass() {
        return Err(NormalformError::Constraints(params.failures()));
    }
    if opts.validate_input {
        let report = chain.validate(64, opts.rng_seed ^ 0xc0ffee);
        if !report.pass {
            return Err(NormalformError::Validation);
        }
    }

    let shifted = shift_spectrum(chain)?;
    let shift = shifted.shift.clone();
    let contact = improve_contact(&shifted.stage, opts.tail_tol)?;
    let tail = linearize_tail(&contact.stage, opts.tail_tol, opts.coeff_zero_tol)?;

    let first = chain.first_index();
    let count = chain.len() + 1;
    let eps = params.epsilon;

    // final radii: contact radii, e^{±eps} corridors for T^1 and T^2, and
    // the sandwich-slack distortion cap at the transform scale
    let corridor = R::one() - (-eps).exp();
    let slack_budget = opts.sandwich_slack / R::lit(3.0);
    let mut caps = Vec::with_capacity(count);
    for i in 0..count {
        let r_in = contact.stage.radii[i];
        let t1r = radius_for_nonlinear_lip(&contact.t1[i], corridor, r_in);
        let t2r = radius_for_nonlinear_lip(&tail.t2[i], corridor, r_in);
        let composite = tail.t2[i].compose(&contact.t1[i])?;
        let slackr = radius_for_nonlinear_lip(&composite, slack_budget, r_in);
        caps.push(r_in.min(t1r).min(t2r).min(slackr));
    }
    let radii_vals = slow_envelope(&caps, eps);
    let radii = SlowSequence::new(first, radii_vals.clone(), eps, chain.policy())?;

    // phi_n = T^2 o T^1 o Delta_n
    let mut phi = Vec::with_capacity(count);
    for i in 0..count {
        let composite = tail.t2[i].compose(&contact.t1[i])?;
        phi.push(shift.precompose(&composite, first + i as i64));
    }

    let diagnostics = measure_diagnostics(
        chain, &shift, &phi, &radii_vals, &contact, &tail, opts,
    )?;

    Ok(NormalizationResult {
        chain: chain.clone(),
        shift,
        t1: contact.t1,
        t2: tail.t2,
        phi,
        radii,
        diagnostics,
    })
}

fn measure_diagnostics<R: Real>(
    chain: &ContractionChain<R>,
    shift: &ShiftFamily<R>,
    phi: &[JetMap<R>],
    radii: &[R],
    contact: &ContactResult<R>,
    tail: &TailResult<R>,
    opts: &NormalizeOptions<R>,
) -> NormalformResult<Diagnostics<R>> {
    let first = chain.first_index();
    let eps = chain.params().epsilon;
    let gamma = shift.gamma;
    let step = shift.step_factor();
    let mut rng = seeded_rng(opts.rng_seed);

    let mut coeff_residuals = Vec::with_capacity(chain.len());
    let mut sampled_residuals = Vec::with_capacity(chain.len());
    let mut lip_bands = Vec::with_capacity(phi.len());
    let mut expected_bands = Vec::with_capacity(phi.len());
    let mut sandwich_pass = true;
    let mut containment_pass = true;

    for (i, w) in chain.maps().iter().enumerate() {
        let n = first + i as i64;
        // A^g_n o phi_n vs phi_{n+1} o W_n, in coefficients
        let a_gamma = w.linear_part().map(|z| z * Complex::new(step, R::zero()));
        let lhs = phi[i + 1].compose(w)?;
        let rhs = phi[i].left_matrix(&a_gamma)?;
        let diff = lhs.sub(&rhs)?;
        coeff_residuals.push(diff.max_coeff_modulus());

        // pointwise residual within r_n^g
        let r_g = radii[i] * (-gamma * R::from_i64(n).unwrap()).exp();
        let mut worst = R::zero();
        for _ in 0..opts.samples_per_index {
            let v = polydisc_point(chain.dim(), r_g * R::lit(1.0 - 1e-9), &mut rng);
            let wv = w.evaluate(&v)?;
            let left = phi[i + 1].evaluate(&wv)?;
            let right = phi[i].evaluate(&v)?;
            let right = (0..right.len())
                .map(|r| {
                    (0..right.len()).fold(Complex::new(R::zero(), R::zero()), |acc, c| {
                        acc + a_gamma[(r, c)] * right[c]
                    })
                })
                .collect::<Vec<_>>();
            worst = worst.max(dist2(&left, &right));
        }
        sampled_residuals.push(worst);
    }

    for (i, jet) in phi.iter().enumerate() {
        let n = first + i as i64;
        let nr = R::from_i64(n).unwrap();
        let r_g = radii[i] * (-gamma * nr).exp();
        let e1 = (nr * (gamma - R::lit(2.0) * eps)).exp();
        let e2 = (nr * (gamma + R::lit(2.0) * eps)).exp();
        let (lo_exp, hi_exp) = (e1.min(e2), e1.max(e2));
        let slack = opts.sandwich_slack;
        let mut lo_m: Option<R> = None;
        let mut hi_m: Option<R> = None;
        for _ in 0..opts.samples_per_index {
            let u = polydisc_point(chain.dim(), r_g, &mut rng);
            let v = polydisc_point(chain.dim(), r_g, &mut rng);
            let d = dist2(&u, &v);
            if d <= r_g * R::lit(1e-12) {
                continue;
            }
            let fu = jet.evaluate(&u)?;
            let fv = jet.evaluate(&v)?;
            let ratio = dist2(&fu, &fv) / d;
            lo_m = Some(lo_m.map_or(ratio, |m: R| m.min(ratio)));
            hi_m = Some(hi_m.map_or(ratio, |m: R| m.max(ratio)));
            // containment in D^k(4 r_n)
            if norm_sup(&fu) >= R::lit(4.0) * radii[i] {
                containment_pass = false;
            }
        }
        let (lo, hi) = (lo_m.unwrap_or(lo_exp), hi_m.unwrap_or(hi_exp));
        lip_bands.push((lo, hi));
        expected_bands.push((lo_exp, hi_exp));
        if lo < lo_exp * (R::one() - slack) || hi > hi_exp * (R::one() + slack) {
            sandwich_pass = false;
        }
    }

    Ok(Diagnostics {
        coeff_residuals,
        sampled_residuals,
        lip_bands,
        expected_bands,
        sandwich_pass,
        containment_pass,
        ratio_history: tail.ratio_history.clone(),
        envelope_ratios: tail.envelope_ratios.clone(),
        homological_residuals: contact.homological_residuals.clone(),
        cancelled_degree_norms: contact.cancelled_degree_norms.clone(),
        sandwich_slack: opts.sandwich_slack,
        diagram_tol: opts.diagram_tol,
        cauchy_constant: consts::cauchy_dim_constant(chain.dim()),
    })
}

impl<R: Real> NormalizationResult<R> {
    /// Largest pointwise diagram residual.
    pub fn max_sampled_residual(&self) -> R {
        self.diagnostics
            .sampled_residuals
            .iter()
            .copied()
            .fold(R::zero(), R::max)
    }

    pub fn max_coeff_residual(&self) -> R {
        self.diagnostics
            .coeff_residuals
            .iter()
            .copied()
            .fold(R::zero(), R::max)
    }

    /// `r_n^g = r_n e^{-n gamma}`.
    pub fn r_gamma(&self) -> Vec<R> {
        let first = self.radii.first_index();
        self.radii
            .values()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                *r * (-self.shift.gamma * R::from_i64(first + i as i64).unwrap()).exp()
            })
            .collect()
    }

    /// Exit health: every residual within tolerance and both measured
    /// properties hold.
    pub fn pass(&self) -> bool {
        let tol = self.diagnostics.diagram_tol;
        self.diagnostics.sampled_residuals.iter().all(|r| *r <= tol)
            && self.diagnostics.sandwich_pass
            && self.diagnostics.containment_pass
    }

    pub fn to_json(&self) -> ResultJson {
        ResultJson {
            chain: self.chain.to_json(),
            gamma: self.shift.gamma.to_f64().unwrap(),
            radii: self
                .radii
                .values()
                .iter()
                .map(|r| r.to_f64().unwrap())
                .collect(),
            phi: self.phi.iter().map(JetMapJson::from_jet).collect(),
            coeff_residuals: to_f64s(&self.diagnostics.coeff_residuals),
            sampled_residuals: to_f64s(&self.diagnostics.sampled_residuals),
            lip_bands: self
                .diagnostics
                .lip_bands
                .iter()
                .map(|(a, b)| (a.to_f64().unwrap(), b.to_f64().unwrap()))
                .collect(),
            ratio_history: self
                .diagnostics
                .ratio_history
                .iter()
                .map(|v| to_f64s(v))
                .collect(),
            sandwich_pass: self.diagnostics.sandwich_pass,
            containment_pass: self.diagnostics.containment_pass,
            cauchy_constant: self.diagnostics.cauchy_constant,
        }
    }

    /// Residual CSV rows: `index,residual,lip_min,lip_max,r_n`.
    pub fn csv_rows(&self) -> Vec<String> {
        let first = self.radii.first_index();
        let mut rows = Vec::new();
        for (i, r) in self.radii.values().iter().enumerate() {
            let residual = self
                .diagnostics
                .sampled_residuals
                .get(i)
                .copied()
                .unwrap_or(R::zero());
            let (lo, hi) = self.diagnostics.lip_bands[i];
            rows.push(format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e}",
                first + i as i64,
                residual.to_f64().unwrap(),
                lo.to_f64().unwrap(),
                hi.to_f64().unwrap(),
                r.to_f64().unwrap()
            ));
        }
        rows
    }
}

fn to_f64s<R: Real>(v: &[R]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap()).collect()
}

/// Machine-readable normalization output.
#[derive(Clone, Debug, Serialize)]
pub struct ResultJson {
    pub chain: ChainJson,
    pub gamma: f64,
    pub radii: Vec<f64>,
    pub phi: Vec<JetMapJson>,
    pub coeff_residuals: Vec<f64>,
    pub sampled_residuals: Vec<f64>,
    pub lip_bands: Vec<(f64, f64)>,
    pub ratio_history: Vec<Vec<f64>>,
    pub sandwich_pass: bool,
    pub containment_pass: bool,
    pub cauchy_constant: f64,
}

/// Standalone re-measurement of the conjugation diagram: pointwise residual
/// within `r_n^g` plus the image-containment check `phi_n(D(r_n^g)) ⊂ D(4 r_n)`.
#[derive(Clone, Debug, Serialize)]
pub struct DiagramReport<R: Real> {
    pub residuals: Vec<R>,
    pub max_residual: R,
    pub containment_pass: bool,
}

pub fn verify_diagram<R: Real>(
    result: &NormalizationResult<R>,
    n_samples: usize,
    rng_seed: u64,
) -> NormalformResult<DiagramReport<R>> {
    let chain = &result.chain;
    let first = chain.first_index();
    let gamma = result.shift.gamma;
    let step = result.shift.step_factor();
    let mut rng = seeded_rng(rng_seed);
    let radii = result.radii.values();
    let mut residuals = Vec::with_capacity(chain.len());
    let mut containment = true;
    for (i, w) in chain.maps().iter().enumerate() {
        let n = first + i as i64;
        let a_gamma = w.linear_part().map(|z| z * Complex::new(step, R::zero()));
        let r_g = radii[i] * (-gamma * R::from_i64(n).unwrap()).exp();
        let mut worst = R::zero();
        for _ in 0..n_samples {
            let v = polydisc_point(chain.dim(), r_g * R::lit(1.0 - 1e-9), &mut rng);
            let left = result.phi[i + 1].evaluate(&w.evaluate(&v)?)?;
            let pv = result.phi[i].evaluate(&v)?;
            let right: Vec<Complex<R>> = (0..pv.len())
                .map(|r| {
                    (0..pv.len()).fold(Complex::new(R::zero(), R::zero()), |acc, c| {
                        acc + a_gamma[(r, c)] * pv[c]
                    })
                })
                .collect();
            worst = worst.max(dist2(&left, &right));
            if norm_sup(&pv) >= R::lit(4.0) * radii[i] {
                containment = false;
            }
        }
        residuals.push(worst);
    }
    let max_residual = residuals.iter().copied().fold(R::zero(), R::max);
    Ok(DiagramReport {
        residuals,
        max_residual,
        containment_pass: containment,
    })
}

/// Shared helper: coefficient sup bound of a stage map on an inflated disc,
/// used by the self-map checks in this module.
pub(crate) fn stage_self_map_ok<R: Real>(
    maps: &[JetMap<R>],
    radii: &[R],
    inflate: R,
) -> bool {
    maps.iter()
        .enumerate()
        .all(|(i, m)| coeff_sup_bound(m, inflate * radii[i]) <= inflate * radii[i + 1])
}

