//! Slow sequences, contraction chains over a finite index window, and the
//! radius calculus used to conjugate them.
//!
//! Finite windows stand in for Z-indexed objects; an [`ExtensionPolicy`]
//! says what a chain looks like outside its data window. Lipschitz claims
//! are certified by the coefficient-level polynomial bound (authoritative)
//! and cross-checked by deterministic sampling (diagnostic).

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consts;
use crate::jets::{
    coeff_sup_bound, nonlinear_lipschitz_bound, radius_for_nonlinear_lip, sampled_lipschitz,
    CoeffBound, JetError, JetMap, JetMapJson, LinearMap,
};
use crate::spectrum::{
    ConstraintParams, LyapunovSpectrum, SpectrumError, SpectrumJson,
};
use crate::util::slow_envelope;
use crate::Real;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("index {n} outside window [{lo}, {hi}] with reject extension policy")]
    OutsideWindow { n: i64, lo: i64, hi: i64 },
    #[error("chain malformed: {0}")]
    Malformed(String),
    #[error("conjugating maps must be tangent to the identity at index {0}")]
    NotTangentToIdentity(i64),
    #[error("contraction margin violated: beta e^eps' = {value:.6} must stay below e^-eps = {limit:.6}")]
    ContractionMargin { value: f64, limit: f64 },
    #[error("self-mapping radius search failed after {0} shrink steps")]
    SelfMapSearch(usize),
    #[error("beta >= 1 cannot self-map; only the contracting case does")]
    ExpandingSelfMap,
    #[error("nonpositive parameter: {0}")]
    NonPositive(&'static str),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

pub type ChainResult<T> = Result<T, ChainError>;

/// How a finite window represents data outside itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtensionPolicy {
    /// Nearest-edge value; automatically eps-slow.
    Constant,
    /// Wrap modulo the window length.
    Periodic,
    /// Out-of-window access is an error.
    Reject,
}

impl ExtensionPolicy {
    /// Resolves index `n` to an in-window offset, or errors under `Reject`.
    pub fn resolve(self, n: i64, first: i64, len: usize) -> ChainResult<usize> {
        let hi = first + len as i64 - 1;
        if n >= first && n <= hi {
            return Ok((n - first) as usize);
        }
        match self {
            ExtensionPolicy::Reject => Err(ChainError::OutsideWindow { n, lo: first, hi }),
            ExtensionPolicy::Constant => Ok(if n < first { 0 } else { len - 1 }),
            ExtensionPolicy::Periodic => {
                let l = len as i64;
                Ok((((n - first) % l + l) % l) as usize)
            }
        }
    }
}

/// Positive values on an integer window with the eps-slow invariant
/// `e^{-eps} d_n <= d_{n+1} <= e^{eps} d_n`.
///
/// Fast sequences are stored as slow sequences of reciprocals.
#[derive(Clone, Debug, PartialEq)]
pub struct SlowSequence<R: Real> {
    first: i64,
    values: Vec<R>,
    epsilon: R,
    policy: ExtensionPolicy,
}

/// One slowness violation: the step index and the offending ratio.
#[derive(Clone, Debug, Serialize)]
pub struct SlowViolation {
    pub index: i64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlowReport {
    pub pass: bool,
    pub violations: Vec<SlowViolation>,
    /// Smallest multiplicative distance of any ratio to the band edges.
    pub worst_margin: f64,
}

impl<R: Real> SlowSequence<R> {
    pub fn new(
        first: i64,
        values: Vec<R>,
        epsilon: R,
        policy: ExtensionPolicy,
    ) -> ChainResult<Self> {
        if values.is_empty() {
            return Err(ChainError::Malformed("empty slow sequence".into()));
        }
        if epsilon <= R::zero() {
            return Err(ChainError::NonPositive("epsilon"));
        }
        if values.iter().any(|v| *v <= R::zero()) {
            return Err(ChainError::NonPositive("slow sequence value"));
        }
        Ok(SlowSequence {
            first,
            values,
            epsilon,
            policy,
        })
    }

    /// Constant sequence, trivially eps-slow.
    pub fn constant(first: i64, len: usize, value: R, epsilon: R) -> ChainResult<Self> {
        Self::new(first, vec![value; len], epsilon, ExtensionPolicy::Constant)
    }

    /// Largest eps-slow sequence below the given per-index caps.
    pub fn envelope(
        first: i64,
        caps: &[R],
        epsilon: R,
        policy: ExtensionPolicy,
    ) -> ChainResult<Self> {
        Self::new(first, slow_envelope(caps, epsilon), epsilon, policy)
    }

    pub fn first_index(&self) -> i64 {
        self.first
    }

    pub fn last_index(&self) -> i64 {
        self.first + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn epsilon(&self) -> R {
        self.epsilon
    }

    pub fn policy(&self) -> ExtensionPolicy {
        self.policy
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn value(&self, n: i64) -> ChainResult<R> {
        let idx = self.policy.resolve(n, self.first, self.values.len())?;
        Ok(self.values[idx])
    }

    pub fn min_value(&self) -> R {
        self.values.iter().copied().fold(self.values[0], R::min)
    }

    /// Per-step ratio check of the slow invariant.
    pub fn validate(&self) -> SlowReport {
        validate_slow(&self.values, self.first, self.epsilon)
    }

    /// Reciprocal sequence; eps-slow iff the original is.
    pub fn reciprocal(&self) -> SlowSequence<R> {
        SlowSequence {
            first: self.first,
            values: self.values.iter().map(|v| R::one() / *v).collect(),
            epsilon: self.epsilon,
            policy: self.policy,
        }
    }

    /// Index-wise product; the result is (eps1 + eps2)-slow.
    pub fn product(&self, other: &SlowSequence<R>) -> ChainResult<SlowSequence<R>> {
        if self.first != other.first || self.values.len() != other.values.len() {
            return Err(ChainError::Malformed(
                "slow-sequence product needs matching windows".into(),
            ));
        }
        SlowSequence::new(
            self.first,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a * *b)
                .collect(),
            self.epsilon + other.epsilon,
            self.policy,
        )
    }

    /// Uniformly scaled copy (scaling preserves slowness).
    pub fn scaled(&self, factor: R) -> SlowSequence<R> {
        SlowSequence {
            first: self.first,
            values: self.values.iter().map(|v| *v * factor).collect(),
            epsilon: self.epsilon,
            policy: self.policy,
        }
    }
}

/// Ratio check for an arbitrary positive sequence.
pub fn validate_slow<R: Real>(values: &[R], first: i64, epsilon: R) -> SlowReport {
    let lo = (-epsilon).exp();
    let hi = epsilon.exp();
    // multiplicative slack for float edges
    let slack = R::lit(1.0 + 1e-12);
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    for (i, w) in values.windows(2).enumerate() {
        let ratio = w[1] / w[0];
        let margin = (ratio / lo).min(hi / ratio).to_f64().unwrap_or(f64::NAN);
        worst = worst.min(margin);
        if ratio < lo / slack || ratio > hi * slack {
            violations.push(SlowViolation {
                index: first + i as i64,
                ratio: ratio.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    SlowReport {
        pass: violations.is_empty(),
        violations,
        worst_margin: worst,
    }
}

/// A finite window `W_n : D^k(rho_n) -> D^k(rho_{n+1})`, `n = first..=last`,
/// of holomorphic contractions fixing the origin, with block-diagonal linear
/// parts matching a Lyapunov spectrum.
///
/// Radii live on the window extended by one on the right, so the codomain
/// radius of the last map is explicit.
#[derive(Clone, Debug)]
pub struct ContractionChain<R: Real> {
    first: i64,
    maps: Vec<JetMap<R>>,
    radii: SlowSequence<R>,
    spectrum: LyapunovSpectrum<R>,
    params: ConstraintParams<R>,
    blocks: Vec<usize>,
    policy: ExtensionPolicy,
}

impl<R: Real> ContractionChain<R> {
    pub fn new(
        first: i64,
        maps: Vec<JetMap<R>>,
        radii: SlowSequence<R>,
        spectrum: LyapunovSpectrum<R>,
        params: ConstraintParams<R>,
        policy: ExtensionPolicy,
    ) -> ChainResult<Self> {
        if maps.is_empty() {
            return Err(ChainError::Malformed("chain needs at least one map".into()));
        }
        let k = spectrum.dim();
        if maps
            .iter()
            .any(|m| m.dim_in() != k || m.dim_out() != k)
        {
            return Err(ChainError::Malformed(format!(
                "every chain map must be C^{k} -> C^{k}"
            )));
        }
        let cap = maps[0].degree_cap();
        if maps.iter().any(|m| m.degree_cap() != cap) {
            return Err(ChainError::Malformed(
                "all chain maps must share one degree cap".into(),
            ));
        }
        if radii.first_index() != first || radii.len() != maps.len() + 1 {
            return Err(ChainError::Malformed(format!(
                "radii must cover [{first}, {}], got [{}, {}]",
                first + maps.len() as i64,
                radii.first_index(),
                radii.last_index()
            )));
        }
        let blocks = spectrum.multiplicities().to_vec();
        Ok(ContractionChain {
            first,
            maps,
            radii,
            spectrum,
            params,
            blocks,
            policy,
        })
    }

    pub fn first_index(&self) -> i64 {
        self.first
    }

    /// Index of the last map.
    pub fn last_index(&self) -> i64 {
        self.first + self.maps.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn degree_cap(&self) -> usize {
        self.maps[0].degree_cap()
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn spectrum(&self) -> &LyapunovSpectrum<R> {
        &self.spectrum
    }

    pub fn params(&self) -> &ConstraintParams<R> {
        &self.params
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn policy(&self) -> ExtensionPolicy {
        self.policy
    }

    pub fn radii(&self) -> &SlowSequence<R> {
        &self.radii
    }

    pub fn maps(&self) -> &[JetMap<R>] {
        &self.maps
    }

    /// The chain map at index `n`, using the extension policy off-window.
    pub fn map_at(&self, n: i64) -> ChainResult<&JetMap<R>> {
        let idx = self.policy.resolve(n, self.first, self.maps.len())?;
        Ok(&self.maps[idx])
    }

    /// Linear part `A_n = d_0 W_n`.
    pub fn linear_at(&self, n: i64) -> ChainResult<LinearMap<R>> {
        Ok(self.map_at(n)?.linear_part())
    }

    pub fn radius_at(&self, n: i64) -> ChainResult<R> {
        self.radii.value(n)
    }

    /// Replaces maps and radii, keeping spectrum/params/policy.
    pub fn with_maps(
        &self,
        maps: Vec<JetMap<R>>,
        radii: SlowSequence<R>,
    ) -> ChainResult<ContractionChain<R>> {
        ContractionChain::new(
            self.first,
            maps,
            radii,
            self.spectrum.clone(),
            self.params.clone(),
            self.policy,
        )
    }

    /// Full hypothesis check: block preservation, block singular-value
    /// bands, the Lipschitz contraction bound on the stated radii, and
    /// slowness of the radii.
    pub fn validate(&self, n_samples: usize, rng_seed: u64) -> ChainReport {
        let eps = self.params.epsilon;
        let theta = self.params.theta;
        let ranges = self.spectrum.block_ranges();
        let mut per_index = Vec::with_capacity(self.maps.len());
        for (i, map) in self.maps.iter().enumerate() {
            let n = self.first + i as i64;
            let a = map.linear_part();
            let off = off_block_leakage(&a, &ranges);
            let block_ok = off <= R::lit(consts::BLOCK_EXACT_TOL);

            let mut band_ok = true;
            let mut worst_band_margin = R::lit(f64::INFINITY);
            for (j, range) in ranges.iter().enumerate() {
                let sub = a.view((range.start, range.start), (range.len(), range.len()));
                let svd = sub.clone_owned().svd(false, false);
                let smax = svd.singular_values.max();
                let smin = svd.singular_values.min();
                let lambda = self.spectrum.exponents()[j];
                let lo = (-lambda - eps).exp();
                let hi = (-lambda + eps).exp();
                band_ok &= smin >= lo && smax <= hi;
                worst_band_margin = worst_band_margin
                    .min(smin / lo)
                    .min(hi / smax);
            }

            let rho = self.radii.values()[i];
            // coefficient bound is the authoritative Lipschitz certificate
            let coeff_lip = {
                let a_svd = a.clone().svd(false, false);
                a_svd.singular_values.max() + nonlinear_lipschitz_bound(map, rho)
            };
            let (s_lo, s_hi) =
                sampled_lipschitz(map, rho, n_samples.max(2), rng_seed ^ (i as u64))
                    .unwrap_or((R::zero(), R::zero()));
            let lip_ok = coeff_lip <= theta * R::lit(1.0 + 1e-6);
            let sampled_ok = s_hi <= theta * R::lit(1.0 + 1e-6);

            per_index.push(IndexReport {
                index: n,
                block_preserved: block_ok,
                off_block_leakage: off.to_f64().unwrap_or(f64::NAN),
                band_ok,
                band_margin: worst_band_margin.to_f64().unwrap_or(f64::NAN),
                radius: rho.to_f64().unwrap_or(f64::NAN),
                lipschitz_coeff_bound: coeff_lip.to_f64().unwrap_or(f64::NAN),
                lipschitz_sampled: (s_lo.to_f64().unwrap_or(f64::NAN), s_hi.to_f64().unwrap_or(f64::NAN)),
                lipschitz_ok: lip_ok,
                sampled_ok,
            });
        }
        let slow = self.radii.validate();
        ChainReport {
            pass: per_index
                .iter()
                .all(|r| r.block_preserved && r.band_ok && r.lipschitz_ok)
                && slow.pass,
            per_index,
            radii_slow: slow,
            theta: theta.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn to_json(&self) -> ChainJson {
        ChainJson {
            window: [self.first, self.last_index()],
            spectrum: self.spectrum.to_json(),
            params: ParamsJson::from_params(&self.params),
            blocks: self.blocks.clone(),
            maps: self.maps.iter().map(JetMapJson::from_jet).collect(),
            radii: self
                .radii
                .values()
                .iter()
                .map(|r| r.to_f64().unwrap())
                .collect(),
            extension: self.policy,
        }
    }
}

fn off_block_leakage<R: Real>(
    a: &LinearMap<R>,
    ranges: &[std::ops::Range<usize>],
) -> R {
    let block_of = |i: usize| ranges.iter().position(|r| r.contains(&i)).unwrap();
    let mut worst = R::zero();
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            if block_of(r) != block_of(c) {
                worst = worst.max(a[(r, c)].norm_sqr().sqrt());
            }
        }
    }
    worst
}

/// Per-index findings of [`ContractionChain::validate`].
#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    pub index: i64,
    pub block_preserved: bool,
    pub off_block_leakage: f64,
    pub band_ok: bool,
    pub band_margin: f64,
    pub radius: f64,
    pub lipschitz_coeff_bound: f64,
    pub lipschitz_sampled: (f64, f64),
    pub lipschitz_ok: bool,
    pub sampled_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub pass: bool,
    pub per_index: Vec<IndexReport>,
    pub radii_slow: SlowReport,
    pub theta: f64,
}

/// Tame-radius bound: radius on which a jet with linear singular values in
/// `[alpha, beta]` is `e^{±eps'}`-bi-Lipschitz around its linear part,
/// computed as `(r^2 / (c s)) min{(e^{eps'}-1) beta, (1-e^{-eps'}) alpha, kappa}`
/// and capped at half the reference radius.
pub fn tame_radius<R: Real>(
    jet: &JetMap<R>,
    alpha: R,
    beta: R,
    eps_prime: R,
    bound: &CoeffBound<R>,
    self_map: bool,
) -> ChainResult<R> {
    if alpha <= R::zero() || beta < alpha {
        return Err(ChainError::NonPositive("alpha"));
    }
    if eps_prime <= R::zero() {
        return Err(ChainError::NonPositive("eps_prime"));
    }
    if self_map && beta * eps_prime.exp() >= R::one() {
        return Err(ChainError::ExpandingSelfMap);
    }
    let half = bound.radius / R::lit(2.0);
    let nonlinear = jet.terms().any(|(_, a, _)| a.order() >= 2);
    if !nonlinear {
        return Ok(half);
    }
    let kappa = R::lit(consts::KAPPA_DEFAULT);
    let c = R::lit(consts::cauchy_dim_constant(jet.dim_in()));
    let budget = ((eps_prime.exp() - R::one()) * beta)
        .min((R::one() - (-eps_prime).exp()) * alpha)
        .min(kappa);
    let phi = bound.radius * bound.radius / (c * bound.sup_bound) * budget;
    Ok(phi.min(half))
}

/// Outcome of conjugating a chain by near-identity maps.
pub struct ConjugatedChain<R: Real> {
    /// `L~_n = M_{n+1} o L_n o M_n^{-1}` at the shared degree cap.
    pub maps: Vec<JetMap<R>>,
    /// Radii `psi_n` on which the conjugating maps are `e^{±eps'}`-bi-Lipschitz
    /// and the conjugated chain maps `D(e^eps psi_n)` into `D(e^eps psi_{n+1})`.
    pub radii: Vec<R>,
    /// Formal inverses of the conjugating maps, reused by callers.
    pub m_inverses: Vec<JetMap<R>>,
}

/// Conjugates `maps` (indices `first..first+maps.len()`) by the tangent-to-
/// identity family `m_family` (one entry more than `maps`).
///
/// Radii are certified from the coefficient bounds: the sampled estimate is
/// a diagnostic, the polynomial coefficient bound decides.
pub fn conjugate_chain<R: Real>(
    m_family: &[JetMap<R>],
    maps: &[JetMap<R>],
    input_radii: &[R],
    epsilon: R,
    eps_prime: R,
) -> ChainResult<ConjugatedChain<R>> {
    if m_family.len() != maps.len() + 1 {
        return Err(ChainError::Malformed(format!(
            "need {} conjugating maps for {} chain maps",
            maps.len() + 1,
            maps.len()
        )));
    }
    if input_radii.len() != maps.len() + 1 {
        return Err(ChainError::Malformed(
            "input radii must cover the extended window".into(),
        ));
    }
    for (i, m) in m_family.iter().enumerate() {
        if !m.has_identity_linear_part() {
            return Err(ChainError::NotTangentToIdentity(i as i64));
        }
    }
    // contraction margin: beta e^{eps'} < e^{-eps}
    let beta = maps
        .iter()
        .map(|m| {
            let svd = m.linear_part().svd(false, false);
            svd.singular_values.max()
        })
        .fold(R::zero(), R::max);
    if beta * eps_prime.exp() >= (-epsilon).exp() {
        return Err(ChainError::ContractionMargin {
            value: (beta * eps_prime.exp()).to_f64().unwrap_or(f64::NAN),
            limit: (-epsilon).exp().to_f64().unwrap_or(f64::NAN),
        });
    }

    let m_inverses: Vec<JetMap<R>> = m_family
        .iter()
        .map(|m| m.formal_inverse())
        .collect::<Result<_, _>>()?;

    let conjugated: Vec<JetMap<R>> = maps
        .iter()
        .enumerate()
        .map(|(i, l)| {
            m_family[i + 1]
                .compose(l)
                .and_then(|ml| ml.compose(&m_inverses[i]))
        })
        .collect::<Result<_, _>>()?;

    // bi-Lipschitz corridor for M and M^{-1} from the coefficient bound
    let corridor = R::one() - (-eps_prime).exp();
    let caps: Vec<R> = (0..m_family.len())
        .map(|i| {
            let r_m = radius_for_nonlinear_lip(&m_family[i], corridor, input_radii[i]);
            let r_mi = radius_for_nonlinear_lip(&m_inverses[i], corridor, input_radii[i]);
            r_m.min(r_mi).min(input_radii[i])
        })
        .collect();
    let mut psi = slow_envelope(&caps, epsilon);

    // shrink uniformly until the conjugated chain self-maps the
    // e^eps-inflated polydiscs
    let inflate = epsilon.exp();
    let mut tries = 0usize;
    loop {
        let ok = conjugated.iter().enumerate().all(|(i, l)| {
            coeff_sup_bound(l, inflate * psi[i]) <= inflate * psi[i + 1]
        });
        if ok {
            break;
        }
        for v in &mut psi {
            *v = *v * R::lit(0.8);
        }
        tries += 1;
        if tries > 400 {
            return Err(ChainError::SelfMapSearch(tries));
        }
    }

    Ok(ConjugatedChain {
        maps: conjugated,
        radii: psi,
        m_inverses,
    })
}

/// Wire format for chains:
/// `{window, spectrum, params, blocks, maps, radii, extension}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainJson {
    pub window: [i64; 2],
    pub spectrum: SpectrumJson,
    pub params: ParamsJson,
    pub blocks: Vec<usize>,
    pub maps: Vec<JetMapJson>,
    pub radii: Vec<f64>,
    pub extension: ExtensionPolicy,
}

/// Flat parameter block; only `gamma` and `epsilon` are load-bearing, the
/// rest is recomputed on load and checked for drift.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamsJson {
    pub gamma: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub p_star: Option<usize>,
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub m_lower: Option<f64>,
    #[serde(default)]
    pub m_upper: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub expert_zero_gamma: Option<bool>,
}

impl ParamsJson {
    pub fn from_params<R: Real>(p: &ConstraintParams<R>) -> Self {
        let f = |x: R| x.to_f64().unwrap();
        ParamsJson {
            gamma: f(p.gamma),
            epsilon: f(p.epsilon),
            a: Some(f(p.a)),
            b: Some(f(p.b)),
            p_star: Some(p.p_star),
            q: Some(p.q),
            theta: Some(f(p.theta)),
            m_lower: Some(f(p.m_lower)),
            m_upper: Some(f(p.m_upper)),
            beta: Some(f(p.beta)),
            expert_zero_gamma: Some(p.expert_zero_gamma),
        }
    }
}

impl ChainJson {
    pub fn to_chain<R: Real>(&self) -> ChainResult<ContractionChain<R>> {
        let spectrum = self.spectrum.to_spectrum::<R>()?;
        let params = if self.params.gamma == 0.0 {
            crate::spectrum::expert_zero_gamma_params(&spectrum, R::lit(self.params.epsilon))?
        } else {
            crate::spectrum::validate_constraints(
                &spectrum,
                R::lit(self.params.gamma),
                R::lit(self.params.epsilon),
            )?
        };
        let maps: Vec<JetMap<R>> = self
            .maps
            .iter()
            .map(|j| j.to_jet::<R>())
            .collect::<Result<_, _>>()?;
        let radii = SlowSequence::new(
            self.window[0],
            self.radii.iter().map(|&r| R::lit(r)).collect(),
            params.epsilon,
            self.extension,
        )?;
        if self.window[1] - self.window[0] + 1 != maps.len() as i64 {
            return Err(ChainError::Malformed(format!(
                "window [{}, {}] does not match {} maps",
                self.window[0],
                self.window[1],
                maps.len()
            )));
        }
        ContractionChain::new(self.window[0], maps, radii, spectrum, params, self.extension)
    }
}

/// Builds a complex matrix from row-major f64 pairs; test and fixture helper.
pub fn cmatrix<R: Real>(rows: usize, cols: usize, data: &[(f64, f64)]) -> DMatrix<Complex<R>> {
    assert_eq!(data.len(), rows * cols);
    DMatrix::from_row_slice(
        rows,
        cols,
        &data
            .iter()
            .map(|&(re, im)| Complex::new(R::lit(re), R::lit(im)))
            .collect::<Vec<_>>(),
    )
}
