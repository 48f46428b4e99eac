//! Lyapunov-spectrum bookkeeping.
//!
//! Resonance enumeration over the bounded multi-index simplex, the gap
//! constant `a`, the shifted spectrum, and the admissibility constants that
//! every downstream stage consumes. An admissible pair `(gamma, epsilon)`
//! satisfies:
//!
//! * `gamma < Lambda_l / 2`,
//!   `gamma ([L1g/Llg] - 1) < a/2`,
//!   `4 gamma (L1g/Llg + 1) <= Llg`,
//! * `2 eps < gamma`, `4 eps + 2 gamma < Lambda_l`,
//!   `eps ([L1g/Llg] + 3) < b`,
//!
//! with `b = min(gamma, a)/2` and `L1g, Llg` the shifted extreme exponents.
//! The shift destroys every resonance relation with margin `b`; the check is
//! re-run numerically rather than trusted.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consts;
use crate::jets::MultiIndex;
use crate::Real;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("spectrum invalid: {0}")]
    Invalid(String),
    #[error("block index {j} out of range 0..{l}")]
    BlockOutOfRange { j: usize, l: usize },
    #[error("nonpositive parameter: {0}")]
    NonPositive(&'static str),
    #[error(
        "gap degenerate: index {alpha} at block {j} is non-resonant at exact tolerance \
         but numerically resonant (gap {gap:.3e})"
    )]
    DegenerateGap { j: usize, alpha: String, gap: f64 },
    #[error("parameter search exhausted below floor {floor:.1e}")]
    SearchExhausted { floor: f64 },
    #[error("gamma must be below the smallest exponent, got {gamma} vs {lambda_l}")]
    ShiftTooLarge { gamma: f64, lambda_l: f64 },
}

pub type SpectrumResult<T> = Result<T, SpectrumError>;

/// Distinct positive exponents `Lambda_1 > ... > Lambda_l` with
/// multiplicities `k_j`; `k = sum k_j` is the ambient dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovSpectrum<R: Real> {
    exponents: Vec<R>,
    multiplicities: Vec<usize>,
}

impl<R: Real> LyapunovSpectrum<R> {
    pub fn new(exponents: Vec<R>, multiplicities: Vec<usize>) -> SpectrumResult<Self> {
        if exponents.is_empty() || exponents.len() != multiplicities.len() {
            return Err(SpectrumError::Invalid(
                "need matching nonempty exponent/multiplicity lists".into(),
            ));
        }
        if multiplicities.iter().any(|&m| m == 0) {
            return Err(SpectrumError::Invalid("multiplicities must be >= 1".into()));
        }
        if exponents.iter().any(|&e| e <= R::zero()) {
            return Err(SpectrumError::Invalid("exponents must be positive".into()));
        }
        if exponents.windows(2).any(|w| w[0] <= w[1]) {
            return Err(SpectrumError::Invalid(
                "exponents must be strictly decreasing".into(),
            ));
        }
        Ok(LyapunovSpectrum {
            exponents,
            multiplicities,
        })
    }

    /// Single exponent with multiplicity `k`.
    pub fn single(exponent: R, k: usize) -> SpectrumResult<Self> {
        Self::new(vec![exponent], vec![k])
    }

    pub fn exponents(&self) -> &[R] {
        &self.exponents
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// Number of distinct exponents `l`.
    pub fn levels(&self) -> usize {
        self.exponents.len()
    }

    /// Ambient dimension `k`.
    pub fn dim(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn largest(&self) -> R {
        self.exponents[0]
    }

    pub fn smallest(&self) -> R {
        *self.exponents.last().unwrap()
    }

    /// The repeated tuple `(lambda_i)`: each `Lambda_j` repeated `k_j` times.
    pub fn repeated(&self) -> Vec<R> {
        let mut out = Vec::with_capacity(self.dim());
        for (e, m) in self.exponents.iter().zip(&self.multiplicities) {
            out.extend(std::iter::repeat(*e).take(*m));
        }
        out
    }

    /// Coordinate ranges of the blocks `L_1, ..., L_l`.
    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::with_capacity(self.levels());
        let mut start = 0;
        for &m in &self.multiplicities {
            out.push(start..start + m);
            start += m;
        }
        out
    }

    /// Degree profile of a multi-index per block: `beta_j = sum of alpha_i`
    /// over the coordinates of block `j`. The dot products below only
    /// depend on a multi-index through this profile.
    pub fn block_profile(&self, alpha: &MultiIndex) -> Vec<u32> {
        debug_assert_eq!(alpha.len(), self.dim());
        self.block_ranges()
            .iter()
            .map(|r| alpha.entries()[r.clone()].iter().sum())
            .collect()
    }

    /// `alpha . lambda` over the repeated tuple.
    pub fn dot(&self, alpha: &MultiIndex) -> R {
        let rep = self.repeated();
        alpha
            .entries()
            .iter()
            .zip(&rep)
            .fold(R::zero(), |acc, (&a, &l)| {
                acc + R::from_u32(a).unwrap() * l
            })
    }

    pub fn shifted(&self, gamma: R) -> SpectrumResult<ShiftedSpectrum<R>> {
        ShiftedSpectrum::new(self.clone(), gamma)
    }

    pub fn to_json(&self) -> SpectrumJson {
        SpectrumJson {
            exponents: self
                .exponents
                .iter()
                .map(|e| e.to_f64().unwrap())
                .collect(),
            multiplicities: self.multiplicities.clone(),
        }
    }
}

/// Wire format `{exponents: [float], multiplicities: [int]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub exponents: Vec<f64>,
    pub multiplicities: Vec<usize>,
}

impl SpectrumJson {
    pub fn to_spectrum<R: Real>(&self) -> SpectrumResult<LyapunovSpectrum<R>> {
        LyapunovSpectrum::new(
            self.exponents.iter().map(|&e| R::lit(e)).collect(),
            self.multiplicities.clone(),
        )
    }
}

/// Spectrum with every exponent shifted down by `gamma`.
#[derive(Clone, Debug)]
pub struct ShiftedSpectrum<R: Real> {
    base: LyapunovSpectrum<R>,
    gamma: R,
}

impl<R: Real> ShiftedSpectrum<R> {
    pub fn new(base: LyapunovSpectrum<R>, gamma: R) -> SpectrumResult<Self> {
        if gamma < R::zero() {
            return Err(SpectrumError::NonPositive("gamma"));
        }
        if gamma >= base.smallest() {
            return Err(SpectrumError::ShiftTooLarge {
                gamma: gamma.to_f64().unwrap_or(f64::NAN),
                lambda_l: base.smallest().to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(ShiftedSpectrum { base, gamma })
    }

    pub fn base(&self) -> &LyapunovSpectrum<R> {
        &self.base
    }

    pub fn gamma(&self) -> R {
        self.gamma
    }

    /// The shifted distinct exponents `Lambda_j - gamma` as a spectrum.
    pub fn as_spectrum(&self) -> LyapunovSpectrum<R> {
        LyapunovSpectrum {
            exponents: self
                .base
                .exponents
                .iter()
                .map(|&e| e - self.gamma)
                .collect(),
            multiplicities: self.base.multiplicities.clone(),
        }
    }

    pub fn repeated(&self) -> Vec<R> {
        self.as_spectrum().repeated()
    }
}

/// Per-block resonance sets together with the degree range enumerated.
#[derive(Clone, Debug)]
pub struct ResonanceSet {
    pub per_block: Vec<BTreeSet<MultiIndex>>,
    pub degree_range: (u32, u32),
}

impl ResonanceSet {
    pub fn is_empty(&self) -> bool {
        self.per_block.iter().all(|s| s.is_empty())
    }
}

/// All `alpha` with `2 <= |alpha| <= [Lambda_j / Lambda_l]` and
/// `alpha . lambda = Lambda_j` up to `tol`, for block `j` (0-based).
pub fn resonant_indices<R: Real>(
    spec: &LyapunovSpectrum<R>,
    j: usize,
    tol: R,
) -> SpectrumResult<BTreeSet<MultiIndex>> {
    if j >= spec.levels() {
        return Err(SpectrumError::BlockOutOfRange {
            j,
            l: spec.levels(),
        });
    }
    if tol < R::zero() {
        return Err(SpectrumError::NonPositive("tol"));
    }
    let target = spec.exponents()[j];
    let maxdeg = (target / spec.smallest()).entire().max(0) as u32;
    let mut out = BTreeSet::new();
    if maxdeg < 2 {
        return Ok(out);
    }
    for alpha in MultiIndex::of_degree_range(spec.dim(), 2, maxdeg) {
        if (spec.dot(&alpha) - target).abs() <= tol {
            out.insert(alpha);
        }
    }
    Ok(out)
}

/// Resonance sets for every block at the default exact-equality tolerance.
pub fn all_resonances<R: Real>(spec: &LyapunovSpectrum<R>) -> ResonanceSet {
    let tol = R::lit(consts::RESONANCE_TOL);
    let maxdeg = (spec.largest() / spec.smallest()).entire().max(0) as u32;
    ResonanceSet {
        per_block: (0..spec.levels())
            .map(|j| resonant_indices(spec, j, tol).expect("block in range"))
            .collect(),
        degree_range: (2, maxdeg.max(2)),
    }
}

/// The gap constant `a`: half the smallest nonzero distance
/// `|alpha . lambda - Lambda_j|` over non-resonant `alpha` with
/// `2 <= |alpha| <= [2 Lambda_1 / Lambda_l]`, capped at `0.99 ln 4`.
pub fn gap_constant<R: Real>(spec: &LyapunovSpectrum<R>) -> SpectrumResult<R> {
    let tol = R::lit(consts::RESONANCE_TOL);
    let cap = R::lit(0.99) * R::lit(4.0).ln();
    let maxdeg = (R::lit(2.0) * spec.largest() / spec.smallest())
        .entire()
        .max(2) as u32;
    let mut min_gap: Option<R> = None;
    for alpha in MultiIndex::of_degree_range(spec.dim(), 2, maxdeg) {
        let dot = spec.dot(&alpha);
        for j in 0..spec.levels() {
            let gap = (dot - spec.exponents()[j]).abs();
            if gap <= tol {
                continue; // resonant pair, excluded from the gap
            }
            // non-resonant at exact tolerance yet numerically tiny: the two
            // classifications conflict and no valid a exists
            if gap <= tol * R::lit(10.0) {
                return Err(SpectrumError::DegenerateGap {
                    j,
                    alpha: format!("{alpha}"),
                    gap: gap.to_f64().unwrap_or(0.0),
                });
            }
            min_gap = Some(match min_gap {
                Some(m) => m.min(gap),
                None => gap,
            });
        }
    }
    let a = match min_gap {
        Some(m) => (m / R::lit(2.0)).min(cap),
        None => cap,
    };
    Ok(a)
}

/// Admissibility constants and per-inequality flags for a `(gamma, epsilon)`
/// choice. Flattened to JSON with one boolean per named inequality.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintParams<R: Real> {
    pub gamma: R,
    pub epsilon: R,
    pub a: R,
    pub b: R,
    /// `[L1g/Llg] + 1`, the last degree the contact step cancels.
    pub p_star: usize,
    /// Contact order fed to the tail stage; equals `p_star`.
    pub q: usize,
    /// Uniform chain contraction bound `exp(-Lambda_l + 2 eps)`.
    pub theta: R,
    /// Lower bound `exp(-L1g - eps + gamma)` for the shifted linear parts.
    pub m_lower: R,
    /// Upper bound `exp(-Llg + eps + gamma)` for the shifted linear parts.
    pub m_upper: R,
    /// Tail contraction ratio `(M e^{2 eps})^{q+1} / m`.
    pub beta: R,
    /// `gamma = 0` expert mode: the epsilon inequalities were checked with
    /// `gamma` replaced by `a / 4`.
    pub expert_zero_gamma: bool,
    pub flag_gamma_below_half_lambda_l: bool,
    pub flag_gamma_gap: bool,
    pub flag_gamma_ratio: bool,
    pub flag_epsilon_below_half_gamma: bool,
    pub flag_epsilon_gamma_lambda: bool,
    pub flag_epsilon_resonance_margin: bool,
    pub flag_tail_contraction: bool,
}

impl<R: Real> ConstraintParams<R> {
    pub fn all_pass(&self) -> bool {
        self.flag_gamma_below_half_lambda_l
            && self.flag_gamma_gap
            && self.flag_gamma_ratio
            && self.flag_epsilon_below_half_gamma
            && self.flag_epsilon_gamma_lambda
            && self.flag_epsilon_resonance_margin
            && self.flag_tail_contraction
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.flag_gamma_below_half_lambda_l {
            out.push("gamma < Lambda_l / 2");
        }
        if !self.flag_gamma_gap {
            out.push("gamma ([L1g/Llg] - 1) < a/2");
        }
        if !self.flag_gamma_ratio {
            out.push("4 gamma (L1g/Llg + 1) <= Llg");
        }
        if !self.flag_epsilon_below_half_gamma {
            out.push("2 eps < gamma");
        }
        if !self.flag_epsilon_gamma_lambda {
            out.push("4 eps + 2 gamma < Lambda_l");
        }
        if !self.flag_epsilon_resonance_margin {
            out.push("eps ([L1g/Llg] + 3) < b");
        }
        if !self.flag_tail_contraction {
            out.push("(M e^{2 eps})^{q+1} < m e^{-eps}");
        }
        out
    }
}

/// Evaluates every admissibility inequality for `(gamma, epsilon)`.
/// Failures are reported as flags, not errors.
pub fn validate_constraints<R: Real>(
    spec: &LyapunovSpectrum<R>,
    gamma: R,
    epsilon: R,
) -> SpectrumResult<ConstraintParams<R>> {
    if gamma <= R::zero() {
        return Err(SpectrumError::NonPositive("gamma"));
    }
    build_params(spec, gamma, epsilon, false)
}

/// `gamma = 0` expert mode: the pipeline runs unshifted and the epsilon
/// inequalities are checked with `gamma` replaced by `a / 4`. Only sound
/// when the base spectrum is non-resonant at gap `a`; the homological
/// solver enforces that per monomial.
pub fn expert_zero_gamma_params<R: Real>(
    spec: &LyapunovSpectrum<R>,
    epsilon: R,
) -> SpectrumResult<ConstraintParams<R>> {
    build_params(spec, R::zero(), epsilon, true)
}

fn build_params<R: Real>(
    spec: &LyapunovSpectrum<R>,
    gamma: R,
    epsilon: R,
    expert: bool,
) -> SpectrumResult<ConstraintParams<R>> {
    if epsilon <= R::zero() {
        return Err(SpectrumError::NonPositive("epsilon"));
    }
    let a = gap_constant(spec)?;
    let lambda_1 = spec.largest();
    let lambda_l = spec.smallest();
    if gamma >= lambda_l {
        return Err(SpectrumError::ShiftTooLarge {
            gamma: gamma.to_f64().unwrap_or(f64::NAN),
            lambda_l: lambda_l.to_f64().unwrap_or(f64::NAN),
        });
    }
    // expert mode: the actual shift is zero (part-1 inequalities hold
    // trivially); a/4 stands in for gamma in the epsilon inequalities only
    let g_check = if expert { a / R::lit(4.0) } else { gamma };
    let l1g = lambda_1 - gamma;
    let llg = lambda_l - gamma;
    let ratio = l1g / llg;
    let entire = ratio.entire();
    let b = (g_check.min(a)) / R::lit(2.0);
    let p_star = (entire + 1).max(2) as usize;
    let q = p_star;
    let two = R::lit(2.0);
    let four = R::lit(4.0);

    let theta = (-lambda_l + two * epsilon).exp();
    let m_lower = (-l1g - epsilon + gamma).exp();
    let m_upper = (-llg + epsilon + gamma).exp();
    let beta = (m_upper * (two * epsilon).exp()).powi(q as i32 + 1) / m_lower;

    let entire_r = R::from_i64(entire).unwrap();
    let params = ConstraintParams {
        gamma,
        epsilon,
        a,
        b,
        p_star,
        q,
        theta,
        m_lower,
        m_upper,
        beta,
        expert_zero_gamma: expert,
        flag_gamma_below_half_lambda_l: gamma < lambda_l / two,
        flag_gamma_gap: gamma * (entire_r - R::one()) < a / two,
        flag_gamma_ratio: four * gamma * (ratio + R::one()) <= llg,
        flag_epsilon_below_half_gamma: two * epsilon < g_check,
        flag_epsilon_gamma_lambda: four * epsilon + two * g_check < lambda_l,
        flag_epsilon_resonance_margin: epsilon * (entire_r + R::lit(3.0)) < b,
        flag_tail_contraction: (m_upper * (two * epsilon).exp()).powi(q as i32 + 1)
            < m_lower * (-epsilon).exp(),
    };
    Ok(params)
}

/// Deterministic downward search for an epsilon admissible in expert
/// `gamma = 0` mode, from `a / 16`.
pub fn suggest_expert_epsilon<R: Real>(
    spec: &LyapunovSpectrum<R>,
) -> SpectrumResult<R> {
    let floor = R::lit(consts::PARAM_SEARCH_FLOOR);
    let a = gap_constant(spec)?;
    let mut eps = a / R::lit(16.0);
    loop {
        let p = expert_zero_gamma_params(spec, eps)?;
        if p.all_pass() {
            return Ok(eps);
        }
        eps = eps / R::lit(2.0);
        if eps < floor {
            return Err(SpectrumError::SearchExhausted {
                floor: consts::PARAM_SEARCH_FLOOR,
            });
        }
    }
}

/// Deterministic downward search for an admissible `(gamma, epsilon)`:
/// bisection from `gamma_0 = Lambda_l / 4`, then `eps_0 = gamma / 4`.
pub fn suggest_parameters<R: Real>(
    spec: &LyapunovSpectrum<R>,
) -> SpectrumResult<(R, R)> {
    let floor = R::lit(consts::PARAM_SEARCH_FLOOR);
    let two = R::lit(2.0);
    let mut gamma = spec.smallest() / R::lit(4.0);
    let gamma_ok = |g: R| -> SpectrumResult<bool> {
        let p = validate_constraints(spec, g, g / R::lit(8.0))?;
        Ok(p.flag_gamma_below_half_lambda_l && p.flag_gamma_gap && p.flag_gamma_ratio)
    };
    while !gamma_ok(gamma)? {
        gamma = gamma / two;
        if gamma < floor {
            return Err(SpectrumError::SearchExhausted {
                floor: consts::PARAM_SEARCH_FLOOR,
            });
        }
    }
    let mut epsilon = gamma / R::lit(4.0);
    loop {
        let p = validate_constraints(spec, gamma, epsilon)?;
        if p.all_pass() {
            return Ok((gamma, epsilon));
        }
        epsilon = epsilon / two;
        if epsilon < floor {
            return Err(SpectrumError::SearchExhausted {
                floor: consts::PARAM_SEARCH_FLOOR,
            });
        }
    }
}

/// One entry of the shifted-resonance audit.
#[derive(Clone, Debug, Serialize)]
pub struct ShiftViolation {
    pub block: usize,
    pub alpha: Vec<u32>,
    pub value: f64,
}

/// Report of the shifted-resonance audit: every `alpha . lambda^g - Lambda_j^g`
/// must stay outside `[-b, b]`; the minimal margin is recorded.
#[derive(Clone, Debug, Serialize)]
pub struct ShiftReport {
    pub violations: Vec<ShiftViolation>,
    pub min_margin: f64,
    pub b: f64,
}

impl ShiftReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Confirms that the shifted spectrum carries no resonance relation at gap
/// `b`, over all blocks and `2 <= |alpha| <= [L1g/Llg]`.
pub fn shifted_resonance_check<R: Real>(
    spec: &LyapunovSpectrum<R>,
    params: &ConstraintParams<R>,
) -> ShiftReport {
    let gamma = if params.expert_zero_gamma {
        R::zero()
    } else {
        params.gamma
    };
    let shifted = spec.shifted(gamma).expect("gamma validated upstream");
    let sh = shifted.as_spectrum();
    // the exclusion is claimed for 2 <= |alpha| <= [L1g/Llg] only; when the
    // entire part is below 2 there is nothing to audit
    let maxdeg = ((sh.largest()) / sh.smallest()).entire().max(0) as u32;
    let mut min_margin: Option<R> = None;
    let mut violations = Vec::new();
    for alpha in MultiIndex::of_degree_range(spec.dim(), 2, maxdeg) {
        let dot = sh.dot(&alpha);
        for j in 0..sh.levels() {
            let margin = (dot - sh.exponents()[j]).abs();
            min_margin = Some(match min_margin {
                Some(m) => m.min(margin),
                None => margin,
            });
            if margin <= params.b {
                violations.push(ShiftViolation {
                    block: j,
                    alpha: alpha.entries().to_vec(),
                    value: (dot - sh.exponents()[j]).to_f64().unwrap_or(f64::NAN),
                });
            }
        }
    }
    ShiftReport {
        violations,
        min_margin: min_margin
            .map(|m| m.to_f64().unwrap_or(f64::NAN))
            .unwrap_or(f64::INFINITY),
        b: params.b.to_f64().unwrap_or(f64::NAN),
    }
}
