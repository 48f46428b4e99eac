//! Synthetic chain fixtures: the autonomous Koenigs chain, purely linear
//! chains, and randomized admissible chains used by tests and experiments.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;

use crate::chain::{ChainResult, ContractionChain, ExtensionPolicy, SlowSequence};
use crate::jets::{radius_for_nonlinear_lip, JetMap, MultiIndex};
use crate::spectrum::{
    expert_zero_gamma_params, suggest_expert_epsilon, suggest_parameters, validate_constraints,
    LyapunovSpectrum,
};
use crate::util::{seeded_rng, slow_envelope};
use crate::Real;

/// Autonomous chain `W(z) = a z + c z^2` in one variable under expert
/// `gamma = 0` parameters; the classical single-map linearization fixture.
pub fn koenigs_chain<R: Real>(
    multiplier: f64,
    quadratic: f64,
    first: i64,
    len: usize,
) -> ChainResult<ContractionChain<R>> {
    assert!(multiplier > 0.0 && multiplier < 1.0);
    let lambda = -R::lit(multiplier).ln();
    let spec = LyapunovSpectrum::single(lambda, 1)?;
    let epsilon = suggest_expert_epsilon(&spec)?;
    let params = expert_zero_gamma_params(&spec, epsilon)?;
    let cap = params.p_star + 1;

    let mut w = JetMap::zero(1, 1, cap);
    w.set_coefficient(0, MultiIndex::new(vec![1]), Complex::new(R::lit(multiplier), R::zero()))?;
    w.set_coefficient(0, MultiIndex::new(vec![2]), Complex::new(R::lit(quadratic), R::zero()))?;

    // radius where the derivative bound stays below theta
    let slack = params.theta - R::lit(multiplier);
    let rho = radius_for_nonlinear_lip(&w, slack * R::lit(0.9), R::lit(0.5));
    let radii = SlowSequence::constant(first, len + 1, rho, epsilon)?;
    ContractionChain::new(
        first,
        vec![w; len],
        radii,
        spec,
        params,
        ExtensionPolicy::Constant,
    )
}

/// Purely linear chain with exact block-diagonal parts `e^{-Lambda_j} Id`.
pub fn linear_chain<R: Real>(
    spec: &LyapunovSpectrum<R>,
    first: i64,
    len: usize,
    cap: usize,
) -> ChainResult<ContractionChain<R>> {
    let (gamma, epsilon) = suggest_parameters(spec)?;
    let params = validate_constraints(spec, gamma, epsilon)?;
    let k = spec.dim();
    let mut diag = DMatrix::zeros(k, k);
    for (j, range) in spec.block_ranges().iter().enumerate() {
        let v = (-spec.exponents()[j]).exp();
        for i in range.clone() {
            diag[(i, i)] = Complex::new(v, R::zero());
        }
    }
    let maps = vec![JetMap::from_linear(&diag, cap); len];
    let radii = SlowSequence::constant(first, len + 1, R::lit(0.25), epsilon)?;
    ContractionChain::new(first, maps, radii, spec.clone(), params, ExtensionPolicy::Constant)
}

/// Options for the randomized admissible chain generator.
#[derive(Clone, Debug)]
pub struct RandomChainOptions {
    pub seed: u64,
    /// Magnitude scale of the nonlinear coefficients.
    pub coeff_scale: f64,
    /// Half-width, as a fraction of epsilon, of the log-band the block
    /// singular values are drawn from.
    pub band_fraction: f64,
}

impl Default for RandomChainOptions {
    fn default() -> Self {
        RandomChainOptions {
            seed: 1,
            coeff_scale: 5e-4,
            band_fraction: 0.4,
        }
    }
}

/// Random chain satisfying every hypothesis by construction: diagonal
/// linear parts with moduli inside the per-block bands, random phases,
/// nonlinear terms of degrees `2..=cap`, and radii certified from the
/// coefficient Lipschitz bound.
pub fn random_admissible_chain<R: Real>(
    spec: &LyapunovSpectrum<R>,
    first: i64,
    len: usize,
    opts: &RandomChainOptions,
) -> ChainResult<ContractionChain<R>> {
    let (gamma, epsilon) = suggest_parameters(spec)?;
    let params = validate_constraints(spec, gamma, epsilon)?;
    let cap = params.p_star + 1;
    let k = spec.dim();
    let mut rng = seeded_rng(opts.seed);

    let mut maps = Vec::with_capacity(len);
    for _ in 0..len {
        let mut a = DMatrix::zeros(k, k);
        for (j, range) in spec.block_ranges().iter().enumerate() {
            let lambda = spec.exponents()[j];
            for i in range.clone() {
                let dev = (rng.gen::<f64>() * 2.0 - 1.0) * opts.band_fraction;
                let modulus = (-lambda + R::lit(dev) * epsilon).exp();
                let phase = R::lit(rng.gen::<f64>()) * R::two_pi();
                a[(i, i)] = Complex::new(modulus * phase.cos(), modulus * phase.sin());
            }
        }
        let mut w = JetMap::from_linear(&a, cap);
        for d in 2..=cap {
            for alpha in MultiIndex::of_degree(k, d as u32) {
                for out in 0..k {
                    if rng.gen::<f64>() < 0.5 {
                        continue; // keep the maps sparse
                    }
                    let m = rng.gen::<f64>() * opts.coeff_scale;
                    let t = rng.gen::<f64>() * std::f64::consts::TAU;
                    w.set_coefficient(
                        out,
                        alpha.clone(),
                        Complex::new(R::lit(m * t.cos()), R::lit(m * t.sin())),
                    )?;
                }
            }
        }
        maps.push(w);
    }

    // certified radii: sigma_max(A_n) + nonlinear Lipschitz <= theta
    let caps: Vec<R> = (0..=len)
        .map(|i| {
            let m = &maps[i.min(len - 1)];
            let smax = m.linear_part().svd(false, false).singular_values.max();
            let slack = (params.theta - smax) * R::lit(0.9);
            radius_for_nonlinear_lip(m, slack, R::lit(0.25))
        })
        .collect();
    let radii = SlowSequence::new(
        first,
        slow_envelope(&caps, epsilon),
        epsilon,
        ExtensionPolicy::Constant,
    )?;
    ContractionChain::new(
        first,
        maps,
        radii,
        spec.clone(),
        params,
        ExtensionPolicy::Constant,
    )
}

/// The two-exponent spectrum `(log 4, log 2)` used across the experiments.
pub fn spectrum_log4_log2<R: Real>() -> LyapunovSpectrum<R> {
    let l2 = R::lit(2.0).ln();
    LyapunovSpectrum::new(vec![l2 + l2, l2], vec![1, 1]).expect("valid spectrum")
}

/// A resonant fixture: base spectrum `(log 4, log 2)` with the resonant
/// monomial `z_2^2` feeding the first component.
pub fn resonant_chain<R: Real>(
    first: i64,
    len: usize,
    epsilon: f64,
) -> ChainResult<ContractionChain<R>> {
    let spec = spectrum_log4_log2::<R>();
    let params = expert_zero_gamma_params(&spec, R::lit(epsilon))?;
    let cap = params.p_star + 1;
    let mut a = DMatrix::zeros(2, 2);
    a[(0, 0)] = Complex::new(R::lit(0.25), R::zero());
    a[(1, 1)] = Complex::new(R::lit(0.5), R::zero());
    let mut w = JetMap::from_linear(&a, cap);
    w.set_coefficient(0, MultiIndex::new(vec![0, 2]), Complex::new(R::lit(0.05), R::zero()))?;
    let slack = params.theta - R::lit(0.5);
    let rho = radius_for_nonlinear_lip(&w, slack * R::lit(0.9), R::lit(0.25));
    let radii = SlowSequence::constant(first, len + 1, rho, R::lit(epsilon))?;
    ContractionChain::new(
        first,
        vec![w; len],
        radii,
        spec,
        params,
        ExtensionPolicy::Constant,
    )
}
