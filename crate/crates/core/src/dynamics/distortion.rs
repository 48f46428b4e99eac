use nalgebra::DVector;
use num_complex::Complex;
use serde::Serialize;

use super::chart::{chart_distortion, ProjPoint};
use super::cocycle::{build_cocycle, estimate_spectrum, CocycleData};
use super::orbit::{preimage_near, BackwardOrbit};
use super::oseledec::{oseledec_reduce, OseledecData, OseledecOptions};
use super::{DynResult, DynamicsError, ProjectiveEndomorphism};
use crate::chain::{ContractionChain, ExtensionPolicy, SlowSequence};
use crate::consts;
use crate::jets::{radius_for_nonlinear_lip, CoeffBound, JetMap, LinearMap};
use crate::normalform::{normalize, NormalizationResult, NormalizeOptions};
use crate::spectrum::{
    suggest_parameters, validate_constraints, ConstraintParams, LyapunovSpectrum,
};
use crate::util::{ball_point, dist2, norm_sup, seeded_rng, slow_envelope};
use crate::Real;

/// Options for assembling the distortion package.
#[derive(Clone, Debug)]
pub struct AssembleOptions<R: Real> {
    /// Exponents override; estimated from the cocycle when absent.
    pub spectrum: Option<LyapunovSpectrum<R>>,
    /// `(gamma, epsilon)` override; searched when absent.
    pub gamma_epsilon: Option<(R, R)>,
    /// Sandwich slack handed to the pipeline; wider than the chain-level
    /// default so the verified radii stay large enough for orbit-level
    /// tolerances, which are relative to `r_hat`.
    pub sandwich_slack: R,
    pub cluster_tol: R,
    pub leakage_tol: R,
    pub samples_per_index: usize,
    pub rng_seed: u64,
}

impl<R: Real> Default for AssembleOptions<R> {
    fn default() -> Self {
        AssembleOptions {
            spectrum: None,
            gamma_epsilon: None,
            sandwich_slack: R::lit(1e-4),
            cluster_tol: R::lit(0.05),
            leakage_tol: R::lit(1e-6),
            samples_per_index: 100,
            rng_seed: 0xd157,
        }
    }
}

/// The distortion package along one backward orbit: normalized inverse
/// branches `phi_{x,n} = phi_n o C_n o psi_n^{-1}`, the linear models
/// `D_n = A^g_{n-1} ... A^g_0`, and the constants of the two-sided bounds.
pub struct DistortionData<R: Real> {
    pub map: ProjectiveEndomorphism<R>,
    pub orbit: BackwardOrbit<R>,
    pub cocycle: CocycleData<R>,
    pub oseledec: OseledecData<R>,
    pub chain: ContractionChain<R>,
    pub norm: NormalizationResult<R>,
    pub spectrum: LyapunovSpectrum<R>,
    pub params: ConstraintParams<R>,
    pub gamma: R,
    pub epsilon: R,
    /// `r_hat = r_0 / h_eps`; sampling scale at the orbit head.
    pub r_hat: R,
    /// `rho_hat = 4 r_0`; target polydisc scale.
    pub rho_hat: R,
    /// `h_hat`: chart distortion times the basis bound `h_eps`.
    pub h_hat: R,
    /// Stabilization index: smallest `n >= 0` with
    /// `e^{n(-Lambda_l + 4 eps + gamma)} h_eps <= 1`; at least 1 because
    /// `h_eps > 1` by the safety margin.
    pub n_hat: usize,
    pub chart_distortion: R,
    /// `D_n` for `n = 0..=N`.
    pub d_mats: Vec<LinearMap<R>>,
    phi_inverses: Vec<JetMap<R>>,
    c_inverses: Vec<LinearMap<R>>,
}

impl<R: Real> DistortionData<R> {
    pub fn orbit_len(&self) -> usize {
        self.orbit.len()
    }

    /// `phi_{x,n}`: chart pullback at `x_{-n}`, basis change, normalized map.
    pub fn phi_hat(&self, n: usize, p: &ProjPoint<R>) -> DynResult<Vec<Complex<R>>> {
        let v = self.cocycle.charts[n].pull(p)?;
        let u = &self.oseledec.c_mats[n] * DVector::from_vec(v);
        Ok(self.norm.phi[n].evaluate(u.as_slice())?)
    }

    /// Inverse of `phi_{x,n}` on its image polydisc.
    pub fn phi_hat_inverse(&self, n: usize, w: &[Complex<R>]) -> DynResult<ProjPoint<R>> {
        let u = self.phi_inverses[n].evaluate(w)?;
        let v = &self.c_inverses[n] * DVector::from_vec(u);
        self.cocycle.charts[n].point(v.as_slice())
    }

    /// `r'_hat = r_hat / h_hat`, the inner sampling scale of the convexity
    /// statement.
    pub fn r_prime(&self) -> R {
        self.r_hat / self.h_hat
    }
}

/// Builds the whole package: cocycle, reduction, chain, normalization, and
/// the derived constants.
pub fn assemble_distortion<R: Real>(
    f: &ProjectiveEndomorphism<R>,
    orbit: &BackwardOrbit<R>,
    opts: &AssembleOptions<R>,
) -> DynResult<DistortionData<R>> {
    let k = f.dim();

    // spectrum first (cheap provisional cocycle), then the real degree cap
    let provisional = build_cocycle(f, orbit, 2)?;
    let spectrum = match &opts.spectrum {
        Some(s) => s.clone(),
        None => estimate_spectrum(&provisional, opts.cluster_tol)?,
    };
    let (gamma, epsilon) = match opts.gamma_epsilon {
        Some(ge) => ge,
        None => suggest_parameters(&spectrum)?,
    };
    let params = validate_constraints(&spectrum, gamma, epsilon)?;
    if !params.all_pass() {
        return Err(DynamicsError::Normalform(
            crate::normalform::NormalformError::Constraints(params.failures()),
        ));
    }
    let cap = params.p_star + 1;
    let cocycle = if cap == 2 {
        provisional
    } else {
        build_cocycle(f, orbit, cap)?
    };

    let oseledec = oseledec_reduce(
        &cocycle,
        Some(&spectrum),
        &OseledecOptions {
            epsilon,
            leakage_tol: opts.leakage_tol,
            cluster_tol: opts.cluster_tol,
        },
    )?;

    // the conjugated chain W_m = C_{m+1} o F_m^{-1} o C_m^{-1}
    let n = orbit.len();
    let mut w_maps = Vec::with_capacity(n);
    for m in 0..n {
        let c_next = JetMap::from_linear(&oseledec.c_mats[m + 1], cap);
        let c_inv = oseledec.c_mats[m]
            .clone()
            .try_inverse()
            .ok_or_else(|| DynamicsError::SpectrumEstimation("singular basis".into()))?;
        let w = c_next
            .compose(&cocycle.steps[m].inverse)?
            .compose(&JetMap::from_linear(&c_inv, cap))?;
        w_maps.push(w);
    }

    // radii: inverse-branch validity pulled through the basis change, then
    // the contraction certificate (coefficient route, with the sup-route
    // tame bound as an alternative certificate)
    let theta = params.theta;
    let mut caps: Vec<R> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let raw = orbit.radii_raw[m.min(n - 1)];
        let sigma_min_c = oseledec.c_mats[m]
            .clone()
            .svd(false, false)
            .singular_values
            .min();
        let cand = (raw * sigma_min_c).min(R::one());
        let w = &w_maps[m.min(n - 1)];
        let a_svd = w.linear_part().svd(false, false);
        let slack = (theta - a_svd.singular_values.max()) * R::lit(0.9);
        if slack <= R::zero() {
            return Err(DynamicsError::SpectrumEstimation(
                "conjugated cocycle exceeds the contraction bound".into(),
            ));
        }
        let coeff_route = radius_for_nonlinear_lip(w, slack, cand);
        let sup_route = crate::chain::tame_radius(
            w,
            a_svd.singular_values.min(),
            a_svd.singular_values.max(),
            epsilon,
            &CoeffBound::from_jet(w, cand)?,
            true,
        )
        .unwrap_or(R::zero());
        caps.push(coeff_route.max(sup_route).min(cand));
    }
    let radii = SlowSequence::new(
        0,
        slow_envelope(&caps, epsilon),
        epsilon,
        ExtensionPolicy::Constant,
    )?;
    let chain = ContractionChain::new(
        0,
        w_maps,
        radii,
        spectrum.clone(),
        params.clone(),
        ExtensionPolicy::Constant,
    )?;

    let norm_opts = NormalizeOptions {
        sandwich_slack: opts.sandwich_slack,
        samples_per_index: opts.samples_per_index,
        rng_seed: opts.rng_seed,
        ..NormalizeOptions::default()
    };
    let norm = normalize(&chain, &norm_opts)?;

    let r0 = norm.radii.values()[0];
    let h_eps = oseledec.h_eps;
    let r_hat = r0 / h_eps;
    let rho_hat = R::lit(4.0) * r0;
    let lambda_l = spectrum.smallest();
    let drop = -lambda_l + R::lit(4.0) * epsilon + gamma;
    let mut n_hat = 0usize;
    while (R::from_usize(n_hat).unwrap() * drop).exp() * h_eps > R::one() {
        n_hat += 1;
        if n_hat > n {
            return Err(DynamicsError::StabilizationBeyondOrbit {
                n_hat,
                orbit_len: n,
            });
        }
    }

    // measured at 1.5x the verification radius: chart distortion grows
    // quadratically, so this covers the in-radius sup with real headroom.
    // h_hat also absorbs the corridor slack of the normalized transforms,
    // whose Lipschitz constant can attain h_eps exactly at the orbit head.
    let delta_chart = chart_distortion::<R>(k, R::lit(1.5) * r_hat, 512, opts.rng_seed ^ 0x77);
    let h_hat = delta_chart * h_eps * (R::one() + opts.sandwich_slack);

    // D_n = A^g_{n-1} ... A^g_0
    let step = gamma.exp();
    let mut d_mats = Vec::with_capacity(n + 1);
    let mut d = LinearMap::<R>::identity(k, k);
    d_mats.push(d.clone());
    for m in 0..n {
        let a_g = chain.maps()[m]
            .linear_part()
            .map(|z| z * Complex::new(step, R::zero()));
        d = &a_g * &d;
        d_mats.push(d.clone());
    }

    let phi_inverses: Vec<JetMap<R>> = norm
        .phi
        .iter()
        .map(|p| p.formal_inverse())
        .collect::<Result<_, _>>()?;
    let c_inverses: Vec<LinearMap<R>> = oseledec
        .c_mats
        .iter()
        .map(|c| {
            c.clone()
                .try_inverse()
                .ok_or_else(|| DynamicsError::SpectrumEstimation("singular basis".into()))
        })
        .collect::<Result<_, _>>()?;

    Ok(DistortionData {
        map: f.clone(),
        orbit: orbit.clone(),
        cocycle,
        oseledec,
        chain,
        norm,
        spectrum,
        params,
        gamma,
        epsilon,
        r_hat,
        rho_hat,
        h_hat,
        n_hat,
        chart_distortion: delta_chart,
        d_mats,
        phi_inverses,
        c_inverses,
    })
}

/// The inverse branch `f^{-n}` along the stored orbit: per step, Newton
/// seeded at the stored orbit point, erroring if the solution strays.
pub fn follow_branch<R: Real>(
    data: &DistortionData<R>,
    w: &ProjPoint<R>,
    n: usize,
) -> DynResult<ProjPoint<R>> {
    let mut current = w.clone();
    for m in 0..n {
        let guess = &data.orbit.points[m + 1];
        let y = preimage_near(
            &data.map,
            &current,
            guess,
            R::lit(consts::NEWTON_TOL),
            60,
        )?;
        let stray = y.distance(guess);
        if stray > R::lit(0.25) {
            return Err(DynamicsError::BranchStray {
                step: m,
                dist: stray.to_f64().unwrap_or(f64::NAN),
            });
        }
        current = y;
    }
    Ok(current)
}

/// One verification row of the distortion report.
#[derive(Clone, Debug, Serialize)]
pub struct DistortionRow {
    pub n: usize,
    pub lip_low: f64,
    pub lip_high: f64,
    pub bound_low: f64,
    pub bound_high: f64,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistortionReport {
    pub rows: Vec<DistortionRow>,
    /// Measured band of `phi_{x,0}` against `[1, h_hat]`.
    pub base_band: (f64, f64),
    pub base_band_ok: bool,
    pub d_blocks_ok: bool,
    pub slow_r_ok: bool,
    pub slow_rho_ok: bool,
    pub slow_h_ok: bool,
    pub residual_tol: f64,
    pub pass: bool,
}

/// Verifies the two-sided distortion bounds and the conjugation diagram on
/// sampled data, row by row for `n = n_hat ..= N`.
pub fn verify_distortion<R: Real>(
    data: &DistortionData<R>,
    n_samples: usize,
    rng_seed: u64,
) -> DynResult<DistortionReport> {
    let n_orbit = data.orbit.len();
    let mut rng = seeded_rng(rng_seed);
    let k = data.map.dim();
    let gamma = data.gamma;
    let eps = data.epsilon;
    let residual_tol = R::lit(1e-7) * data.r_hat;

    // base row: phi_{x,0} bi-Lipschitz within [1, h_hat]
    let (base_lo, base_hi) = {
        let chart = &data.cocycle.charts[0];
        let mut lo = R::lit(f64::INFINITY);
        let mut hi = R::zero();
        for _ in 0..n_samples.max(16) {
            let u = chart.point(&ball_point(k, data.r_hat, &mut rng))?;
            let v = chart.point(&ball_point(k, data.r_hat, &mut rng))?;
            let d = u.distance(&v);
            if d <= data.r_hat * R::lit(1e-10) {
                continue;
            }
            let fu = data.phi_hat(0, &u)?;
            let fv = data.phi_hat(0, &v)?;
            let ratio = dist2(&fu, &fv) / d;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        (lo, hi)
    };
    let base_band_ok = base_lo >= R::one() && base_hi <= data.h_hat;

    let mut rows = Vec::new();
    let mut all_pass = true;
    for n in data.n_hat..=n_orbit {
        let nr = R::from_usize(n).unwrap();
        let s_n = data.r_hat * (-nr * (gamma + R::lit(2.0) * eps)).exp();
        let bound_low = (nr * (gamma - R::lit(2.0) * eps)).exp();
        let bound_high = (nr * (gamma + R::lit(3.0) * eps)).exp() * data.h_hat;
        let chart = &data.cocycle.charts[n];

        let mut lip_lo = R::lit(f64::INFINITY);
        let mut lip_hi = R::zero();
        for _ in 0..n_samples {
            let u = chart.point(&ball_point(k, s_n, &mut rng))?;
            let v = chart.point(&ball_point(k, s_n, &mut rng))?;
            let d = u.distance(&v);
            if d <= s_n * R::lit(1e-10) {
                continue;
            }
            let fu = data.phi_hat(n, &u)?;
            let fv = data.phi_hat(n, &v)?;
            let ratio = dist2(&fu, &fv) / d;
            lip_lo = lip_lo.min(ratio);
            lip_hi = lip_hi.max(ratio);
        }

        // diagram: phi_{x,n}(f^{-n}(w)) = D_n phi_{x,0}(w) on B_{x_0}(r_hat)
        let chart0 = &data.cocycle.charts[0];
        let mut residual = R::zero();
        for _ in 0..n_samples.min(64).max(16) {
            let w = chart0.point(&ball_point(k, data.r_hat, &mut rng))?;
            let y = follow_branch(data, &w, n)?;
            let lhs = data.phi_hat(n, &y)?;
            let p0 = data.phi_hat(0, &w)?;
            let rhs = &data.d_mats[n] * DVector::from_vec(p0);
            residual = residual.max(dist2(&lhs, rhs.as_slice()));
        }

        let pass = lip_lo >= bound_low && lip_hi <= bound_high && residual <= residual_tol;
        all_pass &= pass;
        rows.push(DistortionRow {
            n,
            lip_low: lip_lo.to_f64().unwrap_or(f64::NAN),
            lip_high: lip_hi.to_f64().unwrap_or(f64::NAN),
            bound_low: bound_low.to_f64().unwrap_or(f64::NAN),
            bound_high: bound_high.to_f64().unwrap_or(f64::NAN),
            residual: residual.to_f64().unwrap_or(f64::NAN),
            pass,
        });
    }

    // linear models stabilize the blocks inside the exponent bands
    let mut d_blocks_ok = true;
    let slackb = R::lit(1.0 + 1e-9);
    for (n, d) in data.d_mats.iter().enumerate().skip(1) {
        let nr = R::from_usize(n).unwrap();
        for (j, range) in data.spectrum.block_ranges().iter().enumerate() {
            let sub = d
                .view((range.start, range.start), (range.len(), range.len()))
                .clone_owned();
            let svd = sub.svd(false, false);
            let lambda = data.spectrum.exponents()[j];
            let lo = (nr * (-lambda + gamma - eps)).exp();
            let hi = (nr * (-lambda + gamma + eps)).exp();
            if svd.singular_values.min() < lo / slackb
                || svd.singular_values.max() > hi * slackb
            {
                d_blocks_ok = false;
            }
        }
    }

    // slowness of the computed sequences
    let slow_r_ok = data.norm.radii.validate().pass;
    let slow_rho_ok = data.chain.radii().validate().pass;
    let slow_h_ok = SlowSequence::constant(0, n_orbit + 1, R::one() / data.oseledec.h_eps, eps)
        .map(|s| s.validate().pass)
        .unwrap_or(false);

    let pass = all_pass && base_band_ok && d_blocks_ok && slow_r_ok && slow_rho_ok && slow_h_ok;
    Ok(DistortionReport {
        rows,
        base_band: (
            base_lo.to_f64().unwrap_or(f64::NAN),
            base_hi.to_f64().unwrap_or(f64::NAN),
        ),
        base_band_ok,
        d_blocks_ok,
        slow_r_ok,
        slow_rho_ok,
        slow_h_ok,
        residual_tol: residual_tol.to_f64().unwrap_or(f64::NAN),
        pass,
    })
}

/// Result of one convexity-defect check.
#[derive(Clone, Debug, Serialize)]
pub struct ConvexityOutcome {
    pub separation: f64,
    pub path_length: f64,
    pub bound: f64,
    pub ratio: f64,
    pub inclusion_segment_ok: bool,
    pub inclusion_preimage_ok: bool,
    pub pass: bool,
}

/// Connects `p, q` inside the inverse-branch image by pulling the straight
/// segment between their normalized images back through `phi_{x,n}^{-1}`,
/// then integrates the path length against the certified bound
/// `e^{5 n eps} h_hat d(p, q)`.
pub fn convexity_defect<R: Real>(
    data: &DistortionData<R>,
    n: usize,
    t: R,
    p: &ProjPoint<R>,
    q: &ProjPoint<R>,
    segments: usize,
) -> DynResult<ConvexityOutcome> {
    let eps = data.epsilon;
    let nr = R::from_usize(n).unwrap();
    let d_pq = p.distance(q);
    let bound = (R::lit(5.0) * nr * eps).exp() * data.h_hat * d_pq;
    if d_pq <= R::lit(1e-14) {
        // coincident pair: the zero-length path connects them
        return Ok(ConvexityOutcome {
            separation: d_pq.to_f64().unwrap_or(0.0),
            path_length: 0.0,
            bound: bound.to_f64().unwrap_or(0.0),
            ratio: 0.0,
            inclusion_segment_ok: true,
            inclusion_preimage_ok: true,
            pass: true,
        });
    }

    let fp = data.phi_hat(n, p)?;
    let fq = data.phi_hat(n, q)?;

    // inclusion: both images, and the segment between them, inside
    // D_n(polydisc(t r_hat))
    let d_inv = data.d_mats[n]
        .clone()
        .try_inverse()
        .ok_or_else(|| DynamicsError::SpectrumEstimation("singular linear model".into()))?;
    let seg_tol = t * data.r_hat * R::lit(1.0 + 1e-9);
    let mut inclusion_segment_ok = true;
    for s in 0..=8 {
        let lam = R::from_usize(s).unwrap() / R::lit(8.0);
        let mid: Vec<Complex<R>> = fp
            .iter()
            .zip(&fq)
            .map(|(a, b)| *a + (*b - *a) * Complex::new(lam, R::zero()))
            .collect();
        let pulled = &d_inv * DVector::from_vec(mid);
        if norm_sup(pulled.as_slice()) > seg_tol {
            inclusion_segment_ok = false;
        }
    }

    // pull the segment back and measure the path
    let m = segments.max(2);
    let mut prev: Option<ProjPoint<R>> = None;
    let mut length = R::zero();
    let mut inclusion_preimage_ok = true;
    let ball_tol = t * data.r_hat * R::lit(1.0 + 1e-9);
    let x0 = &data.orbit.points[0];
    for s in 0..=m {
        let lam = R::from_usize(s).unwrap() / R::from_usize(m).unwrap();
        let w: Vec<Complex<R>> = fp
            .iter()
            .zip(&fq)
            .map(|(a, b)| *a + (*b - *a) * Complex::new(lam, R::zero()))
            .collect();
        let y = data.phi_hat_inverse(n, &w)?;
        // forward image keeps the path inside the enlarged branch domain
        let mut fwd = y.clone();
        for _ in 0..n {
            fwd = data.map.apply(&fwd)?;
        }
        if fwd.distance(x0) > ball_tol {
            inclusion_preimage_ok = false;
        }
        if let Some(last) = prev {
            length += last.distance(&y);
        }
        prev = Some(y);
    }

    let ratio = if d_pq > R::zero() {
        length / (data.h_hat * d_pq)
    } else {
        R::zero()
    };
    let pass = length <= bound && inclusion_segment_ok && inclusion_preimage_ok;
    Ok(ConvexityOutcome {
        separation: d_pq.to_f64().unwrap_or(f64::NAN),
        path_length: length.to_f64().unwrap_or(f64::NAN),
        bound: bound.to_f64().unwrap_or(f64::NAN),
        ratio: ratio.to_f64().unwrap_or(f64::NAN),
        inclusion_segment_ok,
        inclusion_preimage_ok,
        pass,
    })
}
