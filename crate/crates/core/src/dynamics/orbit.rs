use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::chart::{Chart, ProjPoint};
use super::{DynResult, DynamicsError};
use crate::consts;
use crate::util::seeded_rng;
use crate::Real;

/// How the backward-orbit constructor picks among regular preimages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchRule {
    /// Uniform choice via the orbit seed; the canonical preimage ordering
    /// makes this reproducible.
    Seeded,
    /// Preimage closest to the current point; sticks to fixed points.
    Nearest,
}

#[derive(Clone, Debug)]
pub struct OrbitOptions {
    pub rng_seed: u64,
    pub branch: BranchRule,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub critical_floor: f64,
    /// Starts per preimage search, as a multiple of the topological degree.
    pub start_factor: usize,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            rng_seed: 7,
            branch: BranchRule::Seeded,
            newton_tol: consts::NEWTON_TOL,
            newton_max_iter: 60,
            critical_floor: consts::CRITICAL_FLOOR,
            start_factor: 4,
        }
    }
}

/// Chart-expressed derivative data of `f` at `x`.
pub struct CriticalTest<R: Real> {
    /// Modulus of the complex Jacobian determinant in charts.
    pub jacobian_modulus: R,
    pub is_regular: bool,
    /// `k x k` derivative of the chart-expressed map.
    pub derivative: DMatrix<Complex<R>>,
}

/// Chart-expressed derivative of `f` at `x`: with `M = U_y^H dF(x) U_x` and
/// `c` the homogeneous scale of `F(x)` against `y`, the derivative is the
/// trailing `k x k` block of `M / c`.
pub fn chart_derivative<R: Real>(
    f: &super::ProjectiveEndomorphism<R>,
    x: &ProjPoint<R>,
) -> DynResult<(DMatrix<Complex<R>>, ProjPoint<R>)> {
    let y = f.apply(x)?;
    let b = chart_derivative_between(f, x, &y)?;
    Ok((b, y))
}

/// Same derivative against an explicit target representative, matching the
/// chart phases of a stored orbit.
pub fn chart_derivative_between<R: Real>(
    f: &super::ProjectiveEndomorphism<R>,
    x: &ProjPoint<R>,
    y: &ProjPoint<R>,
) -> DynResult<DMatrix<Complex<R>>> {
    let ux = Chart::centered_at(x);
    let uy = Chart::centered_at(y);
    let m = uy.unitary().adjoint() * f.jacobian_raw(x.rep()) * ux.unitary();
    let fx = uy.unitary().adjoint() * f.eval_raw(x.rep());
    let c = fx[0];
    let cm = c.norm_sqr();
    if cm.sqrt() <= R::lit(1e-300) {
        return Err(DynamicsError::InvalidMap(
            "image representative degenerates".into(),
        ));
    }
    let cinv = c.conj() * Complex::new(R::one() / cm, R::zero());
    let k = f.dim();
    let mut b = DMatrix::zeros(k, k);
    for r in 0..k {
        for col in 0..k {
            b[(r, col)] = m[(r + 1, col + 1)] * cinv;
        }
    }
    Ok(b)
}

/// Is `x` critical for `f`? Reports the chart Jacobian modulus either way.
pub fn critical_test<R: Real>(
    f: &super::ProjectiveEndomorphism<R>,
    x: &ProjPoint<R>,
) -> DynResult<CriticalTest<R>> {
    let (b, _) = chart_derivative(f, x)?;
    let det = b.clone().lu().determinant();
    let modulus = det.norm_sqr().sqrt();
    Ok(CriticalTest {
        jacobian_modulus: modulus,
        is_regular: modulus > R::lit(consts::CRITICAL_FLOOR),
        derivative: b,
    })
}

/// Newton solve of `f(y) = target` from one starting representative, using
/// the augmented square system `F(Y) - mu T = 0, <Y0, Y> = 1`.
pub fn preimage_near<R: Real>(
    f: &super::ProjectiveEndomorphism<R>,
    target: &ProjPoint<R>,
    start: &ProjPoint<R>,
    tol: R,
    max_iter: usize,
) -> DynResult<ProjPoint<R>> {
    let n = f.dim() + 1;
    let mut y = start.rep().clone();
    let gauge = start.rep().clone();
    let t = target.rep();
    let mut mu = {
        let fy = f.eval_raw(&y);
        t.iter()
            .zip(fy.iter())
            .fold(Complex::<R>::zero(), |acc, (a, b)| acc + a.conj() * *b)
    };
    for _ in 0..max_iter {
        let fy = f.eval_raw(&y);
        // residual: F(Y) - mu T (n rows), <Y0, Y> - 1 (1 row)
        let mut res = DVector::from_element(n + 1, Complex::<R>::zero());
        for i in 0..n {
            res[i] = fy[i] - mu * t[i];
        }
        res[n] = gauge
            .iter()
            .zip(y.iter())
            .fold(Complex::<R>::zero(), |acc, (a, b)| acc + a.conj() * *b)
            - Complex::new(R::one(), R::zero());
        let scale = R::one().max(fy.norm());
        if res.norm() <= tol * scale {
            return ProjPoint::new(y.iter().copied().collect());
        }
        let df = f.jacobian_raw(&y);
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for r in 0..n {
            for c in 0..n {
                jac[(r, c)] = df[(r, c)];
            }
            jac[(r, n)] = -t[r];
        }
        for c in 0..n {
            jac[(n, c)] = gauge[c].conj();
        }
        let delta = jac
            .lu()
            .solve(&(-res))
            .ok_or(DynamicsError::NewtonDiverged(max_iter))?;
        for i in 0..n {
            y[i] += delta[i];
        }
        mu += delta[n];
        if y.norm() > R::lit(1e9) {
            return Err(DynamicsError::NewtonDiverged(max_iter));
        }
    }
    Err(DynamicsError::NewtonDiverged(max_iter))
}

/// All distinct preimages found from seeded random starts, canonically
/// ordered. Generic fibers have `d^k` points; the caller decides what to do
/// when fewer are found.
pub fn preimages<R: Real>(
    f: &super::ProjectiveEndomorphism<R>,
    target: &ProjPoint<R>,
    rng: &mut ChaCha20Rng,
    opts: &OrbitOptions,
) -> Vec<ProjPoint<R>> {
    let n = f.dim() + 1;
    let wanted = f.topological_degree();
    let tries = wanted * opts.start_factor.max(1) + 4;
    let mut found: Vec<ProjPoint<R>> = Vec::new();
    for _ in 0..tries {
        let coords: Vec<Complex<R>> = (0..n)
            .map(|_| {
                Complex::new(
                    R::lit(rng.gen_range(-1.0..1.0)),
                    R::lit(rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let Ok(start) = ProjPoint::new(coords) else {
            continue;
        };
        let Ok(y) = preimage_near(
            f,
            target,
            &start,
            R::lit(opts.newton_tol),
            opts.newton_max_iter,
        ) else {
            continue;
        };
        if found.iter().all(|p| p.distance(&y) > R::lit(1e-8)) {
            found.push(y);
        }
        if found.len() == wanted {
            break;
        }
    }
    // canonical deterministic order: lexicographic on the canonicalized reps
    found.sort_by(|a, b| {
        let ar = a.canonicalized();
        let br = b.canonicalized();
        for i in 0..ar.rep().len() {
            let (x, y) = (ar.rep()[i], br.rep()[i]);
            match x
                .re
                .partial_cmp(&y.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
            {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        std::cmp::Ordering::Equal
    });
    found
}

/// Backward orbit `x_0, x_{-1}, ..., x_{-N}` along a chosen inverse branch,
/// avoiding the critical set.
#[derive(Clone, Debug)]
pub struct BackwardOrbit<R: Real> {
    /// `points[m]` is `x_{-m}`.
    pub points: Vec<ProjPoint<R>>,
    /// Branch index chosen at each step (into the canonical preimage list).
    pub branch_choices: Vec<usize>,
    /// `t_m = |(d_{x_{-m-1}} f)^{-1}|^{-2}`, the quadratic inverse scale.
    pub t_values: Vec<R>,
    /// Per-step raw inverse-branch radius `min(c t_m, 1)`.
    pub radii_raw: Vec<R>,
    /// Chart Jacobian modulus at each `x_{-m-1}`.
    pub jacobian_moduli: Vec<R>,
    /// Newton residuals `|f(x_{-m-1}) - x_{-m}|` (projective distance).
    pub step_residuals: Vec<R>,
    /// The inverse-radius constant used for `radii_raw`.
    pub radius_constant: R,
    pub seed: u64,
}

impl<R: Real> BackwardOrbit<R> {
    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.points.len() <= 1
    }

    pub fn point(&self, m: usize) -> &ProjPoint<R> {
        &self.points[m]
    }
}

/// Estimates the inverse-branch radius constant from first and second
/// chart derivatives over a deterministic sample of points: a standard
/// quantitative inverse-function radius `1 / (4 sup|d2 f| sup|(df)^{-1}|)`.
pub fn estimate_inverse_radius_constant<R: Real>(
    f: &super::ProjectiveEndomorphism<R>,
    samples: usize,
    seed: u64,
) -> DynResult<R> {
    let mut rng = seeded_rng(seed);
    let mut sup_d2 = R::zero();
    let mut sup_inv = R::zero();
    let mut used = 0usize;
    while used < samples {
        let coords: Vec<Complex<R>> = (0..=f.dim())
            .map(|_| {
                Complex::new(
                    R::lit(rng.gen_range(-1.0..1.0)),
                    R::lit(rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let Ok(p) = ProjPoint::new(coords) else {
            continue;
        };
        let Ok(jet) = super::cocycle::forward_chart_jet(f, &p, 2) else {
            continue;
        };
        let (b, _) = chart_derivative(f, &p)?;
        let svd = b.svd(false, false);
        let smin = svd.singular_values.min();
        if smin <= R::lit(consts::CRITICAL_FLOOR) {
            continue; // sampled too close to the critical set
        }
        // second-derivative magnitude from the degree-2 jet coefficients
        let mut d2 = R::zero();
        for (_, alpha, c) in jet.terms() {
            if alpha.order() == 2 {
                d2 += c.norm_sqr().sqrt();
            }
        }
        sup_d2 = sup_d2.max(R::lit(2.0) * d2);
        sup_inv = sup_inv.max(R::one() / smin);
        used += 1;
    }
    if sup_d2 <= R::zero() {
        // derivative is globally linear in charts only for degenerate maps;
        // fall back to a unit constant
        return Ok(R::one());
    }
    Ok(R::one() / (R::lit(4.0) * sup_d2 * sup_inv))
}

/// Builds the backward orbit: at each step solve `f(y) = x_{-m}` by Newton
/// from seeded starts, reject critical preimages, pick the branch by rule.
pub fn backward_orbit<R: Real>(
    f: &super::ProjectiveEndomorphism<R>,
    x0: &ProjPoint<R>,
    n_steps: usize,
    opts: &OrbitOptions,
) -> DynResult<BackwardOrbit<R>> {
    let start_test = critical_test(f, x0)?;
    if !start_test.is_regular {
        return Err(DynamicsError::CriticalPoint {
            modulus: start_test.jacobian_modulus.to_f64().unwrap_or(0.0),
        });
    }
    let c_f = estimate_inverse_radius_constant(f, 64, opts.rng_seed ^ 0xabcd)?;
    let mut rng = seeded_rng(opts.rng_seed);
    let mut points = vec![x0.clone()];
    let mut branch_choices = Vec::new();
    let mut t_values = Vec::new();
    let mut radii_raw = Vec::new();
    let mut jacobian_moduli = Vec::new();
    let mut step_residuals = Vec::new();

    for step in 0..n_steps {
        let current = points.last().unwrap().clone();
        let candidates = preimages(f, &current, &mut rng, opts);
        if candidates.is_empty() {
            return Err(DynamicsError::NoPreimage { step });
        }
        let regular: Vec<(ProjPoint<R>, CriticalTest<R>)> = candidates
            .into_iter()
            .filter_map(|p| {
                let test = critical_test(f, &p).ok()?;
                (test.jacobian_modulus > R::lit(opts.critical_floor)).then_some((p, test))
            })
            .collect();
        if regular.is_empty() {
            return Err(DynamicsError::AllPreimagesCritical { step });
        }
        let pick = match opts.branch {
            BranchRule::Seeded => rng.gen_range(0..regular.len()),
            BranchRule::Nearest => {
                let mut best = 0;
                let mut best_d = R::lit(f64::INFINITY);
                for (i, (p, _)) in regular.iter().enumerate() {
                    let d = p.distance(&current);
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                best
            }
        };
        let (y, test) = &regular[pick];
        let svd = test.derivative.clone().svd(false, false);
        let smin = svd.singular_values.min();
        let t = smin * smin;
        let residual = f.apply(y)?.distance(&current);
        points.push(y.clone());
        branch_choices.push(pick);
        t_values.push(t);
        radii_raw.push((c_f * t).min(R::one()));
        jacobian_moduli.push(test.jacobian_modulus);
        step_residuals.push(residual);
    }

    Ok(BackwardOrbit {
        points,
        branch_choices,
        t_values,
        radii_raw,
        jacobian_moduli,
        step_residuals,
        radius_constant: c_f,
        seed: opts.rng_seed,
    })
}

/// Equilibrium samples: `count` endpoints of `depth` random backward steps
/// from a generic seed point. Used for Birkhoff averages.
pub fn sample_equilibrium<R: Real>(
    f: &super::ProjectiveEndomorphism<R>,
    seed_point: &ProjPoint<R>,
    depth: usize,
    count: usize,
    rng_seed: u64,
) -> DynResult<Vec<ProjPoint<R>>> {
    let opts = OrbitOptions {
        rng_seed,
        branch: BranchRule::Seeded,
        ..Default::default()
    };
    let mut rng = seeded_rng(rng_seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut current = seed_point.clone();
        for step in 0..depth {
            let candidates = preimages(f, &current, &mut rng, &opts);
            let regular: Vec<ProjPoint<R>> = candidates
                .into_iter()
                .filter(|p| {
                    critical_test(f, p)
                        .map(|t| t.is_regular)
                        .unwrap_or(false)
                })
                .collect();
            if regular.is_empty() {
                return Err(DynamicsError::AllPreimagesCritical { step });
            }
            current = regular[rng.gen_range(0..regular.len())].clone();
        }
        out.push(current);
    }
    Ok(out)
}

/// Birkhoff average of `log |det d f|` (chart-expressed) over sample points:
/// estimates the sum of the Lyapunov exponents.
pub fn birkhoff_log_jacobian<R: Real>(
    f: &super::ProjectiveEndomorphism<R>,
    samples: &[ProjPoint<R>],
) -> DynResult<R> {
    let mut acc = R::zero();
    let mut used = 0usize;
    for p in samples {
        let t = critical_test(f, p)?;
        if t.is_regular {
            acc += t.jacobian_modulus.ln();
            used += 1;
        }
    }
    if used == 0 {
        return Err(DynamicsError::SpectrumEstimation(
            "no regular samples for the Birkhoff average".into(),
        ));
    }
    Ok(acc / R::from_usize(used).unwrap())
}
