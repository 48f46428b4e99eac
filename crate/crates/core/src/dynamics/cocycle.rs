use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Zero;

use super::chart::{Chart, ProjPoint};
use super::orbit::BackwardOrbit;
use super::{DynResult, DynamicsError};
use crate::jets::{JetMap, LinearMap, MultiIndex};
use crate::spectrum::LyapunovSpectrum;
use crate::Real;

/// One step of the inverse-branch cocycle in charts.
#[derive(Clone, Debug)]
pub struct CocycleStep<R: Real> {
    /// Jet of the local inverse, chart at `x_{-m}` to chart at `x_{-m-1}`.
    pub inverse: JetMap<R>,
    /// Jet of the forward map, chart at `x_{-m-1}` to chart at `x_{-m}`.
    pub forward: JetMap<R>,
    /// Linear part of the inverse.
    pub a_raw: LinearMap<R>,
}

/// The chart cocycle along a backward orbit.
pub struct CocycleData<R: Real> {
    pub steps: Vec<CocycleStep<R>>,
    /// Chart at `x_{-m}` for `m = 0..=N` (shared with the assembly stage).
    pub charts: Vec<Chart<R>>,
    pub degree_cap: usize,
}

impl<R: Real> CocycleData<R> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.charts[0].dim()
    }
}

/// Sparse polynomial with constants allowed; local helper for chart
/// expansions.
type Poly<R> = BTreeMap<MultiIndex, Complex<R>>;

fn poly_const<R: Real>(k: usize, c: Complex<R>) -> Poly<R> {
    let mut p = BTreeMap::new();
    if !c.is_zero() {
        p.insert(MultiIndex::zero(k), c);
    }
    p
}

fn poly_add_assign<R: Real>(a: &mut Poly<R>, b: &Poly<R>, factor: Complex<R>) {
    for (m, c) in b {
        let entry = a.entry(m.clone()).or_insert_with(Complex::<R>::zero);
        *entry += *c * factor;
        if entry.is_zero() {
            a.remove(m);
        }
    }
}

fn poly_mul<R: Real>(a: &Poly<R>, b: &Poly<R>, cap: u32) -> Poly<R> {
    let mut out: Poly<R> = BTreeMap::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            if ma.order() + mb.order() > cap {
                continue;
            }
            let entry = out.entry(ma.add(mb)).or_insert_with(Complex::<R>::zero);
            *entry += *ca * *cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// Taylor jet of the chart-expressed forward map
/// `psi_{f(x)}^{-1} o f o psi_x` at 0, truncated to `cap`.
pub fn forward_chart_jet<R: Real>(
    f: &super::ProjectiveEndomorphism<R>,
    x: &ProjPoint<R>,
    cap: usize,
) -> DynResult<JetMap<R>> {
    let y = f.apply(x)?;
    forward_chart_jet_between(f, x, &y, cap)
}

/// Same jet with an explicit target representative: charts depend on the
/// representative's phase, so cocycle steps must be expressed between the
/// stored orbit points, not recomputed images.
///
/// The components of `F(U_x (1, v))` are polynomials of degree `d` in `v`;
/// the chart division by the zeroth coordinate is a truncated geometric
/// series. The constant terms vanish by chart centering and are dropped.
pub fn forward_chart_jet_between<R: Real>(
    f: &super::ProjectiveEndomorphism<R>,
    x: &ProjPoint<R>,
    target: &ProjPoint<R>,
    cap: usize,
) -> DynResult<JetMap<R>> {
    let k = f.dim();
    let ux = Chart::centered_at(x);
    let uy = Chart::centered_at(target);

    // linear forms l_i(v) = (U_x)_{i,0} + sum_j (U_x)_{i,j+1} v_j
    let lin_forms: Vec<Poly<R>> = (0..=k)
        .map(|i| {
            let mut p = poly_const(k, ux.unitary()[(i, 0)]);
            for j in 0..k {
                let c = ux.unitary()[(i, j + 1)];
                if !c.is_zero() {
                    p.insert(MultiIndex::unit(k, j), c);
                }
            }
            p
        })
        .collect();

    // components of F(U_x (1, v)) as polynomials in v
    let cap32 = cap as u32;
    let comps: Vec<Poly<R>> = f
        .components()
        .iter()
        .map(|comp| {
            let mut acc: Poly<R> = BTreeMap::new();
            for (alpha, coeff) in comp {
                let mut mono = poly_const(k, Complex::new(R::one(), R::zero()));
                for (i, &e) in alpha.entries().iter().enumerate() {
                    for _ in 0..e {
                        mono = poly_mul(&mono, &lin_forms[i], cap32);
                    }
                }
                poly_add_assign(&mut acc, &mono, *coeff);
            }
            acc
        })
        .collect();

    // w = U_y^H F(..): mix the component polynomials
    let uyh = uy.unitary().adjoint();
    let w: Vec<Poly<R>> = (0..=k)
        .map(|i| {
            let mut acc: Poly<R> = BTreeMap::new();
            for (m, comp) in comps.iter().enumerate() {
                poly_add_assign(&mut acc, comp, uyh[(i, m)]);
            }
            acc
        })
        .collect();

    // 1 / w_0 as a truncated geometric series around its constant
    let c0 = w[0]
        .get(&MultiIndex::zero(k))
        .copied()
        .unwrap_or_else(Complex::<R>::zero);
    let c0m = c0.norm_sqr().sqrt();
    if c0m <= R::lit(1e-12) {
        return Err(DynamicsError::ChartDegenerate {
            w0: c0m.to_f64().unwrap_or(0.0),
        });
    }
    let c0inv = c0.conj() * Complex::new(R::one() / c0.norm_sqr(), R::zero());
    let mut u = w[0].clone();
    u.remove(&MultiIndex::zero(k));
    let u: Poly<R> = u
        .into_iter()
        .map(|(m, c)| (m, c * c0inv))
        .collect();
    let mut inv = poly_const(k, c0inv);
    let mut power = poly_const(k, Complex::new(R::one(), R::zero()));
    for s in 1..=cap {
        power = poly_mul(&power, &u, cap32);
        let sign = if s % 2 == 0 { R::one() } else { -R::one() };
        poly_add_assign(&mut inv, &power, c0inv * Complex::new(sign, R::zero()));
    }

    let mut jet = JetMap::zero(k, k, cap);
    for i in 1..=k {
        let g = poly_mul(&w[i], &inv, cap32);
        for (m, c) in g {
            if m.order() == 0 {
                // chart-centering dust; zero exactly by construction
                continue;
            }
            jet.set_coefficient(i - 1, m, c)?;
        }
    }
    Ok(jet)
}

/// Builds the inverse-branch cocycle: per step, the forward jet in charts
/// and its formal inverse, with the linear part checked against the direct
/// derivative inverse.
pub fn build_cocycle<R: Real>(
    f: &super::ProjectiveEndomorphism<R>,
    orbit: &BackwardOrbit<R>,
    degree_cap: usize,
) -> DynResult<CocycleData<R>> {
    let n = orbit.len();
    let charts: Vec<Chart<R>> = orbit.points.iter().map(Chart::centered_at).collect();
    let mut steps = Vec::with_capacity(n);
    for m in 0..n {
        let source = &orbit.points[m + 1]; // x_{-m-1}
        let target = &orbit.points[m]; // x_{-m}
        let forward = forward_chart_jet_between(f, source, target, degree_cap)?;
        let inverse = forward.formal_inverse()?;
        let a_raw = inverse.linear_part();
        // consistency: d_0 F^{-1} equals the inverse of the direct
        // chart-expressed derivative
        let b = super::orbit::chart_derivative_between(f, source, target)?;
        let direct_inv = b
            .lu()
            .try_inverse()
            .ok_or(DynamicsError::CriticalPoint { modulus: 0.0 })?;
        let drift = (&a_raw - &direct_inv)
            .iter()
            .map(|z| z.norm_sqr().sqrt())
            .fold(R::zero(), R::max);
        if drift > R::lit(1e-9) {
            return Err(DynamicsError::SpectrumEstimation(format!(
                "cocycle linear part drifts from the derivative inverse by {:.3e}",
                drift.to_f64().unwrap_or(f64::NAN)
            )));
        }
        steps.push(CocycleStep {
            inverse,
            forward,
            a_raw,
        });
    }
    Ok(CocycleData {
        steps,
        charts,
        degree_cap,
    })
}

/// Finite-time Lyapunov exponents from the partial products of the
/// inverse-branch cocycle: least-squares slopes of `-log sigma_i(P_m)`
/// over the second half of the window, clustered into multiplicities.
pub fn estimate_spectrum<R: Real>(
    cocycle: &CocycleData<R>,
    cluster_tol: R,
) -> DynResult<LyapunovSpectrum<R>> {
    let k = cocycle.dim();
    let n = cocycle.len();
    if n < 4 {
        return Err(DynamicsError::SpectrumEstimation(
            "orbit too short for exponent estimation".into(),
        ));
    }
    // log singular values of P_m = a_{m-1} ... a_0, m = 1..=n
    let mut logs: Vec<Vec<R>> = Vec::with_capacity(n);
    let mut p = DMatrix::<Complex<R>>::identity(k, k);
    for step in &cocycle.steps {
        p = &step.a_raw * &p;
        let svd = p.clone().svd(false, false);
        logs.push(svd.singular_values.iter().map(|s| s.ln()).collect());
    }
    // slope fit on m in [n/2, n]
    let lo = n / 2;
    let mut exps: Vec<R> = (0..k)
        .map(|i| {
            let pts: Vec<(R, R)> = (lo..n)
                .map(|m| (R::from_usize(m + 1).unwrap(), logs[m][i]))
                .collect();
            -slope(&pts)
        })
        .collect();
    // descending sigma ordering gives ascending exponents; sort descending
    exps.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    if exps.iter().any(|e| *e <= R::zero()) {
        return Err(DynamicsError::SpectrumEstimation(format!(
            "nonpositive exponent estimate {:?}",
            exps.iter().map(|e| e.to_f64().unwrap()).collect::<Vec<_>>()
        )));
    }
    // cluster within tolerance into multiplicities
    let mut distinct: Vec<R> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for e in exps {
        match distinct.last() {
            Some(&last) if (last - e).abs() <= cluster_tol => {
                let m = *counts.last().unwrap();
                let merged = (last * R::from_usize(m).unwrap() + e)
                    / R::from_usize(m + 1).unwrap();
                *distinct.last_mut().unwrap() = merged;
                *counts.last_mut().unwrap() += 1;
            }
            _ => {
                distinct.push(e);
                counts.push(1);
            }
        }
    }
    Ok(LyapunovSpectrum::new(distinct, counts)?)
}

fn slope<R: Real>(pts: &[(R, R)]) -> R {
    let n = R::from_usize(pts.len()).unwrap();
    let sx = pts.iter().fold(R::zero(), |a, (x, _)| a + *x);
    let sy = pts.iter().fold(R::zero(), |a, (_, y)| a + *y);
    let sxx = pts.iter().fold(R::zero(), |a, (x, _)| a + *x * *x);
    let sxy = pts.iter().fold(R::zero(), |a, (x, y)| a + *x * *y);
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::endo::{squaring_p1, squaring_p2};
    use crate::dynamics::orbit::{backward_orbit, BranchRule, OrbitOptions};
    use crate::util::{cx, dist2, polydisc_point, seeded_rng};

    const LOG2: f64 = core::f64::consts::LN_2;

    #[test]
    fn fixed_point_cocycle_linear_part() {
        let f = squaring_p1::<f64>();
        let one = ProjPoint::from_affine(&[cx(1.0, 0.0)]).unwrap();
        let orbit = backward_orbit(
            &f,
            &one,
            4,
            &OrbitOptions {
                branch: BranchRule::Nearest,
                ..Default::default()
            },
        )
        .unwrap();
        let cocycle = build_cocycle(&f, &orbit, 3).unwrap();
        for step in &cocycle.steps {
            let a = step.a_raw[(0, 0)];
            assert!((a.norm_sqr().sqrt() - 0.5).abs() < 1e-12, "|A| = {a}");
        }
    }

    #[test]
    fn squares_p2_linear_part_at_111() {
        let f = squaring_p2::<f64>();
        let p = ProjPoint::new(vec![cx(1.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0)]).unwrap();
        let jet = forward_chart_jet(&f, &p, 2).unwrap();
        let lin = jet.linear_part();
        let svd = lin.svd(false, false);
        for s in svd.singular_values.iter() {
            assert!((s - 2.0).abs() < 1e-12, "sigma {s}");
        }
        // inverse linear part diag(1/2, 1/2) in singular values
        let inv = jet.formal_inverse().unwrap();
        let svd = inv.linear_part().svd(false, false);
        for s in svd.singular_values.iter() {
            assert!((s - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn jet_round_trip_consistency() {
        // evaluate(F^{-1}, evaluate(F, v)) = v + O(cap+1) within radius
        let f = squaring_p2::<f64>();
        let p = ProjPoint::new(vec![cx(1.0, 0.0), cx(0.8, 0.3), cx(0.5, -0.6)]).unwrap();
        let fwd = forward_chart_jet(&f, &p, 4).unwrap();
        let inv = fwd.formal_inverse().unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..100 {
            let v = polydisc_point(2, 1e-3, &mut rng);
            let w = fwd.evaluate(&v).unwrap();
            let back = inv.evaluate(&w).unwrap();
            assert!(dist2(&v, &back) <= 1e-9, "round trip {:e}", dist2(&v, &back));
        }
    }

    #[test]
    fn spectrum_estimate_squaring_circle() {
        let f = squaring_p1::<f64>();
        let x0 = ProjPoint::from_affine(&[cx(-1.0, 0.0)]).unwrap();
        let orbit = backward_orbit(&f, &x0, 12, &OrbitOptions::default()).unwrap();
        let cocycle = build_cocycle(&f, &orbit, 3).unwrap();
        let spec = estimate_spectrum(&cocycle, 0.05).unwrap();
        assert_eq!(spec.levels(), 1);
        assert!((spec.largest() - LOG2).abs() < 0.02);
    }

    #[test]
    fn spectrum_estimate_squares_p2_merges_equal_exponents() {
        let f = squaring_p2::<f64>();
        let x0 = ProjPoint::new(vec![cx(1.0, 0.0), cx(1.4, 0.3), cx(0.7, -0.5)]).unwrap();
        let orbit = backward_orbit(&f, &x0, 12, &OrbitOptions::default()).unwrap();
        let cocycle = build_cocycle(&f, &orbit, 3).unwrap();
        let spec = estimate_spectrum(&cocycle, 0.05).unwrap();
        assert_eq!(spec.levels(), 1);
        assert_eq!(spec.multiplicities(), &[2]);
        assert!((spec.largest() - LOG2).abs() < 0.02, "{}", spec.largest());
    }
}
