use super::{JetError, JetMap, JetResult};
use crate::consts;
use crate::Real;

/// Sup-norm and second-derivative data for a jet on a reference polydisc.
///
/// `second_derivative_bound` defaults to the Cauchy value `c * s / r^2`
/// with the dimensional constant `c = k^2`; callers that know the exact
/// second derivative may substitute it, which only enlarges the radii the
/// estimates below return.
#[derive(Clone, Debug)]
pub struct CoeffBound<R: Real> {
    pub radius: R,
    pub sup_bound: R,
    pub second_derivative_bound: R,
}

impl<R: Real> CoeffBound<R> {
    /// Cauchy route: bound the second derivatives by `c * s / r^2`.
    pub fn from_sup(k: usize, radius: R, sup_bound: R) -> JetResult<Self> {
        if radius <= R::zero() {
            return Err(JetError::NonPositive("radius"));
        }
        let c = R::lit(consts::cauchy_dim_constant(k));
        Ok(CoeffBound {
            radius,
            sup_bound,
            second_derivative_bound: c * sup_bound / (radius * radius),
        })
    }

    /// Sup bound from the coefficients themselves, then the Cauchy route.
    pub fn from_jet(jet: &JetMap<R>, radius: R) -> JetResult<Self> {
        Self::from_sup(jet.dim_in(), radius, coeff_sup_bound(jet, radius))
    }

    /// Caller-supplied exact second-derivative bound.
    pub fn with_second_derivative(radius: R, sup_bound: R, m2: R) -> JetResult<Self> {
        if radius <= R::zero() {
            return Err(JetError::NonPositive("radius"));
        }
        CoeffBound {
            radius,
            sup_bound,
            second_derivative_bound: m2,
        }
        .validated()
    }

    fn validated(self) -> JetResult<Self> {
        if self.second_derivative_bound < R::zero() {
            return Err(JetError::NonPositive("second_derivative_bound"));
        }
        Ok(self)
    }
}

/// Radius on which the nonlinear part of `jet` is kappa-Lipschitz.
///
/// Uses `rho = kappa / M2` capped at `radius / 2`, where `M2` is the
/// second-derivative bound carried by `bound`; with the Cauchy default this
/// is `kappa * r^2 / (c * s)`.
pub fn lipschitz_radius<R: Real>(
    jet: &JetMap<R>,
    bound: &CoeffBound<R>,
    kappa: R,
) -> JetResult<R> {
    if kappa <= R::zero() {
        return Err(JetError::NonPositive("kappa"));
    }
    let half = bound.radius / R::lit(2.0);
    let nonlinear_exists = jet.terms().any(|(_, a, _)| a.order() >= 2);
    if !nonlinear_exists || bound.second_derivative_bound == R::zero() {
        return Ok(half);
    }
    Ok((kappa / bound.second_derivative_bound).min(half))
}

/// `l2`-over-components bound for `sup |F|` on the polydisc of radius `r`:
/// per component, `sum_alpha |c| r^{|alpha|}`.
pub fn coeff_sup_bound<R: Real>(jet: &JetMap<R>, r: R) -> R {
    per_component(jet, |order, c| c * r.powi(order as i32))
}

/// Rigorous polynomial Lipschitz bound on the polydisc of radius `r`:
/// per component, `sum_alpha |alpha| |c| r^{|alpha|-1}`, combined in `l2`.
pub fn coeff_lipschitz_bound<R: Real>(jet: &JetMap<R>, r: R) -> R {
    per_component(jet, |order, c| {
        R::from_u32(order).unwrap() * c * r.powi(order as i32 - 1)
    })
}

/// Same bound restricted to the terms of order at least 2.
pub fn nonlinear_lipschitz_bound<R: Real>(jet: &JetMap<R>, r: R) -> R {
    let mut acc = vec![R::zero(); jet.dim_out()];
    for (i, alpha, c) in jet.terms() {
        let order = alpha.order() as usize;
        if order < 2 {
            continue;
        }
        acc[i] += R::from_usize(order).unwrap()
            * c.norm_sqr().sqrt()
            * r.powi(order as i32 - 1);
    }
    acc.iter().fold(R::zero(), |a, b| a + *b * *b).sqrt()
}

/// Largest radius `rho <= r_max` with `nonlinear_lipschitz_bound <= target`.
pub fn radius_for_nonlinear_lip<R: Real>(jet: &JetMap<R>, target: R, r_max: R) -> R {
    if target <= R::zero() || r_max <= R::zero() {
        return R::zero();
    }
    if nonlinear_lipschitz_bound(jet, r_max) <= target {
        return r_max;
    }
    let mut lo = R::zero();
    let mut hi = r_max;
    for _ in 0..80 {
        let mid = (lo + hi) / R::lit(2.0);
        if nonlinear_lipschitz_bound(jet, mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn per_component<R: Real>(jet: &JetMap<R>, f: impl Fn(u32, R) -> R) -> R {
    let mut acc = vec![R::zero(); jet.dim_out()];
    for (i, alpha, c) in jet.terms() {
        acc[i] += f(alpha.order(), c.norm_sqr().sqrt());
    }
    acc.iter().fold(R::zero(), |a, b| a + *b * *b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::MultiIndex;
    use crate::util::cx;

    #[test]
    fn linear_map_gets_half_radius() {
        let mut f = JetMap::<f64>::zero(1, 1, 2);
        f.set_coefficient(0, MultiIndex::new(vec![1]), cx(0.7, 0.0)).unwrap();
        let b = CoeffBound::from_jet(&f, 1.0).unwrap();
        assert_eq!(lipschitz_radius(&f, &b, 0.3).unwrap(), 0.5);
    }

    #[test]
    fn exact_second_derivative_route() {
        // F(z) = a z + z^2 has |d_t F - d_0 F| = 2|t|, so rho = kappa / 2.
        let mut f = JetMap::<f64>::zero(1, 1, 2);
        f.set_coefficient(0, MultiIndex::new(vec![1]), cx(0.5, 0.0)).unwrap();
        f.set_coefficient(0, MultiIndex::new(vec![2]), cx(1.0, 0.0)).unwrap();
        let b = CoeffBound::with_second_derivative(1.0, 0.75, 2.0).unwrap();
        let kappa = 0.2;
        let rho = lipschitz_radius(&f, &b, kappa).unwrap();
        assert!((rho - kappa / 2.0).abs() < 1e-15);
        // and the bound is honest: 2 * rho <= kappa
        assert!(nonlinear_lipschitz_bound(&f, rho) <= kappa + 1e-15);
    }

    #[test]
    fn cauchy_route_formula() {
        // k = 1, s = 1, r = 1, kappa = 0.1, c = k^2 = 1  =>  rho = 0.1.
        let mut f = JetMap::<f64>::zero(1, 1, 2);
        f.set_coefficient(0, MultiIndex::new(vec![2]), cx(1.0, 0.0)).unwrap();
        let b = CoeffBound::from_sup(1, 1.0, 1.0).unwrap();
        let rho = lipschitz_radius(&f, &b, 0.1).unwrap();
        assert!((rho - 0.1).abs() < 1e-15);
    }

    #[test]
    fn radius_solver_is_monotone_and_tight() {
        let mut f = JetMap::<f64>::zero(1, 1, 3);
        f.set_coefficient(0, MultiIndex::new(vec![2]), cx(0.5, 0.0)).unwrap();
        f.set_coefficient(0, MultiIndex::new(vec![3]), cx(0.25, 0.0)).unwrap();
        let target = 0.01;
        let rho = radius_for_nonlinear_lip(&f, target, 1.0);
        assert!(nonlinear_lipschitz_bound(&f, rho) <= target * (1.0 + 1e-12));
        assert!(nonlinear_lipschitz_bound(&f, rho * 1.01) > target);
    }
}
