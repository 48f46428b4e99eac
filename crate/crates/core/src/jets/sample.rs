use super::{JetError, JetMap, JetResult};
use crate::util::{dist2, polydisc_point, seeded_rng};
use crate::Real;

/// Empirical Lipschitz band of a jet on a polydisc.
///
/// Evaluates `|F(u) - F(v)| / |u - v|` over deterministic pseudo-random
/// pairs and returns the (min, max) ratio. Degenerate pairs are resampled.
pub fn sampled_lipschitz<R: Real>(
    jet: &JetMap<R>,
    radius: R,
    n_samples: usize,
    rng_seed: u64,
) -> JetResult<(R, R)> {
    if radius <= R::zero() {
        return Err(JetError::NonPositive("radius"));
    }
    if n_samples < 2 {
        return Err(JetError::NonPositive("n_samples"));
    }
    let mut rng = seeded_rng(rng_seed);
    let floor = radius * R::lit(1e-12);
    let mut lo = R::zero();
    let mut hi = R::zero();
    let mut first = true;
    let mut taken = 0;
    while taken < n_samples {
        let u = polydisc_point(jet.dim_in(), radius, &mut rng);
        let v = polydisc_point(jet.dim_in(), radius, &mut rng);
        let d = dist2(&u, &v);
        if d <= floor {
            continue;
        }
        let fu = jet.evaluate(&u)?;
        let fv = jet.evaluate(&v)?;
        let ratio = dist2(&fu, &fv) / d;
        if first {
            lo = ratio;
            hi = ratio;
            first = false;
        } else {
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        taken += 1;
    }
    Ok((lo, hi))
}
