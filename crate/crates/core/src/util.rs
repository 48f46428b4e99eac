//! Small numeric helpers shared across modules.

use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::Real;

/// Complex number from two f64 literals.
pub fn cx<R: Real>(re: f64, im: f64) -> Complex<R> {
    Complex::new(R::lit(re), R::lit(im))
}

/// Modulus of a complex scalar.
pub fn modulus<R: Real>(z: Complex<R>) -> R {
    z.norm_sqr().sqrt()
}

/// Euclidean norm of a complex vector.
pub fn norm2<R: Real>(v: &[Complex<R>]) -> R {
    v.iter()
        .fold(R::zero(), |acc, z| acc + z.norm_sqr())
        .sqrt()
}

/// Euclidean distance between complex vectors.
pub fn dist2<R: Real>(u: &[Complex<R>], v: &[Complex<R>]) -> R {
    debug_assert_eq!(u.len(), v.len());
    u.iter()
        .zip(v)
        .fold(R::zero(), |acc, (a, b)| acc + (a - b).norm_sqr())
        .sqrt()
}

/// Sup norm (polydisc membership norm) of a complex vector.
pub fn norm_sup<R: Real>(v: &[Complex<R>]) -> R {
    v.iter()
        .map(|z| modulus(*z))
        .fold(R::zero(), |a, b| a.max(b))
}

/// Deterministic RNG used everywhere randomness is called for.
pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Uniform sample from the polydisc of the given radius in `C^k`.
pub fn polydisc_point<R: Real>(k: usize, radius: R, rng: &mut ChaCha20Rng) -> Vec<Complex<R>> {
    (0..k)
        .map(|_| {
            let r = radius * R::lit(rng.gen::<f64>()).sqrt();
            let theta = R::lit(rng.gen::<f64>()) * R::two_pi();
            Complex::new(r * theta.cos(), r * theta.sin())
        })
        .collect()
}

/// Uniform sample from the Euclidean ball of the given radius in `C^k`
/// (rejection from the polydisc). Matches Fubini-Study balls at small radii.
pub fn ball_point<R: Real>(k: usize, radius: R, rng: &mut ChaCha20Rng) -> Vec<Complex<R>> {
    loop {
        let p = polydisc_point(k, radius, rng);
        if norm2(&p) <= radius {
            return p;
        }
    }
}

/// Largest eps-slow sequence lying below the given per-index caps.
///
/// Two sweeps push every cap into the `e^{±eps}` cone of its neighbours.
pub fn slow_envelope<R: Real>(caps: &[R], eps: R) -> Vec<R> {
    let mut out = caps.to_vec();
    let grow = eps.exp();
    for i in 1..out.len() {
        out[i] = out[i].min(out[i - 1] * grow);
    }
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].min(out[i + 1] * grow);
    }
    out
}

/// `true` when consecutive ratios stay within `[e^{-eps}, e^{+eps}]` with the
/// given multiplicative slack for floating-point edges.
pub fn is_slow<R: Real>(values: &[R], eps: R, slack: R) -> bool {
    let lo = (-eps).exp() * (R::one() - slack);
    let hi = eps.exp() * (R::one() + slack);
    values.windows(2).all(|w| {
        let ratio = w[1] / w[0];
        ratio >= lo && ratio <= hi
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_is_slow_and_below_caps() {
        let caps = vec![1.0, 1e-6, 1.0, 0.5, 2.0];
        let eps = 0.1;
        let env = slow_envelope(&caps, eps);
        assert!(is_slow(&env, eps, 1e-12));
        for (e, c) in env.iter().zip(&caps) {
            assert!(e <= c);
        }
    }

    #[test]
    fn polydisc_points_stay_inside() {
        let mut rng = seeded_rng(7);
        for _ in 0..50 {
            let p: Vec<num_complex::Complex<f64>> = polydisc_point(3, 0.3, &mut rng);
            assert!(norm_sup(&p) <= 0.3);
        }
    }
}
