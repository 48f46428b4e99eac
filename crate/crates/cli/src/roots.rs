//! Root finding for the fixed-point equations `f^n(z) = z` on the affine
//! line: companion-matrix eigenvalues at small degree, Aberth-Ehrlich
//! iteration at moderate degree with tame coefficients, and inverse-branch
//! coding beyond that (iterated compositions overflow binary64 coefficient
//! space long before period 12 for generic quadratic maps).

use nalgebra::DMatrix;
use num_complex::Complex;

type C64 = Complex<f64>;

/// Dense polynomial, ascending coefficients.
#[derive(Clone, Debug)]
pub struct Poly(pub Vec<C64>);

impl Poly {
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in self.0.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![C64::new(0.0, 0.0)]);
        }
        Poly(
            self.0[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| c * C64::new((i + 1) as f64, 0.0))
                .collect(),
        )
    }

    /// Substitutes `inner` into `self` (polynomial composition).
    pub fn compose(&self, inner: &Poly) -> Poly {
        let mut acc = vec![C64::new(0.0, 0.0)];
        for c in self.0.iter().rev() {
            acc = poly_mul(&acc, &inner.0);
            if acc.is_empty() {
                acc = vec![C64::new(0.0, 0.0)];
            }
            acc[0] += c;
        }
        // drop exactly-zero leading coefficients the padding introduced
        while acc.len() > 1 && acc.last().unwrap().norm_sqr() == 0.0 {
            acc.pop();
        }
        Poly(acc)
    }

    pub fn max_coeff(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Strips roots at the origin, returning their multiplicity.
    pub fn strip_zero_roots(&self) -> (Poly, usize) {
        let s = self
            .0
            .iter()
            .position(|c| c.norm() > 0.0)
            .unwrap_or(self.0.len() - 1);
        (Poly(self.0[s..].to_vec()), s)
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|c| c.im == 0.0)
    }
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.norm_sqr() == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// All roots via companion-matrix eigenvalues (real coefficients), Newton
/// polished.
pub fn companion_roots(p: &Poly) -> Option<Vec<C64>> {
    let (stripped, zeros) = p.strip_zero_roots();
    let m = stripped.degree();
    if m == 0 {
        return Some(vec![C64::new(0.0, 0.0); zeros]);
    }
    if !p.is_real() {
        return None;
    }
    let lead = stripped.0[m];
    let mut comp = DMatrix::<f64>::zeros(m, m);
    for i in 1..m {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..m {
        comp[(i, m - 1)] = -(stripped.0[i] / lead).re;
    }
    let eig = comp.complex_eigenvalues();
    let mut roots: Vec<C64> = eig.iter().map(|z| C64::new(z.re, z.im)).collect();
    polish(&stripped, &mut roots);
    roots.extend(std::iter::repeat(C64::new(0.0, 0.0)).take(zeros));
    Some(roots)
}

/// All roots via Aberth-Ehrlich from circular starts, Newton polished.
pub fn aberth_roots(p: &Poly, max_sweeps: usize) -> Option<Vec<C64>> {
    let (stripped, zeros) = p.strip_zero_roots();
    let m = stripped.degree();
    if m == 0 {
        return Some(vec![C64::new(0.0, 0.0); zeros]);
    }
    let lead = stripped.0[m];
    // Cauchy-style inclusion radius
    let radius = 1.0
        + stripped.0[..m]
            .iter()
            .map(|c| (c / lead).norm())
            .fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..m)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * (i as f64) / (m as f64) + 0.377;
            C64::new(radius * theta.cos(), radius * theta.sin()) * C64::new(0.7, 0.0)
        })
        .collect();
    let dp = stripped.derivative();
    let tol = 1e-13 * radius.max(1.0);
    for _ in 0..max_sweeps {
        let mut moved: f64 = 0.0;
        for i in 0..m {
            let pz = stripped.eval(z[i]);
            let dpz = dp.eval(z[i]);
            if dpz.norm_sqr() == 0.0 {
                z[i] += C64::new(1e-6, 1e-6);
                moved = f64::INFINITY;
                continue;
            }
            let newton = pz / dpz;
            let mut rep = C64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    let d = z[i] - zj;
                    if d.norm_sqr() > 0.0 {
                        rep += C64::new(1.0, 0.0) / d;
                    }
                }
            }
            let denom = C64::new(1.0, 0.0) - newton * rep;
            let step = if denom.norm_sqr() > 0.0 {
                newton / denom
            } else {
                newton
            };
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < tol {
            let mut roots = z.clone();
            polish(&stripped, &mut roots);
            roots.extend(std::iter::repeat(C64::new(0.0, 0.0)).take(zeros));
            return Some(roots);
        }
    }
    None
}

fn polish(p: &Poly, roots: &mut [C64]) {
    let dp = p.derivative();
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let d = dp.eval(*z);
            if d.norm_sqr() == 0.0 {
                break;
            }
            *z -= p.eval(*z) / d;
        }
    }
}

/// Periodic points by inverse-branch shadowing plus global Aberth: the
/// depth-`n` preimage tree of a generic seed carries one leaf per symbolic
/// cylinder, each shadowing one periodic point. Aberth-Ehrlich on
/// `f^n(z) - z`, evaluated by iteration with scale tracking, polishes every
/// leaf simultaneously; the pairwise repulsion stops two leaves from
/// collapsing onto one root where the Julia set pinches.
pub fn coded_periodic_points(f_poly: &Poly, degree: usize, n: usize) -> Vec<C64> {
    let expected = degree.pow(n as u32);
    // tree leaves: one start per cylinder
    let seed = C64::new(0.41, 0.27);
    let mut leaves: Vec<C64> = Vec::with_capacity(expected);
    let mut stack: Vec<(C64, usize)> = vec![(seed, 0)];
    while let Some((z, depth)) = stack.pop() {
        if depth == n {
            leaves.push(z);
            continue;
        }
        for w in affine_preimages(f_poly, z) {
            stack.push((w, depth + 1));
        }
    }
    // pad or trim to the expected count, jittering duplicates apart
    while leaves.len() < expected {
        let i = leaves.len();
        let theta = 2.0 * std::f64::consts::PI * (i as f64) / (expected as f64);
        leaves.push(C64::new(1.7 * theta.cos(), 1.7 * theta.sin()));
    }
    leaves.truncate(expected);
    for i in 1..leaves.len() {
        if leaves[..i].iter().any(|p| (p - leaves[i]).norm() < 1e-12) {
            leaves[i] += C64::new(1e-7 * (i as f64 % 13.0 + 1.0), 1e-7);
        }
    }

    let mut z = leaves;
    let m = z.len();
    let mut converged = vec![false; m];
    for _ in 0..80 {
        let mut moved: f64 = 0.0;
        for i in 0..m {
            if converged[i] {
                continue;
            }
            let Some(newton) = newton_correction(f_poly, z[i], n) else {
                converged[i] = true;
                continue;
            };
            let mut rep = C64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    let d = z[i] - zj;
                    if d.norm_sqr() > 1e-28 {
                        rep += C64::new(1.0, 0.0) / d;
                    }
                }
            }
            let denom = C64::new(1.0, 0.0) - newton * rep;
            let step = if denom.norm_sqr() > 0.0 {
                newton / denom
            } else {
                newton
            };
            z[i] -= step;
            if step.norm() < 1e-13 {
                converged[i] = true;
            }
            moved = moved.max(step.norm());
        }
        if moved < 1e-13 {
            break;
        }
    }
    // final Newton polish and fixed-point filter
    let mut found: Vec<C64> = Vec::new();
    for mut p in z {
        for _ in 0..4 {
            match newton_correction(f_poly, p, n) {
                Some(c) => p -= c,
                None => break,
            }
        }
        let mut w = p;
        let mut ok = true;
        for _ in 0..n {
            w = f_poly.eval(w);
            if !w.norm().is_finite() || w.norm() > 1e8 {
                ok = false;
                break;
            }
        }
        if !ok || (w - p).norm() > 1e-8 * p.norm().max(1.0) {
            continue;
        }
        if found.iter().all(|q| (q - p).norm() > 1e-9) {
            found.push(p);
        }
    }
    found
}

/// Newton correction `g / g'` for `g(z) = f^n(z) - z`, with the orbit value
/// and the chain-rule derivative renormalized by a shared scale so escaping
/// starts stay finite: once the scale dwarfs `z` and `1`, the correction is
/// just `val / der` of the scaled pair.
fn newton_correction(f_poly: &Poly, z: C64, n: usize) -> Option<C64> {
    let dp = f_poly.derivative();
    let mut val = z;
    let mut der = C64::new(1.0, 0.0);
    let mut log_scale = 0.0f64;
    for _ in 0..n {
        der *= dp.eval(val);
        val = f_poly.eval(val);
        let m = val.norm().max(der.norm());
        if !m.is_finite() {
            return None;
        }
        if m > 1e100 {
            let inv = 1.0 / m;
            val *= C64::new(inv, 0.0);
            der *= C64::new(inv, 0.0);
            log_scale += m.ln();
        }
    }
    let (num, den) = if log_scale > 0.0 {
        // scale >> |z|, 1: the shifted terms are negligible
        (val, der)
    } else {
        (val - z, der - C64::new(1.0, 0.0))
    };
    if den.norm_sqr() == 0.0 {
        return None;
    }
    Some(num / den)
}

/// Sorted affine preimages of `y` under the polynomial: roots of
/// `f(z) - y`. Quadratics use the closed form.
pub fn affine_preimages(f_poly: &Poly, y: C64) -> Vec<C64> {
    let mut shifted = f_poly.clone();
    shifted.0[0] -= y;
    let mut roots = if f_poly.degree() == 2 {
        let (c, b, a) = (shifted.0[0], shifted.0[1], shifted.0[2]);
        let disc = (b * b - C64::new(4.0, 0.0) * a * c).sqrt();
        let two_a = C64::new(2.0, 0.0) * a;
        vec![(-b + disc) / two_a, (-b - disc) / two_a]
    } else {
        aberth_roots(&shifted, 200).unwrap_or_default()
    };
    roots.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(re: &[f64]) -> Poly {
        Poly(re.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    #[test]
    fn companion_quadratic() {
        // z^2 - 3z + 2 = (z-1)(z-2)
        let p = poly(&[2.0, -3.0, 1.0]);
        let mut roots = companion_roots(&p).unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((roots[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((roots[1] - C64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn aberth_roots_of_unity() {
        // z^8 - 1
        let mut c = vec![0.0; 9];
        c[0] = -1.0;
        c[8] = 1.0;
        let roots = aberth_roots(&poly(&c), 200).unwrap();
        assert_eq!(roots.len(), 8);
        for r in &roots {
            assert!((r.norm() - 1.0).abs() < 1e-12);
            assert!(poly(&c).eval(*r).norm() < 1e-12);
        }
    }

    #[test]
    fn composition_degrees_and_values() {
        // f = z^2 - 1, f^2(z) = (z^2-1)^2 - 1
        let f = poly(&[-1.0, 0.0, 1.0]);
        let f2 = f.compose(&f);
        assert_eq!(f2.degree(), 4);
        let z = C64::new(0.3, -0.7);
        assert!((f2.eval(z) - f.eval(f.eval(z))).norm() < 1e-14);
    }

    #[test]
    fn coded_points_match_roots_for_small_period() {
        // z^2: the repelling 3-periodic points are the 7th roots of unity
        // (the superattracting 0 is not shadowed by the tree)
        let f = poly(&[0.0, 0.0, 1.0]);
        let coded = coded_periodic_points(&f, 2, 3);
        let on_circle: Vec<_> = coded
            .iter()
            .filter(|p| (p.norm() - 1.0).abs() < 1e-10)
            .collect();
        assert_eq!(on_circle.len(), 7, "found {coded:?}");
        for p in &coded {
            let mut w = *p;
            for _ in 0..3 {
                w = f.eval(w);
            }
            assert!((w - p).norm() < 1e-9);
        }
    }
}
