use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::Zero;

use super::{DynResult, DynamicsError};
use crate::util::{modulus, polydisc_point, seeded_rng};
use crate::Real;

/// Point of `P^k` stored as a unit-norm homogeneous representative.
#[derive(Clone, Debug)]
pub struct ProjPoint<R: Real> {
    rep: DVector<Complex<R>>,
}

impl<R: Real> ProjPoint<R> {
    pub fn new(coords: Vec<Complex<R>>) -> DynResult<Self> {
        let v = DVector::from_vec(coords);
        let n = v.norm();
        if n <= R::lit(1e-300) {
            return Err(DynamicsError::InvalidMap(
                "zero vector does not represent a projective point".into(),
            ));
        }
        Ok(ProjPoint {
            rep: v.map(|z| z * Complex::new(R::one() / n, R::zero())),
        })
    }

    /// Affine convenience: `(v_1, .., v_k) -> [v_1 : .. : v_k : 1]`,
    /// matching the bundled lifts whose last variable homogenizes.
    pub fn from_affine(coords: &[Complex<R>]) -> DynResult<Self> {
        let mut v = coords.to_vec();
        v.push(Complex::new(R::one(), R::zero()));
        Self::new(v)
    }

    pub fn rep(&self) -> &DVector<Complex<R>> {
        &self.rep
    }

    /// Ambient dimension `k` (the sphere lives in `C^{k+1}`).
    pub fn dim(&self) -> usize {
        self.rep.len() - 1
    }

    /// Hermitian inner product of the unit representatives.
    pub fn inner(&self, other: &ProjPoint<R>) -> Complex<R> {
        self.rep
            .iter()
            .zip(other.rep.iter())
            .fold(Complex::<R>::zero(), |acc, (a, b)| acc + a.conj() * *b)
    }

    /// Fubini-Study geodesic distance (the angle between the lines),
    /// computed through the orthogonal component for stability near zero.
    pub fn distance(&self, other: &ProjPoint<R>) -> R {
        let c = self.inner(other);
        let mut ortho = R::zero();
        for i in 0..self.rep.len() {
            let d = other.rep[i] - self.rep[i] * c;
            ortho += d.norm_sqr();
        }
        ortho.sqrt().min(R::one()).asin()
    }

    /// Canonical phase: first coordinate of largest modulus made real
    /// positive. Used to order preimage lists deterministically.
    pub fn canonicalized(&self) -> ProjPoint<R> {
        let mut best = 0;
        let mut best_mod = R::zero();
        for (i, z) in self.rep.iter().enumerate() {
            let m = modulus(*z);
            if m > best_mod {
                best_mod = m;
                best = i;
            }
        }
        let z = self.rep[best];
        let phase = z * Complex::new(R::one() / modulus(z), R::zero());
        let rot = phase.conj();
        ProjPoint {
            rep: self.rep.map(|w| w * rot),
        }
    }
}

/// Affine chart `psi_x : C^k -> P^k` with `psi_x(0) = x`: a fixed reference
/// chart moved by a unitary taking the first basis vector to `x`.
#[derive(Clone, Debug)]
pub struct Chart<R: Real> {
    u: DMatrix<Complex<R>>,
}

impl<R: Real> Chart<R> {
    /// Deterministic unitary via Gram-Schmidt: first column the center,
    /// remaining columns from the standard basis with the most-parallel
    /// vector dropped.
    pub fn centered_at(center: &ProjPoint<R>) -> Self {
        let n = center.rep().len();
        let drop = {
            let mut best = 0;
            let mut best_mod = R::zero();
            for (i, z) in center.rep().iter().enumerate() {
                let m = modulus(*z);
                if m > best_mod {
                    best_mod = m;
                    best = i;
                }
            }
            best
        };
        let mut cols: Vec<DVector<Complex<R>>> = vec![center.rep().clone()];
        for i in 0..n {
            if i == drop {
                continue;
            }
            let mut e = DVector::from_element(n, Complex::<R>::zero());
            e[i] = Complex::new(R::one(), R::zero());
            // Gram-Schmidt against the accepted columns
            for c in &cols {
                let proj = c.iter().zip(e.iter()).fold(Complex::<R>::zero(), |acc, (a, b)| {
                    acc + a.conj() * *b
                });
                e -= c * proj;
            }
            let norm = e.norm();
            cols.push(e.map(|z| z * Complex::new(R::one() / norm, R::zero())));
        }
        let mut u = DMatrix::zeros(n, n);
        for (j, c) in cols.iter().enumerate() {
            u.set_column(j, c);
        }
        Chart { u }
    }

    pub fn unitary(&self) -> &DMatrix<Complex<R>> {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.nrows() - 1
    }

    pub fn center(&self) -> ProjPoint<R> {
        ProjPoint {
            rep: self.u.column(0).clone_owned(),
        }
    }

    /// `psi_x(v) = [U (1, v)]`.
    pub fn point(&self, v: &[Complex<R>]) -> DynResult<ProjPoint<R>> {
        let k = self.dim();
        if v.len() != k {
            return Err(DynamicsError::InvalidMap(format!(
                "chart expects {k} coordinates, got {}",
                v.len()
            )));
        }
        let mut h = DVector::from_element(k + 1, Complex::<R>::zero());
        h[0] = Complex::new(R::one(), R::zero());
        for (i, z) in v.iter().enumerate() {
            h[i + 1] = *z;
        }
        ProjPoint::new((&self.u * h).iter().copied().collect())
    }

    /// `psi_x^{-1}`, failing near the chart's cut locus.
    pub fn pull(&self, p: &ProjPoint<R>) -> DynResult<Vec<Complex<R>>> {
        let w = self.u.adjoint() * p.rep();
        let w0 = w[0];
        let m = modulus(w0);
        if m < R::lit(1e-8) {
            return Err(DynamicsError::ChartDegenerate {
                w0: m.to_f64().unwrap_or(0.0),
            });
        }
        let inv = w0.conj() * Complex::new(R::one() / (m * m), R::zero());
        Ok((1..w.len()).map(|i| w[i] * inv).collect())
    }
}

/// Measured chart distortion at a working radius: the worst two-sided ratio
/// between chart distance and Fubini-Study distance over sampled pairs.
pub fn chart_distortion<R: Real>(k: usize, radius: R, samples: usize, seed: u64) -> R {
    let mut rng = seeded_rng(seed);
    let center = {
        let coords: Vec<Complex<R>> = (0..=k)
            .map(|_| {
                let re = R::lit(rng.gen_range(-1.0..1.0));
                let im = R::lit(rng.gen_range(-1.0..1.0));
                Complex::new(re, im)
            })
            .collect();
        ProjPoint::new(coords).expect("nonzero")
    };
    let chart = Chart::centered_at(&center);
    let mut worst = R::one();
    for _ in 0..samples {
        let u = polydisc_point(k, radius, &mut rng);
        let v = polydisc_point(k, radius, &mut rng);
        let d_chart = crate::util::dist2(&u, &v);
        if d_chart <= radius * R::lit(1e-12) {
            continue;
        }
        let pu = chart.point(&u).expect("in chart");
        let pv = chart.point(&v).expect("in chart");
        let d_fs = pu.distance(&pv);
        if d_fs <= R::zero() {
            continue;
        }
        worst = worst.max(d_chart / d_fs).max(d_fs / d_chart);
    }
    worst
}

use rand::Rng;
