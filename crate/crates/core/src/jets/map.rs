use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Zero;

use super::{JetError, JetResult, MultiIndex};
use crate::consts;
use crate::Real;

/// The linear (`|alpha| = 1`) slice of a jet, as a dense matrix.
pub type LinearMap<R> = DMatrix<Complex<R>>;

/// Truncated power-series map `C^{dim_in} -> C^{dim_out}` fixing the origin.
///
/// Only multi-indices with `1 <= |alpha| <= degree_cap` are stored; the
/// constant term is implicitly zero. Exact zero coefficients are pruned so
/// the representation of a given map is unique.
#[derive(Clone, Debug, PartialEq)]
pub struct JetMap<R: Real> {
    dim_in: usize,
    dim_out: usize,
    degree_cap: usize,
    terms: BTreeMap<(usize, MultiIndex), Complex<R>>,
}

impl<R: Real> JetMap<R> {
    pub fn zero(dim_in: usize, dim_out: usize, degree_cap: usize) -> Self {
        assert!(dim_in >= 1 && dim_out >= 1 && degree_cap >= 1);
        JetMap {
            dim_in,
            dim_out,
            degree_cap,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(k: usize, degree_cap: usize) -> Self {
        let mut jet = Self::zero(k, k, degree_cap);
        for i in 0..k {
            jet.terms
                .insert((i, MultiIndex::unit(k, i)), Complex::new(R::one(), R::zero()));
        }
        jet
    }

    pub fn from_linear(matrix: &LinearMap<R>, degree_cap: usize) -> Self {
        let (rows, cols) = matrix.shape();
        let mut jet = Self::zero(cols, rows, degree_cap);
        for i in 0..rows {
            for j in 0..cols {
                let c = matrix[(i, j)];
                if !c.is_zero() {
                    jet.terms.insert((i, MultiIndex::unit(cols, j)), c);
                }
            }
        }
        jet
    }

    /// Diagonal scaling `v -> s * v` as a jet.
    pub fn scaling(k: usize, s: Complex<R>, degree_cap: usize) -> Self {
        let mut jet = Self::zero(k, k, degree_cap);
        if !s.is_zero() {
            for i in 0..k {
                jet.terms.insert((i, MultiIndex::unit(k, i)), s);
            }
        }
        jet
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &MultiIndex, Complex<R>)> {
        self.terms.iter().map(|((i, a), c)| (*i, a, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, out: usize, alpha: &MultiIndex) -> Complex<R> {
        self.terms
            .get(&(out, alpha.clone()))
            .copied()
            .unwrap_or_else(|| Complex::new(R::zero(), R::zero()))
    }

    pub fn set_coefficient(
        &mut self,
        out: usize,
        alpha: MultiIndex,
        value: Complex<R>,
    ) -> JetResult<()> {
        if out >= self.dim_out {
            return Err(JetError::InvalidTerm(format!(
                "output component {out} out of range 0..{}",
                self.dim_out
            )));
        }
        if alpha.len() != self.dim_in {
            return Err(JetError::InvalidTerm(format!(
                "multi-index has {} entries, expected {}",
                alpha.len(),
                self.dim_in
            )));
        }
        let order = alpha.order() as usize;
        if order < 1 || order > self.degree_cap {
            return Err(JetError::InvalidTerm(format!(
                "|alpha| = {order} outside 1..={}",
                self.degree_cap
            )));
        }
        if value.is_zero() {
            self.terms.remove(&(out, alpha));
        } else {
            self.terms.insert((out, alpha), value);
        }
        Ok(())
    }

    fn accumulate(&mut self, out: usize, alpha: MultiIndex, value: Complex<R>) {
        if value.is_zero() {
            return;
        }
        let key = (out, alpha);
        let new = match self.terms.get(&key) {
            Some(c) => *c + value,
            None => value,
        };
        // prune exact zeros so representations stay unique
        if new.is_zero() {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, new);
        }
    }

    /// The `|alpha| = 1` slice as a `dim_out x dim_in` matrix.
    pub fn linear_part(&self) -> LinearMap<R> {
        let mut m = DMatrix::zeros(self.dim_out, self.dim_in);
        for ((i, alpha), c) in &self.terms {
            if alpha.order() == 1 {
                let j = alpha.entries().iter().position(|&e| e == 1).unwrap();
                m[(*i, j)] = *c;
            }
        }
        m
    }

    /// Restriction to the terms of order exactly `p`.
    pub fn homogeneous_part(&self, p: usize) -> JetResult<JetMap<R>> {
        if p < 1 || p > self.degree_cap {
            return Err(JetError::DegreeOutOfRange {
                p,
                cap: self.degree_cap,
            });
        }
        let mut out = Self::zero(self.dim_in, self.dim_out, self.degree_cap);
        for ((i, alpha), c) in &self.terms {
            if alpha.order() as usize == p {
                out.terms.insert((*i, alpha.clone()), *c);
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when the jet is exactly `v -> v`.
    pub fn is_identity(&self) -> bool {
        self.dim_in == self.dim_out && *self == Self::identity(self.dim_in, self.degree_cap)
    }

    pub fn has_identity_linear_part(&self) -> bool {
        self.dim_in == self.dim_out
            && self.linear_part() == DMatrix::identity(self.dim_in, self.dim_in)
    }

    /// Largest coefficient modulus (zero for the zero map).
    pub fn max_coeff_modulus(&self) -> R {
        self.terms
            .values()
            .map(|c| c.norm_sqr().sqrt())
            .fold(R::zero(), |a, b| a.max(b))
    }

    /// Largest coefficient modulus among terms of order exactly `p`.
    pub fn degree_coeff_norm(&self, p: usize) -> R {
        self.terms
            .iter()
            .filter(|((_, a), _)| a.order() as usize == p)
            .map(|(_, c)| c.norm_sqr().sqrt())
            .fold(R::zero(), |a, b| a.max(b))
    }

    pub fn add(&self, other: &JetMap<R>) -> JetResult<JetMap<R>> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for ((i, alpha), c) in &other.terms {
            out.accumulate(*i, alpha.clone(), *c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &JetMap<R>) -> JetResult<JetMap<R>> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for ((i, alpha), c) in &other.terms {
            out.accumulate(*i, alpha.clone(), -c);
        }
        Ok(out)
    }

    pub fn scale(&self, factor: Complex<R>) -> JetMap<R> {
        let mut out = Self::zero(self.dim_in, self.dim_out, self.degree_cap);
        if factor.is_zero() {
            return out;
        }
        for ((i, alpha), c) in &self.terms {
            out.terms.insert((*i, alpha.clone()), *c * factor);
        }
        out
    }

    /// Same map with a (weakly larger) degree cap.
    pub fn with_degree_cap(&self, cap: usize) -> JetResult<JetMap<R>> {
        let max_order = self
            .terms
            .keys()
            .map(|(_, a)| a.order() as usize)
            .max()
            .unwrap_or(1);
        if cap < max_order {
            return Err(JetError::DegreeOutOfRange {
                p: max_order,
                cap,
            });
        }
        let mut out = self.clone();
        out.degree_cap = cap;
        Ok(out)
    }

    fn check_same_shape(&self, other: &JetMap<R>) -> JetResult<()> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(JetError::DimensionMismatch(format!(
                "{}->{} vs {}->{}",
                self.dim_in, self.dim_out, other.dim_in, other.dim_out
            )));
        }
        if self.degree_cap != other.degree_cap {
            return Err(JetError::DegreeCapMismatch {
                left: self.degree_cap,
                right: other.degree_cap,
            });
        }
        Ok(())
    }

    /// Truncation to the degree cap of the composition `self o g`.
    ///
    /// The linear part of the result is the matrix product of the linear
    /// parts; terms beyond the shared cap are dropped.
    pub fn compose(&self, g: &JetMap<R>) -> JetResult<JetMap<R>> {
        if self.dim_in != g.dim_out {
            return Err(JetError::DimensionMismatch(format!(
                "compose: outer expects {} inputs, inner produces {}",
                self.dim_in, g.dim_out
            )));
        }
        if self.degree_cap != g.degree_cap {
            return Err(JetError::DegreeCapMismatch {
                left: self.degree_cap,
                right: g.degree_cap,
            });
        }
        let cap = self.degree_cap as u32;
        let k_inner = g.dim_in;

        // component polynomials of g, indexed by 0..g.dim_out
        let mut components: Vec<Poly<R>> = vec![BTreeMap::new(); g.dim_out];
        for ((i, alpha), c) in &g.terms {
            components[*i].insert(alpha.clone(), *c);
        }

        // cached powers: powers[j][p] = g_j^p truncated
        let mut powers: Vec<Vec<Poly<R>>> = (0..g.dim_out)
            .map(|j| vec![poly_one(k_inner), components[j].clone()])
            .collect();

        let mut out = Self::zero(g.dim_in, self.dim_out, self.degree_cap);
        for ((i, alpha), c) in &self.terms {
            let mut prod = poly_one(k_inner);
            let mut vanished = false;
            for (j, &e) in alpha.entries().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[j].len() <= e as usize {
                    let next = poly_mul(powers[j].last().unwrap(), &components[j], cap);
                    powers[j].push(next);
                }
                prod = poly_mul(&prod, &powers[j][e as usize], cap);
                if prod.is_empty() {
                    vanished = true;
                    break;
                }
            }
            if vanished {
                continue;
            }
            for (mono, pc) in &prod {
                debug_assert!(mono.order() >= 1);
                out.accumulate(*i, mono.clone(), *c * *pc);
            }
        }
        Ok(out)
    }

    /// Formal inverse: `compose(inverse, self) = identity + O(D+1)` exactly
    /// in coefficients, solved degree by degree.
    pub fn formal_inverse(&self) -> JetResult<JetMap<R>> {
        self.formal_inverse_with_cond_cap(R::lit(consts::COND_CAP))
    }

    pub fn formal_inverse_with_cond_cap(&self, cond_cap: R) -> JetResult<JetMap<R>> {
        if self.dim_in != self.dim_out {
            return Err(JetError::NotSquare {
                dim_in: self.dim_in,
                dim_out: self.dim_out,
            });
        }
        let a = self.linear_part();
        let svd = a.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= R::zero() {
            return Err(JetError::SingularLinearPart);
        }
        let cond = smax / smin;
        if cond > cond_cap {
            return Err(JetError::IllConditioned {
                cond: cond.to_f64().unwrap_or(f64::INFINITY),
            });
        }
        let a_inv = a
            .try_inverse()
            .ok_or(JetError::SingularLinearPart)?;
        let a_inv_jet = Self::from_linear(&a_inv, self.degree_cap);

        let mut inv = a_inv_jet.clone();
        for p in 2..=self.degree_cap {
            let resid = self.compose(&inv)?.homogeneous_part(p)?;
            if resid.is_zero() {
                continue;
            }
            let corr = a_inv_jet.compose(&resid)?;
            inv = inv.sub(&corr)?;
        }
        Ok(inv)
    }

    /// Plain polynomial evaluation of the truncated series.
    pub fn evaluate(&self, v: &[Complex<R>]) -> JetResult<Vec<Complex<R>>> {
        if v.len() != self.dim_in {
            return Err(JetError::DimensionMismatch(format!(
                "evaluate: point has {} coordinates, expected {}",
                v.len(),
                self.dim_in
            )));
        }
        // cached coordinate powers
        let mut pows: Vec<Vec<Complex<R>>> = v
            .iter()
            .map(|z| vec![Complex::new(R::one(), R::zero()), *z])
            .collect();
        let mut out = vec![Complex::new(R::zero(), R::zero()); self.dim_out];
        for ((i, alpha), c) in &self.terms {
            let mut m = *c;
            for (j, &e) in alpha.entries().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while pows[j].len() <= e as usize {
                    let last = *pows[j].last().unwrap();
                    pows[j].push(last * v[j]);
                }
                m *= pows[j][e as usize];
            }
            out[*i] += m;
        }
        Ok(out)
    }

    /// Composition with a linear map on the left: `matrix . self`.
    pub fn left_matrix(&self, matrix: &LinearMap<R>) -> JetResult<JetMap<R>> {
        if matrix.ncols() != self.dim_out {
            return Err(JetError::DimensionMismatch(format!(
                "left_matrix: matrix has {} columns, jet produces {}",
                matrix.ncols(),
                self.dim_out
            )));
        }
        let mut out = Self::zero(self.dim_in, matrix.nrows(), self.degree_cap);
        for ((i, alpha), c) in &self.terms {
            for r in 0..matrix.nrows() {
                let m = matrix[(r, *i)];
                if !m.is_zero() {
                    out.accumulate(r, alpha.clone(), m * *c);
                }
            }
        }
        Ok(out)
    }
}

/// Internal sparse polynomial in the monomial basis (constants allowed).
type Poly<R> = BTreeMap<MultiIndex, Complex<R>>;

fn poly_one<R: Real>(k: usize) -> Poly<R> {
    let mut p = BTreeMap::new();
    p.insert(MultiIndex::zero(k), Complex::new(R::one(), R::zero()));
    p
}

fn poly_mul<R: Real>(a: &Poly<R>, b: &Poly<R>, cap: u32) -> Poly<R> {
    let mut out: Poly<R> = BTreeMap::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            if ma.order() + mb.order() > cap {
                continue;
            }
            let m = ma.add(mb);
            let entry = out
                .entry(m)
                .or_insert_with(|| Complex::new(R::zero(), R::zero()));
            *entry += *ca * *cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::cx;

    fn jet1(cap: usize, coeffs: &[(u32, f64)]) -> JetMap<f64> {
        let mut j = JetMap::zero(1, 1, cap);
        for &(d, c) in coeffs {
            j.set_coefficient(0, MultiIndex::new(vec![d]), cx(c, 0.0)).unwrap();
        }
        j
    }

    #[test]
    fn compose_identity_both_sides() {
        let id = JetMap::<f64>::identity(1, 2);
        assert_eq!(id.compose(&id).unwrap(), id);
        let f = jet1(2, &[(1, 1.0), (2, 1.0)]);
        assert_eq!(f.compose(&JetMap::identity(1, 2)).unwrap(), f);
        assert_eq!(JetMap::identity(1, 2).compose(&f).unwrap(), f);
    }

    #[test]
    fn compose_hand_expansion() {
        // F(z) = z + z^2, G(z) = 2z  =>  F(G(z)) = 2z + 4z^2
        let f = jet1(2, &[(1, 1.0), (2, 1.0)]);
        let g = jet1(2, &[(1, 2.0)]);
        let fg = f.compose(&g).unwrap();
        assert_eq!(fg.coefficient(0, &MultiIndex::new(vec![1])), cx(2.0, 0.0));
        assert_eq!(fg.coefficient(0, &MultiIndex::new(vec![2])), cx(4.0, 0.0));
    }

    #[test]
    fn compose_truncates_beyond_cap() {
        // F(z) = z^2, G(z) = z^2 at cap 3: the degree-4 term is dropped.
        let f = jet1(3, &[(2, 1.0)]);
        let g = jet1(3, &[(2, 1.0)]);
        assert!(f.compose(&g).unwrap().is_zero());
    }

    #[test]
    fn compose_linear_parts_multiply() {
        let mut a = JetMap::<f64>::zero(2, 2, 3);
        let mut b = JetMap::<f64>::zero(2, 2, 3);
        a.set_coefficient(0, MultiIndex::new(vec![1, 0]), cx(1.0, 0.5)).unwrap();
        a.set_coefficient(1, MultiIndex::new(vec![0, 1]), cx(0.0, 2.0)).unwrap();
        a.set_coefficient(0, MultiIndex::new(vec![1, 1]), cx(0.3, 0.0)).unwrap();
        b.set_coefficient(0, MultiIndex::new(vec![0, 1]), cx(2.0, 0.0)).unwrap();
        b.set_coefficient(1, MultiIndex::new(vec![1, 0]), cx(1.0, -1.0)).unwrap();
        let ab = a.compose(&b).unwrap();
        assert_eq!(ab.linear_part(), a.linear_part() * b.linear_part());
    }

    #[test]
    fn homogeneous_parts() {
        let f = jet1(3, &[(1, 1.0), (2, 1.0)]);
        let p2 = f.homogeneous_part(2).unwrap();
        assert_eq!(p2.coefficient(0, &MultiIndex::new(vec![2])), cx(1.0, 0.0));
        assert_eq!(p2.num_terms(), 1);
        let lin = jet1(3, &[(1, 2.0)]);
        assert!(lin.homogeneous_part(2).unwrap().is_zero());
        assert!(f.homogeneous_part(0).is_err());
        assert!(f.homogeneous_part(4).is_err());
    }

    #[test]
    fn homogeneous_parts_partition() {
        let mut f = JetMap::<f64>::zero(2, 2, 4);
        f.set_coefficient(0, MultiIndex::new(vec![1, 0]), cx(0.4, 0.1)).unwrap();
        f.set_coefficient(1, MultiIndex::new(vec![1, 2]), cx(-0.3, 0.0)).unwrap();
        f.set_coefficient(0, MultiIndex::new(vec![2, 2]), cx(0.0, 0.7)).unwrap();
        let mut sum = JetMap::zero(2, 2, 4);
        for p in 1..=4 {
            sum = sum.add(&f.homogeneous_part(p).unwrap()).unwrap();
        }
        assert_eq!(sum, f);
    }

    #[test]
    fn formal_inverse_hand_series() {
        // (z + z^2)^{-1} = z - z^2 + 2z^3 at cap 3.
        let f = jet1(3, &[(1, 1.0), (2, 1.0)]);
        let inv = f.formal_inverse().unwrap();
        assert_eq!(inv.coefficient(0, &MultiIndex::new(vec![1])), cx(1.0, 0.0));
        assert_eq!(inv.coefficient(0, &MultiIndex::new(vec![2])), cx(-1.0, 0.0));
        assert_eq!(inv.coefficient(0, &MultiIndex::new(vec![3])), cx(2.0, 0.0));
        // identity and pure-linear cases
        let id = JetMap::<f64>::identity(2, 3);
        assert_eq!(id.formal_inverse().unwrap(), id);
        let a = jet1(3, &[(1, 4.0)]);
        let ainv = a.formal_inverse().unwrap();
        assert_eq!(ainv.coefficient(0, &MultiIndex::new(vec![1])), cx(0.25, 0.0));
    }

    #[test]
    fn formal_inverse_rejects_singular() {
        let f = jet1(2, &[(2, 1.0)]);
        assert!(matches!(
            f.formal_inverse(),
            Err(JetError::SingularLinearPart) | Err(JetError::IllConditioned { .. })
        ));
    }

    #[test]
    fn evaluate_examples() {
        let f = jet1(2, &[(1, 1.0), (2, 1.0)]);
        assert_eq!(f.evaluate(&[cx(0.0, 0.0)]).unwrap()[0], cx(0.0, 0.0));
        let y = f.evaluate(&[cx(0.1, 0.0)]).unwrap()[0];
        assert!((y - cx(0.11, 0.0)).norm_sqr() < 1e-28);
        let a = jet1(2, &[(1, 3.0)]);
        let av = a.evaluate(&[cx(0.2, 0.0)]).unwrap()[0];
        assert!((av - cx(0.6, 0.0)).norm_sqr() < 1e-30);
    }
}
