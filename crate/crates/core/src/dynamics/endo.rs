use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::chart::ProjPoint;
use super::{DynResult, DynamicsError};
use crate::jets::MultiIndex;
use crate::util::seeded_rng;
use crate::Real;
use rand::Rng;

/// Holomorphic endomorphism of `P^k`: `k+1` homogeneous polynomial
/// components of algebraic degree `d >= 2` in `k+1` variables with no
/// common zero away from the origin. Topological degree `d^k`.
#[derive(Clone, Debug)]
pub struct ProjectiveEndomorphism<R: Real> {
    k: usize,
    degree: usize,
    components: Vec<Vec<(MultiIndex, Complex<R>)>>,
}

impl<R: Real> ProjectiveEndomorphism<R> {
    pub fn new(
        k: usize,
        degree: usize,
        components: Vec<Vec<(MultiIndex, Complex<R>)>>,
    ) -> DynResult<Self> {
        if k < 1 || degree < 2 {
            return Err(DynamicsError::InvalidMap(
                "need k >= 1 and algebraic degree >= 2".into(),
            ));
        }
        if components.len() != k + 1 {
            return Err(DynamicsError::InvalidMap(format!(
                "need {} homogeneous components, got {}",
                k + 1,
                components.len()
            )));
        }
        for comp in &components {
            for (alpha, _) in comp {
                if alpha.len() != k + 1 || alpha.order() as usize != degree {
                    return Err(DynamicsError::InvalidMap(format!(
                        "monomial {alpha} is not homogeneous of degree {degree} in {} variables",
                        k + 1
                    )));
                }
            }
        }
        Ok(ProjectiveEndomorphism {
            k,
            degree,
            components,
        })
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Topological degree `d^k`: generic fiber cardinality.
    pub fn topological_degree(&self) -> usize {
        self.degree.pow(self.k as u32)
    }

    pub fn components(&self) -> &[Vec<(MultiIndex, Complex<R>)>] {
        &self.components
    }

    /// Raw homogeneous evaluation `F : C^{k+1} -> C^{k+1}`.
    pub fn eval_raw(&self, z: &DVector<Complex<R>>) -> DVector<Complex<R>> {
        let mut out = DVector::from_element(self.k + 1, Complex::<R>::zero());
        for (i, comp) in self.components.iter().enumerate() {
            for (alpha, c) in comp {
                let mut m = *c;
                for (j, &e) in alpha.entries().iter().enumerate() {
                    for _ in 0..e {
                        m *= z[j];
                    }
                }
                out[i] += m;
            }
        }
        out
    }

    /// Jacobian of the raw homogeneous map.
    pub fn jacobian_raw(&self, z: &DVector<Complex<R>>) -> DMatrix<Complex<R>> {
        let n = self.k + 1;
        let mut out = DMatrix::zeros(n, n);
        for (i, comp) in self.components.iter().enumerate() {
            for (alpha, c) in comp {
                for (j, &e) in alpha.entries().iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    let mut m = *c * Complex::new(R::from_u32(e).unwrap(), R::zero());
                    for (j2, &e2) in alpha.entries().iter().enumerate() {
                        let pow = if j2 == j { e2 - 1 } else { e2 };
                        for _ in 0..pow {
                            m *= z[j2];
                        }
                    }
                    out[(i, j)] += m;
                }
            }
        }
        out
    }

    /// One forward step on `P^k`.
    pub fn apply(&self, p: &ProjPoint<R>) -> DynResult<ProjPoint<R>> {
        ProjPoint::new(self.eval_raw(p.rep()).iter().copied().collect())
    }

    /// Smallest `|F|` over random unit representatives: a numerical
    /// non-degeneracy margin (a true common zero would drive it to 0).
    pub fn nondegeneracy_margin(&self, samples: usize, seed: u64) -> R {
        let mut rng = seeded_rng(seed);
        let mut min = R::lit(f64::INFINITY);
        for _ in 0..samples {
            let coords: Vec<Complex<R>> = (0..=self.k)
                .map(|_| {
                    Complex::new(
                        R::lit(rng.gen_range(-1.0..1.0)),
                        R::lit(rng.gen_range(-1.0..1.0)),
                    )
                })
                .collect();
            if let Ok(p) = ProjPoint::new(coords) {
                min = min.min(self.eval_raw(p.rep()).norm());
            }
        }
        min
    }

    pub fn to_json(&self) -> EndomorphismJson {
        EndomorphismJson {
            k: self.k,
            d: self.degree,
            components: self
                .components
                .iter()
                .map(|comp| {
                    comp.iter()
                        .map(|(alpha, c)| MonomialJson {
                            alpha: alpha.entries().to_vec(),
                            re: c.re.to_f64().unwrap(),
                            im: c.im.to_f64().unwrap(),
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

/// Wire format `{k, d, components: [[{alpha: [int; k+1], re, im}]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EndomorphismJson {
    pub k: usize,
    pub d: usize,
    pub components: Vec<Vec<MonomialJson>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonomialJson {
    pub alpha: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

impl EndomorphismJson {
    pub fn to_map<R: Real>(&self) -> DynResult<ProjectiveEndomorphism<R>> {
        ProjectiveEndomorphism::new(
            self.k,
            self.d,
            self.components
                .iter()
                .map(|comp| {
                    comp.iter()
                        .map(|m| {
                            (
                                MultiIndex::new(m.alpha.clone()),
                                Complex::new(R::lit(m.re), R::lit(m.im)),
                            )
                        })
                        .collect()
                })
                .collect(),
        )
    }
}

/// `[z : w] -> [z^2 : w^2]`, the squaring map of `P^1` (affine `z -> z^2`).
pub fn squaring_p1<R: Real>() -> ProjectiveEndomorphism<R> {
    ProjectiveEndomorphism::new(
        1,
        2,
        vec![
            vec![(MultiIndex::new(vec![2, 0]), Complex::new(R::one(), R::zero()))],
            vec![(MultiIndex::new(vec![0, 2]), Complex::new(R::one(), R::zero()))],
        ],
    )
    .expect("valid map")
}

/// Affine `z -> z^2 + c` homogenized on `P^1`.
pub fn quadratic_family_p1<R: Real>(c_re: f64, c_im: f64) -> ProjectiveEndomorphism<R> {
    ProjectiveEndomorphism::new(
        1,
        2,
        vec![
            vec![
                (MultiIndex::new(vec![2, 0]), Complex::new(R::one(), R::zero())),
                (
                    MultiIndex::new(vec![0, 2]),
                    Complex::new(R::lit(c_re), R::lit(c_im)),
                ),
            ],
            vec![(MultiIndex::new(vec![0, 2]), Complex::new(R::one(), R::zero()))],
        ],
    )
    .expect("valid map")
}

/// `[z : w : t] -> [z^2 : w^2 : t^2]`, the squaring map of `P^2`.
pub fn squaring_p2<R: Real>() -> ProjectiveEndomorphism<R> {
    let one = || Complex::new(R::one(), R::zero());
    ProjectiveEndomorphism::new(
        2,
        2,
        vec![
            vec![(MultiIndex::new(vec![2, 0, 0]), one())],
            vec![(MultiIndex::new(vec![0, 2, 0]), one())],
            vec![(MultiIndex::new(vec![0, 0, 2]), one())],
        ],
    )
    .expect("valid map")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::cx;

    #[test]
    fn squaring_map_applies() {
        let f = squaring_p1::<f64>();
        let p = ProjPoint::from_affine(&[cx(2.0, 0.0)]).unwrap();
        let q = f.apply(&p).unwrap();
        let expect = ProjPoint::from_affine(&[cx(4.0, 0.0)]).unwrap();
        assert!(q.distance(&expect) < 1e-15);
        assert!(f.nondegeneracy_margin(100, 1) > 0.1);
        assert_eq!(f.topological_degree(), 2);
        assert_eq!(squaring_p2::<f64>().topological_degree(), 4);
    }

    #[test]
    fn json_round_trip() {
        let f = quadratic_family_p1::<f64>(-1.0, 0.0);
        let js = serde_json::to_string(&f.to_json()).unwrap();
        let back: EndomorphismJson = serde_json::from_str(&js).unwrap();
        let g = back.to_map::<f64>().unwrap();
        let p = ProjPoint::from_affine(&[cx(0.7, 0.3)]).unwrap();
        assert!(f.apply(&p).unwrap().distance(&g.apply(&p).unwrap()) < 1e-15);
    }
}
