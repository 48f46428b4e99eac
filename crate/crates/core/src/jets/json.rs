use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{JetError, JetMap, JetResult, MultiIndex};
use crate::Real;

/// Wire format: `{dim_in, dim_out, degree_cap, terms: [{out, alpha, re, im}]}`.
///
/// Terms are emitted in the canonical (component, graded-lex) order so the
/// round trip is byte-deterministic; coefficients are binary64 on the wire.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JetMapJson {
    pub dim_in: usize,
    pub dim_out: usize,
    pub degree_cap: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermJson {
    pub out: usize,
    pub alpha: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

impl JetMapJson {
    pub fn from_jet<R: Real>(jet: &JetMap<R>) -> Self {
        JetMapJson {
            dim_in: jet.dim_in(),
            dim_out: jet.dim_out(),
            degree_cap: jet.degree_cap(),
            terms: jet
                .terms()
                .map(|(out, alpha, c)| TermJson {
                    out,
                    alpha: alpha.entries().to_vec(),
                    re: c.re.to_f64().unwrap(),
                    im: c.im.to_f64().unwrap(),
                })
                .collect(),
        }
    }

    pub fn to_jet<R: Real>(&self) -> JetResult<JetMap<R>> {
        if self.dim_in < 1 || self.dim_out < 1 || self.degree_cap < 1 {
            return Err(JetError::InvalidTerm(
                "dimensions and degree cap must be positive".into(),
            ));
        }
        let mut jet = JetMap::zero(self.dim_in, self.dim_out, self.degree_cap);
        for t in &self.terms {
            jet.set_coefficient(
                t.out,
                MultiIndex::new(t.alpha.clone()),
                Complex::new(R::lit(t.re), R::lit(t.im)),
            )?;
        }
        Ok(jet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::cx;

    #[test]
    fn round_trip_is_coefficient_exact() {
        let mut jet = JetMap::<f64>::zero(2, 2, 3);
        jet.set_coefficient(0, MultiIndex::new(vec![1, 0]), cx(0.5, -0.125)).unwrap();
        jet.set_coefficient(1, MultiIndex::new(vec![1, 2]), cx(-3.0, 0.75)).unwrap();
        let json = serde_json::to_string(&JetMapJson::from_jet(&jet)).unwrap();
        let parsed: JetMapJson = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.to_jet::<f64>().unwrap(), jet);
    }
}
