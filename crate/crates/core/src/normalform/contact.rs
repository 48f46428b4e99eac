use super::homological::{kill_degree, solve_homological};
use super::{ChainStage, NormalformResult};
use crate::jets::JetMap;
use crate::Real;

/// Outcome of the contact-improvement loop.
#[derive(Debug)]
pub struct ContactResult<R: Real> {
    /// Stage whose maps agree with their linear parts to order `p* + 1`.
    pub stage: ChainStage<R>,
    /// Downward transforms `T^1_n`, tangent to the identity, one per
    /// transform index.
    pub t1: Vec<JetMap<R>>,
    /// Per cancelled degree: worst residual of the homological identity.
    pub homological_residuals: Vec<(usize, R)>,
    /// Per cancelled degree: largest coefficient left at that degree.
    pub cancelled_degree_norms: Vec<(usize, R)>,
}

/// Cancels the homogeneous parts of degrees `2 ..= p*` one pass at a time.
///
/// Each pass conjugates by `S_n^{(p)} = Id - H_n` with `H` solving the
/// degree-`p` homological equation; degrees below `p` are untouched, so the
/// passes compose. The per-pass bi-Lipschitz budget is `eps' = eps / p*`,
/// which makes the stacked transforms `e^{±eps}`-bi-Lipschitz overall.
pub fn improve_contact<R: Real>(
    shifted: &ChainStage<R>,
    tail_tol: R,
) -> NormalformResult<ContactResult<R>> {
    let p_star = shifted.params.p_star;
    let eps_prime = shifted.params.epsilon / R::from_usize(p_star).unwrap();
    let k = shifted.dim();
    let cap = shifted.degree_cap();

    let mut stage = shifted.clone();
    let mut t1: Vec<JetMap<R>> = vec![JetMap::identity(k, cap); stage.len() + 1];
    let mut homological_residuals = Vec::new();
    let mut cancelled_degree_norms = Vec::new();

    for p in 2..=p_star {
        let solution = solve_homological(&stage, p, tail_tol)?;
        let worst_residual = solution
            .residuals
            .iter()
            .copied()
            .fold(R::zero(), R::max);
        homological_residuals.push((p, worst_residual));

        let outcome = kill_degree(&stage, &solution, eps_prime)?;
        cancelled_degree_norms.push((p, outcome.leftover));

        for (t, s_inv) in t1.iter_mut().zip(&outcome.s_inverses) {
            *t = s_inv.compose(t)?;
        }
        stage.maps = outcome.maps;
        stage.radii = outcome.radii;
    }

    Ok(ContactResult {
        stage,
        t1,
        homological_residuals,
        cancelled_degree_norms,
    })
}
