use super::{ChainStage, NormalformError, NormalformResult};
use crate::jets::{coeff_sup_bound, JetMap};
use crate::Real;

/// Outcome of the tail-linearization stage.
#[derive(Debug)]
pub struct TailResult<R: Real> {
    /// `T^2_n`, tangent to the identity, one per transform index.
    pub t2: Vec<JetMap<R>>,
    /// Per transform index: successive increment ratios of the iteration.
    /// Individual ratios can spike after a near-cancelled step; the
    /// certified decay is the envelope below.
    pub ratio_history: Vec<Vec<R>>,
    /// Per transform index: the measured geometric decay rate
    /// `max_p (delta_p m / S)^{1/p}` with `S` the weighted size of the
    /// nonlinear parts; the certified bound is `delta_p <= (beta^p / m) S`,
    /// so this stays below `beta` up to measurement slack.
    pub envelope_ratios: Vec<R>,
    /// Per transform index: final increment when the iteration stopped.
    pub final_increments: Vec<R>,
}

/// Conjugates a chain that agrees with its linear part to order `q + 1`
/// down to that linear part: `T^2_n = lim_p (A^g_{p,n})^{-1} o X_{p,n}`.
///
/// The iterate is built by the recursion `Y_{p,n} = M_p o (X_{n+p} o ... o X_n)`
/// with `M_p` the accumulated inverse linear product; increments contract
/// with certified ratio `beta = (M e^{2 eps})^{q+1} / m < 1`. Convergence is
/// measured in the radius-weighted coefficient norm at the stage radii.
pub fn linearize_tail<R: Real>(
    stage: &ChainStage<R>,
    tol: R,
    coeff_zero_tol: R,
) -> NormalformResult<TailResult<R>> {
    let params = &stage.params;
    let q = params.q;
    let cap = stage.degree_cap();
    let k = stage.dim();

    // precondition: X_n = A_n^g + O(q+1)
    for map in &stage.maps {
        for p in 2..=q.min(cap) {
            let norm = map.degree_coeff_norm(p);
            if norm > coeff_zero_tol {
                return Err(NormalformError::ContactOrder {
                    degree: p,
                    norm: norm.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
    }
    if !params.flag_tail_contraction {
        return Err(NormalformError::Constraints(vec![
            "(M e^{2 eps})^{q+1} < m e^{-eps}",
        ]));
    }

    // scale constant S of the certified envelope: worst weighted norm of
    // the nonlinear parts over the window
    let nonlinear_scale = stage
        .maps
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let lin = JetMap::from_linear(&x.linear_part(), cap);
            x.sub(&lin)
                .map(|d| norm_at_radius(&d, stage.radii[i]))
                .unwrap_or(R::zero())
        })
        .fold(R::zero(), R::max);

    let count = stage.len() + 1;
    let mut t2 = Vec::with_capacity(count);
    let mut ratio_history = Vec::with_capacity(count);
    let mut envelope_ratios = Vec::with_capacity(count);
    let mut final_increments = Vec::with_capacity(count);

    for offset in 0..count {
        let n = stage.first + offset as i64;
        let r_n = stage.radii[offset.min(stage.radii.len() - 1)];

        let x_n = stage.map_at(n)?.clone();
        let mut m_acc = stage
            .linear_at(n)?
            .try_inverse()
            .ok_or(crate::jets::JetError::SingularLinearPart)?;
        let mut z_acc = x_n; // X_{p,n} accumulated by left composition
        let mut y_prev = JetMap::identity(k, cap);
        let mut y = z_acc.left_matrix(&m_acc)?;

        // iteration budget from the certified ratio; convergence that has
        // not happened well within it is numerical breakdown, while the
        // non-monotone bounces of sparse chains stay tolerated inside it
        let budget = {
            let spread = (nonlinear_scale / (params.m_lower * tol)).max(R::lit(core::f64::consts::E));
            let steps = spread.ln() / -params.beta.ln();
            3 * steps.ceil().to_usize().unwrap_or(100) + 30
        };

        let mut ratios = Vec::new();
        let mut increments = Vec::new();
        let mut prev_increment: Option<(R, R)> = None;
        let mut growing = 0usize;
        let mut p = 0usize;
        loop {
            let delta = y.sub(&y_prev)?;
            // the weighted norm drives the certified-ratio bookkeeping, the
            // plain coefficient norm guards coefficient-level accuracy
            let incr = norm_at_radius(&delta, r_n);
            let incr_coeff = delta.max_coeff_modulus();
            increments.push(incr);
            if let Some((prev_w, prev_c)) = prev_increment {
                if prev_w > R::zero() {
                    ratios.push(incr / prev_w);
                }
                if incr_coeff > prev_c {
                    growing += 1;
                    if growing >= 3 && p > budget {
                        return Err(NormalformError::TailBreakdown {
                            index: n,
                            iters: p,
                        });
                    }
                } else {
                    growing = 0;
                }
            }
            if incr < tol && incr_coeff < tol && p >= 1 {
                final_increments.push(incr);
                break;
            }
            prev_increment = Some((incr, incr_coeff));

            p += 1;
            if p > 500 {
                return Err(NormalformError::TailBreakdown { index: n, iters: p });
            }
            let next_idx = n + p as i64;
            let x_next = stage.map_at(next_idx)?;
            z_acc = x_next.compose(&z_acc)?;
            m_acc = &m_acc
                * &stage
                    .linear_at(next_idx)?
                    .try_inverse()
                    .ok_or(crate::jets::JetError::SingularLinearPart)?;
            y_prev = y;
            y = z_acc.left_matrix(&m_acc)?;
        }

        // d_0 T^2 = Id holds exactly by construction; remove the inversion
        // dust so the composed linear-part law stays exact
        t2.push(snap_linear_to_identity(&y)?);
        envelope_ratios.push(envelope_rate(&increments, params.m_lower, nonlinear_scale));
        ratio_history.push(ratios);
    }

    Ok(TailResult {
        t2,
        ratio_history,
        envelope_ratios,
        final_increments,
    })
}

/// Measured geometric decay rate of an increment sequence against the
/// certified envelope `delta_p <= (beta^p / m) S`.
fn envelope_rate<R: Real>(increments: &[R], m_lower: R, scale: R) -> R {
    if scale <= R::zero() {
        return R::zero();
    }
    let mut worst = R::zero();
    for (p, &d) in increments.iter().enumerate().skip(1) {
        if d <= R::zero() {
            continue;
        }
        let rate = (d * m_lower / scale).powf(R::one() / R::from_usize(p).unwrap());
        worst = worst.max(rate);
    }
    worst
}

/// Radius-weighted coefficient norm used to measure increments.
fn norm_at_radius<R: Real>(jet: &JetMap<R>, r: R) -> R {
    coeff_sup_bound(jet, r)
}

fn snap_linear_to_identity<R: Real>(jet: &JetMap<R>) -> super::NormalformResult<JetMap<R>> {
    let k = jet.dim_in();
    let mut out = jet.clone();
    for alpha in crate::jets::MultiIndex::of_degree(k, 1) {
        let on_diag = alpha
            .entries()
            .iter()
            .position(|&e| e == 1)
            .expect("order-1 index");
        for i in 0..k {
            let v = if i == on_diag {
                num_complex::Complex::new(R::one(), R::zero())
            } else {
                num_complex::Complex::new(R::zero(), R::zero())
            };
            out.set_coefficient(i, alpha.clone(), v)?;
        }
    }
    Ok(out)
}
