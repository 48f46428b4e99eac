use num_complex::Complex;

use super::{ChainStage, NormalformError, NormalformResult};
use crate::chain::ExtensionPolicy;
use crate::jets::{JetMap, LinearMap, MultiIndex};
use crate::util::slow_envelope;
use crate::Real;

/// Solution of the degree-`p` homological equation
/// `G_n^{(p)} + H_{n+1} o A_n^g - A_n^g o H_n = 0`.
#[derive(Clone, Debug)]
pub struct HomologicalSolution<R: Real> {
    pub degree: usize,
    /// `H_n` for `n = first ..= first + len` (one per transform index).
    pub h_family: Vec<JetMap<R>>,
    /// Largest series depth actually used.
    pub truncation_depth: usize,
    /// Certified geometric tail bound per transform index.
    pub tail_bounds: Vec<R>,
    /// Residual of the identity per map index (both `n`, `n+1` in window).
    pub residuals: Vec<R>,
}

/// Splits the degree-`p` part of a map into `(block, profile)` slices.
///
/// Right-composition with a block-diagonal matrix preserves the block
/// degree profile and left-composition preserves the output block, so each
/// slice evolves independently under the series below and the sign of
/// `sigma = beta . Lambda^g - Lambda_j^g` picks the convergent branch.
fn slice_degree_p<R: Real>(
    map: &JetMap<R>,
    p: usize,
    block: usize,
    profile: &[u32],
    block_ranges: &[std::ops::Range<usize>],
    profile_of: &dyn Fn(&MultiIndex) -> Vec<u32>,
) -> JetMap<R> {
    let mut out = JetMap::zero(map.dim_in(), map.dim_out(), map.degree_cap());
    let range = &block_ranges[block];
    for (i, alpha, c) in map.terms() {
        if alpha.order() as usize != p || !range.contains(&i) {
            continue;
        }
        if profile_of(alpha) == profile {
            out.set_coefficient(i, alpha.clone(), c).expect("in range");
        }
    }
    out
}

/// Solves the homological equation for the degree-`p` part of the stage
/// chain by certified series averaging.
///
/// Per `(output block, degree profile)` slice, the branch is chosen by the
/// sign of `sigma`: `sigma > b` sums forward (indices `n + r`), `sigma < -b`
/// sums backward (indices `n - r - 1`); `|sigma| <= b` is a resonant
/// obstruction and refuses. The series is truncated at the depth where the
/// certified per-term bound `e^{-r b} e^{r ([L1g/Llg]+3) eps} |a|` drops
/// below `tail_tol`.
pub fn solve_homological<R: Real>(
    stage: &ChainStage<R>,
    p: usize,
    tail_tol: R,
) -> NormalformResult<HomologicalSolution<R>> {
    let params = &stage.params;
    let spectrum = &stage.spectrum;
    let k = spectrum.dim();
    let cap = stage.degree_cap();
    let len = stage.len();
    let first = stage.first;

    let shifted = spectrum
        .shifted(stage.gamma)
        .expect("gamma below smallest exponent")
        .as_spectrum();
    let block_ranges = spectrum.block_ranges();
    let b = params.b;
    let eps = params.epsilon;
    // decay rate of the certified per-term bound; positive by admissibility
    let entire = (shifted.largest() / shifted.smallest()).entire();
    let rate = b - eps * R::from_i64(entire + 3).unwrap();
    let depth_cap = {
        let per_b = (R::one() / tail_tol).ln() / b;
        (R::lit(10.0) * per_b.ceil()).to_usize().unwrap_or(usize::MAX)
    };

    // cached linear parts and inverses over the reachable index range
    let mats = MatCache::new(stage)?;

    let mut h_family: Vec<JetMap<R>> =
        vec![JetMap::zero(k, k, cap); len + 1];
    let mut tail_bounds = vec![R::zero(); len + 1];
    let mut max_depth = 0usize;

    let profile_of = |alpha: &MultiIndex| spectrum.block_profile(alpha);

    for (j, _) in block_ranges.iter().enumerate() {
        for profile in profiles_of_degree(spectrum.levels(), p as u32) {
            // sigma = sum_b beta_b Lambda_b^g - Lambda_j^g
            let sigma = profile
                .iter()
                .zip(shifted.exponents())
                .fold(R::zero(), |acc, (&m, &l)| acc + R::from_u32(m).unwrap() * l)
                - shifted.exponents()[j];

            // slice norms over the window; skip absent slices
            let slices: Vec<JetMap<R>> = (0..len)
                .map(|i| {
                    slice_degree_p(&stage.maps[i], p, j, &profile, &block_ranges, &profile_of)
                })
                .collect();
            let a_sup = slices
                .iter()
                .map(|s| s.max_coeff_modulus())
                .fold(R::zero(), R::max);
            if a_sup.is_zero() {
                continue;
            }

            if sigma.abs() <= b {
                return Err(NormalformError::ResonantObstruction {
                    p,
                    block: j,
                    profile: profile.clone(),
                    sigma: sigma.abs().to_f64().unwrap_or(f64::NAN),
                    b: b.to_f64().unwrap_or(f64::NAN),
                });
            }

            // depth from the certified geometric tail: the summed tail
            // (not just the last term) must fall below tail_tol
            let depth = if rate > R::zero() {
                let gap = R::one() - (-rate).exp();
                ((a_sup / (tail_tol * gap)).max(R::one()).ln() / rate)
                    .ceil()
                    .to_usize()
                    .unwrap_or(usize::MAX)
            } else {
                usize::MAX
            };
            if depth > depth_cap {
                return Err(NormalformError::TailDepthExceeded {
                    needed: depth,
                    cap: depth_cap,
                });
            }
            max_depth = max_depth.max(depth);
            let tail_bound = {
                let r = R::from_usize(depth + 1).unwrap();
                a_sup * (-r * rate).exp() / (R::one() - (-rate).exp())
            };

            let slice_at = |n: i64| -> NormalformResult<JetMap<R>> {
                let idx = stage.policy.resolve(n, first, len)?;
                Ok(slices[idx].clone())
            };

            for (offset, h) in h_family.iter_mut().enumerate() {
                let n = first + offset as i64;
                let sum = if sigma > b {
                    forward_series(&mats, &slice_at, n, depth, j, &profile, &block_ranges, k, cap)?
                } else {
                    backward_series(&mats, &slice_at, n, depth, j, &profile, &block_ranges, k, cap)?
                };
                *h = h.add(&sum)?;
                tail_bounds[offset] = tail_bounds[offset].max(tail_bound);
            }
        }
    }

    // residual of the identity where both n and n+1 live in the window;
    // the stage linear parts are already the shifted A_n^g
    let mut residuals = Vec::with_capacity(len);
    for i in 0..len {
        let n = first + i as i64;
        let a_g = mats.a_at(n)?;
        let g_p = stage.maps[i].homogeneous_part(p)?;
        let lhs = h_family[i + 1].compose(&JetMap::from_linear(&a_g, cap))?;
        let rhs = h_family[i].left_matrix(&a_g)?;
        let total = g_p.add(&lhs)?.sub(&rhs)?;
        residuals.push(total.max_coeff_modulus());
    }

    Ok(HomologicalSolution {
        degree: p,
        h_family,
        truncation_depth: max_depth,
        tail_bounds,
        residuals,
    })
}

/// All block-degree profiles `beta` with `|beta| = p` over `l` blocks.
fn profiles_of_degree(l: usize, p: u32) -> Vec<Vec<u32>> {
    MultiIndex::of_degree(l, p)
        .into_iter()
        .map(|m| m.entries().to_vec())
        .collect()
}

/// Block-diagonal matrix product kept at unit scale per block, the true
/// magnitudes carried as per-block logs. The raw factors grow or decay like
/// `e^{±r Lambda_j}`, which over/underflows binary64 long before the
/// certified series depth; only the combined term magnitude `e^{-r |sigma|}`
/// is moderate, and it is reconstructed per `(block, profile)` slice.
struct ScaledProduct<R: Real> {
    mat: LinearMap<R>,
    logs: Vec<R>,
    ranges: Vec<std::ops::Range<usize>>,
}

impl<R: Real> ScaledProduct<R> {
    fn identity(k: usize, ranges: &[std::ops::Range<usize>]) -> Self {
        ScaledProduct {
            mat: LinearMap::identity(k, k),
            logs: vec![R::zero(); ranges.len()],
            ranges: ranges.to_vec(),
        }
    }

    fn mul_right(&mut self, m: &LinearMap<R>) {
        self.mat = &self.mat * m;
        self.renorm();
    }

    fn mul_left(&mut self, m: &LinearMap<R>) {
        self.mat = m * &self.mat;
        self.renorm();
    }

    fn renorm(&mut self) {
        for (b, range) in self.ranges.iter().enumerate() {
            let mut norm = R::zero();
            for r in range.clone() {
                for c in range.clone() {
                    norm = norm.max(self.mat[(r, c)].norm_sqr().sqrt());
                }
            }
            if norm > R::zero() {
                let inv = Complex::new(R::one() / norm, R::zero());
                for r in range.clone() {
                    for c in range.clone() {
                        self.mat[(r, c)] *= inv;
                    }
                }
                self.logs[b] = self.logs[b] + norm.ln();
            }
        }
    }
}

/// One series term `left o G o right` with the scale reattached. The slice
/// lives in output block `j` with degree profile `beta`, so
/// right-composition contributes `sum_b beta_b log_b` and left-composition
/// contributes `log_j`.
fn scaled_term<R: Real>(
    g: &JetMap<R>,
    left: &ScaledProduct<R>,
    right: &ScaledProduct<R>,
    out_block: usize,
    profile: &[u32],
    cap: usize,
) -> NormalformResult<JetMap<R>> {
    let log_scale = profile
        .iter()
        .zip(&right.logs)
        .fold(left.logs[out_block], |acc, (&m, &l)| {
            acc + R::from_u32(m).unwrap() * l
        });
    let scale = log_scale.exp();
    if scale == R::zero() || !scale.is_finite() {
        // a vanished scale means the term is far below any tolerance
        return Ok(JetMap::zero(g.dim_in(), g.dim_out(), cap));
    }
    let term = g
        .compose(&JetMap::from_linear(&right.mat, cap))?
        .left_matrix(&left.mat)?;
    Ok(term.scale(Complex::new(scale, R::zero())))
}

/// Forward branch: `H_n = sum_{r>=0} (A_n^{-1}..A_{n+r}^{-1}) o G_{n+r} o (A_{n+r-1}..A_n)`.
fn forward_series<R: Real>(
    mats: &MatCache<R>,
    slice_at: &dyn Fn(i64) -> NormalformResult<JetMap<R>>,
    n: i64,
    depth: usize,
    out_block: usize,
    profile: &[u32],
    ranges: &[std::ops::Range<usize>],
    k: usize,
    cap: usize,
) -> NormalformResult<JetMap<R>> {
    let mut left = ScaledProduct::identity(k, ranges);
    left.mul_right(&mats.a_inv_at(n)?);
    let mut right = ScaledProduct::identity(k, ranges);
    let mut acc = JetMap::zero(k, k, cap);
    for r in 0..=depth {
        if r > 0 {
            left.mul_right(&mats.a_inv_at(n + r as i64)?);
            right.mul_left(&mats.a_at(n + r as i64 - 1)?);
        }
        let g = slice_at(n + r as i64)?;
        if g.is_zero() {
            continue;
        }
        acc = acc.add(&scaled_term(&g, &left, &right, out_block, profile, cap)?)?;
    }
    Ok(acc)
}

/// Backward branch:
/// `H_n = -sum_{r>=0} (A_{n-1}..A_{n-r}) o G_{n-r-1} o (A_{n-r-1}^{-1}..A_{n-1}^{-1})`.
///
/// The inverse string applies `A_{n-1}^{-1}` first, walking the fiber back
/// to index `n-r-1`; the telescoping of the identity fixes these offsets.
fn backward_series<R: Real>(
    mats: &MatCache<R>,
    slice_at: &dyn Fn(i64) -> NormalformResult<JetMap<R>>,
    n: i64,
    depth: usize,
    out_block: usize,
    profile: &[u32],
    ranges: &[std::ops::Range<usize>],
    k: usize,
    cap: usize,
) -> NormalformResult<JetMap<R>> {
    let mut left = ScaledProduct::identity(k, ranges);
    let mut right = ScaledProduct::identity(k, ranges);
    right.mul_right(&mats.a_inv_at(n - 1)?);
    let mut acc = JetMap::zero(k, k, cap);
    for r in 0..=depth {
        if r > 0 {
            left.mul_right(&mats.a_at(n - r as i64)?);
            right.mul_left(&mats.a_inv_at(n - r as i64 - 1)?);
        }
        let g = slice_at(n - r as i64 - 1)?;
        if g.is_zero() {
            continue;
        }
        acc = acc.sub(&scaled_term(&g, &left, &right, out_block, profile, cap)?)?;
    }
    Ok(acc)
}


/// Shifted linear parts and their inverses, resolved through the extension
/// policy and cached per in-window offset.
struct MatCache<R: Real> {
    first: i64,
    len: usize,
    policy: ExtensionPolicy,
    a: Vec<LinearMap<R>>,
    a_inv: Vec<LinearMap<R>>,
}

impl<R: Real> MatCache<R> {
    fn new(stage: &ChainStage<R>) -> NormalformResult<Self> {
        let mut a = Vec::with_capacity(stage.len());
        let mut a_inv = Vec::with_capacity(stage.len());
        for m in &stage.maps {
            // stage maps are already shifted, so these are the A_n^g
            let mat = m.linear_part();
            let inv = mat
                .clone()
                .try_inverse()
                .ok_or(crate::jets::JetError::SingularLinearPart)?;
            a.push(mat);
            a_inv.push(inv);
        }
        Ok(MatCache {
            first: stage.first,
            len: stage.len(),
            policy: stage.policy,
            a,
            a_inv,
        })
    }

    fn a_at(&self, n: i64) -> NormalformResult<LinearMap<R>> {
        let idx = self.policy.resolve(n, self.first, self.len)?;
        Ok(self.a[idx].clone())
    }

    fn a_inv_at(&self, n: i64) -> NormalformResult<LinearMap<R>> {
        let idx = self.policy.resolve(n, self.first, self.len)?;
        Ok(self.a_inv[idx].clone())
    }
}

/// Outcome of one degree-cancellation pass.
pub struct KillOutcome<R: Real> {
    /// Conjugated chain with the degree-`p` part removed.
    pub maps: Vec<JetMap<R>>,
    /// `S_n^{(p)} = Id - H_n`, the conjugating family.
    pub s_family: Vec<JetMap<R>>,
    /// Inverses `(S_n^{(p)})^{-1} = Id + H_n + O(...)`, the downward arrows.
    pub s_inverses: Vec<JetMap<R>>,
    /// New radii on which the conjugation is `e^{±eps'}`-bi-Lipschitz and
    /// the new chain self-maps the inflated discs.
    pub radii: Vec<R>,
    /// Largest degree-`p` coefficient left after cancellation.
    pub leftover: R,
}

/// Conjugates the stage chain by `S_n = Id - H_n`, removing its degree-`p`
/// part: the new maps are `(S_{n+1})^{-1} o G_n o S_n`. Degrees below `p`
/// are unchanged exactly.
pub fn kill_degree<R: Real>(
    stage: &ChainStage<R>,
    solution: &HomologicalSolution<R>,
    eps_prime: R,
) -> NormalformResult<KillOutcome<R>> {
    let cap = stage.degree_cap();
    let k = stage.dim();
    let len = stage.len();
    let id = JetMap::identity(k, cap);

    let s_family: Vec<JetMap<R>> = solution
        .h_family
        .iter()
        .map(|h| id.sub(h))
        .collect::<Result<_, _>>()?;
    let s_inverses: Vec<JetMap<R>> = s_family
        .iter()
        .map(|s| s.formal_inverse())
        .collect::<Result<_, _>>()?;

    let mut maps = Vec::with_capacity(len);
    let mut leftover = R::zero();
    for i in 0..len {
        let conj = s_inverses[i + 1]
            .compose(&stage.maps[i])?
            .compose(&s_family[i])?;
        leftover = leftover.max(conj.degree_coeff_norm(solution.degree));
        maps.push(conj);
    }

    // radii: e^{±eps'} corridors for S and S^{-1}, then shrink until the
    // conjugated chain self-maps the e^{eps}-inflated polydiscs
    let eps = stage.params.epsilon;
    let corridor = R::one() - (-eps_prime).exp();
    let caps: Vec<R> = (0..=len)
        .map(|i| {
            let r_in = stage.radii[i];
            let rs = crate::jets::radius_for_nonlinear_lip(&s_family[i], corridor, r_in);
            let ri = crate::jets::radius_for_nonlinear_lip(&s_inverses[i], corridor, r_in);
            rs.min(ri).min(r_in)
        })
        .collect();
    let mut radii = slow_envelope(&caps, eps);
    let inflate = eps.exp();
    let mut tries = 0usize;
    while !super::stage_self_map_ok(&maps, &radii, inflate) {
        for v in &mut radii {
            *v = *v * R::lit(0.8);
        }
        tries += 1;
        if tries > 400 {
            return Err(NormalformError::Chain(
                crate::chain::ChainError::SelfMapSearch(tries),
            ));
        }
    }

    Ok(KillOutcome {
        maps,
        s_family,
        s_inverses,
        radii,
        leftover,
    })
}
