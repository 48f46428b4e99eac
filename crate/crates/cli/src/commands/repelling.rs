use num_complex::Complex;
use serde::Serialize;

use chainform::consts;
use chainform::dynamics::{
    birkhoff_log_jacobian, critical_test, sample_equilibrium, EndomorphismJson, ProjPoint,
};

use crate::config::RunConfig;
use crate::output::{fail, write_csv, write_json, EXIT_DYNAMICS, EXIT_INPUT, EXIT_PASS};
use crate::roots::{aberth_roots, coded_periodic_points, companion_roots, Poly};

type C64 = Complex<f64>;

/// One enumerated periodic point.
#[derive(Clone, Serialize)]
pub struct PeriodicPointRecord {
    pub period: usize,
    pub point: (f64, f64),
    /// Multiplier of `f^n` at the point (modulus of the 1-D spectrum).
    pub multiplier_modulus: f64,
    pub repelling: bool,
    /// One-step `log |det df|` at the point (chart-expressed); absent for
    /// non-repelling points, whose Jacobian may vanish.
    pub log_jacobian: Option<f64>,
}

#[derive(Serialize)]
struct RepellingRow {
    n: usize,
    route: &'static str,
    total_roots: usize,
    expected_roots: usize,
    repelling_count: usize,
    s_n: f64,
    lambda_hat: f64,
    gap: f64,
    reliable: bool,
}

#[derive(Serialize)]
struct RepellingPayload {
    lambda_hat: f64,
    birkhoff_samples: usize,
    birkhoff_depth: usize,
    rows: Vec<RepellingRow>,
    /// Full records for the small periods.
    records: Vec<PeriodicPointRecord>,
    /// Fixed points of `f^n` for all periods dividing `n` are included in
    /// the sums, matching the `d^{kn}` normalization.
    period_convention: &'static str,
}

pub fn run(config: &RunConfig) -> i32 {
    let raw = match std::fs::read_to_string(&config.input) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_INPUT, &format!("cannot read input: {e}")),
    };
    let json: EndomorphismJson = match serde_json::from_str(&raw) {
        Ok(j) => j,
        Err(e) => return fail(EXIT_INPUT, &format!("malformed endomorphism JSON: {e}")),
    };
    let f = match json.to_map::<f64>() {
        Ok(f) => f,
        Err(e) => return fail(EXIT_INPUT, &format!("invalid endomorphism: {e}")),
    };
    if f.dim() != 1 {
        return fail(
            EXIT_INPUT,
            "the repelling-cycle experiment enumerates periodic points for k = 1 only",
        );
    }
    let n_max = config.window.min(12).max(1);
    let d = f.degree();

    // affine polynomial form: requires the denominator component to be t^d
    let Some(poly) = affine_polynomial(&json) else {
        return fail(
            EXIT_INPUT,
            "affine form is not polynomial (denominator must be t^d)",
        );
    };

    // independent Birkhoff estimate of the exponent
    let depth = 30;
    let count = 1500;
    let seed_pt = match ProjPoint::from_affine(&[C64::new(0.437, 0.391)]) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_DYNAMICS, &format!("seed point: {e}")),
    };
    let samples = match sample_equilibrium(&f, &seed_pt, depth, count, config.seed) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_DYNAMICS, &format!("equilibrium sampling: {e}")),
    };
    let lambda_hat = match birkhoff_log_jacobian(&f, &samples) {
        Ok(l) => l,
        Err(e) => return fail(EXIT_DYNAMICS, &format!("Birkhoff average: {e}")),
    };

    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut csv_rows = Vec::new();
    for n in 1..=n_max {
        let expected = d.pow(n as u32);
        let (roots, route, mut reliable) = find_fixed_points(&poly, d, n);
        if roots.is_empty() {
            return fail(EXIT_DYNAMICS, &format!("no roots found at period {n}"));
        }
        // classify and sum over the repelling set
        let floor = 1.0 + consts::REPELLING_FLOOR;
        let mut s_sum = 0.0;
        let mut repelling_count = 0usize;
        for p in &roots {
            let Some(mult) = multiplier_modulus(&poly, *p, n) else {
                reliable = false;
                continue;
            };
            let repelling = mult > floor;
            let mut log_jac = None;
            if repelling {
                match one_step_log_jacobian(&f, *p) {
                    Some(lj) => {
                        repelling_count += 1;
                        s_sum += lj;
                        log_jac = Some(lj);
                    }
                    None => reliable = false,
                }
            }
            if expected <= 256 {
                records.push(PeriodicPointRecord {
                    period: n,
                    point: (p.re, p.im),
                    multiplier_modulus: mult,
                    repelling,
                    log_jacobian: log_jac,
                });
            }
        }
        let s_n = s_sum / expected as f64;
        let gap = (s_n - lambda_hat).abs();
        // count sanity against d^{kn} (root routes only: coding cannot see
        // multiplicity)
        if route != "coding" && roots.len() != expected {
            reliable = false;
        }
        rows.push(RepellingRow {
            n,
            route,
            total_roots: roots.len(),
            expected_roots: expected,
            repelling_count,
            s_n,
            lambda_hat,
            gap,
            reliable,
        });
        csv_rows.push(format!(
            "{},{},{:.17e},{:.17e},{:.17e}",
            n, repelling_count, s_n, lambda_hat, gap
        ));
    }

    let payload = RepellingPayload {
        lambda_hat,
        birkhoff_samples: count,
        birkhoff_depth: depth,
        rows,
        records,
        period_convention:
            "all repelling fixed points of f^n, including periods dividing n",
    };
    let stem = config.stem();
    if let Err(e) = write_csv(
        config,
        &format!("{stem}.repelling.csv"),
        "n,count,S_n,lambda_hat,gap",
        &csv_rows,
    ) {
        return fail(EXIT_INPUT, &format!("write csv: {e}"));
    }
    if let Err(e) = write_json(config, &format!("{stem}.repelling.json"), &payload) {
        return fail(EXIT_INPUT, &format!("write json: {e}"));
    }
    println!("repelling: {} rows, lambda_hat = {lambda_hat:.6}", n_max);
    EXIT_PASS
}

/// Extracts `p(z) = P(z, 1)` when the second component is `t^d`.
fn affine_polynomial(json: &EndomorphismJson) -> Option<Poly> {
    let d = json.d;
    let denom = &json.components[1];
    if denom.len() != 1 || denom[0].alpha != vec![0, d as u32] {
        return None;
    }
    let scale = C64::new(denom[0].re, denom[0].im);
    if scale.norm() == 0.0 {
        return None;
    }
    let mut coeffs = vec![C64::new(0.0, 0.0); d + 1];
    for m in &json.components[0] {
        // monomial z^a t^b with a + b = d contributes to degree a
        let a = m.alpha[0] as usize;
        coeffs[a] += C64::new(m.re, m.im) / scale;
    }
    Some(Poly(coeffs))
}

/// Roots of `f^n(z) = z`: companion matrix at small degree, Aberth when the
/// composed coefficients stay tame, inverse-branch coding beyond.
fn find_fixed_points(poly: &Poly, d: usize, n: usize) -> (Vec<C64>, &'static str, bool) {
    let expected = d.pow(n as u32);
    if expected <= 4096 {
        // coefficient routes, while the composed coefficients stay tame
        // enough for accurate root extraction
        let mut iter = poly.clone();
        let mut overflow = false;
        for _ in 1..n {
            iter = poly.compose(&iter);
            if !iter.max_coeff().is_finite() || iter.max_coeff() > 1e4 {
                overflow = true;
                break;
            }
        }
        if !overflow {
            let mut fixed = iter.clone();
            if fixed.0.len() < 2 {
                fixed.0.resize(2, C64::new(0.0, 0.0));
            }
            fixed.0[1] -= C64::new(1.0, 0.0);
            if expected <= 128 {
                if let Some(r) = companion_roots(&fixed) {
                    return (r, "companion", true);
                }
            }
            if let Some(r) = aberth_roots(&fixed, 400) {
                return (r, "aberth", true);
            }
        }
    }
    let r = coded_periodic_points(poly, d, n);
    (r, "coding", true)
}

/// Multiplier modulus of `f^n` at `p` via the chain rule; `None` when the
/// orbit escapes (a spurious root).
fn multiplier_modulus(poly: &Poly, p: C64, n: usize) -> Option<f64> {
    let dp = poly.derivative();
    let mut mult = C64::new(1.0, 0.0);
    let mut z = p;
    for _ in 0..n {
        mult *= dp.eval(z);
        z = poly.eval(z);
        if !mult.norm().is_finite() || z.norm() > 1e8 {
            return None;
        }
    }
    Some(mult.norm())
}

/// One-step chart-expressed `log |det df|`.
fn one_step_log_jacobian(f: &chainform::Endomorphism64, p: C64) -> Option<f64> {
    let point = ProjPoint::from_affine(&[p]).ok()?;
    let t = critical_test(f, &point).ok()?;
    (t.jacobian_modulus > 0.0).then(|| t.jacobian_modulus.ln())
}
