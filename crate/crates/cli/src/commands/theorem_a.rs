use num_complex::Complex;
use serde::Serialize;

use chainform::dynamics::{
    assemble_distortion, backward_orbit, convexity_defect, follow_branch, verify_distortion,
    AssembleOptions, BranchRule, ConvexityOutcome, DistortionRow, EndomorphismJson,
    OrbitOptions, ProjPoint,
};
use chainform::spectrum::SpectrumJson;
use chainform::util::{ball_point, polydisc_point, seeded_rng};

use crate::config::RunConfig;
use crate::output::{
    fail, write_csv, write_json, EXIT_DYNAMICS, EXIT_INPUT, EXIT_PASS, EXIT_PIPELINE,
};

#[derive(Serialize)]
struct TheoremAPayload {
    spectrum: SpectrumJson,
    gamma: f64,
    epsilon: f64,
    r_hat: f64,
    rho_hat: f64,
    h_hat: f64,
    n_hat: usize,
    chart_distortion: f64,
    inverse_radius_constant: f64,
    oseledec_mode: String,
    h_eps: f64,
    base_band: (f64, f64),
    base_band_ok: bool,
    rows: Vec<DistortionRow>,
    d_blocks_ok: bool,
    slow_r_ok: bool,
    slow_rho_ok: bool,
    slow_h_ok: bool,
    residual_tol: f64,
    convexity: Vec<ConvexityOutcome>,
    convexity_pass: bool,
    pass: bool,
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
    if f.dim() > 2 {
        return fail(EXIT_INPUT, "only k in {1, 2} is bundled for verification");
    }
    if f.nondegeneracy_margin(200, config.seed ^ 0x9e) < 1e-8 {
        return fail(EXIT_INPUT, "components appear to share a zero (degenerate map)");
    }

    // orbit seed point: explicit affine coordinates or a deterministic
    // generic point
    let x0 = match parse_orbit_point(config, f.dim()) {
        Ok(p) => p,
        Err(msg) => return fail(EXIT_INPUT, &msg),
    };
    let branch = match config.branch.as_str() {
        "nearest" => BranchRule::Nearest,
        "seeded" => BranchRule::Seeded,
        other => return fail(EXIT_INPUT, &format!("unknown branch rule '{other}'")),
    };

    let orbit = match backward_orbit(
        &f,
        &x0,
        config.window,
        &OrbitOptions {
            rng_seed: config.seed,
            branch,
            ..Default::default()
        },
    ) {
        Ok(o) => o,
        Err(e) => return fail(EXIT_DYNAMICS, &format!("orbit construction: {e}")),
    };

    let assemble_opts = AssembleOptions {
        gamma_epsilon: match (config.gamma, config.epsilon) {
            (Some(g), Some(e)) => Some((g, e)),
            _ => None,
        },
        rng_seed: config.seed,
        ..Default::default()
    };
    let data = match assemble_distortion(&f, &orbit, &assemble_opts) {
        Ok(d) => d,
        Err(e) => return fail(EXIT_PIPELINE, &format!("assembly: {e}")),
    };
    let report = match verify_distortion(&data, config.samples, config.seed ^ 0x51) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_PIPELINE, &format!("verification: {e}")),
    };

    // convexity defect at n = min(8, N), t in {0.25, 0.5, 1}
    let n_conv = data.orbit_len().min(8);
    let mut convexity = Vec::new();
    let mut convexity_pass = true;
    let mut rng = seeded_rng(config.seed ^ 0xc0);
    let chart0 = &data.cocycle.charts[0];
    for t in [0.25f64, 0.5, 1.0] {
        for _ in 0..config.convexity_pairs {
            let sample = |rng: &mut _| -> Result<ProjPoint<f64>, String> {
                let v: Vec<Complex<f64>> = ball_point(f.dim(), t * data.r_prime(), rng);
                chart0.point(&v).map_err(|e| e.to_string())
            };
            let (w_p, w_q) = match (sample(&mut rng), sample(&mut rng)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return fail(EXIT_DYNAMICS, "convexity sampling failed"),
            };
            let outcome = follow_branch(&data, &w_p, n_conv)
                .and_then(|p| follow_branch(&data, &w_q, n_conv).map(|q| (p, q)))
                .and_then(|(p, q)| convexity_defect(&data, n_conv, t, &p, &q, 128));
            match outcome {
                Ok(o) => {
                    convexity_pass &= o.pass;
                    convexity.push(o);
                }
                Err(e) => return fail(EXIT_DYNAMICS, &format!("convexity: {e}")),
            }
        }
    }

    let pass = report.pass && convexity_pass;
    let payload = TheoremAPayload {
        spectrum: data.spectrum.to_json(),
        gamma: data.gamma,
        epsilon: data.epsilon,
        r_hat: data.r_hat,
        rho_hat: data.rho_hat,
        h_hat: data.h_hat,
        n_hat: data.n_hat,
        chart_distortion: data.chart_distortion,
        inverse_radius_constant: orbit.radius_constant,
        oseledec_mode: format!("{:?}", data.oseledec.mode),
        h_eps: data.oseledec.h_eps,
        base_band: report.base_band,
        base_band_ok: report.base_band_ok,
        rows: report.rows.clone(),
        d_blocks_ok: report.d_blocks_ok,
        slow_r_ok: report.slow_r_ok,
        slow_rho_ok: report.slow_rho_ok,
        slow_h_ok: report.slow_h_ok,
        residual_tol: report.residual_tol,
        convexity,
        convexity_pass,
        pass,
    };

    let stem = config.stem();
    let rows: Vec<String> = payload
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                r.n, r.lip_low, r.lip_high, r.bound_low, r.bound_high, r.residual, r.pass
            )
        })
        .collect();
    if let Err(e) = write_csv(
        config,
        &format!("{stem}.theorem-a.csv"),
        "n,lip_low,lip_high,bound_low,bound_high,residual,pass",
        &rows,
    ) {
        return fail(EXIT_INPUT, &format!("write csv: {e}"));
    }
    if let Err(e) = write_json(config, &format!("{stem}.theorem-a.json"), &payload) {
        return fail(EXIT_INPUT, &format!("write json: {e}"));
    }

    if pass {
        println!(
            "theorem-a: pass ({} rows, residual tol {:.3e})",
            payload.rows.len(),
            payload.residual_tol
        );
        EXIT_PASS
    } else {
        fail(EXIT_PIPELINE, "verification rows failed (see report)")
    }
}

fn parse_orbit_point(config: &RunConfig, k: usize) -> Result<ProjPoint<f64>, String> {
    match &config.orbit_point {
        Some(s) => {
            let coords: Result<Vec<Complex<f64>>, String> = s
                .split(';')
                .map(|pair| {
                    let mut it = pair.split(',');
                    let re = it
                        .next()
                        .ok_or("missing re")?
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| e.to_string())?;
                    let im = it
                        .next()
                        .ok_or("missing im")?
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| e.to_string())?;
                    Ok(Complex::new(re, im))
                })
                .collect();
            let coords = coords?;
            if coords.len() != k {
                return Err(format!(
                    "orbit point has {} coordinates, the map needs {k}",
                    coords.len()
                ));
            }
            ProjPoint::from_affine(&coords).map_err(|e| e.to_string())
        }
        None => {
            let mut rng = seeded_rng(config.seed ^ 0x0b17);
            let coords: Vec<Complex<f64>> = polydisc_point(k, 1.2, &mut rng)
                .into_iter()
                .map(|z| z + Complex::new(0.35, -0.2))
                .collect();
            ProjPoint::from_affine(&coords).map_err(|e| e.to_string())
        }
    }
}
