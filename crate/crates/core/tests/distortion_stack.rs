//! End-to-end runs of the distortion package on the bundled maps: the
//! squaring map of P^1 at a fixed point and along a circle orbit, and the
//! squaring map of P^2 along a random orbit.

use chainform::dynamics::{
    assemble_distortion, backward_orbit, convexity_defect, follow_branch, squaring_p1,
    squaring_p2, verify_distortion, AssembleOptions, BranchRule, OrbitOptions, OseledecMode,
    ProjPoint,
};
use chainform::util::{ball_point, cx, seeded_rng};

const LOG2: f64 = core::f64::consts::LN_2;

#[test]
fn squaring_fixed_point_full_stack() {
    let f = squaring_p1::<f64>();
    let one = ProjPoint::from_affine(&[cx(1.0, 0.0)]).unwrap();
    let orbit = backward_orbit(
        &f,
        &one,
        12,
        &OrbitOptions {
            branch: BranchRule::Nearest,
            ..Default::default()
        },
    )
    .unwrap();
    let data = assemble_distortion(&f, &orbit, &AssembleOptions::default()).unwrap();

    // the chain is the local inverse at the fixed point: linear part 1/2
    for w in data.chain.maps() {
        let a = w.linear_part()[(0, 0)];
        assert!((a.norm_sqr().sqrt() - 0.5).abs() < 1e-12);
    }
    assert_eq!(data.oseledec.mode, OseledecMode::ExactDiagonal);
    assert!((data.spectrum.largest() - LOG2).abs() < 1e-6);
    assert!(data.n_hat >= 1 && data.n_hat <= 2, "n_hat = {}", data.n_hat);
    assert!(data.norm.max_sampled_residual() <= 1e-9);

    let report = verify_distortion(&data, 150, 17).unwrap();
    assert!(report.base_band_ok, "base band {:?}", report.base_band);
    for row in &report.rows {
        assert!(row.pass, "row {row:?}");
    }
    assert!(report.pass);
}

#[test]
fn squaring_circle_orbit_full_stack() {
    let f = squaring_p1::<f64>();
    let x0 = ProjPoint::from_affine(&[cx(-0.2938926261462365, 0.9558072841960624)]).unwrap();
    let orbit = backward_orbit(&f, &x0, 12, &OrbitOptions::default()).unwrap();
    let data = assemble_distortion(&f, &orbit, &AssembleOptions::default()).unwrap();
    let report = verify_distortion(&data, 150, 23).unwrap();
    assert!(report.pass, "report {report:?}");

    // convexity defect at n = 8 over a few sampled pairs
    let mut rng = seeded_rng(5);
    let chart0 = &data.cocycle.charts[0];
    for t in [0.25, 0.5, 1.0] {
        for _ in 0..5 {
            let w_p = chart0
                .point(&ball_point(1, t * data.r_prime(), &mut rng))
                .unwrap();
            let w_q = chart0
                .point(&ball_point(1, t * data.r_prime(), &mut rng))
                .unwrap();
            let p = follow_branch(&data, &w_p, 8).unwrap();
            let q = follow_branch(&data, &w_q, 8).unwrap();
            let out = convexity_defect(&data, 8, t, &p, &q, 64).unwrap();
            assert!(out.pass, "{out:?}");
        }
    }
    // degenerate pair: zero-length path
    let w = chart0
        .point(&ball_point(1, 0.5 * data.r_prime(), &mut rng))
        .unwrap();
    let p = follow_branch(&data, &w, 8).unwrap();
    let out = convexity_defect(&data, 8, 0.5, &p, &p, 16).unwrap();
    assert!(out.pass && out.path_length <= 1e-15);
}

#[test]
fn squares_p2_full_stack() {
    let f = squaring_p2::<f64>();
    let x0 = ProjPoint::new(vec![cx(1.0, 0.0), cx(1.3, 0.4), cx(0.8, -0.5)]).unwrap();
    let orbit = backward_orbit(&f, &x0, 12, &OrbitOptions::default()).unwrap();
    let data = assemble_distortion(&f, &orbit, &AssembleOptions::default()).unwrap();
    // both exponents merge into one multiplicity-2 block near log 2
    assert_eq!(data.spectrum.levels(), 1);
    assert_eq!(data.spectrum.multiplicities(), &[2]);
    assert!((data.spectrum.largest() - LOG2).abs() < 0.02);

    let report = verify_distortion(&data, 100, 29).unwrap();
    assert!(report.pass, "report {report:?}");
    for row in &report.rows {
        assert!(row.residual <= report.residual_tol);
    }
}
