use nalgebra::DMatrix;

use super::*;
use crate::chain::{ExtensionPolicy, SlowSequence};
use crate::jets::{sampled_lipschitz, MultiIndex};
use crate::spectrum::{validate_constraints, LyapunovSpectrum};
use crate::synth;
use crate::util::cx;

const LOG2: f64 = core::f64::consts::LN_2;

fn jet1(cap: usize, coeffs: &[(u32, f64)]) -> JetMap<f64> {
    let mut j = JetMap::zero(1, 1, cap);
    for &(d, c) in coeffs {
        j.set_coefficient(0, MultiIndex::new(vec![d]), cx(c, 0.0)).unwrap();
    }
    j
}

#[test]
fn shift_with_zero_gamma_is_identity() {
    let chain = synth::koenigs_chain::<f64>(0.5, 0.1, -5, 10).unwrap();
    let shifted = shift_spectrum(&chain).unwrap();
    for (a, b) in shifted.stage.maps.iter().zip(chain.maps()) {
        assert_eq!(a, b);
    }
    assert_eq!(shifted.rho_gamma, chain.radii().values());
}

#[test]
fn shift_autonomous_coefficient_law() {
    // W(z) = a z + c z^2 shifts to e^g a z + c e^{g(1-n)} z^2
    let spec = LyapunovSpectrum::single(LOG2, 1).unwrap();
    let (gamma, epsilon) = crate::spectrum::suggest_parameters(&spec).unwrap();
    let params = validate_constraints(&spec, gamma, epsilon).unwrap();
    let w = jet1(3, &[(1, 0.5), (2, 0.1)]);
    let radii = SlowSequence::constant(-4, 9, 1e-2, epsilon).unwrap();
    let chain = crate::chain::ContractionChain::new(
        -4,
        vec![w; 8],
        radii,
        spec,
        params,
        ExtensionPolicy::Constant,
    )
    .unwrap();
    let shifted = shift_spectrum(&chain).unwrap();
    for (i, m) in shifted.stage.maps.iter().enumerate() {
        let n = -4 + i as i64;
        let lin = m.coefficient(0, &MultiIndex::new(vec![1]));
        let quad = m.coefficient(0, &MultiIndex::new(vec![2]));
        let lin_expect = 0.5 * gamma.exp();
        let quad_expect = 0.1 * (gamma * (1.0 - n as f64)).exp();
        assert!((lin.re - lin_expect).abs() < 1e-15);
        assert!((quad.re - quad_expect).abs() < 1e-13 * quad_expect.abs().max(1.0));
    }
    // Lip scaling at n = 0: ratios scale by exactly e^gamma
    let (_, hi0) = sampled_lipschitz(chain.maps().first().unwrap(), 1e-2, 200, 7).unwrap();
    let idx0 = (0 - (-4)) as usize;
    let (_, hi_g) = sampled_lipschitz(&shifted.stage.maps[idx0], 1e-2, 200, 7).unwrap();
    assert!((hi_g / hi0 - gamma.exp()).abs() < 1e-6);
}

#[test]
fn homological_zero_quadratic_gives_zero() {
    let spec = LyapunovSpectrum::single(LOG2, 2).unwrap();
    let chain = synth::linear_chain(&spec, -3, 6, 3).unwrap();
    let shifted = shift_spectrum(&chain).unwrap();
    let sol = solve_homological(&shifted.stage, 2, 1e-12).unwrap();
    assert!(sol.h_family.iter().all(|h| h.is_zero()));
    assert!(sol.residuals.iter().all(|r| *r == 0.0));
}

#[test]
fn homological_koenigs_coefficient() {
    // autonomous a = 0.5, c = 0.1, gamma = 0: H = c / (a - a^2) = 0.4
    let chain = synth::koenigs_chain::<f64>(0.5, 0.1, -6, 12).unwrap();
    let shifted = shift_spectrum(&chain).unwrap();
    let sol = solve_homological(&shifted.stage, 2, 1e-13).unwrap();
    for h in &sol.h_family {
        let c = h.coefficient(0, &MultiIndex::new(vec![2]));
        assert!((c.re - 0.4).abs() < 1e-12, "H coeff {c}");
        assert!(c.im.abs() < 1e-15);
    }
    for r in &sol.residuals {
        assert!(*r <= 1e-12 + sol.tail_bounds[0], "residual {r}");
    }
}

#[test]
fn homological_backward_branch_coefficient() {
    // shifted chain A^g = diag(e^{-l1g}, e^{-l2g}), Lambda = (log4, log2),
    // gamma = 0.05, G^{(2)} = (z_2^2, 0):
    // H = 1 / (e^{-l1g} - e^{-2 l2g}) ~ -74.2117
    let spec = synth::spectrum_log4_log2::<f64>();
    let gamma = 0.05;
    let params = validate_constraints(&spec, gamma, 0.001).unwrap();
    assert!(params.all_pass());
    let l1g = 2.0 * LOG2 - gamma;
    let l2g = LOG2 - gamma;
    let mut a = DMatrix::zeros(2, 2);
    a[(0, 0)] = cx::<f64>((-l1g).exp(), 0.0);
    a[(1, 1)] = cx::<f64>((-l2g).exp(), 0.0);
    let mut w = JetMap::from_linear(&a, 4);
    w.set_coefficient(0, MultiIndex::new(vec![0, 2]), cx(1.0, 0.0)).unwrap();
    let stage = ChainStage {
        first: -5,
        maps: vec![w; 10],
        radii: vec![1e-3; 11],
        policy: ExtensionPolicy::Constant,
        spectrum: spec,
        params,
        gamma,
    };
    let sol = solve_homological(&stage, 2, 1e-12).unwrap();
    let expected = 1.0 / ((-l1g).exp() - (-2.0 * l2g).exp());
    assert!((expected + 74.21175).abs() < 1e-3, "sanity: {expected}");
    for h in &sol.h_family {
        let c = h.coefficient(0, &MultiIndex::new(vec![0, 2]));
        assert!(
            (c.re - expected).abs() < 1e-6 * expected.abs(),
            "H = {c}, expected {expected}"
        );
    }
    for r in &sol.residuals {
        assert!(*r <= 1e-9, "identity residual {r}");
    }
}

#[test]
fn kill_degree_zero_solution_is_noop() {
    let chain = synth::koenigs_chain::<f64>(0.5, 0.1, 0, 5).unwrap();
    let shifted = shift_spectrum(&chain).unwrap();
    let sol = HomologicalSolution {
        degree: 2,
        h_family: vec![JetMap::zero(1, 1, chain.degree_cap()); 6],
        truncation_depth: 0,
        tail_bounds: vec![0.0; 6],
        residuals: vec![],
    };
    let out = kill_degree(&shifted.stage, &sol, 1e-3).unwrap();
    for (a, b) in out.maps.iter().zip(&shifted.stage.maps) {
        assert_eq!(a, b);
    }
    assert_eq!(out.radii, shifted.stage.radii);
}

#[test]
fn kill_degree_cancels_and_preserves_lower_degrees() {
    let chain = synth::koenigs_chain::<f64>(0.5, 0.1, -4, 8).unwrap();
    let shifted = shift_spectrum(&chain).unwrap();
    let sol = solve_homological(&shifted.stage, 2, 1e-13).unwrap();
    let out = kill_degree(&shifted.stage, &sol, 1e-3).unwrap();
    assert!(out.leftover <= 1e-12, "leftover quadratic {}", out.leftover);
    for (conj, orig) in out.maps.iter().zip(&shifted.stage.maps) {
        assert_eq!(conj.linear_part(), orig.linear_part());
    }
}

#[test]
fn improve_contact_on_linear_chain_is_identity() {
    let spec = LyapunovSpectrum::single(LOG2, 1).unwrap();
    let chain = synth::linear_chain(&spec, -2, 5, 3).unwrap();
    let shifted = shift_spectrum(&chain).unwrap();
    let contact = improve_contact(&shifted.stage, 1e-12).unwrap();
    for t in &contact.t1 {
        assert!(t.is_identity());
    }
    for (x, w) in contact.stage.maps.iter().zip(&shifted.stage.maps) {
        assert_eq!(x, w);
    }
}

#[test]
fn improve_contact_runs_expected_passes() {
    // (log4, log2): p* = 3, so exactly passes p = 2 and p = 3
    let spec = synth::spectrum_log4_log2::<f64>();
    let chain =
        synth::random_admissible_chain(&spec, -5, 10, &synth::RandomChainOptions::default())
            .unwrap();
    let shifted = shift_spectrum(&chain).unwrap();
    let contact = improve_contact(&shifted.stage, 1e-12).unwrap();
    assert_eq!(
        contact.homological_residuals.iter().map(|x| x.0).collect::<Vec<_>>(),
        vec![2, 3]
    );
    for p in 2..=chain.params().p_star {
        for x in &contact.stage.maps {
            assert!(x.degree_coeff_norm(p) <= 1e-10);
        }
    }
    // T^1 is e^{±eps}-bi-Lipschitz on the stage radii
    let eps = chain.params().epsilon;
    for (i, t) in contact.t1.iter().enumerate() {
        assert!(t.has_identity_linear_part());
        let (lo, hi) =
            sampled_lipschitz(t, contact.stage.radii[i], 300, 21 + i as u64).unwrap();
        assert!(lo >= (-eps).exp() * (1.0 - 1e-6) && hi <= eps.exp() * (1.0 + 1e-6));
    }
}

#[test]
fn tail_on_linear_chain_is_identity() {
    let spec = LyapunovSpectrum::single(LOG2, 1).unwrap();
    let chain = synth::linear_chain(&spec, 0, 4, 3).unwrap();
    let shifted = shift_spectrum(&chain).unwrap();
    let tail = linearize_tail(&shifted.stage, 1e-12, 1e-10).unwrap();
    for t in &tail.t2 {
        assert!(t.is_identity());
    }
}

#[test]
fn tail_cubic_coefficient_oracle() {
    // X(z) = l z + d z^3 with l = 0.5, d = 0.1, q = 2:
    // T^2 cubic coefficient = d / (l - l^3) = 0.266666...
    let lam = 0.5f64;
    let d = 0.1f64;
    let spec = LyapunovSpectrum::single(-lam.ln(), 1).unwrap();
    let eps = crate::spectrum::suggest_expert_epsilon(&spec).unwrap();
    let params = crate::spectrum::expert_zero_gamma_params(&spec, eps).unwrap();
    assert_eq!(params.q, 2);
    let x = jet1(3, &[(1, lam), (3, d)]);
    let stage = ChainStage {
        first: -3,
        maps: vec![x; 6],
        radii: vec![1e-2; 7],
        policy: ExtensionPolicy::Constant,
        spectrum: spec,
        params: params.clone(),
        gamma: 0.0,
    };
    let tail = linearize_tail(&stage, 1e-14, 1e-10).unwrap();
    let expected = d / (lam - lam.powi(3));
    for t in &tail.t2 {
        let c = t.coefficient(0, &MultiIndex::new(vec![3]));
        assert!(
            (c.re - expected).abs() < 1e-10,
            "cubic {c} vs {expected}"
        );
    }
    // measured convergence never beats the certified ratio by much;
    // this autonomous case is also per-step monotone
    for rate in &tail.envelope_ratios {
        assert!(*rate <= params.beta + 0.05, "rate {rate} vs beta {}", params.beta);
    }
    for ratios in &tail.ratio_history {
        for r in ratios.iter().skip(1) {
            assert!(*r <= params.beta + 0.05, "ratio {r} vs beta {}", params.beta);
        }
    }
}

#[test]
fn tail_rejects_unreached_contact_order() {
    let chain = synth::koenigs_chain::<f64>(0.5, 0.1, 0, 4).unwrap();
    let shifted = shift_spectrum(&chain).unwrap();
    let err = linearize_tail(&shifted.stage, 1e-12, 1e-10).unwrap_err();
    assert!(matches!(err, NormalformError::ContactOrder { degree: 2, .. }));
}

#[test]
fn normalize_linear_chain_is_exact() {
    let spec = LyapunovSpectrum::single(LOG2, 2).unwrap();
    let chain = synth::linear_chain(&spec, -3, 6, 3).unwrap();
    let result = normalize(&chain, &NormalizeOptions::default()).unwrap();
    for (i, phi) in result.phi.iter().enumerate() {
        let n = -3 + i as i64;
        let expect = (result.shift.gamma * n as f64).exp();
        let lin = phi.linear_part();
        for r in 0..2 {
            for c in 0..2 {
                let v = lin[(r, c)];
                if r == c {
                    assert_eq!(v.re, expect);
                    assert_eq!(v.im, 0.0);
                } else {
                    assert!(v.norm_sqr() == 0.0);
                }
            }
        }
        assert_eq!(phi.num_terms(), 2, "phi stays linear");
    }
    assert!(result.max_coeff_residual() <= 1e-15);
    assert!(result.pass());
}

#[test]
fn normalize_koenigs_matches_classical_conjugacy() {
    // phi o W = a phi forces phi = z + 0.4 z^2 + 0.1066.. z^3
    let chain = synth::koenigs_chain::<f64>(0.5, 0.1, -8, 16).unwrap();
    let result = normalize(&chain, &NormalizeOptions::default()).unwrap();
    for phi in &result.phi {
        let c2 = phi.coefficient(0, &MultiIndex::new(vec![2]));
        let c3 = phi.coefficient(0, &MultiIndex::new(vec![3]));
        assert!((c2.re - 0.4).abs() < 1e-12, "quadratic {c2}");
        assert!(c2.im.abs() < 1e-14);
        assert!((c3.re - 8.0 / 75.0).abs() < 1e-12, "cubic {c3}");
    }
    assert!(result.pass());
    assert!(result.max_coeff_residual() < 1e-13);

    // exact linear-part law: d_0 phi_n = e^{n gamma} Id (= Id here)
    for phi in &result.phi {
        assert!(phi.has_identity_linear_part());
    }

    let report = verify_diagram(&result, 200, 3).unwrap();
    assert!(report.max_residual <= 1e-10);
    assert!(report.containment_pass);
}

#[test]
fn normalize_random_two_dim_chains() {
    let spec = synth::spectrum_log4_log2::<f64>();
    for seed in 0..3u64 {
        let chain = synth::random_admissible_chain(
            &spec,
            -10,
            20,
            &synth::RandomChainOptions {
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        let result = normalize(&chain, &NormalizeOptions::default()).unwrap();
        assert!(result.max_coeff_residual() <= 1e-9, "coeff residual");
        assert!(result.max_sampled_residual() <= 1e-8, "sampled residual");
        assert!(result.diagnostics.sandwich_pass);
        assert!(result.diagnostics.containment_pass);
        let beta = chain.params().beta;
        for rate in &result.diagnostics.envelope_ratios {
            assert!(*rate <= beta + 0.05, "envelope {rate} vs beta {beta}");
        }
        // shifted linear law: d_0 phi_n = e^{n gamma} Id exactly
        let gamma = result.shift.gamma;
        for (i, phi) in result.phi.iter().enumerate() {
            let n = -10 + i as i64;
            let lin = phi.linear_part();
            let expect = (gamma * n as f64).exp();
            for r in 0..2 {
                assert_eq!(lin[(r, r)].re, expect);
            }
        }
    }
}

#[test]
fn resonant_chain_with_zero_gamma_refuses_deterministically() {
    let chain = synth::resonant_chain::<f64>(-5, 10, 1e-3).unwrap();
    let err = normalize(&chain, &NormalizeOptions::default()).unwrap_err();
    match &err {
        NormalformError::ResonantObstruction {
            p,
            block,
            profile,
            sigma,
            b,
        } => {
            assert_eq!(*p, 2);
            assert_eq!(*block, 0);
            assert_eq!(profile, &vec![0, 2]);
            assert!(sigma.abs() < 1e-12, "sigma {sigma}");
            assert!(*b > 0.0);
        }
        other => panic!("expected resonant obstruction, got {other:?}"),
    }
    assert_eq!(err.stage(), "solve_homological");
}

#[test]
fn shift_cancels_resonance() {
    // same resonant quadratic, but with a valid positive gamma: the whole
    // pipeline succeeds
    let spec = synth::spectrum_log4_log2::<f64>();
    let (gamma, epsilon) = crate::spectrum::suggest_parameters(&spec).unwrap();
    let params = validate_constraints(&spec, gamma, epsilon).unwrap();
    let resonant = synth::resonant_chain::<f64>(-5, 10, 1e-3).unwrap();
    let chain = crate::chain::ContractionChain::new(
        -5,
        resonant.maps().to_vec(),
        SlowSequence::constant(-5, 11, resonant.radii().min_value(), epsilon).unwrap(),
        spec,
        params,
        ExtensionPolicy::Constant,
    )
    .unwrap();
    let result = normalize(&chain, &NormalizeOptions::default()).unwrap();
    assert!(result.pass());
    assert!(result.max_coeff_residual() <= 1e-10);
}
