use chainform::chain::{ChainJson, ContractionChain, SlowSequence};
use chainform::normalform::{normalize, NormalizeOptions};
use chainform::spectrum::{expert_zero_gamma_params, validate_constraints};

use crate::config::RunConfig;
use crate::output::{
    fail, write_csv, write_json, EXIT_INPUT, EXIT_PASS, EXIT_PIPELINE, EXIT_VALIDATION,
};

pub fn run(config: &RunConfig) -> i32 {
    let raw = match std::fs::read_to_string(&config.input) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_INPUT, &format!("cannot read input: {e}")),
    };
    let json: ChainJson = match serde_json::from_str(&raw) {
        Ok(j) => j,
        Err(e) => return fail(EXIT_INPUT, &format!("malformed chain JSON: {e}")),
    };
    let mut chain = match json.to_chain::<f64>() {
        Ok(c) => c,
        Err(e) => return fail(EXIT_VALIDATION, &format!("chain invalid: {e}")),
    };

    // gamma / epsilon overrides rebuild the admissibility constants
    if config.gamma.is_some() || config.epsilon.is_some() {
        let gamma = config.gamma.unwrap_or(chain.params().gamma);
        let epsilon = config.epsilon.unwrap_or(chain.params().epsilon);
        let params = if gamma == 0.0 {
            expert_zero_gamma_params(chain.spectrum(), epsilon)
        } else {
            validate_constraints(chain.spectrum(), gamma, epsilon)
        };
        let params = match params {
            Ok(p) => p,
            Err(e) => return fail(EXIT_VALIDATION, &format!("constraints: {e}")),
        };
        let radii = match SlowSequence::new(
            chain.first_index(),
            chain.radii().values().to_vec(),
            epsilon,
            chain.policy(),
        ) {
            Ok(r) => r,
            Err(e) => return fail(EXIT_VALIDATION, &format!("radii: {e}")),
        };
        chain = match ContractionChain::new(
            chain.first_index(),
            chain.maps().to_vec(),
            radii,
            chain.spectrum().clone(),
            params,
            chain.policy(),
        ) {
            Ok(c) => c,
            Err(e) => return fail(EXIT_VALIDATION, &format!("chain rebuild: {e}")),
        };
    }

    let report = chain.validate(64, config.seed);
    if !report.pass {
        return fail(
            EXIT_VALIDATION,
            "chain hypotheses fail validation (see per-index report)",
        );
    }

    let mut opts = NormalizeOptions::<f64> {
        samples_per_index: config.samples,
        rng_seed: config.seed,
        validate_input: false, // already validated above
        ..Default::default()
    };
    if let Some(t) = config.tol {
        opts.diagram_tol = t;
    }
    let result = match normalize(&chain, &opts) {
        Ok(r) => r,
        Err(e) => {
            return fail(
                EXIT_PIPELINE,
                &format!("pipeline failed at stage {}: {e}", e.stage()),
            )
        }
    };

    let stem = config.stem();
    if let Err(e) = write_json(config, &format!("{stem}.result.json"), result.to_json()) {
        return fail(EXIT_INPUT, &format!("write result: {e}"));
    }
    if let Err(e) = write_csv(
        config,
        &format!("{stem}.residuals.csv"),
        "index,residual,lip_min,lip_max,r_n",
        &result.csv_rows(),
    ) {
        return fail(EXIT_INPUT, &format!("write csv: {e}"));
    }

    if result.pass() {
        println!(
            "normalize: pass (max residual {:.3e}, gamma {:.6})",
            result.max_sampled_residual(),
            result.shift.gamma
        );
        EXIT_PASS
    } else {
        fail(
            EXIT_PIPELINE,
            &format!(
                "pipeline finished but residuals exceed tolerance (max {:.3e})",
                result.max_sampled_residual()
            ),
        )
    }
}
