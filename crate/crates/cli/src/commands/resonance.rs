use serde::Serialize;

use chainform::spectrum::{
    all_resonances, gap_constant, shifted_resonance_check, suggest_parameters,
    validate_constraints, ConstraintParams, ShiftReport, SpectrumJson,
};

use crate::config::RunConfig;
use crate::output::{fail, write_json, EXIT_INPUT, EXIT_PASS};

#[derive(Serialize)]
struct ResonancePayload {
    spectrum: SpectrumJson,
    /// Resonant indices per block, degree range included.
    resonant_indices: Vec<Vec<Vec<u32>>>,
    degree_range: (u32, u32),
    gap_constant: f64,
    suggested_gamma: f64,
    suggested_epsilon: f64,
    params: ConstraintParams<f64>,
    shift_check: ShiftReport,
}

pub fn run(config: &RunConfig) -> i32 {
    let raw = match std::fs::read_to_string(&config.input) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_INPUT, &format!("cannot read input: {e}")),
    };
    let json: SpectrumJson = match serde_json::from_str(&raw) {
        Ok(j) => j,
        Err(e) => return fail(EXIT_INPUT, &format!("malformed spectrum JSON: {e}")),
    };
    let spectrum = match json.to_spectrum::<f64>() {
        Ok(s) => s,
        Err(e) => return fail(EXIT_INPUT, &format!("invalid spectrum: {e}")),
    };

    let resonances = all_resonances(&spectrum);
    let a = match gap_constant(&spectrum) {
        Ok(a) => a,
        Err(e) => return fail(EXIT_INPUT, &format!("gap constant: {e}")),
    };
    let (gamma, epsilon) = match (config.gamma, config.epsilon) {
        (Some(g), Some(e)) => (g, e),
        _ => match suggest_parameters(&spectrum) {
            Ok(ge) => (
                config.gamma.unwrap_or(ge.0),
                config.epsilon.unwrap_or(ge.1),
            ),
            Err(e) => return fail(EXIT_INPUT, &format!("parameter search: {e}")),
        },
    };
    let params = match validate_constraints(&spectrum, gamma, epsilon) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_INPUT, &format!("constraints: {e}")),
    };
    let shift_check = shifted_resonance_check(&spectrum, &params);

    let payload = ResonancePayload {
        spectrum: spectrum.to_json(),
        resonant_indices: resonances
            .per_block
            .iter()
            .map(|set| set.iter().map(|a| a.entries().to_vec()).collect())
            .collect(),
        degree_range: resonances.degree_range,
        gap_constant: a,
        suggested_gamma: gamma,
        suggested_epsilon: epsilon,
        params,
        shift_check,
    };
    // report on stdout and to disk
    match serde_json::to_string_pretty(&payload) {
        Ok(s) => println!("{s}"),
        Err(e) => return fail(EXIT_INPUT, &format!("serialize: {e}")),
    }
    let name = format!("{}.resonance.json", config.stem());
    if let Err(e) = write_json(config, &name, &payload) {
        return fail(EXIT_INPUT, &format!("write output: {e}"));
    }
    EXIT_PASS
}
