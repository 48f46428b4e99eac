//! `chainform` — run the linearization pipeline on chain files or
//! endomorphism specs, verify the inverse-branch distortion bounds, and run
//! the repelling-cycle equidistribution experiment.
//!
//! Exit codes are a stable contract: 0 pass, 2 malformed input,
//! 3 validation failure, 4 pipeline failure (stage tagged on stderr),
//! 5 orbit/dynamics failure.

mod commands;
mod config;
mod output;
mod roots;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "chainform", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resonance report for a spectrum file: resonant indices per block,
    /// the gap constant, suggested parameters and the admissibility flags.
    Resonance(CommonArgs),
    /// Run the linearization pipeline on a chain file; emits the result
    /// JSON and a residual CSV.
    Normalize(CommonArgs),
    /// Full distortion verification for an endomorphism spec: backward
    /// orbit, cocycle, reduction, pipeline, two-sided bounds, convexity.
    #[command(name = "theorem-a")]
    TheoremA(CommonArgs),
    /// Equidistribution experiment over repelling cycles (k = 1).
    Repelling(CommonArgs),
}

#[derive(clap::Args, Clone)]
struct CommonArgs {
    /// Input JSON file (spectrum, chain, or endomorphism, per subcommand).
    input: std::path::PathBuf,
    /// Shift override; 0 selects the expert unshifted mode.
    #[arg(long)]
    gamma: Option<f64>,
    /// Slowness budget override.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Orbit length / maximal period, per subcommand.
    #[arg(long, default_value_t = 12)]
    window: usize,
    /// Samples per verification row.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Seed for every pseudo-random choice.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output directory for report files.
    #[arg(long, default_value = ".")]
    out: std::path::PathBuf,
    /// Pointwise residual tolerance override.
    #[arg(long)]
    tol: Option<f64>,
    /// Orbit seed point "re,im[;re,im...]" in the affine chart
    /// (theorem-a only; a deterministic generic point when absent).
    #[arg(long, allow_hyphen_values = true)]
    orbit_point: Option<String>,
    /// Branch rule for backward orbits: "seeded" or "nearest".
    #[arg(long, default_value = "seeded")]
    branch: String,
    /// Pairs per convexity check (theorem-a only).
    #[arg(long, default_value_t = 10)]
    convexity_pairs: usize,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Resonance(args) => commands::resonance::run(&to_config("resonance", &args)),
        Command::Normalize(args) => commands::normalize::run(&to_config("normalize", &args)),
        Command::TheoremA(args) => commands::theorem_a::run(&to_config("theorem-a", &args)),
        Command::Repelling(args) => commands::repelling::run(&to_config("repelling", &args)),
    };
    std::process::exit(code);
}

fn to_config(subcommand: &str, args: &CommonArgs) -> RunConfig {
    RunConfig {
        subcommand: subcommand.to_string(),
        input: args.input.clone(),
        gamma: args.gamma,
        epsilon: args.epsilon,
        window: args.window,
        samples: args.samples,
        seed: args.seed,
        out_dir: args.out.clone(),
        tol: args.tol,
        orbit_point: args.orbit_point.clone(),
        branch: args.branch.clone(),
        convexity_pairs: args.convexity_pairs,
    }
}
