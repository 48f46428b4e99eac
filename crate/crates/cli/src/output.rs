use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use crate::config::RunConfig;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_PIPELINE: i32 = 4;
pub const EXIT_DYNAMICS: i32 = 5;

/// Wraps a payload with the provenance block every output carries.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub version: &'static str,
    pub config: &'a RunConfig,
    pub config_hash: String,
    #[serde(flatten)]
    pub payload: T,
}

pub fn write_json<T: Serialize>(
    config: &RunConfig,
    name: &str,
    payload: T,
) -> std::io::Result<PathBuf> {
    let report = Report {
        version: chainform::VERSION,
        config,
        config_hash: config.hash(),
        payload,
    };
    let path = config.out_dir.join(name);
    std::fs::create_dir_all(&config.out_dir)?;
    let mut f = std::fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut f, &report)?;
    f.write_all(b"\n")?;
    Ok(path)
}

/// CSV with a provenance comment line, a fixed header, and deterministic
/// row formatting: identical configs yield byte-identical files.
pub fn write_csv(
    config: &RunConfig,
    name: &str,
    header: &str,
    rows: &[String],
) -> std::io::Result<PathBuf> {
    let path = config.out_dir.join(name);
    std::fs::create_dir_all(&config.out_dir)?;
    let mut f = std::fs::File::create(&path)?;
    writeln!(
        f,
        "# chainform {} config_hash={} seed={}",
        chainform::VERSION,
        config.hash(),
        config.seed
    )?;
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(path)
}

pub fn fail(code: i32, msg: &str) -> i32 {
    eprintln!("error: {msg}");
    code
}
