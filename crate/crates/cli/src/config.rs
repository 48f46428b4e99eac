use serde::Serialize;

/// One resolved invocation; serialized into every output for
/// reproducibility, and hashed so identical configs are recognizable.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub input: std::path::PathBuf,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub window: usize,
    pub samples: usize,
    pub seed: u64,
    pub out_dir: std::path::PathBuf,
    pub tol: Option<f64>,
    pub orbit_point: Option<String>,
    pub branch: String,
    pub convexity_pairs: usize,
}

impl RunConfig {
    /// FNV-1a over the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in canon.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }

    pub fn stem(&self) -> String {
        self.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "input".into())
    }
}
