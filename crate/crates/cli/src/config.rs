use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

/// Values read from the TOML config file. Every field is optional; command
/// line flags take precedence.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub kernel: Kernel,
    #[serde(default)]
    pub svm: Svm,
    #[serde(default)]
    pub eval: Eval,
    #[serde(default)]
    pub mt: Mt,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub graph_dir: Option<PathBuf>,
    pub label_file: Option<PathBuf>,
    pub similarity: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Kernel {
    pub lambda: Option<f64>,
    pub max_len: Option<usize>,
    pub normalize: Option<bool>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Svm {
    pub c: Option<f64>,
    pub c_grid: Option<Vec<f64>>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Eval {
    pub repetitions: Option<usize>,
    pub base_seed: Option<u64>,
    pub lambda_grid: Option<Vec<f64>>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mt {
    pub trials: Option<usize>,
    pub min_dim: Option<usize>,
    pub max_dim: Option<usize>,
    pub seed: Option<u64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: Config =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        for (what, p) in [
            ("graph_dir", &config.paths.graph_dir),
            ("label_file", &config.paths.label_file),
            ("similarity", &config.paths.similarity),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    bail!("config {}: {what} {} does not exist", path.display(), p.display());
                }
            }
        }
        Ok(config)
    }
}
