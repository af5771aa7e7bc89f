//! Run configuration: an optional TOML file under command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::Failure;

/// Keys accepted in `--config`. Every key is optional; paths are relative to
/// the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub manifest: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub k: Option<usize>,
    pub category: Option<String>,
    pub n_max: Option<usize>,
    pub exhaustive_threshold: Option<usize>,
    pub enumeration_cap: Option<u64>,
    pub beam_width: Option<usize>,
    pub incentive: Option<f64>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub init: Option<String>,
    pub grad_clip: Option<f64>,
    pub draws: Option<usize>,
    /// Category name to section count; extends the built-in table.
    #[serde(default)]
    pub categories: BTreeMap<String, usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for p in [&mut cfg.manifest, &mut cfg.model, &mut cfg.ratings].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Flag value if given, else the file value.
pub fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

pub fn require_path(flag: &Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> Result<PathBuf, Failure> {
    pick(flag, file).ok_or_else(|| Failure::usage(format!("--{name} is required")))
}
