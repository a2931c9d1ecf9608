//! JSON run configuration. Every field is optional; command-line flags take
//! precedence over the file.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use qs_core::{DecodeBudget, LossConfig};
use serde::{Deserialize, Serialize};

use crate::workflow::KernelKind;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub loss: Option<LossConfig>,
    pub kernel: Option<KernelKind>,
    pub bandwidth: Option<f64>,
    pub lambda: Option<f64>,
    /// An empty list selects the default grid.
    pub lambda_grid: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub budget: Option<DecodeBudget>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
