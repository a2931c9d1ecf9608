//! Versioned JSON model files.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qs_core::{KernelSpec, LossConfig, Matrix, Observation, QsModel};
use serde::{Deserialize, Serialize};

use crate::data::Standardizer;

pub const MODEL_FORMAT: &str = "qs-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub loss: LossConfig,
    pub kernel: KernelSpec,
    pub lambda: f64,
    /// Applied to raw inputs before the kernel; `x_train` is already transformed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardizer: Option<Standardizer>,
    pub x_train: Vec<Vec<f64>>,
    pub observations: Vec<Observation>,
    pub active: Vec<usize>,
    pub coefficients: Matrix,
}

impl ModelFile {
    pub fn from_model(model: &QsModel, standardizer: Option<Standardizer>) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            loss: model.loss().config().clone(),
            kernel: *model.kernel(),
            lambda: model.lambda(),
            standardizer,
            x_train: model.x_train().to_vec(),
            observations: model.observations().to_vec(),
            active: model.active_columns().to_vec(),
            coefficients: model.coefficients().clone(),
        }
    }

    pub fn into_model(self) -> Result<(QsModel, Option<Standardizer>)> {
        if self.format != MODEL_FORMAT {
            bail!("not a model file (format `{}`)", self.format);
        }
        if self.version != MODEL_VERSION {
            bail!("unsupported model file version {} (expected {MODEL_VERSION})", self.version);
        }
        let loss = self.loss.build()?;
        let model = QsModel::from_parts(
            &loss,
            self.kernel,
            self.lambda,
            self.x_train,
            self.observations,
            self.active,
            self.coefficients,
        )?;
        if let Some(s) = &self.standardizer {
            if s.mean.len() != model.input_dim() {
                bail!("standardizer width {} does not match input dimension {}", s.mean.len(), model.input_dim());
            }
        }
        Ok((model, self.standardizer))
    }
}

pub fn save(path: &Path, model: &QsModel, standardizer: Option<Standardizer>) -> Result<()> {
    let file = ModelFile::from_model(model, standardizer);
    let text = serde_json::to_string(&file)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn load(path: &Path) -> Result<(QsModel, Option<Standardizer>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ModelFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    file.into_model()
}
