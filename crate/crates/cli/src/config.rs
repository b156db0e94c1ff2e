//! Pipeline configuration: a single JSON file with explicit defaults, echoed
//! verbatim into the run manifest so every effective parameter is visible.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use authormap::embedding::MveOptions;
use authormap::kernels::CombineMode;
use authormap::topics::TopicConfig;

use crate::error::CliError;

/// Which author representation feeds the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Bow,
    LdaAgg,
    At,
    Hat,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Bow => "bow",
            ModelKind::LdaAgg => "lda-agg",
            ModelKind::At => "at",
            ModelKind::Hat => "hat",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub model: ModelKind,
    /// Persisted corpus (the `ingest` output).
    pub corpus: PathBuf,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub topics: TopicsSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub render: RenderSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicsSection {
    #[serde(default = "default_layers")]
    pub layers: Vec<usize>,
    /// Default: 50 / layer size, per layer.
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_sample_lag")]
    pub sample_lag: usize,
    pub seed: u64,
}

fn default_layers() -> Vec<usize> {
    vec![20]
}
fn default_beta() -> f64 {
    0.01
}
fn default_iterations() -> usize {
    500
}
fn default_burn_in() -> usize {
    200
}
fn default_sample_lag() -> usize {
    10
}

impl Default for TopicsSection {
    fn default() -> Self {
        Self {
            layers: default_layers(),
            alpha: None,
            beta: default_beta(),
            iterations: default_iterations(),
            burn_in: default_burn_in(),
            sample_lag: default_sample_lag(),
            seed: 0,
        }
    }
}

impl TopicsSection {
    pub fn to_topic_config(&self) -> TopicConfig {
        let mut config = TopicConfig::hierarchical(self.layers.clone(), self.seed)
            .with_schedule(self.iterations, self.burn_in, self.sample_lag);
        config.beta = self.beta;
        if let Some(alpha) = &self.alpha {
            config.alpha = alpha.clone();
        }
        config
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    /// HAT layers (1-based) whose marginals become individual kernels.
    /// Default: every layer. Ignored for single-representation models.
    #[serde(default)]
    pub layers: Option<Vec<usize>>,
    #[serde(default = "default_mode")]
    pub mode: String,
    /// Weights for weighted-sum combination; default uniform.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

fn default_mode() -> String {
    "weighted-sum".into()
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            layers: None,
            mode: default_mode(),
            weights: None,
        }
    }
}

impl KernelSection {
    pub fn combine_mode(&self, n_kernels: usize) -> Result<CombineMode, CliError> {
        match self.mode.as_str() {
            "weighted-sum" | "sum" => {
                let weights = match &self.weights {
                    Some(w) => w.clone(),
                    None => vec![1.0 / n_kernels as f64; n_kernels],
                };
                Ok(CombineMode::WeightedSum { weights })
            }
            "product" | "elementwise-product" => Ok(CombineMode::Product),
            other => Err(CliError::usage(format!(
                "unknown kernel mode {other:?} (expected weighted-sum or product)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_passes")]
    pub projection_passes: usize,
    /// Opt-in PSD repair (clip negative eigenvalues) before embedding.
    #[serde(default)]
    pub psd_project: bool,
}

fn default_dim() -> usize {
    2
}
fn default_k() -> usize {
    4
}
fn default_step() -> f64 {
    0.1
}
fn default_max_iters() -> usize {
    200
}
fn default_tol() -> f64 {
    1e-6
}
fn default_passes() -> usize {
    10
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        Self {
            dim: default_dim(),
            k: default_k(),
            step: default_step(),
            max_iters: default_max_iters(),
            tol: default_tol(),
            projection_passes: default_passes(),
            psd_project: false,
        }
    }
}

impl EmbeddingSection {
    pub fn mve_options(&self) -> MveOptions {
        MveOptions {
            step: self.step,
            max_iters: self.max_iters,
            tol: self.tol,
            projection_passes: self.projection_passes,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSection {
    /// Palette truncation/extension; default is the 20-color palette.
    #[serde(default)]
    pub palette_size: Option<usize>,
    #[serde(default = "default_label_scale")]
    pub label_scale: f64,
}

fn default_label_scale() -> f64 {
    1.0
}

impl Default for RenderSection {
    fn default() -> Self {
        Self {
            palette_size: None,
            label_scale: default_label_scale(),
        }
    }
}

pub fn load_pipeline_config(path: &Path) -> Result<PipelineConfig, CliError> {
    let data = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let config: PipelineConfig = serde_json::from_str(&data)
        .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
    validate(&config)?;
    Ok(config)
}

fn validate(config: &PipelineConfig) -> Result<(), CliError> {
    let depth = config.topics.layers.len();
    match config.model {
        ModelKind::LdaAgg | ModelKind::At => {
            if depth != 1 {
                return Err(CliError::usage(format!(
                    "model {} requires exactly one topic layer, config has {depth}",
                    config.model.as_str()
                )));
            }
        }
        ModelKind::Hat => {
            if depth < 2 {
                return Err(CliError::usage(format!(
                    "model hat requires at least two topic layers (use [1, T] for the \
                     single-layer special case), config has {depth}"
                )));
            }
        }
        ModelKind::Bow => {}
    }
    if let Some(layers) = &config.kernel.layers {
        if layers.is_empty() {
            return Err(CliError::usage("kernel.layers must not be empty"));
        }
        if let Some(&l) = layers.iter().find(|&&l| l == 0 || l > depth) {
            return Err(CliError::usage(format!(
                "kernel layer {l} out of range for a {depth}-layer model"
            )));
        }
    }
    Ok(())
}
