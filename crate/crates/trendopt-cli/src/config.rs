//! Declarative experiment configuration (TOML, one section per concern).
//!
//! Unknown keys are rejected everywhere. Defaults follow the suggested
//! hyperparameter values and the standard comparison protocol: eta grid
//! {1e-4, 5e-4, 1e-3, 5e-3}, damping grid 0.1..0.9 in steps of 0.1,
//! minibatch 128, ten seeds.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use trendopt::harness::{DataSpec, ExperimentSpec, ModelSpec, OptimizerSpec};
use trendopt::models::Activation;
use trendopt::optim::{HyperParams, OptimizerKind};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub hyperparams: HyperSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub name: String,
    pub optimizers: Vec<String>,
    pub epochs: usize,
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    pub track_regret: bool,
    pub early_stop: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            optimizers: vec!["adam".into(), "adamt".into()],
            epochs: 30,
            batch_size: 128,
            seeds: (0..10).collect(),
            track_regret: false,
            early_stop: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// `logreg` or `mlp`.
    pub kind: String,
    pub l2: f64,
    pub hidden: Vec<usize>,
    /// `relu` or `tanh`.
    pub activation: String,
    pub dropout: Vec<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: "logreg".into(),
            l2: 0.0,
            hidden: vec![32, 32],
            activation: "relu".into(),
            dropout: vec![0.0, 0.0],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// `synthetic` or `idx`.
    pub kind: String,
    pub seed: u64,
    pub train_samples: usize,
    pub test_samples: usize,
    pub features: usize,
    pub classes: usize,
    pub separation: f64,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub signed: bool,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            kind: "synthetic".into(),
            seed: 42,
            train_samples: 2000,
            test_samples: 500,
            features: 20,
            classes: 2,
            separation: 2.0,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            signed: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperSection {
    pub eta: f64,
    pub beta1: f64,
    pub gamma1: f64,
    pub phi1: f64,
    pub beta2: f64,
    pub gamma2: f64,
    pub phi2: f64,
    pub epsilon: f64,
}

impl Default for HyperSection {
    fn default() -> Self {
        let hp = HyperParams::default();
        Self {
            eta: hp.eta,
            beta1: hp.beta1,
            gamma1: hp.gamma1,
            phi1: hp.phi1,
            beta2: hp.beta2,
            gamma2: hp.gamma2,
            phi2: hp.phi2,
            epsilon: hp.epsilon,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub etas: Vec<f64>,
    pub phis: Vec<f64>,
    pub probe_epochs: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            etas: vec![1e-4, 5e-4, 1e-3, 5e-3],
            phis: (1..10).map(|i| i as f64 / 10.0).collect(),
            probe_epochs: 5,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// `csv` or `json`.
    pub format: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("results"),
            format: "csv".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Hyperparameters for one optimizer kind (shared across the list).
    pub fn hyper_params(&self, kind: OptimizerKind) -> HyperParams {
        HyperParams {
            eta: self.hyperparams.eta,
            beta1: self.hyperparams.beta1,
            gamma1: self.hyperparams.gamma1,
            phi1: self.hyperparams.phi1,
            beta2: self.hyperparams.beta2,
            gamma2: self.hyperparams.gamma2,
            phi2: self.hyperparams.phi2,
            epsilon: self.hyperparams.epsilon,
            kind,
        }
    }

    pub fn optimizer_specs(&self) -> Result<Vec<OptimizerSpec>, CliError> {
        if self.experiment.optimizers.is_empty() {
            return Err(CliError::Config(
                "experiment.optimizers must list at least one optimizer".into(),
            ));
        }
        self.experiment
            .optimizers
            .iter()
            .map(|name| {
                let kind = OptimizerKind::from_str(name)
                    .map_err(|e| CliError::Config(format!("experiment.optimizers: {e}")))?;
                Ok(OptimizerSpec {
                    name: kind.name().to_string(),
                    hp: self.hyper_params(kind),
                })
            })
            .collect()
    }

    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        let activation = match self.model.activation.as_str() {
            "relu" => Activation::Relu,
            "tanh" => Activation::Tanh,
            other => {
                return Err(CliError::Config(format!(
                    "model.activation: expected relu or tanh, got {other:?}"
                )))
            }
        };
        match self.model.kind.as_str() {
            "logreg" => Ok(ModelSpec::Logreg { l2: self.model.l2 }),
            "mlp" => Ok(ModelSpec::Mlp {
                hidden: self.model.hidden.clone(),
                activation,
                dropout: self.model.dropout.clone(),
            }),
            other => Err(CliError::Config(format!(
                "model.kind: expected logreg or mlp, got {other:?}"
            ))),
        }
    }

    pub fn data_spec(&self) -> Result<DataSpec, CliError> {
        match self.data.kind.as_str() {
            "synthetic" => Ok(DataSpec::Synthetic {
                seed: self.data.seed,
                train_samples: self.data.train_samples,
                test_samples: self.data.test_samples,
                features: self.data.features,
                classes: self.data.classes,
                separation: self.data.separation,
            }),
            "idx" => {
                let path = |field: &str, value: &Option<PathBuf>| {
                    value.clone().ok_or_else(|| {
                        CliError::Config(format!("data.{field} is required when data.kind = \"idx\""))
                    })
                };
                Ok(DataSpec::Idx {
                    train_images: path("train_images", &self.data.train_images)?,
                    train_labels: path("train_labels", &self.data.train_labels)?,
                    test_images: path("test_images", &self.data.test_images)?,
                    test_labels: path("test_labels", &self.data.test_labels)?,
                    signed: self.data.signed,
                })
            }
            other => Err(CliError::Config(format!(
                "data.kind: expected synthetic or idx, got {other:?}"
            ))),
        }
    }

    pub fn experiment_spec(&self) -> Result<ExperimentSpec, CliError> {
        let spec = ExperimentSpec {
            name: self.experiment.name.clone(),
            model: self.model_spec()?,
            data: self.data_spec()?,
            optimizers: self.optimizer_specs()?,
            epochs: self.experiment.epochs,
            batch_size: self.experiment.batch_size,
            seeds: self.experiment.seeds.clone(),
            track_regret: self.experiment.track_regret,
            early_stop: self.experiment.early_stop,
        };
        spec.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn output_format(&self) -> Result<OutputFormat, CliError> {
        match self.output.format.as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Config(format!(
                "output.format: expected csv or json, got {other:?}"
            ))),
        }
    }
}

/// Shared `--optimizers a,b --epochs N --seeds 0,1 --out DIR` overrides.
pub fn apply_overrides(
    config: &mut Config,
    optimizers: &Option<String>,
    epochs: &Option<usize>,
    seeds: &Option<String>,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    if let Some(list) = optimizers {
        config.experiment.optimizers = list
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
    }
    if let Some(epochs) = epochs {
        config.experiment.epochs = *epochs;
    }
    if let Some(list) = seeds {
        config.experiment.seeds = list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| CliError::Config(format!("--seeds: {s:?} is not an integer")))
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(dir) = out {
        config.output.dir = dir.clone();
    }
    Ok(())
}
