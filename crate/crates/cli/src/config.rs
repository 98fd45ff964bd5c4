//! Layered configuration: command-line flags override a TOML file, which
//! overrides built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use solvency_core::cart::{CartConfig, Mode};
use solvency_core::dataset::{MissingTokens, OutlierRule};
use solvency_core::screening::ScreeningConfig;

use crate::error::CliError;

/// Every setting, all optional. This is both the TOML file layout (flat,
/// kebab-case keys) and the shape command-line flags are collected into.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    // encode
    pub input: Option<PathBuf>,
    pub codebook: Option<PathBuf>,
    pub skip_codebook: Option<bool>,
    pub missing_tokens: Option<Vec<String>>,
    pub outlier_rule: Option<String>,
    pub iqr_multiplier: Option<f64>,
    pub z_threshold: Option<f64>,
    // shared by the stages after encode
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub target: Option<String>,
    pub holdout: Option<f64>,
    // screen
    pub alpha: Option<f64>,
    pub r_threshold: Option<f64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub separation_bound: Option<f64>,
    pub per_variable: Option<bool>,
    // train
    pub screening: Option<PathBuf>,
    pub min_node_size: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_gini_decrease: Option<f64>,
    pub mode: Option<Mode>,
    pub allow_large_min_node_size: Option<bool>,
    // eval / predict
    pub model: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub roc_mode: Option<RocMode>,
    pub output: Option<PathBuf>,
    // synth
    pub spec: Option<PathBuf>,
    pub rows: Option<usize>,
    pub noise: Option<f64>,
    pub missing_rate: Option<f64>,
}

macro_rules! overlay {
    ($top:expr, $base:expr; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_none() { $top.$field = $base.$field.clone(); } )*
    };
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
    }

    /// Fills every unset field of `self` from `base`.
    pub fn or(mut self, base: &FileConfig) -> Self {
        overlay!(self, base;
            out, seed, input, codebook, skip_codebook, missing_tokens, outlier_rule, iqr_multiplier, z_threshold,
            data, schema, target, holdout, alpha, r_threshold, max_iter, tol, separation_bound, per_variable,
            screening, min_node_size, max_depth, min_gini_decrease, mode, allow_large_min_node_size,
            model, predictions, roc_mode, output, spec, rows, noise, missing_rate,
        );
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RocMode {
    /// Leaf positive proportions.
    #[default]
    Proportion,
    /// Predicted classes (0 or 1).
    Hard,
}

/// Fully resolved settings, echoed into the pipeline manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Effective {
    pub out: PathBuf,
    /// Seed for every random draw; 0 when not given.
    pub seed: Option<u64>,
    pub input: Option<PathBuf>,
    pub codebook: Option<PathBuf>,
    pub skip_codebook: bool,
    pub missing_tokens: Vec<String>,
    pub outlier: OutlierRule,
    pub data: PathBuf,
    /// Input schema for encode (inferred when absent); later stages fall
    /// back to the schema encode wrote.
    pub schema: Option<PathBuf>,
    pub target: String,
    pub holdout: Option<f64>,
    pub screening_config: ScreeningConfig,
    pub screening: PathBuf,
    pub cart: CartConfig,
    pub model: PathBuf,
    pub predictions: Option<PathBuf>,
    pub roc_mode: RocMode,
    pub output: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub rows: Option<usize>,
    pub noise: Option<f64>,
    pub missing_rate: Option<f64>,
}

impl Effective {
    pub fn resolve(c: &FileConfig) -> Result<Self, CliError> {
        let out = c.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        let outlier = match c.outlier_rule.as_deref().unwrap_or("iqr") {
            "iqr" => OutlierRule::Iqr {
                multiplier: c.iqr_multiplier.unwrap_or(1.5),
            },
            "zscore" | "z-score" => OutlierRule::ZScore {
                threshold: c.z_threshold.unwrap_or(3.0),
            },
            "off" => OutlierRule::Off,
            other => return Err(CliError::config(format!("unknown outlier rule {other:?} (iqr, zscore, off)"))),
        };
        match outlier {
            OutlierRule::Iqr { multiplier: m } | OutlierRule::ZScore { threshold: m } if !(m > 0.0 && m.is_finite()) => {
                return Err(CliError::config(format!("outlier parameter {m} must be positive")))
            }
            _ => {}
        }
        if let Some(h) = c.holdout {
            if !(h > 0.0 && h < 1.0) {
                return Err(CliError::config(format!("holdout fraction {h} is outside (0, 1)")));
            }
        }
        let defaults = ScreeningConfig::default();
        let screening_config = ScreeningConfig {
            alpha: c.alpha.unwrap_or(defaults.alpha),
            r_threshold: c.r_threshold.unwrap_or(defaults.r_threshold),
            max_iter: c.max_iter.unwrap_or(defaults.max_iter),
            tol: c.tol.unwrap_or(defaults.tol),
            separation_bound: c.separation_bound.unwrap_or(defaults.separation_bound),
            per_variable: c.per_variable.unwrap_or(defaults.per_variable),
        };
        if !(screening_config.alpha > 0.0 && screening_config.alpha < 1.0) {
            return Err(CliError::config(format!("alpha {} is outside (0, 1)", screening_config.alpha)));
        }
        if !(screening_config.r_threshold > 0.0 && screening_config.r_threshold <= 1.0) {
            return Err(CliError::config(format!(
                "r-threshold {} is outside (0, 1]",
                screening_config.r_threshold
            )));
        }
        if !(screening_config.tol > 0.0) || screening_config.max_iter == 0 || !(screening_config.separation_bound > 0.0) {
            return Err(CliError::config("max-iter, tol and separation-bound must be positive"));
        }
        let cd = CartConfig::default();
        let cart = CartConfig {
            min_node_size: c.min_node_size.unwrap_or(cd.min_node_size),
            max_depth: c.max_depth.unwrap_or(cd.max_depth),
            min_gini_decrease: c.min_gini_decrease.unwrap_or(cd.min_gini_decrease),
            mode: c.mode.unwrap_or(cd.mode),
            allow_large_min_node_size: c.allow_large_min_node_size.unwrap_or(cd.allow_large_min_node_size),
        };
        Ok(Self {
            data: c.data.clone().unwrap_or_else(|| out.join("encoded.csv")),
            screening: c.screening.clone().unwrap_or_else(|| out.join("screening.csv")),
            model: c.model.clone().unwrap_or_else(|| out.join("model.cart")),
            seed: c.seed,
            input: c.input.clone(),
            codebook: c.codebook.clone(),
            skip_codebook: c.skip_codebook.unwrap_or(false),
            missing_tokens: c.missing_tokens.clone().unwrap_or_else(|| MissingTokens::default().0),
            outlier,
            schema: c.schema.clone(),
            target: c.target.clone().unwrap_or_else(|| "TARGET".to_string()),
            holdout: c.holdout,
            screening_config,
            cart,
            predictions: c.predictions.clone(),
            roc_mode: c.roc_mode.unwrap_or_default(),
            output: c.output.clone(),
            spec: c.spec.clone(),
            rows: c.rows,
            noise: c.noise,
            missing_rate: c.missing_rate,
            out,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Schema used by the stages after encode.
    pub fn encoded_schema(&self) -> PathBuf {
        self.schema.clone().unwrap_or_else(|| self.out.join("schema.csv"))
    }
}
