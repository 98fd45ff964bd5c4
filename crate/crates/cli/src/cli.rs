use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use solvency_core::cart::Mode;

use crate::config::{FileConfig, RocMode};

#[derive(Debug, Parser)]
#[command(name = "solvency", version, about = "Credit-solvency scoring with logistic screening and CART trees")]
pub struct Cli {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read raw data, apply the codebook, drop incomplete rows and outliers.
    Encode {
        #[command(flatten)]
        encode: EncodeArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Wald and correlation screening of the explanatory variables.
    Screen {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        screen: ScreenArgs,
    },
    /// Grow a tree on the variables kept by screening.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Confusion matrix, error rates and ROC of a model or of a predictions file.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Score a CSV file with a saved model.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Codebook for inputs that hold text labels.
        #[arg(long)]
        codebook: Option<PathBuf>,
        /// Output file (default: <out>/predictions.csv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic labelled dataset with a planted rule.
    Synth {
        /// TOML description of the generator (default: the built-in credit layout).
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        rows: Option<usize>,
        /// Label flip probability.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        missing_rate: Option<f64>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// encode, screen, train and eval in one run, with a manifest.
    Pipeline {
        #[command(flatten)]
        encode: EncodeArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        screen: ScreenArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
}

fn flag(on: bool) -> Option<bool> {
    on.then_some(true)
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    /// Categorical columns already hold integer codes.
    #[arg(long)]
    pub skip_codebook: bool,
    /// Cell values read as missing (repeatable).
    #[arg(long = "missing-token")]
    pub missing_tokens: Vec<String>,
    /// iqr, zscore or off.
    #[arg(long)]
    pub outlier_rule: Option<String>,
    #[arg(long)]
    pub iqr_multiplier: Option<f64>,
    #[arg(long)]
    pub z_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Encoded data (default: <out>/encoded.csv).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Schema file (default for later stages: <out>/schema.csv).
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
    /// Hold out this fraction of rows for eval; screen and train use the rest.
    #[arg(long)]
    pub holdout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScreenArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub r_threshold: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub separation_bound: Option<f64>,
    /// One logistic fit per variable instead of a joint fit.
    #[arg(long)]
    pub per_variable: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Screening result (default: <out>/screening.csv).
    #[arg(long)]
    pub screening: Option<PathBuf>,
    #[arg(long)]
    pub min_node_size: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_gini_decrease: Option<f64>,
    /// classification or regression.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Permit min-node-size above 5.
    #[arg(long)]
    pub allow_large_min_node_size: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "classification" => Ok(Mode::Classification),
        "regression" => Ok(Mode::Regression),
        _ => Err(format!("unknown mode {s:?} (classification, regression)")),
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model file (default: <out>/model.cart).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Evaluate an `actual,predicted[,score]` CSV instead of a model.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub roc_mode: Option<RocMode>,
}

impl EncodeArgs {
    fn apply(&self, c: &mut FileConfig) {
        c.input = self.input.clone();
        c.codebook = self.codebook.clone();
        c.skip_codebook = flag(self.skip_codebook);
        c.missing_tokens = (!self.missing_tokens.is_empty()).then(|| self.missing_tokens.clone());
        c.outlier_rule = self.outlier_rule.clone();
        c.iqr_multiplier = self.iqr_multiplier;
        c.z_threshold = self.z_threshold;
    }
}

impl DataArgs {
    fn apply(&self, c: &mut FileConfig) {
        c.data = self.data.clone();
        c.schema = self.schema.clone();
        c.target = self.target.clone();
        c.holdout = self.holdout;
    }
}

impl ScreenArgs {
    fn apply(&self, c: &mut FileConfig) {
        c.alpha = self.alpha;
        c.r_threshold = self.r_threshold;
        c.max_iter = self.max_iter;
        c.tol = self.tol;
        c.separation_bound = self.separation_bound;
        c.per_variable = flag(self.per_variable);
    }
}

impl TrainArgs {
    fn apply(&self, c: &mut FileConfig) {
        c.screening = self.screening.clone();
        c.min_node_size = self.min_node_size;
        c.max_depth = self.max_depth;
        c.min_gini_decrease = self.min_gini_decrease;
        c.mode = self.mode;
        c.allow_large_min_node_size = flag(self.allow_large_min_node_size);
    }
}

impl EvalArgs {
    fn apply(&self, c: &mut FileConfig) {
        c.model = self.model.clone();
        c.predictions = self.predictions.clone();
        c.roc_mode = self.roc_mode;
    }
}

impl Cli {
    /// The settings given on the command line.
    pub fn flags(&self) -> FileConfig {
        let mut c = FileConfig {
            out: self.out.clone(),
            seed: self.seed,
            ..FileConfig::default()
        };
        match &self.command {
            Command::Encode { encode, data } => {
                encode.apply(&mut c);
                data.apply(&mut c);
            }
            Command::Screen { data, screen } => {
                data.apply(&mut c);
                screen.apply(&mut c);
            }
            Command::Train { data, train } => {
                data.apply(&mut c);
                train.apply(&mut c);
            }
            Command::Eval { data, eval } => {
                data.apply(&mut c);
                eval.apply(&mut c);
            }
            Command::Predict {
                model,
                input,
                codebook,
                output,
            } => {
                c.model = model.clone();
                c.input = input.clone();
                c.codebook = codebook.clone();
                c.output = output.clone();
            }
            Command::Synth {
                spec,
                rows,
                noise,
                missing_rate,
                target,
                output,
            } => {
                c.spec = spec.clone();
                c.rows = *rows;
                c.noise = *noise;
                c.missing_rate = *missing_rate;
                c.target = target.clone();
                c.output = output.clone();
            }
            Command::Pipeline {
                encode,
                data,
                screen,
                train,
                eval,
            } => {
                encode.apply(&mut c);
                data.apply(&mut c);
                screen.apply(&mut c);
                train.apply(&mut c);
                eval.apply(&mut c);
            }
        }
        c
    }
}
