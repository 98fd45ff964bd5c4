//! The stage commands. Each reads its inputs from files, writes its outputs
//! into the output directory and returns the paths it wrote, so running the
//! stages one by one gives the same files as the pipeline.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use solvency_core::cart::{deserialize, export_dot, export_text, grow, serialize, CartConfig, CartTree, Mode};
use solvency_core::codebook::CodeBook;
use solvency_core::dataset::{
    apply_codebook, clean, holdout_split, load_csv, parse_codes, Dataset, FeatureKind, MissingTokens, Schema,
};
use solvency_core::eval::{evaluate, EvaluationReport};
use solvency_core::screening::{run_screening, ScreeningOutcome};
use solvency_core::synth::{generate, SynthSpec};

use crate::config::{Effective, RocMode};
use crate::error::{CliError, EXIT_OK};

fn require<'a>(path: Option<&'a PathBuf>, what: &str) -> Result<&'a Path, CliError> {
    let path = path.ok_or_else(|| CliError::config(format!("no {what} given")))?;
    if !path.is_file() {
        return Err(CliError::config(format!("{what} not found: {}", path.display())));
    }
    Ok(path)
}

fn write(path: &Path, bytes: &[u8]) -> Result<PathBuf, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

fn csv_bytes<E>(f: impl FnOnce(&mut Vec<u8>) -> Result<(), E>) -> Result<Vec<u8>, CliError>
where
    CliError: From<E>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Header of a CSV file, trimmed.
fn read_header(path: &Path) -> Result<Vec<String>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.headers()?.iter().map(|h| h.trim().to_string()).collect())
}

/// Schema from the file header: codebook features are categorical, every
/// other column except the target is numeric.
fn infer_schema(header: &[String], target: &str, book: Option<&CodeBook>) -> Result<Schema, CliError> {
    if !header.iter().any(|h| h == target) {
        return Err(CliError::data(format!("input has no target column {target}")));
    }
    let features = header.iter().filter(|h| *h != target).map(|h| {
        let kind = match book {
            Some(b) if b.contains(h) => b.kind_of(h),
            _ => FeatureKind::Numeric,
        };
        (h.clone(), kind)
    });
    Ok(Schema::new(features)?)
}

fn encoded_schema(cfg: &Effective) -> Result<Schema, CliError> {
    let path = cfg.encoded_schema();
    require(Some(&path), "schema file")?;
    Ok(Schema::read_csv(&path)?)
}

/// Loads an encoded, cleaned dataset (categorical cells hold codes).
fn load_encoded(cfg: &Effective) -> Result<Dataset, CliError> {
    let schema = encoded_schema(cfg)?;
    require(Some(&cfg.data), "data file")?;
    let raw = load_csv(&cfg.data, &schema, &cfg.target, &MissingTokens(cfg.missing_tokens.clone()))?;
    let data = parse_codes(&raw)?;
    if let Some(&(row, col)) = data.missing_cells().first() {
        let name = data.schema().names().get(col).cloned().unwrap_or_else(|| cfg.target.clone());
        return Err(CliError::data(format!(
            "{} row {row} has a missing {name}; run encode first",
            cfg.data.display()
        )));
    }
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Train,
    Holdout,
}

/// The rows a stage works on: everything, or one side of the seeded split.
fn part(cfg: &Effective, data: Dataset, part: Part) -> Result<Dataset, CliError> {
    let Some(fraction) = cfg.holdout else { return Ok(data) };
    let split = holdout_split(data.n(), fraction, cfg.seed()).map_err(|e| CliError::config(e.to_string()))?;
    Ok(data.subset(match part {
        Part::Train => &split.train,
        Part::Holdout => &split.holdout,
    }))
}

pub fn encode(cfg: &Effective) -> Result<Vec<PathBuf>, CliError> {
    let input = require(cfg.input.as_ref(), "input file")?;
    let book = if cfg.skip_codebook {
        match &cfg.codebook {
            Some(p) => Some(CodeBook::read_csv(require(Some(p), "codebook")?)?),
            None => None,
        }
    } else {
        Some(CodeBook::read_csv(require(cfg.codebook.as_ref(), "codebook")?)?)
    };
    let schema = match &cfg.schema {
        Some(p) => Schema::read_csv(require(Some(p), "schema file")?)?,
        None => infer_schema(&read_header(input)?, &cfg.target, book.as_ref())?,
    };
    let raw = load_csv(input, &schema, &cfg.target, &MissingTokens(cfg.missing_tokens.clone()))?;
    let encoded = match (&book, cfg.skip_codebook) {
        (Some(b), false) => apply_codebook(&raw, b)?,
        _ => parse_codes(&raw)?,
    };
    let (cleaned, log) = clean(&encoded, &cfg.outlier)?;
    println!(
        "encode: {} rows read, {} dropped, {} kept",
        raw.n(),
        log.len(),
        cleaned.n()
    );
    Ok(vec![
        write(&cfg.out.join("encoded.csv"), &csv_bytes(|b| cleaned.write_csv(b))?)?,
        write(&cfg.out.join("schema.csv"), &csv_bytes(|b| cleaned.schema().write_csv(b))?)?,
        write(&cfg.out.join("cleaning.log"), log.to_text().as_bytes())?,
    ])
}

pub fn screen(cfg: &Effective) -> Result<Vec<PathBuf>, CliError> {
    let data = part(cfg, load_encoded(cfg)?, Part::Train)?;
    let variables = data.schema().names();
    let report = run_screening(&data, &variables, &cfg.screening_config).map_err(|e| {
        let e = CliError::from(e);
        if e.code == crate::error::EXIT_NUMERIC {
            e.context("logistic fit failed (try --per-variable or remove constant/duplicate columns)")
        } else {
            e
        }
    })?;
    for fit in &report.fits {
        for w in &fit.warnings {
            eprintln!("warning: logistic fit over {:?}: {w:?}", fit.variables);
        }
    }
    println!(
        "screen: {} candidates, kept {}, dropped {:?}",
        variables.len(),
        report.outcome.kept.len(),
        report.outcome.dropped_names()
    );
    Ok(vec![
        write(&cfg.out.join("wald.csv"), &csv_bytes(|b| report.wald.write_csv(b))?)?,
        write(&cfg.out.join("correlation.csv"), &csv_bytes(|b| report.correlation.write_csv(b))?)?,
        write(
            &cfg.out.join("screening.csv"),
            &csv_bytes(|b| report.outcome.write_csv(&variables, b))?,
        )?,
    ])
}

fn config_header(c: &CartConfig) -> String {
    let d = CartConfig::default();
    let tag = |same: bool| if same { " (default)" } else { "" };
    format!(
        "# min-node-size {}{}, max-depth {}{}, min-gini-decrease {}{}\n",
        c.min_node_size,
        tag(c.min_node_size == d.min_node_size),
        c.max_depth,
        tag(c.max_depth == d.max_depth),
        c.min_gini_decrease,
        tag(c.min_gini_decrease == d.min_gini_decrease),
    )
}

pub fn train(cfg: &Effective) -> Result<Vec<PathBuf>, CliError> {
    cfg.cart.validate()?;
    let screening = require(Some(&cfg.screening), "screening file (run screen first)")?;
    let outcome = ScreeningOutcome::read_csv(fs::File::open(screening)?)?;
    if outcome.kept.is_empty() {
        return Err(CliError::data("no variables survived screening"));
    }
    let data = part(cfg, load_encoded(cfg)?, Part::Train)?;
    let tree = grow(&data, &outcome.kept, &cfg.cart)?;
    println!(
        "train: {} rows, {} features, {} nodes, depth {}",
        data.n(),
        outcome.kept.len(),
        tree.node_count(),
        tree.depth()
    );
    let text = config_header(&cfg.cart) + &export_text(&tree);
    Ok(vec![
        write(&cfg.out.join("model.cart"), serialize(&tree).as_bytes())?,
        write(&cfg.out.join("tree.dot"), export_dot(&tree).as_bytes())?,
        write(&cfg.out.join("tree.txt"), text.as_bytes())?,
    ])
}

fn load_model(path: &Path) -> Result<CartTree, CliError> {
    require(Some(&path.to_path_buf()), "model file")?;
    let text = fs::read_to_string(path)?;
    deserialize(&text).map_err(|e| CliError::from(e).context(&path.display().to_string()))
}

fn warn_unseen(row: usize, unseen: &[solvency_core::cart::UnseenCode]) {
    for u in unseen {
        eprintln!(
            "warning: row {row}: code {} of {} was not seen in training at node {}; sent right",
            u.code, u.feature, u.node
        );
    }
}

/// `actual,predicted[,score]` rows; a missing score defaults to the
/// predicted class.
fn read_predictions(path: &Path) -> Result<Vec<(u8, u8, f64)>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(a), Some(p)) = (col("actual"), col("predicted")) else {
        return Err(CliError::data(format!(
            "{} needs columns actual,predicted[,score]",
            path.display()
        )));
    };
    let s = col("score");
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let label = |k: usize| -> Result<u8, CliError> {
            match rec.get(k).map(str::trim) {
                Some("0") => Ok(0),
                Some("1") => Ok(1),
                other => Err(CliError::data(format!("row {i}: label {other:?} is not 0 or 1"))),
            }
        };
        let (actual, predicted) = (label(a)?, label(p)?);
        let score = match s {
            Some(k) => rec
                .get(k)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| CliError::data(format!("row {i}: bad score")))?,
            None => predicted as f64,
        };
        rows.push((actual, predicted, score));
    }
    Ok(rows)
}

pub fn eval(cfg: &Effective) -> Result<Vec<PathBuf>, CliError> {
    let (rows, scope) = match &cfg.predictions {
        Some(p) => (read_predictions(require(Some(p), "predictions file")?)?, "injected predictions".to_string()),
        None => {
            let tree = load_model(&cfg.model)?;
            if tree.config.mode != Mode::Classification {
                return Err(CliError::config("eval needs a classification model"));
            }
            let data = part(cfg, load_encoded(cfg)?, Part::Holdout)?;
            let actual = data.binary_targets()?;
            let predictions = tree.predict_dataset(&data)?;
            let mut rows = Vec::with_capacity(actual.len());
            for (i, (y, p)) in actual.iter().zip(&predictions).enumerate() {
                warn_unseen(i, &p.unseen);
                let class = p.class().expect("classification tree");
                let score = match cfg.roc_mode {
                    RocMode::Proportion => p.score(),
                    RocMode::Hard => class as f64,
                };
                rows.push((*y, class, score));
            }
            let scope = match cfg.holdout {
                Some(f) => format!("holdout rows (seeded split, fraction {f}, seed {}; not the training data)", cfg.seed()),
                None => "the training data".to_string(),
            };
            (rows, scope)
        }
    };
    let report: EvaluationReport = evaluate(&rows)?;
    let roc_label = match cfg.roc_mode {
        RocMode::Proportion => "leaf proportions",
        RocMode::Hard => "hard labels",
    };
    let table = format!(
        "Evaluated on {scope}: {} rows; ROC scores from {roc_label}\n\n{}",
        rows.len(),
        report.to_table()
    );
    println!(
        "eval: {} rows, accuracy {}",
        rows.len(),
        report.metrics.map_or("n/a".into(), |m| format!("{:.4}", m.accuracy))
    );
    let roc = report.roc.as_ref().map_or_else(|| "fpr\ttpr\n".to_string(), |r| r.to_tsv());
    Ok(vec![
        write(&cfg.out.join("evaluation.json"), report.to_json().as_bytes())?,
        write(&cfg.out.join("evaluation.txt"), table.as_bytes())?,
        write(&cfg.out.join("roc.tsv"), roc.as_bytes())?,
    ])
}

pub fn predict(cfg: &Effective) -> Result<Vec<PathBuf>, CliError> {
    let tree = load_model(&cfg.model)?;
    let input = require(cfg.input.as_ref(), "input file")?;
    let book = match &cfg.codebook {
        Some(p) => Some(CodeBook::read_csv(require(Some(p), "codebook")?)?),
        None => None,
    };
    let out_path = cfg.output.clone().unwrap_or_else(|| cfg.out.join("predictions.csv"));

    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(input)?;
    let mut records = reader.records();
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = match records.next() {
        Some(h) => h?.iter().map(|s| s.trim().to_string()).collect(),
        None => {
            // empty file: header only
            writer.write_record(["predicted_class", "score"])?;
            let bytes = writer.into_inner().map_err(|e| CliError::data(e.to_string()))?;
            println!("predict: 0 rows");
            return Ok(vec![write(&out_path, &bytes)?]);
        }
    };
    let positions: Vec<usize> = tree
        .features
        .iter()
        .map(|f| {
            header
                .iter()
                .position(|h| *h == f.name)
                .ok_or_else(|| CliError::data(format!("schema mismatch: input lacks feature {}", f.name)))
        })
        .collect::<Result<_, _>>()?;
    let mut out_header = header.clone();
    out_header.extend(["predicted_class".to_string(), "score".to_string()]);
    writer.write_record(&out_header)?;

    let mut n = 0;
    for (row, rec) in records.enumerate() {
        let rec = rec?;
        let mut values = Vec::with_capacity(positions.len());
        for (f, &k) in tree.features.iter().zip(&positions) {
            let cell = rec.get(k).map(str::trim).unwrap_or("");
            let value = match cell.parse::<f64>() {
                Ok(v) => v,
                Err(_) => match (&book, f.kind) {
                    (Some(b), FeatureKind::Categorical { .. }) => b.encode(&f.name, cell).map(|c| c as f64).ok_or_else(|| {
                        CliError::data(format!("row {row}: unknown label {cell:?} for {}", f.name))
                    })?,
                    _ => return Err(CliError::data(format!("row {row}: value {cell:?} of {} is not a number", f.name))),
                },
            };
            values.push(value);
        }
        let p = tree.predict_values(&values)?;
        warn_unseen(row, &p.unseen);
        let mut out: Vec<String> = rec.iter().map(str::to_string).collect();
        out.push(p.class().map_or(String::new(), |c| c.to_string()));
        out.push(format!("{}", p.score()));
        writer.write_record(&out)?;
        n += 1;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::data(e.to_string()))?;
    println!("predict: {n} rows");
    Ok(vec![write(&out_path, &bytes)?])
}

pub fn synth(cfg: &Effective) -> Result<Vec<PathBuf>, CliError> {
    let mut spec = match &cfg.spec {
        Some(p) => {
            let text = fs::read_to_string(require(Some(p), "synthetic spec")?)?;
            toml::from_str::<SynthSpec>(&text)
                .map_err(|e| CliError::config(format!("invalid synthetic spec {}: {e}", p.display())))?
        }
        None => SynthSpec::credit(4000, 0.0, 0),
    };
    if let Some(r) = cfg.rows {
        spec.rows = r;
    }
    if let Some(x) = cfg.noise {
        spec.noise = x;
    }
    if let Some(m) = cfg.missing_rate {
        spec.missing_rate = m;
    }
    if let Some(s) = cfg.seed {
        spec.seed = s;
    }
    spec.target = cfg.target.clone();
    let data = generate(&spec)?;
    let csv_path = cfg.output.clone().unwrap_or_else(|| cfg.out.join("synthetic.csv"));
    let flips = data.flipped.iter().filter(|&&f| f).count();
    println!("synth: {} rows, {} labels flipped, seed {}", spec.rows, flips, spec.seed);
    Ok(vec![
        write(&csv_path, &csv_bytes(|b| data.raw.write_csv(b))?)?,
        write(&cfg.out.join("codebook.csv"), &csv_bytes(|b| data.codebook.write_csv(b))?)?,
        write(
            &cfg.out.join("synthetic_schema.csv"),
            &csv_bytes(|b| data.raw.schema().write_csv(b))?,
        )?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Completed,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub seconds: f64,
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Manifest {
    pub exit_code: i32,
    pub stages: Vec<StageRecord>,
    pub config: Effective,
}

fn display_path(out: &Path, p: &Path) -> String {
    p.strip_prefix(out).unwrap_or(p).display().to_string()
}

pub const PIPELINE_STAGES: [&str; 4] = ["encode", "screen", "train", "eval"];

/// encode, screen, train and eval in order; the first failure stops the
/// run and later stages are marked skipped. The manifest is written in
/// every case.
pub fn pipeline(cfg: &Effective) -> Manifest {
    let stages: [fn(&Effective) -> Result<Vec<PathBuf>, CliError>; 4] = [encode, screen, train, eval];
    let mut records = Vec::new();
    let mut exit_code = EXIT_OK;
    for (name, stage) in PIPELINE_STAGES.iter().zip(stages) {
        if exit_code != EXIT_OK {
            records.push(StageRecord {
                name: name.to_string(),
                status: StageStatus::Skipped,
                seconds: 0.0,
                artifacts: Vec::new(),
                error: None,
            });
            continue;
        }
        let start = Instant::now();
        let result = stage(cfg);
        let seconds = start.elapsed().as_secs_f64();
        match result {
            Ok(paths) => records.push(StageRecord {
                name: name.to_string(),
                status: StageStatus::Completed,
                seconds,
                artifacts: paths.iter().map(|p| display_path(&cfg.out, p)).collect(),
                error: None,
            }),
            Err(e) => {
                eprintln!("error: {name}: {e}");
                exit_code = e.code;
                records.push(StageRecord {
                    name: name.to_string(),
                    status: StageStatus::Failed,
                    seconds,
                    artifacts: Vec::new(),
                    error: Some(e.message),
                });
            }
        }
    }
    Manifest {
        exit_code,
        stages: records,
        config: cfg.clone(),
    }
}

pub fn write_manifest(cfg: &Effective, manifest: &Manifest) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("manifest.json");
    let mut f = fs::File::create(&path)?;
    f.write_all(text.as_bytes())?;
    Ok(path)
}
