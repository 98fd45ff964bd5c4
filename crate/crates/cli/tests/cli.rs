use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn solvency(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solvency"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A 600-row synthetic credit file with its codebook under `data/`.
fn synth(dir: &Path) {
    let out = solvency(dir, &["synth", "--out", "data", "--rows", "600", "--seed", "4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

const INPUT: [&str; 4] = ["--input", "data/synthetic.csv", "--codebook", "data/codebook.csv"];

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

#[test]
fn stages_one_by_one_match_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    let out = solvency(dir, &[&["pipeline", "--out", "p", "--holdout", "0.3", "--seed", "9"], &INPUT[..]].concat());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let steps: [&[&str]; 4] = [&["encode"], &["screen"], &["train"], &["eval"]];
    for step in steps {
        let mut args = step.to_vec();
        args.extend(["--out", "s", "--holdout", "0.3", "--seed", "9"]);
        if step == ["encode"] {
            args.extend(INPUT);
            args.retain(|a| *a != "--holdout" && *a != "0.3");
        }
        let out = solvency(dir, &args);
        assert_eq!(code(&out), 0, "{step:?}: {}", stderr(&out));
    }
    for file in [
        "encoded.csv", "schema.csv", "cleaning.log", "wald.csv", "correlation.csv", "screening.csv", "model.cart", "tree.dot",
        "tree.txt", "evaluation.json", "evaluation.txt", "roc.tsv",
    ] {
        assert_eq!(read(dir, &format!("p/{file}")), read(dir, &format!("s/{file}")), "{file}");
    }
    let manifest: Value = serde_json::from_str(&read(dir, "p/manifest.json")).unwrap();
    assert_eq!(manifest["exit-code"], 0);
    let statuses: Vec<&str> = manifest["stages"].as_array().unwrap().iter().map(|s| s["status"].as_str().unwrap()).collect();
    assert_eq!(statuses, ["completed"; 4]);
    assert_eq!(manifest["config"]["holdout"], 0.3);
    assert!(read(dir, "p/evaluation.txt").contains("holdout rows"));
}

#[test]
fn holdout_split_follows_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    for (out, seed) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let o = solvency(dir, &[&["pipeline", "--out", out, "--holdout", "0.25", "--seed", seed], &INPUT[..]].concat());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(read(dir, "a/evaluation.json"), read(dir, "b/evaluation.json"));
    assert_eq!(read(dir, "a/model.cart"), read(dir, "b/model.cart"));
    // a different seed trains on different rows
    assert_ne!(read(dir, "a/model.cart"), read(dir, "c/model.cart"));
    let doc: Value = serde_json::from_str(&read(dir, "a/evaluation.json")).unwrap();
    let total: u64 = ["vp", "vn", "fp", "fn"].iter().map(|k| doc[k].as_u64().unwrap()).sum();
    assert_eq!(total, 150);
}

#[test]
fn pipeline_failure_marks_later_stages_skipped() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    // six is above the default ceiling for the node-size limit
    let o = solvency(dir, &[&["pipeline", "--out", "p", "--min-node-size", "6"], &INPUT[..]].concat());
    assert_eq!(code(&o), 2);
    let manifest: Value = serde_json::from_str(&read(dir, "p/manifest.json")).unwrap();
    let statuses: Vec<&str> = manifest["stages"].as_array().unwrap().iter().map(|s| s["status"].as_str().unwrap()).collect();
    assert_eq!(statuses, ["completed", "completed", "failed", "skipped"]);
    assert_eq!(manifest["exit-code"], 2);
    assert!(manifest["stages"][2]["error"].as_str().unwrap().contains("min"));

    let o = solvency(
        dir,
        &[&["pipeline", "--out", "q", "--min-node-size", "6", "--allow-large-min-node-size"], &INPUT[..]].concat(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(read(dir, "q/tree.txt").starts_with("# min-node-size 6, max-depth 10 (default)"));
}

#[test]
fn configuration_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&solvency(dir, &["encode"])), 2);
    assert_eq!(code(&solvency(dir, &["encode", "--input", "nope.csv", "--skip-codebook"])), 2);
    assert_eq!(code(&solvency(dir, &["train"])), 2);
    assert_eq!(code(&solvency(dir, &["screen", "--alpha", "1.5"])), 2);
    assert_eq!(code(&solvency(dir, &["eval", "--holdout", "0"])), 2);
    assert_eq!(code(&solvency(dir, &["frobnicate"])), 2);
    assert_eq!(code(&solvency(dir, &["--help"])), 0);
    fs::write(dir.join("bad.toml"), "alhpa = 0.1\n").unwrap();
    assert_eq!(code(&solvency(dir, &["screen", "--config", "bad.toml"])), 2);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    fs::write(
        dir.join("run.toml"),
        "input = \"data/synthetic.csv\"\ncodebook = \"data/codebook.csv\"\nout = \"from-file\"\nmax-depth = 1\n",
    )
    .unwrap();
    let o = solvency(dir, &["pipeline", "--config", "run.toml", "--out", "from-flag"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!dir.join("from-file").exists());
    let manifest: Value = serde_json::from_str(&read(dir, "from-flag/manifest.json")).unwrap();
    assert_eq!(manifest["config"]["cart"]["max-depth"], 1);
    assert_eq!(read(dir, "from-flag/tree.txt").lines().filter(|l| l.contains("leaf")).count(), 2);
}

#[test]
fn predict_scores_rows_and_handles_edge_cases() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    let o = solvency(dir, &[&["pipeline", "--out", "p"], &INPUT[..]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    // labelled input scored through the codebook
    let o = solvency(
        dir,
        &["predict", "--model", "p/model.cart", "--input", "data/synthetic.csv", "--codebook", "data/codebook.csv", "--output", "pred.csv"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = read(dir, "pred.csv");
    let mut lines = text.lines();
    assert!(lines.next().unwrap().ends_with("TARGET,predicted_class,score"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 600);
    let correct = rows
        .iter()
        .filter(|r| {
            let f: Vec<&str> = r.split(',').collect();
            f[f.len() - 3] == f[f.len() - 2]
        })
        .count();
    assert_eq!(correct, 600);

    // empty input gives a header-only file
    fs::write(dir.join("empty.csv"), "").unwrap();
    let o = solvency(dir, &["predict", "--model", "p/model.cart", "--input", "empty.csv", "--output", "none.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read(dir, "none.csv"), "predicted_class,score\n");

    // missing model feature
    fs::write(dir.join("narrow.csv"), "CODE_GENDER\n1\n").unwrap();
    let o = solvency(dir, &["predict", "--model", "p/model.cart", "--input", "narrow.csv"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("schema mismatch"));

    // a code never seen in training is routed right with a warning
    let header = read(dir, "p/encoded.csv").lines().next().unwrap().to_string();
    let cols: Vec<&str> = header.split(',').collect();
    let row: Vec<&str> = cols
        .iter()
        .map(|c| match *c {
            "CODE_GENDER" => "7",
            "NAME_EDUCATION_TYPE" => "1",
            _ => "1",
        })
        .collect();
    fs::write(dir.join("unseen.csv"), format!("{header}\n{}\n", row.join(","))).unwrap();
    let o = solvency(dir, &["predict", "--model", "p/model.cart", "--input", "unseen.csv", "--output", "u.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("not seen in training"), "{}", stderr(&o));
}

#[test]
fn eval_reads_injected_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut text = String::from("actual,predicted\n");
    for (a, p, k) in [(1, 1, 1375), (0, 0, 1475), (0, 1, 517), (1, 0, 621)] {
        for _ in 0..k {
            text.push_str(&format!("{a},{p}\n"));
        }
    }
    fs::write(dir.join("pred.csv"), text).unwrap();
    let o = solvency(dir, &["eval", "--out", "e", "--predictions", "pred.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&read(dir, "e/evaluation.json")).unwrap();
    assert_eq!(doc["vp"], 1375);
    assert_eq!(doc["fn"], 621);
    assert!((doc["e1"].as_f64().unwrap() - 621.0 / 1996.0).abs() < 1e-12);
    assert!((doc["auc"].as_f64().unwrap() - 0.71467).abs() < 1e-4);

    // one class only: rates that need the other class are absent, ROC unavailable
    fs::write(dir.join("one.csv"), "actual,predicted\n1,1\n1,0\n").unwrap();
    let o = solvency(dir, &["eval", "--out", "f", "--predictions", "one.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read(dir, "f/roc.tsv"), "fpr\ttpr\n");
    let doc: Value = serde_json::from_str(&read(dir, "f/evaluation.json")).unwrap();
    assert_eq!(doc["roc_available"], false);

    fs::write(dir.join("bad.csv"), "actual,predicted\n2,1\n").unwrap();
    assert_eq!(code(&solvency(dir, &["eval", "--out", "g", "--predictions", "bad.csv"])), 3);
}

#[test]
fn duplicate_column_joint_fit_is_a_numeric_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut text = String::from("a,a_copy,b,TARGET\n");
    for i in 0..200 {
        let a = (i * 37 % 101) as f64 / 10.0;
        let b = (i * 53 % 89) as f64 / 10.0;
        let y = u8::from((a + (i % 7) as f64) > 8.0);
        text.push_str(&format!("{a},{a},{b},{y}\n"));
    }
    fs::write(dir.join("dup.csv"), text).unwrap();
    let o = solvency(dir, &["encode", "--out", "d", "--input", "dup.csv", "--skip-codebook"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = solvency(dir, &["screen", "--out", "d"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let o = solvency(dir, &["screen", "--out", "d", "--per-variable"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let screening = read(dir, "d/screening.csv");
    assert!(screening.contains("a_copy,dropped,correlated,a,1"), "{screening}");
}

#[test]
fn synth_spec_file_is_honoured() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("spec.toml"),
        r#"
rows = 50
seed = 3

[[features]]
name = "x"
kind = "uniform"
lo = 0.0
hi = 1.0

[rule]
feature = "x"
le = 0.5
left = { class = 0 }
right = { class = 1 }
"#,
    )
    .unwrap();
    let o = solvency(dir, &["synth", "--out", "s", "--spec", "spec.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = read(dir, "s/synthetic.csv");
    assert_eq!(text.lines().count(), 51);
    for line in text.lines().skip(1) {
        let (x, y) = line.split_once(',').unwrap();
        assert_eq!(y, if x.parse::<f64>().unwrap() <= 0.5 { "0" } else { "1" });
    }
    fs::write(dir.join("unknown.toml"), "rows = 5\n[[features]]\nname = \"x\"\nkind = \"uniform\"\nlo = 0\nhi = 1\n[rule]\nfeature = \"y\"\nle = 0.5\nleft = { class = 0 }\nright = { class = 1 }\n").unwrap();
    assert_eq!(code(&solvency(dir, &["synth", "--out", "t", "--spec", "unknown.toml"])), 2);
}

fn credit_codebook(dir: &Path) {
    let mut buf = Vec::new();
    solvency_core::codebook::CodeBook::credit().write_csv(&mut buf).unwrap();
    fs::write(dir.join("credit_codes.csv"), buf).unwrap();
}

#[test]
fn encode_applies_the_codebook() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    credit_codebook(dir);
    fs::write(
        dir.join("raw.csv"),
        "CODE_GENDER,FLAG_OWN_CAR,AMT_INCOME_TOTAL,TARGET\nF,Y,100,1\nM,N,,0\nM,Y,120,0\nF,N,110,1\n",
    )
    .unwrap();
    let o = solvency(dir, &["encode", "--out", "e", "--input", "raw.csv", "--codebook", "credit_codes.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        read(dir, "e/encoded.csv"),
        "CODE_GENDER,FLAG_OWN_CAR,AMT_INCOME_TOTAL,TARGET\n1,1,100,1\n0,1,120,0\n1,0,110,1\n"
    );
    assert_eq!(read(dir, "e/cleaning.log"), "1\tmissing value in AMT_INCOME_TOTAL\n");

    // already coded input passes through
    let o = solvency(dir, &["encode", "--out", "f", "--input", "e/encoded.csv", "--schema", "e/schema.csv", "--skip-codebook"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read(dir, "f/encoded.csv"), read(dir, "e/encoded.csv"));

    fs::write(dir.join("odd.csv"), "CODE_GENDER,AMT_INCOME_TOTAL,TARGET\nF,100,1\nX,90,0\n").unwrap();
    let o = solvency(dir, &["encode", "--out", "g", "--input", "odd.csv", "--codebook", "credit_codes.csv"]);
    assert_eq!(code(&o), 3);
    let msg = stderr(&o);
    assert!(msg.contains("CODE_GENDER") && msg.contains("\"X\"") && msg.contains("row 1"), "{msg}");
}

#[test]
fn missing_codebook_stops_the_pipeline_at_encode() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    let o = solvency(dir, &["pipeline", "--out", "p", "--input", "data/synthetic.csv"]);
    assert_eq!(code(&o), 2);
    let manifest: Value = serde_json::from_str(&read(dir, "p/manifest.json")).unwrap();
    let statuses: Vec<&str> = manifest["stages"].as_array().unwrap().iter().map(|s| s["status"].as_str().unwrap()).collect();
    assert_eq!(statuses, ["failed", "skipped", "skipped", "skipped"]);
}

fn without_timings(mut v: Value) -> Value {
    for s in v["stages"].as_array_mut().unwrap() {
        s["seconds"] = Value::Null;
    }
    v
}

#[test]
fn reruns_are_identical_apart_from_timings() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    let mut manifests = Vec::new();
    let mut models = Vec::new();
    for _ in 0..2 {
        let o = solvency(dir, &[&["pipeline", "--out", "p", "--holdout", "0.3", "--seed", "7"], &INPUT[..]].concat());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        manifests.push(without_timings(serde_json::from_str(&read(dir, "p/manifest.json")).unwrap()));
        models.push((read(dir, "p/model.cart"), read(dir, "p/evaluation.json"), read(dir, "p/roc.tsv")));
    }
    assert_eq!(manifests[0], manifests[1]);
    assert_eq!(models[0], models[1]);

    let a = solvency(dir, &["synth", "--out", "x", "--rows", "300", "--seed", "5", "--noise", "0.1"]);
    let b = solvency(dir, &["synth", "--out", "y", "--rows", "300", "--seed", "5", "--noise", "0.1"]);
    assert_eq!(code(&a) + code(&b), 0);
    assert_eq!(read(dir, "x/synthetic.csv"), read(dir, "y/synthetic.csv"));
}

#[test]
fn constant_target_trains_a_single_leaf() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut text = String::from("a,b,TARGET\n");
    for i in 0..40 {
        text.push_str(&format!("{},{},1\n", i % 9, i % 4));
    }
    fs::write(dir.join("flat.csv"), text).unwrap();
    let o = solvency(dir, &["encode", "--out", "c", "--input", "flat.csv", "--skip-codebook"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    fs::write(dir.join("c/screening.csv"), "variable,decision,reason,partner,value\na,kept,,,\nb,kept,,,\n").unwrap();
    let o = solvency(dir, &["train", "--out", "c"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let model = solvency_core::cart::deserialize(&read(dir, "c/model.cart")).unwrap();
    assert_eq!(model.node_count(), 1);

    // a kept variable the data does not have
    fs::write(dir.join("c/screening.csv"), "variable,decision,reason,partner,value\nzzz,kept,,,\n").unwrap();
    assert_eq!(code(&solvency(dir, &["train", "--out", "c"])), 3);
}
