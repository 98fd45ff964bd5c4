use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use solvency_core::dataset::{Dataset, FeatureKind, Schema};
use solvency_core::screening::logistic::{fit_irls, gradient, log_likelihood};
use solvency_core::screening::{
    chi_square_sf_1df, fit_logistic, pearson, run_screening, screen, wald_table, CorrelationMatrix, DropReason,
    LogisticOptions, ScreeningConfig, WaldRow,
};

const TRUTH: [f64; 4] = [-0.5, 0.8, 1.2, -0.6];

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Rows of `(1, x1, x2, x3)` with labels drawn from the logistic model.
fn logistic_sample(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = vec![1.0];
        row.extend((0..3).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
        let eta: f64 = row.iter().zip(TRUTH).map(|(a, b)| a * b).sum();
        y.push(f64::from(u8::from(rng.random::<f64>() < sigmoid(eta))));
        x.push(row);
    }
    (x, y)
}

/// Fixed-step gradient ascent, step below 1/L with L bounding the Hessian
/// norm by a Gershgorin sum of X'X / 4.
fn gradient_ascent(x: &[Vec<f64>], y: &[f64], tol: f64) -> Vec<f64> {
    let p = x[0].len();
    let mut xtx = vec![vec![0.0; p]; p];
    for row in x {
        for i in 0..p {
            for j in 0..p {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    let lipschitz = xtx.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max) / 4.0;
    let step = 1.0 / lipschitz;
    let mut beta = vec![0.0; p];
    for _ in 0..2_000_000 {
        let mut g = vec![0.0; p];
        for (row, &yi) in x.iter().zip(y) {
            let r = yi - sigmoid(row.iter().zip(&beta).map(|(a, b)| a * b).sum());
            for j in 0..p {
                g[j] += r * row[j];
            }
        }
        let mut change: f64 = 0.0;
        for j in 0..p {
            beta[j] += step * g[j];
            change = change.max((step * g[j]).abs());
        }
        if change < tol {
            return beta;
        }
    }
    panic!("gradient ascent did not converge");
}

fn names3() -> Vec<String> {
    vec!["x1".into(), "x2".into(), "x3".into()]
}

#[test]
fn irls_matches_gradient_ascent_oracle() {
    let (x, y) = logistic_sample(11, 2000);
    let fit = fit_irls(&x, &y, &names3(), &LogisticOptions::default()).unwrap();
    assert!(fit.converged);
    let g = gradient(&x, &y, &fit.coefficients);
    assert!(g.iter().all(|v| v.abs() < 1e-6), "gradient {g:?}");
    let oracle = gradient_ascent(&x, &y, 1e-10);
    for (a, b) in fit.coefficients.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-6, "irls {a} vs oracle {b}");
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let (x, y) = logistic_sample(5, 500);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..5 {
        let beta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.5..1.5)).collect();
        let g = gradient(&x, &y, &beta);
        for j in 0..4 {
            let h = 1e-5;
            let mut up = beta.clone();
            let mut down = beta.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (log_likelihood(&x, &y, &up) - log_likelihood(&x, &y, &down)) / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1.0), "j={j}: fd {fd} vs {}", g[j]);
        }
    }
}

#[test]
fn coefficients_recovered_within_three_standard_errors() {
    let mut hits = [0; 4];
    for seed in 0..20 {
        let (x, y) = logistic_sample(1000 + seed, 2000);
        let fit = fit_irls(&x, &y, &names3(), &LogisticOptions::default()).unwrap();
        for j in 0..4 {
            if (fit.coefficients[j] - TRUTH[j]).abs() <= 3.0 * fit.std_errors[j] {
                hits[j] += 1;
            }
        }
    }
    assert!(hits.iter().all(|&h| h >= 18), "{hits:?}");
}

fn dataset(x: &[Vec<f64>], y: &[f64], names: &[&str]) -> Dataset {
    let schema = Schema::new(names.iter().map(|n| (*n, FeatureKind::Numeric))).unwrap();
    let rows = x.iter().zip(y).map(|(r, &t)| r[1..].iter().copied().chain([t]).collect()).collect();
    Dataset::from_values(schema, "y", rows).unwrap()
}

#[test]
fn wald_is_invariant_to_label_flip() {
    let (x, y) = logistic_sample(3, 800);
    let flipped: Vec<f64> = y.iter().map(|v| 1.0 - v).collect();
    let opts = LogisticOptions::default();
    let a = wald_table(&fit_irls(&x, &y, &names3(), &opts).unwrap());
    let b = wald_table(&fit_irls(&x, &flipped, &names3(), &opts).unwrap());
    for (ra, rb) in a.rows.iter().zip(&b.rows).chain([(&a.intercept, &b.intercept)]) {
        assert!((ra.b + rb.b).abs() < 1e-9);
        assert!((ra.wald - rb.wald).abs() < 1e-8 * ra.wald.max(1.0));
    }
}

#[test]
fn pure_noise_variable_is_dropped() {
    let mut dropped = 0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..1000)
            .map(|_| {
                let signal: f64 = StandardNormal.sample(&mut rng);
                let noise: f64 = StandardNormal.sample(&mut rng);
                let y = f64::from(u8::from(rng.random::<f64>() < sigmoid(1.5 * signal)));
                vec![signal, noise, y]
            })
            .collect();
        let schema = Schema::new([("signal", FeatureKind::Numeric), ("noise", FeatureKind::Numeric)]).unwrap();
        let d = Dataset::from_values(schema, "y", rows).unwrap();
        let report = run_screening(&d, &["signal".into(), "noise".into()], &ScreeningConfig::default()).unwrap();
        assert!(report.outcome.kept.contains(&"signal".to_string()));
        if report
            .outcome
            .dropped
            .iter()
            .any(|(n, r)| n == "noise" && matches!(r, DropReason::NotSignificant { sig } if *sig > 0.05))
        {
            dropped += 1;
        }
    }
    assert!(dropped >= 18, "noise dropped in {dropped}/20");
}

#[test]
fn duplicated_column_is_dropped_as_correlated() {
    let (x, y) = logistic_sample(8, 600);
    let rows: Vec<Vec<f64>> = x.iter().map(|r| vec![1.0, r[1], r[2], r[1]]).collect();
    let d = dataset(&rows, &y, &["x1", "x2", "x1_copy"]);
    let vars: Vec<String> = ["x1", "x2", "x1_copy"].iter().map(|s| s.to_string()).collect();
    // a joint fit cannot separate identical columns
    assert!(fit_logistic(&d, &vars, &LogisticOptions::default()).is_err());
    let cfg = ScreeningConfig { per_variable: true, ..ScreeningConfig::default() };
    let report = run_screening(&d, &vars, &cfg).unwrap();
    assert_eq!(report.outcome.kept, vec!["x1".to_string(), "x2".to_string()]);
    match &report.outcome.dropped[..] {
        [(name, DropReason::Correlated { partner, r })] => {
            assert_eq!((name.as_str(), partner.as_str()), ("x1_copy", "x1"));
            assert!((r - 1.0).abs() < 1e-12);
        }
        other => panic!("unexpected drops {other:?}"),
    }
}

#[test]
fn independent_informative_variables_are_all_kept() {
    let (x, y) = logistic_sample(21, 2000);
    let d = dataset(&x, &y, &["x1", "x2", "x3"]);
    let report = run_screening(&d, &names3(), &ScreeningConfig::default()).unwrap();
    assert_eq!(report.outcome.kept, names3());
    assert!(report.outcome.dropped.is_empty());
}

proptest! {
    #[test]
    fn pearson_affine_invariance(
        pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..60),
        a in 0.01f64..50.0, b in -100.0f64..100.0, c in 0.01f64..50.0, d in -100.0f64..100.0,
    ) {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let Ok(r) = pearson(&xs, &ys) else { return Ok(()) };
        let xt: Vec<f64> = xs.iter().map(|v| a * v + b).collect();
        let yt: Vec<f64> = ys.iter().map(|v| c * v + d).collect();
        prop_assert!((pearson(&xt, &yt).unwrap() - r).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&r));
    }

    #[test]
    fn chi_square_tail_decreases(x in 0.0f64..60.0, dx in 1e-6f64..5.0) {
        let a = chi_square_sf_1df(x).unwrap();
        let b = chi_square_sf_1df(x + dx).unwrap();
        prop_assert!(b < a);
        prop_assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn screen_partitions_candidates(
        sigs in prop::collection::vec(0.0f64..0.2, 1..10),
        seed in any::<u64>(),
        threshold in 0.3f64..0.95,
    ) {
        let k = sigs.len();
        let names: Vec<String> = (0..k).map(|i| format!("v{i}")).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = vec![vec![1.0; k]; k];
        for i in 0..k {
            for j in i + 1..k {
                let r = rng.random_range(-1.0..1.0);
                m[i][j] = r;
                m[j][i] = r;
            }
        }
        let wald: Vec<WaldRow> = names.iter().zip(&sigs).map(|(n, &s)| WaldRow { sig: s, ..WaldRow::new(n.clone(), 1.0, 1.0) }).collect();
        let out = screen(&wald, &CorrelationMatrix::from_values(names.clone(), m).unwrap(), 0.05, threshold);
        let mut all: Vec<String> = out.kept.clone();
        all.extend(out.dropped.iter().map(|(n, _)| n.clone()));
        all.sort();
        let mut want = names.clone();
        want.sort();
        prop_assert_eq!(all, want);
        for v in &out.kept {
            prop_assert!(!out.dropped.iter().any(|(n, _)| n == v));
        }
    }
}
