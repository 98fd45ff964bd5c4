use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use solvency_core::eval::{auc_se_ci, confusion, error_rates, metrics, roc, ConfusionMatrix};

fn mann_whitney(pairs: &[(u8, f64)]) -> f64 {
    let pos: Vec<f64> = pairs.iter().filter(|p| p.0 == 1).map(|p| p.1).collect();
    let neg: Vec<f64> = pairs.iter().filter(|p| p.0 == 0).map(|p| p.1).collect();
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

fn scored_pairs() -> impl Strategy<Value = Vec<(u8, f64)>> {
    // scores on a coarse grid so ties are common
    prop::collection::vec((0u8..=1, prop_oneof![(0u32..=10).prop_map(|k| k as f64 / 10.0), 0.0f64..=1.0]), 2..200)
        .prop_filter("both classes", |v| v.iter().any(|p| p.0 == 0) && v.iter().any(|p| p.0 == 1))
}

fn matrices() -> impl Strategy<Value = ConfusionMatrix> {
    (0u64..5000, 0u64..5000, 0u64..5000, 0u64..5000)
        .prop_map(|(a, b, c, d)| ConfusionMatrix::new(a, b, c, d))
        .prop_filter("both classes", |m| m.n0() > 0 && m.n1() > 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn auc_equals_mann_whitney(pairs in scored_pairs()) {
        let curve = roc(&pairs).unwrap();
        prop_assert!((curve.auc - mann_whitney(&pairs)).abs() < 1e-9);
    }

    #[test]
    fn roc_is_monotone_from_origin_to_corner(pairs in scored_pairs()) {
        let curve = roc(&pairs).unwrap();
        prop_assert_eq!(curve.points.first(), Some(&(0.0, 0.0)));
        prop_assert_eq!(curve.points.last(), Some(&(1.0, 1.0)));
        for w in curve.points.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
        prop_assert!(curve.ci95.0 <= curve.auc && curve.auc <= curve.ci95.1);
    }

    #[test]
    fn label_flip_duality(pairs in scored_pairs()) {
        let a = roc(&pairs).unwrap().auc;
        let flipped: Vec<(u8, f64)> = pairs.iter().map(|&(y, s)| (1 - y, s)).collect();
        let both: Vec<(u8, f64)> = pairs.iter().map(|&(y, s)| (1 - y, 1.0 - s)).collect();
        prop_assert!((roc(&flipped).unwrap().auc - (1.0 - a)).abs() < 1e-9);
        prop_assert!((roc(&both).unwrap().auc - a).abs() < 1e-9);
    }

    #[test]
    fn e3_identity_and_accuracy(cm in matrices()) {
        let r = error_rates(&cm).unwrap();
        let m = metrics(&cm).unwrap();
        // e3 N = e1 N1 + e2 N0 in integers: FN + FP on both sides
        let (n, n1, n0) = (cm.total() as f64, cm.n1() as f64, cm.n0() as f64);
        prop_assert_eq!((r.e1 * n1).round() + (r.e2 * n0).round(), (r.e3 * n).round());
        prop_assert!((r.e3 * n - (r.e1 * n1 + r.e2 * n0)).abs() < 1e-9 * n);
        prop_assert!((m.accuracy + r.e3 - 1.0).abs() < 1e-12);
        prop_assert!((m.sensitivity + r.e1 - 1.0).abs() < 1e-12);
        prop_assert!((m.specificity + r.e2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn confusion_matches_tally(pairs in prop::collection::vec((0u8..=1, 0u8..=1), 1..300)) {
        let cm = confusion(&pairs).unwrap();
        let count = |a: u8, p: u8| pairs.iter().filter(|&&x| x == (a, p)).count() as u64;
        prop_assert_eq!(cm, ConfusionMatrix::new(count(1, 1), count(0, 0), count(0, 1), count(1, 0)));
        prop_assert_eq!(cm.total(), pairs.len() as u64);
    }
}

#[test]
fn hanley_mcneil_agrees_with_bootstrap() {
    let mut rng = ChaCha8Rng::seed_from_u64(715);
    // binormal scores with separation giving a population AUC of 0.715
    let d = 2f64.sqrt() * 0.5681;
    let sigmoid = |x: f64| 1.0 / (1.0 + (-x).exp());
    let neg: Vec<f64> = (0..50).map(|_| sigmoid(Normal::new(0.0, 1.0).unwrap().sample(&mut rng))).collect();
    let pos: Vec<f64> = (0..50).map(|_| sigmoid(Normal::new(d, 1.0).unwrap().sample(&mut rng))).collect();
    let pairs: Vec<(u8, f64)> = neg.iter().map(|&s| (0, s)).chain(pos.iter().map(|&s| (1, s))).collect();
    let sample_auc = roc(&pairs).unwrap().auc;

    let mut aucs = Vec::with_capacity(10_000);
    let mut draw = Vec::with_capacity(100);
    for _ in 0..10_000 {
        draw.clear();
        draw.extend((0..50).map(|_| (0u8, neg[rng.random_range(0..50)])));
        draw.extend((0..50).map(|_| (1u8, pos[rng.random_range(0..50)])));
        aucs.push(roc(&draw).unwrap().auc);
    }
    let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
    let boot = (aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (aucs.len() - 1) as f64).sqrt();

    let (at_sample, _) = auc_se_ci(sample_auc, 50, 50).unwrap();
    let (at_reference, _) = auc_se_ci(0.715, 50, 50).unwrap();
    assert!((at_sample - boot).abs() / boot < 0.2, "sample auc {sample_auc}: HM {at_sample} vs bootstrap {boot}");
    assert!((at_reference - boot).abs() / boot < 0.2, "HM(0.715) {at_reference} vs bootstrap {boot}");
}
