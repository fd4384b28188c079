use std::collections::HashSet;

use proptest::prelude::*;
use visarith_core::geometry::{derive_stream, StreamPath};
use visarith_core::probe::*;

fn brute_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut hits, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if si > sj {
                    hits += 1.0;
                } else if si == sj {
                    hits += 0.5;
                }
            }
        }
    }
    hits / pairs
}

#[test]
fn auc_matches_pair_enumeration() {
    let mut st = derive_stream(1, StreamPath::new(98, 0, 0));
    let mut checked = 0;
    while checked < 1000 {
        let n = 2 + st.index(199);
        // coarse grid forces ties
        let levels = 1 + st.index(20) as i64;
        let scores: Vec<f64> = (0..n).map(|_| st.int_inclusive(0, levels) as f64 / levels as f64).collect();
        let labels: Vec<u8> = (0..n).map(|_| u8::from(st.coin())).collect();
        if labels.iter().all(|&l| l == labels[0]) {
            continue;
        }
        assert_eq!(compute_auc(&scores, &labels).unwrap(), brute_auc(&scores, &labels));
        checked += 1;
    }
}

#[test]
fn separable_embeddings_probe_cleanly() {
    let [train, dev, test] = split_records(synthetic_embeddings(12_000, 64, 1.0, 3, false), [10, 1, 1]);
    assert_eq!((train.len(), dev.len(), test.len()), (10_000, 1_000, 1_000));
    let (probe, report) = run_probe("synthetic", &train, &dev, &test, &ProbeParams::default()).unwrap();
    assert!(report.test_acc >= 0.99, "{}", report.test_acc);
    assert!(report.auc >= 0.99);
    assert_eq!(report.dev_trace.len(), 201);
    assert!(report.dev_trace.iter().all(|&a| a <= report.dev_acc));
    let first_best = report.dev_trace.iter().position(|&a| a == report.dev_acc).unwrap();
    assert_eq!(first_best as u32, report.best_epoch);
    let (again, _) = run_probe("synthetic", &train, &dev, &test, &ProbeParams::default()).unwrap();
    assert_eq!(probe, again);
}

#[test]
fn shuffled_labels_stay_at_chance() {
    let [train, dev, test] = split_records(synthetic_embeddings(12_000, 64, 1.0, 3, true), [10, 1, 1]);
    let (_, report) = run_probe("shuffled", &train, &dev, &test, &ProbeParams::default()).unwrap();
    assert!((report.test_acc - 0.5).abs() <= 0.05, "{}", report.test_acc);
}

#[test]
fn zero_epochs_is_exactly_half() {
    let [train, dev, test] = split_records(synthetic_embeddings(1_200, 16, 1.0, 9, false), [10, 1, 1]);
    let params = ProbeParams { epochs: 0, ..Default::default() };
    let (probe, report) = run_probe("zero", &train, &dev, &test, &params).unwrap();
    assert_eq!(probe, LinearProbe::zeros(16));
    assert_eq!(report.test_acc, 0.5);
    assert_eq!(report.best_epoch, 0);
    assert!(scores(&probe, &test).iter().all(|&s| s == 0.5));
}

#[test]
fn complemented_labels_flip_accuracy() {
    let [train, dev, test] = split_records(synthetic_embeddings(1_200, 8, 0.2, 4, false), [10, 1, 1]);
    let params = ProbeParams { epochs: 3, ..Default::default() };
    let (probe, _) = train_probe(&train, &dev, &params).unwrap();
    let acc = evaluate_accuracy(&probe, &test).unwrap();
    let flipped: Vec<_> = test.iter().cloned().map(|mut r| { r.label = 1 - r.label; r }).collect();
    assert!((evaluate_accuracy(&probe, &flipped).unwrap() - (1.0 - acc)).abs() < 1e-12);
}

#[test]
fn training_rejects_bad_input() {
    let recs = synthetic_embeddings(20, 4, 1.0, 1, false);
    let ones: Vec<_> = recs.iter().filter(|r| r.label == 1).cloned().collect();
    assert!(matches!(train_probe(&ones, &recs, &ProbeParams::default()), Err(ProbeError::SingleClass)));
    let short = synthetic_embeddings(20, 3, 1.0, 1, false);
    assert!(matches!(train_probe(&recs, &short, &ProbeParams::default()), Err(ProbeError::Dimension { .. })));
    assert!(matches!(evaluate_accuracy(&LinearProbe::zeros(4), &[]), Err(ProbeError::Empty)));
}

#[test]
fn vemb_round_trip_and_faults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.vemb");
    let recs = synthetic_embeddings(30, 5, 1.0, 2, false);
    write_vemb(&path, &recs).unwrap();
    assert_eq!(read_vemb(&path).unwrap(), recs);

    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"VEMB");
    assert_eq!(bytes.len(), 20 + 30 * 5 * 4);
    std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
    assert!(matches!(read_vemb(&path), Err(ProbeError::Truncated { .. })));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(read_vemb(&path), Err(ProbeError::BadMagic(_))));

    let ids: HashSet<String> = recs.iter().skip(1).map(|r| r.id.clone()).collect();
    assert!(matches!(check_ids(&recs, &ids), Err(ProbeError::UnknownId(id)) if id == recs[0].id));
}

proptest! {
    #[test]
    fn auc_ignores_monotone_transforms(
        raw in proptest::collection::vec((0u8..30, any::<bool>()), 2..200),
        a in 0.1f64..5.0, b in -3.0f64..3.0,
    ) {
        let scores: Vec<f64> = raw.iter().map(|(s, _)| f64::from(*s) / 10.0).collect();
        let labels: Vec<u8> = raw.iter().map(|(_, l)| u8::from(*l)).collect();
        prop_assume!(labels.iter().any(|&l| l == 1) && labels.iter().any(|&l| l == 0));
        let t: Vec<f64> = scores.iter().map(|s| (a * s + b).exp()).collect();
        prop_assert_eq!(compute_auc(&scores, &labels).unwrap(), compute_auc(&t, &labels).unwrap());
        prop_assert_eq!(compute_auc(&scores, &labels).unwrap(), brute_auc(&scores, &labels));
    }
}
