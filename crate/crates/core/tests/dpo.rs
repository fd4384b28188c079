use proptest::prelude::*;
use visarith_core::cogalign::{evaluate, parse_statement, signed_margin};
use visarith_core::dpo::*;
use visarith_core::geometry::{derive_stream, StreamPath};

fn lp(tp: f64, tn: f64, rp: f64, rn: f64) -> PreferenceLogProbs {
    PreferenceLogProbs { logp_theta_pos: tp, logp_theta_neg: tn, logp_ref_pos: rp, logp_ref_neg: rn }
}

/// -log(sigmoid(x)) written out directly, for moderate x only.
fn neg_log_sigmoid(x: f64) -> f64 {
    -(1.0 / (1.0 + (-x).exp())).ln()
}

#[test]
fn loss_at_reference_is_ln2() {
    let mut st = derive_stream(1, StreamPath::new(99, 0, 0));
    let pairs = random_pairs(64, 6, 3, &mut st);
    let reference = ToyPolicy { weights: (0..6).map(|_| st.uniform(-1.0, 1.0)).collect() };
    let loss = dpo_objective(&pairs, &reference, &reference, 0.1).unwrap();
    assert!((loss - 2f64.ln()).abs() < 1e-12, "{loss}");
    assert!((dpo_loss(&[lp(-3.0, -2.0, -3.0, -2.0)], 1.0).unwrap() - 0.693147).abs() < 1e-6);
}

#[test]
fn symmetric_shift_of_one() {
    // theta gains +1 on chosen and loses 1 on rejected relative to ref
    let loss = dpo_loss(&[lp(-1.0, -3.0, -2.0, -2.0)], 1.0).unwrap();
    assert!((loss - neg_log_sigmoid(2.0)).abs() < 1e-12);
    assert!((loss - 0.126928).abs() < 1e-6);
}

#[test]
fn larger_beta_lowers_positive_margin_loss() {
    let b = [lp(-1.0, -2.5, -1.5, -2.0)];
    assert!(dpo_loss(&b, 2.0).unwrap() < dpo_loss(&b, 1.0).unwrap());
}

#[test]
fn gradient_at_reference_is_half_feature_gap() {
    let pair = ToyPair { candidates: vec![vec![1.0, 0.0, 2.0], vec![0.0, 1.0, -1.0]], chosen: 0, rejected: 1 };
    let beta = 0.3;
    let g = dpo_gradient(&[pair.clone()], beta, &ToyPolicy::zeros(3), &ToyPolicy::zeros(3)).unwrap();
    let want: Vec<f64> =
        pair.candidates[0].iter().zip(&pair.candidates[1]).map(|(p, n)| -beta / 2.0 * (p - n)).collect();
    for (a, b) in g.iter().zip(&want) {
        assert!((a - b).abs() < 1e-15, "{g:?} vs {want:?}");
    }
}

fn central_difference(f: impl Fn(&ToyPolicy) -> f64, at: &ToyPolicy, h: f64) -> Vec<f64> {
    (0..at.dim())
        .map(|k| {
            let (mut up, mut down) = (at.clone(), at.clone());
            up.weights[k] += h;
            down.weights[k] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let d = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    d / norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied()))
}

#[test]
fn gradients_match_finite_differences() {
    let mut st = derive_stream(2, StreamPath::new(99, 1, 0));
    let pairs = random_pairs(40, 8, 4, &mut st);
    let reference = ToyPolicy { weights: (0..8).map(|_| st.uniform(-1.0, 1.0)).collect() };
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = ToyPolicy { weights: (0..8).map(|_| st.uniform(-2.0, 2.0)).collect() };
        let a = dpo_gradient(&pairs, 0.5, &p, &reference).unwrap();
        let n = central_difference(|q| dpo_objective(&pairs, q, &reference, 0.5).unwrap(), &p, 1e-5);
        worst = worst.max(rel_error(&a, &n));
        let a = sft_gradient(&pairs, &p).unwrap();
        let n = central_difference(|q| sft_loss(&pairs, q).unwrap(), &p, 1e-5);
        worst = worst.max(rel_error(&a, &n));
    }
    assert!(worst < 1e-6, "{worst}");
    let report = gradient_check(&pairs, &reference, 0.5, 50, 1e-5, 3).unwrap();
    assert!(report.max_rel_error < 1e-6, "{report:?}");
}

#[test]
fn sft_loss_cases() {
    let single = ToyPair { candidates: vec![vec![1.0, 2.0]], chosen: 0, rejected: 0 };
    assert_eq!(sft_loss(&[single], &ToyPolicy { weights: vec![0.4, 0.1] }).unwrap(), 0.0);
    let two = ToyPair { candidates: vec![vec![1.0, 0.0], vec![0.0, 1.0]], chosen: 0, rejected: 1 };
    assert!((sft_loss(&[two.clone()], &ToyPolicy::zeros(2)).unwrap() - 2f64.ln()).abs() < 1e-15);

    let mut st = derive_stream(4, StreamPath::new(99, 2, 0));
    let pairs = random_pairs(30, 5, 3, &mut st);
    let p = ToyPolicy { weights: (0..5).map(|_| st.uniform(-1.0, 1.0)).collect() };
    let direct: f64 = pairs
        .iter()
        .map(|pr| {
            let s: Vec<f64> = pr.candidates.iter().map(|c| c.iter().zip(&p.weights).map(|(x, w)| x * w).sum()).collect();
            let z: f64 = s.iter().map(|x| x.exp()).sum();
            -(s[pr.chosen].exp() / z).ln()
        })
        .sum::<f64>()
        / pairs.len() as f64;
    assert!((sft_loss(&pairs, &p).unwrap() - direct).abs() < 1e-12);
}

#[test]
fn toy_contrast_dpo_beats_or_ties_sft() {
    let data = toy_dataset(2000, 0).unwrap();
    let cfg = DpoConfig::default();
    let (w1, dpo) = train_toy(&data, Method::Dpo, &cfg).unwrap();
    let (_, sft) = train_toy(&data, Method::Sft, &cfg).unwrap();
    assert_eq!((dpo.train_pairs, dpo.heldout_pairs), (1600, 400));
    assert!(dpo.heldout_pairwise_accuracy >= 0.95, "{dpo:?}");
    assert!(dpo.heldout_pairwise_accuracy >= sft.heldout_pairwise_accuracy, "{dpo:?} {sft:?}");
    let (w2, _) = train_toy(&data, Method::Dpo, &cfg).unwrap();
    assert_eq!(w1, w2);
    let (_, untrained) = train_toy(&data, Method::Dpo, &DpoConfig { epochs: 0, ..cfg }).unwrap();
    assert_eq!(untrained.heldout_pairwise_accuracy, 0.5);
}

#[test]
fn degenerate_toy_is_rejected() {
    let same = ToyPair { candidates: vec![vec![1.0], vec![1.0]], chosen: 0, rejected: 1 };
    assert!(matches!(
        train_toy_pairs(&vec![same; 10], Method::Dpo, &DpoConfig::default()),
        Err(DpoError::Degenerate(_))
    ));
    assert!(toy_dataset(12, 0).is_err());
}

#[test]
fn margin_sign_agrees_with_truth() {
    for p in toy_dataset(800, 5).unwrap() {
        for (text, want) in [(&p.chosen, true), (&p.rejected, false)] {
            let (claim, _) = parse_statement(p.task, text).unwrap();
            assert_eq!(evaluate(&claim, &p.meta.objects).unwrap(), want);
            let m = signed_margin(&claim, &p.meta.objects).unwrap();
            assert_eq!(m > 0.0, want, "{} {text:?} margin {m}", p.id);
        }
    }
}

proptest! {
    #[test]
    fn loss_is_nonnegative(tp in -50.0f64..0.0, tn in -50.0f64..0.0, rp in -50.0f64..0.0, rn in -50.0f64..0.0, beta in 0.01f64..5.0) {
        prop_assert!(dpo_loss(&[lp(tp, tn, rp, rn)], beta).unwrap() >= 0.0);
    }

    #[test]
    fn loss_falls_with_chosen_and_rises_with_rejected(
        tp in -20.0f64..-1.0, tn in -20.0f64..-1.0, rp in -20.0f64..0.0, rn in -20.0f64..0.0, d in 0.01f64..1.0,
    ) {
        let base = dpo_loss(&[lp(tp, tn, rp, rn)], 1.0).unwrap();
        prop_assert!(dpo_loss(&[lp(tp + d, tn, rp, rn)], 1.0).unwrap() < base);
        prop_assert!(dpo_loss(&[lp(tp, tn + d, rp, rn)], 1.0).unwrap() > base);
    }

    #[test]
    fn ln2_only_at_zero_margin(tp in -20.0f64..0.0, tn in -20.0f64..0.0, rp in -20.0f64..0.0, rn in -20.0f64..0.0) {
        let p = lp(tp, tn, rp, rn);
        let loss = dpo_loss(&[p], 1.0).unwrap();
        let r = p.reward_margin(1.0);
        prop_assert_eq!((loss - 2f64.ln()).abs() < 1e-12, r.abs() < 1e-12);
    }

    #[test]
    fn log_probs_normalize(w in proptest::collection::vec(-3.0f64..3.0, 4), seed in 0u64..1000) {
        let mut st = derive_stream(seed, StreamPath::new(99, 3, 0));
        let pair = random_pairs(1, 4, 5, &mut st).remove(0);
        let total: f64 = ToyPolicy { weights: w }.log_probs(&pair).unwrap().iter().map(|l| l.exp()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}
