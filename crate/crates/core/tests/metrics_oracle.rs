mod common;

use common::{brute_force_scores, random_predictions};
use mixaug::metrics::{build_confusion, evaluate, ConfusionMatrix};
use mixaug::numerics::{Rng, Tensor};
use proptest::prelude::*;

proptest! {
    #[test]
    fn scores_match_per_sample_counting(seed in any::<u64>(), k in 2usize..=7, n in 1usize..60) {
        let mut rng = Rng::new(seed);
        let (probs, labels, p, l) = random_predictions(&mut rng, n, k);
        let r = evaluate(&probs, &labels).unwrap();
        let (acc, avg, f1) = brute_force_scores(&p, &l, k);
        prop_assert_eq!(r.accuracy, acc);
        prop_assert_eq!(r.average_accuracy, avg);
        prop_assert_eq!(r.macro_f1, f1);
        prop_assert_eq!(r.confidence.n_correct + r.confidence.n_wrong, n);
    }

    #[test]
    fn scores_ignore_sample_order(seed in any::<u64>(), k in 2usize..=7, n in 2usize..40) {
        let mut rng = Rng::new(seed);
        let (probs, labels, _, _) = random_predictions(&mut rng, n, k);
        let perm = rng.permutation(n);
        let shuffle = |t: &Tensor| {
            let data = perm.iter().flat_map(|&i| t.row(i).to_vec()).collect();
            Tensor::matrix(n, k, data).unwrap()
        };
        let a = evaluate(&probs, &labels).unwrap();
        let b = evaluate(&shuffle(&probs), &shuffle(&labels)).unwrap();
        prop_assert_eq!(a.confusion, b.confusion);
        prop_assert_eq!(a.accuracy, b.accuracy);
        prop_assert_eq!(a.macro_f1, b.macro_f1);
        prop_assert_eq!(a.confidence.median_correct, b.confidence.median_correct);
    }

    #[test]
    fn confusion_totals(seed in any::<u64>(), k in 2usize..=7, n in 1usize..50) {
        let mut rng = Rng::new(seed);
        let (probs, labels, p, l) = random_predictions(&mut rng, n, k);
        let cm = build_confusion(&probs, &labels).unwrap();
        prop_assert_eq!(cm.total(), n as u64);
        for c in 0..k {
            prop_assert_eq!(cm.row_sum(c), l.iter().filter(|&&v| v == c).count() as u64);
            prop_assert_eq!(cm.col_sum(c), p.iter().filter(|&&v| v == c).count() as u64);
        }
    }
}

#[test]
fn two_class_hand_case() {
    let cm = ConfusionMatrix::from_counts(&[vec![1, 1], vec![0, 2]]).unwrap();
    let r = mixaug::metrics::scores_from_confusion(&cm).unwrap();
    assert!((r.accuracy - 0.75).abs() < 1e-9);
    assert!((r.average_accuracy - 0.75).abs() < 1e-9);
    assert!((r.macro_f1 - 0.73333).abs() < 1e-5);
    assert!((r.macro_f1 - 11.0 / 15.0).abs() < 1e-12);
}

#[test]
fn confident_correct_predictions_are_separated_from_wrong_ones() {
    let probs = Tensor::matrix(3, 2, vec![0.9, 0.1, 0.2, 0.8, 0.6, 0.4]).unwrap();
    let labels = Tensor::matrix(3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
    let c = evaluate(&probs, &labels).unwrap().confidence;
    assert_eq!((c.n_correct, c.n_wrong), (2, 1));
    assert!((c.mean_correct.unwrap() - 0.85).abs() < 1e-12);
    assert_eq!(c.median_wrong, Some(0.6));
}
