mod common;

use common::{one_hot_rows, random_batch, simplex_rows};
use mixaug::augment::Batch;
use mixaug::network::{
    cce_loss, forward, mix_labels, mixaugment_loss_factored, mixaugment_loss_sum, Architecture,
    Mode, NetworkParams,
};
use mixaug::numerics::{Rng, Tensor};
use proptest::prelude::*;

proptest! {
    #[test]
    fn sum_and_factored_forms_agree(seed in any::<u64>(), b in 1usize..6, k in 2usize..8, lambda in 0.0f64..=1.0) {
        let mut rng = Rng::new(seed);
        let (pv, pi, pj) = (simplex_rows(&mut rng, b, k), simplex_rows(&mut rng, b, k), simplex_rows(&mut rng, b, k));
        let (yi, yj) = (one_hot_rows(&mut rng, b, k), one_hot_rows(&mut rng, b, k));
        let s = mixaugment_loss_sum(&pv, &pi, &pj, &yi, &yj, lambda).unwrap();
        let f = mixaugment_loss_factored(&pv, &pi, &pj, &yi, &yj, lambda).unwrap();
        prop_assert!((s - f).abs() / s.abs() < 1e-9, "{s} vs {f}");
    }

    #[test]
    fn cross_entropy_is_non_negative(seed in any::<u64>(), b in 1usize..6, k in 2usize..8) {
        let mut rng = Rng::new(seed);
        let p = simplex_rows(&mut rng, b, k);
        prop_assert!(cce_loss(&p, &one_hot_rows(&mut rng, b, k)).unwrap() >= 0.0);
        prop_assert!(cce_loss(&p, &simplex_rows(&mut rng, b, k)).unwrap() >= 0.0);
    }

    #[test]
    fn mixed_labels_stay_on_the_simplex(seed in any::<u64>(), lambda in 0.0f64..=1.0) {
        let mut rng = Rng::new(seed);
        let m = mix_labels(&one_hot_rows(&mut rng, 4, 5), &one_hot_rows(&mut rng, 4, 5), lambda).unwrap();
        for row in m.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn softmax_rows_are_distributions(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let arch = Architecture::new(8, 8, 1, 4).unwrap();
        let params = NetworkParams::init(arch, &mut rng).unwrap();
        let batch = random_batch(&mut rng, 3, (8, 8, 1), 4);
        let t = forward(&params, batch.images(), Mode::Eval, 0.0, &mut rng).unwrap();
        for row in t.probs().rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&v| v > 0.0));
        }
    }
}

#[test]
fn perfect_prediction_costs_nothing() {
    let y = Tensor::matrix(2, 3, vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(cce_loss(&y, &y).unwrap(), 0.0);
}

#[test]
fn certain_miss_is_bounded_by_the_clamp() {
    let p = Tensor::matrix(1, 2, vec![1.0, 0.0]).unwrap();
    let y = Tensor::matrix(1, 2, vec![0.0, 1.0]).unwrap();
    let l = cce_loss(&p, &y).unwrap();
    assert!((l + 1e-12f64.ln()).abs() < 1e-9, "{l}");
}

#[test]
fn mixed_loss_interpolates_at_the_endpoints() {
    let mut rng = Rng::new(5);
    let (pv, pi, pj) = (
        simplex_rows(&mut rng, 3, 4),
        simplex_rows(&mut rng, 3, 4),
        simplex_rows(&mut rng, 3, 4),
    );
    let (yi, yj) = (one_hot_rows(&mut rng, 3, 4), one_hot_rows(&mut rng, 3, 4));
    let s1 = mixaugment_loss_sum(&pv, &pi, &pj, &yi, &yj, 1.0).unwrap();
    let expect =
        cce_loss(&pv, &yi).unwrap() + cce_loss(&pi, &yi).unwrap() + cce_loss(&pj, &yj).unwrap();
    assert!((s1 - expect).abs() < 1e-12);
    assert!(mixaugment_loss_sum(&pv, &pi, &pj, &yi, &yj, 1.5).is_err());
}

#[test]
fn inverted_dropout_preserves_the_expected_activation() {
    let mut rng = Rng::new(11);
    let arch = Architecture::new(8, 8, 1, 3).unwrap();
    let params = NetworkParams::init(arch, &mut rng).unwrap();
    let one = random_batch(&mut rng, 1, (8, 8, 1), 3);
    let n = 4000;
    let batch = Batch::gather(&one.items(), std::iter::repeat_n(0, n)).unwrap();
    let eval = forward(&params, one.images(), Mode::Eval, 0.0, &mut rng)
        .unwrap()
        .hidden();
    let train = forward(&params, batch.images(), Mode::Train, 0.5, &mut rng).unwrap();
    let hidden = train.hidden();
    let scale = eval.max_abs();
    assert!(scale > 0.0);
    for u in 0..eval.len() {
        let mean = hidden.rows().map(|r| r[u]).sum::<f64>() / n as f64;
        // each draw is 0 or 2h, so the standard error is h/sqrt(n)
        assert!(
            (mean - eval.data()[u]).abs() <= 5.0 * scale / (n as f64).sqrt(),
            "unit {u}"
        );
    }
    let mask = train.dropout_mask().unwrap();
    let dropped = mask.data().iter().filter(|&&m| m == 0.0).count() as f64 / mask.len() as f64;
    assert!((dropped - 0.5).abs() < 0.01);
    assert!(forward(&params, one.images(), Mode::Eval, 0.5, &mut rng)
        .unwrap()
        .dropout_mask()
        .is_none());
}
