#![allow(dead_code)]

use mixaug::augment::{Batch, LabeledImage};
use mixaug::metrics::argmax;
use mixaug::numerics::{Rng, Tensor};

/// A random point on the probability simplex, with no entry tiny enough to
/// hit the log clamp.
pub fn simplex_row(rng: &mut Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.uniform_range(0.05, 1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

pub fn simplex_rows(rng: &mut Rng, b: usize, k: usize) -> Tensor {
    let data = (0..b).flat_map(|_| simplex_row(rng, k)).collect();
    Tensor::matrix(b, k, data).unwrap()
}

pub fn one_hot_rows(rng: &mut Rng, b: usize, k: usize) -> Tensor {
    let mut data = vec![0.0; b * k];
    for r in 0..b {
        data[r * k + rng.below(k)] = 1.0;
    }
    Tensor::matrix(b, k, data).unwrap()
}

pub fn random_image(rng: &mut Rng, h: usize, w: usize, c: usize) -> Tensor {
    let data = (0..h * w * c).map(|_| rng.uniform()).collect();
    Tensor::new(vec![h, w, c], data).unwrap()
}

pub fn random_items(
    rng: &mut Rng,
    n: usize,
    (h, w, c): (usize, usize, usize),
    k: usize,
) -> Vec<LabeledImage> {
    (0..n)
        .map(|i| LabeledImage::with_class(random_image(rng, h, w, c), i % k, k).unwrap())
        .collect()
}

pub fn random_batch(rng: &mut Rng, n: usize, dims: (usize, usize, usize), k: usize) -> Batch {
    Batch::from_images(&random_items(rng, n, dims, k)).unwrap()
}

/// Largest elementwise relative discrepancy, `|a − b| / max(|a|, |b|, floor)`.
pub fn max_rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Accuracy, average accuracy (macro recall) and macro F1 counted one
/// sample at a time, without a confusion matrix.
pub fn brute_force_scores(preds: &[usize], labels: &[usize], k: usize) -> (f64, f64, f64) {
    let n = preds.len();
    let correct = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    let frac = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let mut recall_sum = 0.0;
    let mut f1_sum = 0.0;
    for c in 0..k {
        let tp = (0..n).filter(|&i| preds[i] == c && labels[i] == c).count();
        let actual = labels.iter().filter(|&&l| l == c).count();
        let predicted = preds.iter().filter(|&&p| p == c).count();
        let (p, r) = (frac(tp, predicted), frac(tp, actual));
        recall_sum += r;
        f1_sum += if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
    }
    (frac(correct, n), recall_sum / k as f64, f1_sum / k as f64)
}

/// Random predictions and labels as `N×K` score and one-hot tensors, plus
/// the class indices they encode.
pub fn random_predictions(
    rng: &mut Rng,
    n: usize,
    k: usize,
) -> (Tensor, Tensor, Vec<usize>, Vec<usize>) {
    let probs = simplex_rows(rng, n, k);
    let labels = one_hot_rows(rng, n, k);
    let p = probs.rows().map(argmax).collect();
    let l = labels.rows().map(argmax).collect();
    (probs, labels, p, l)
}
