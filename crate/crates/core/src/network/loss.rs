//! Cross-entropy losses: plain, Mixup (virtual samples only) and MixAugment
//! (virtual plus both real sources, summed).

use super::forward::{backprop, forward, ForwardTrace, Mode};
use super::params::{GradientSet, NetworkParams};
use crate::augment::{check_simplex_row, Batch, MixBatch};
use crate::error::{Error, Result};
use crate::numerics::{Rng, Tensor};

/// Probabilities are clamped below at this value before taking logs.
pub const LOG_CLAMP: f64 = 1e-12;
/// Tolerance on the probability simplex for loss inputs.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

fn check_pair(probs: &Tensor, labels: &Tensor) -> Result<()> {
    if probs.ndim() != 2 || probs.shape() != labels.shape() {
        return Err(Error::Dimension(format!(
            "probabilities {:?} and labels {:?} must both be B×K",
            probs.shape(),
            labels.shape()
        )));
    }
    for row in probs.rows().chain(labels.rows()) {
        check_simplex_row(row, SIMPLEX_TOLERANCE)?;
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )))
    }
}

fn clamped_ln(p: f64) -> f64 {
    p.max(LOG_CLAMP).ln()
}

fn cce_unchecked(probs: &Tensor, labels: &Tensor) -> f64 {
    let b = probs.shape()[0] as f64;
    let total: f64 = probs
        .rows()
        .zip(labels.rows())
        .map(|(p, y)| {
            -y.iter()
                .zip(p)
                .map(|(&y, &p)| y * clamped_ln(p))
                .sum::<f64>()
        })
        .sum();
    total / b
}

/// Mean over the batch of `−Σ_k y_k·ln p_k`.
pub fn cce_loss(probs: &Tensor, soft_labels: &Tensor) -> Result<f64> {
    check_pair(probs, soft_labels)?;
    Ok(cce_unchecked(probs, soft_labels))
}

/// `λ·labels_i + (1−λ)·labels_j`.
pub fn mix_labels(labels_i: &Tensor, labels_j: &Tensor, lambda: f64) -> Result<Tensor> {
    check_lambda(lambda)?;
    labels_i.lerp(labels_j, lambda)
}

fn check_triple(
    probs_v: &Tensor,
    probs_i: &Tensor,
    probs_j: &Tensor,
    labels_i: &Tensor,
    labels_j: &Tensor,
    lambda: f64,
) -> Result<()> {
    check_lambda(lambda)?;
    check_pair(probs_i, labels_i)?;
    check_pair(probs_j, labels_j)?;
    check_pair(probs_v, labels_i)
}

/// Total loss as the plain sum of three cross entropies: virtual samples
/// against the mixed labels, then each real batch against its own labels.
pub fn mixaugment_loss_sum(
    probs_v: &Tensor,
    probs_i: &Tensor,
    probs_j: &Tensor,
    labels_i: &Tensor,
    labels_j: &Tensor,
    lambda: f64,
) -> Result<f64> {
    check_triple(probs_v, probs_i, probs_j, labels_i, labels_j, lambda)?;
    let mixed = mix_labels(labels_i, labels_j, lambda)?;
    Ok(cce_unchecked(probs_v, &mixed)
        + cce_unchecked(probs_i, labels_i)
        + cce_unchecked(probs_j, labels_j))
}

/// The same total, regrouped per source label:
/// `E[−y_i·ln(p_i·p_v^λ) − y_j·ln(p_j·p_v^(1−λ))]`.
pub fn mixaugment_loss_factored(
    probs_v: &Tensor,
    probs_i: &Tensor,
    probs_j: &Tensor,
    labels_i: &Tensor,
    labels_j: &Tensor,
    lambda: f64,
) -> Result<f64> {
    check_triple(probs_v, probs_i, probs_j, labels_i, labels_j, lambda)?;
    let b = probs_v.shape()[0];
    let mut total = 0.0;
    for r in 0..b {
        let (pv, pi, pj) = (probs_v.row(r), probs_i.row(r), probs_j.row(r));
        let (yi, yj) = (labels_i.row(r), labels_j.row(r));
        for k in 0..pv.len() {
            let ln_v = clamped_ln(pv[k]);
            total -= yi[k] * (clamped_ln(pi[k]) + lambda * ln_v);
            total -= yj[k] * (clamped_ln(pj[k]) + (1.0 - lambda) * ln_v);
        }
    }
    Ok(total / b as f64)
}

/// Gradient of [`cce_loss`] with respect to the logits that produced `probs`.
///
/// With `g_k = ∂L/∂p_k` (zero where the log clamp is active), the softmax
/// Jacobian gives `∂L/∂z_j = p_j·(g_j − Σ_k g_k p_k)`, which reduces to
/// `(p − y)/B` when the clamp is inactive.
pub fn cce_logit_grad(probs: &Tensor, labels: &Tensor) -> Result<Tensor> {
    check_pair(probs, labels)?;
    let b = probs.shape()[0] as f64;
    let mut out = Vec::with_capacity(probs.len());
    for (p, y) in probs.rows().zip(labels.rows()) {
        let g: Vec<f64> = p
            .iter()
            .zip(y)
            .map(|(&p, &y)| if p >= LOG_CLAMP { -y / (p * b) } else { 0.0 })
            .collect();
        let gp: f64 = g.iter().zip(p).map(|(g, p)| g * p).sum();
        out.extend(p.iter().zip(&g).map(|(&p, &g)| p * (g - gp)));
    }
    Tensor::new(probs.shape().to_vec(), out)
}

/// Exact gradient of [`mixaugment_loss_sum`] with respect to every
/// parameter, the three terms accumulated additively.
pub fn backward(
    params: &NetworkParams,
    trace_v: &ForwardTrace,
    trace_i: &ForwardTrace,
    trace_j: &ForwardTrace,
    labels_i: &Tensor,
    labels_j: &Tensor,
    lambda: f64,
) -> Result<GradientSet> {
    let mixed = mix_labels(labels_i, labels_j, lambda)?;
    let gv = backprop(params, trace_v, &cce_logit_grad(trace_v.probs(), &mixed)?)?;
    let gi = backprop(params, trace_i, &cce_logit_grad(trace_i.probs(), labels_i)?)?;
    let gj = backprop(params, trace_j, &cce_logit_grad(trace_j.probs(), labels_j)?)?;
    gv.add(&gi)?.add(&gj)
}

/// Plain cross-entropy step on a real batch.
pub fn vanilla_loss_and_grad(
    params: &NetworkParams,
    batch: &Batch,
    dropout_rate: f64,
    rng: &mut Rng,
) -> Result<(f64, GradientSet)> {
    let trace = forward(params, batch.images(), Mode::Train, dropout_rate, rng)?;
    let loss = cce_loss(trace.probs(), batch.labels())?;
    let grads = backprop(
        params,
        &trace,
        &cce_logit_grad(trace.probs(), batch.labels())?,
    )?;
    Ok((loss, grads))
}

/// Mixup baseline: cross entropy of the virtual batch against its mixed
/// labels, with no real-sample term.
pub fn mixup_only_loss_and_grad(
    params: &NetworkParams,
    mix: &MixBatch,
    dropout_rate: f64,
    rng: &mut Rng,
) -> Result<(f64, GradientSet)> {
    vanilla_loss_and_grad(params, &mix.virtual_, dropout_rate, rng)
}

/// MixAugment: separate forward passes (and dropout masks) for the virtual
/// batch and both real batches, loss summed over the three.
pub fn mixaugment_loss_and_grad(
    params: &NetworkParams,
    mix: &MixBatch,
    dropout_rate: f64,
    rng: &mut Rng,
) -> Result<(f64, GradientSet)> {
    let tv = forward(
        params,
        mix.virtual_.images(),
        Mode::Train,
        dropout_rate,
        rng,
    )?;
    let ti = forward(params, mix.real_i.images(), Mode::Train, dropout_rate, rng)?;
    let tj = forward(params, mix.real_j.images(), Mode::Train, dropout_rate, rng)?;
    let (li, lj) = (mix.real_i.labels(), mix.real_j.labels());
    let loss = mixaugment_loss_sum(tv.probs(), ti.probs(), tj.probs(), li, lj, mix.lambda)?;
    let grads = backward(params, &tv, &ti, &tj, li, lj, mix.lambda)?;
    Ok((loss, grads))
}
