use rayon::prelude::*;

use super::layers::{
    affine, affine_backward, col2im, im2col, pool_margin, relu_maxpool2, relu_maxpool2_backward,
    softmax,
};
use super::params::*;
use crate::error::{Error, Result};
use crate::numerics::{Rng, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Samples per unit of parallel work. Forward and backward both split the
/// batch at these boundaries and gradients are summed chunk by chunk in order,
/// so results do not depend on the thread count.
const CHUNK: usize = 16;

/// Cached activations of one chunk of samples, stacked along the rows.
#[derive(Clone, Debug)]
struct ChunkTrace {
    n: usize,
    cols1: Vec<f64>,
    z1: Vec<f64>,
    idx1: Vec<u32>,
    cols2: Vec<f64>,
    z2: Vec<f64>,
    idx2: Vec<u32>,
    p2: Vec<f64>,
    h_pre: Vec<f64>,
    /// Inverted-dropout multipliers (0 or 1/(1−rate)), train mode only.
    mask: Option<Vec<f64>>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

/// Activations of a forward pass over a batch, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    arch: Architecture,
    batch: usize,
    chunks: Vec<ChunkTrace>,
    probs: Tensor,
}

impl ForwardTrace {
    /// Softmax output, `B×K`.
    pub fn probs(&self) -> &Tensor {
        &self.probs
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    /// Output of the first dense layer after ReLU and (in train mode) dropout, `B×64`.
    pub fn hidden(&self) -> Tensor {
        let data = self
            .chunks
            .iter()
            .flat_map(|c| c.hidden.iter().copied())
            .collect();
        Tensor::from_parts(vec![self.batch, HIDDEN], data)
    }

    /// Dropout multipliers, `B×64`, when a mask was drawn.
    pub fn dropout_mask(&self) -> Option<Tensor> {
        let mut data = Vec::with_capacity(self.batch * HIDDEN);
        for c in &self.chunks {
            data.extend_from_slice(c.mask.as_ref()?);
        }
        Some(Tensor::from_parts(vec![self.batch, HIDDEN], data))
    }

    /// Distance of this pass from the nearest point where the network is not
    /// differentiable: the smallest |pre-activation| over all ReLUs, or the
    /// smallest gap between the two largest entries of a pooling window that
    /// passes a gradient. Finite-difference checks need it well above the step.
    pub fn kink_margin(&self) -> f64 {
        let (h, w) = (self.arch.height, self.arch.width);
        let relu = |v: &[f64]| v.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
        self.chunks
            .iter()
            .map(|c| {
                relu(&c.z1)
                    .min(relu(&c.z2))
                    .min(relu(&c.h_pre))
                    .min(pool_margin(&c.z1, (c.n * h, w, CONV1_FILTERS)))
                    .min(pool_margin(&c.z2, (c.n * h / 2, w / 2, CONV2_FILTERS)))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Pre-softmax outputs, `B×K`.
    pub fn logits(&self) -> Tensor {
        let data = self
            .chunks
            .iter()
            .flat_map(|c| c.logits.iter().copied())
            .collect();
        Tensor::from_parts(vec![self.batch, self.arch.classes], data)
    }
}

fn finite(layer: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite activation in {layer}")))
    }
}

fn forward_chunk(
    params: &NetworkParams,
    input: &[f64],
    n: usize,
    mask: Option<Vec<f64>>,
) -> Result<(ChunkTrace, Vec<f64>)> {
    let a = params.arch();
    let t = params.tensors();
    let (h, w) = (a.height, a.width);
    let (h2, w2) = (h / 2, w / 2);

    let cols1 = im2col(input, n, (h, w, a.channels));
    let z1 = affine(&cols1, n * h * w, t[CONV1_W].data(), t[CONV1_B].data());
    finite("conv1", &z1)?;
    let (p1, idx1) = relu_maxpool2(&z1, (n * h, w, CONV1_FILTERS));

    let cols2 = im2col(&p1, n, (h2, w2, CONV1_FILTERS));
    let z2 = affine(&cols2, n * h2 * w2, t[CONV2_W].data(), t[CONV2_B].data());
    finite("conv2", &z2)?;
    let (p2, idx2) = relu_maxpool2(&z2, (n * h2, w2, CONV2_FILTERS));

    let h_pre = affine(&p2, n, t[DENSE1_W].data(), t[DENSE1_B].data());
    finite("dense1", &h_pre)?;
    let mut hidden: Vec<f64> = h_pre.iter().map(|&v| v.max(0.0)).collect();
    if let Some(m) = &mask {
        for (v, k) in hidden.iter_mut().zip(m) {
            *v *= k;
        }
    }

    let logits = affine(&hidden, n, t[DENSE2_W].data(), t[DENSE2_B].data());
    finite("dense2", &logits)?;
    let probs: Vec<f64> = logits.chunks_exact(a.classes).flat_map(softmax).collect();
    finite("softmax", &probs)?;
    Ok((
        ChunkTrace {
            n,
            cols1,
            z1,
            idx1,
            cols2,
            z2,
            idx2,
            p2,
            h_pre,
            mask,
            hidden,
            logits,
        },
        probs,
    ))
}

/// Run the reference network on `images` (`B×H×W×C`).
///
/// In train mode with a positive `dropout_rate`, an inverted-dropout mask is
/// drawn from `rng` for the first dense layer; eval mode draws nothing and
/// applies no rescaling.
pub fn forward(
    params: &NetworkParams,
    images: &Tensor,
    mode: Mode,
    dropout_rate: f64,
    rng: &mut Rng,
) -> Result<ForwardTrace> {
    let arch = params.arch();
    let expect = arch.input_shape();
    if images.ndim() != 4 || images.shape()[1..] != expect {
        return Err(Error::Dimension(format!(
            "network expects B×{}×{}×{} images, got {:?}",
            expect[0],
            expect[1],
            expect[2],
            images.shape()
        )));
    }
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(Error::Domain(format!(
            "dropout rate must lie in [0, 1), got {dropout_rate}"
        )));
    }
    if let Some(v) = images.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Argument(format!("pixel value {v} outside [0, 1]")));
    }
    let b = images.shape()[0];
    let row = arch.height * arch.width * arch.channels;
    // masks are drawn up front, in sample order, so results do not depend on scheduling
    let masks: Vec<Option<Vec<f64>>> = (0..b.div_ceil(CHUNK))
        .map(|c| {
            let n = CHUNK.min(b - c * CHUNK);
            (mode == Mode::Train && dropout_rate > 0.0).then(|| {
                let keep = 1.0 / (1.0 - dropout_rate);
                (0..n * HIDDEN)
                    .map(|_| {
                        if rng.bernoulli(dropout_rate) {
                            0.0
                        } else {
                            keep
                        }
                    })
                    .collect()
            })
        })
        .collect();

    let results: Vec<(ChunkTrace, Vec<f64>)> = images
        .data()
        .par_chunks(CHUNK * row)
        .zip(masks)
        .map(|(input, mask)| forward_chunk(params, input, input.len() / row, mask))
        .collect::<Result<_>>()?;

    let mut probs = Vec::with_capacity(b * arch.classes);
    let mut chunks = Vec::with_capacity(results.len());
    for (c, p) in results {
        probs.extend(p);
        chunks.push(c);
    }
    Ok(ForwardTrace {
        arch,
        batch: b,
        chunks,
        probs: Tensor::from_parts(vec![b, arch.classes], probs),
    })
}

/// Gradient of one chunk, one buffer per parameter tensor.
fn backward_chunk(params: &NetworkParams, c: &ChunkTrace, dlogits: &[f64]) -> Vec<Vec<f64>> {
    let a = params.arch();
    let t = params.tensors();
    let n = c.n;
    let (h, w) = (a.height, a.width);
    let (h2, w2) = (h / 2, w / 2);
    let mut g: Vec<Vec<f64>> = t.iter().map(|x| vec![0.0; x.len()]).collect();

    let (gl, gr) = g.split_at_mut(DENSE2_B);
    let dhidden = affine_backward(
        &c.hidden,
        n,
        t[DENSE2_W].data(),
        dlogits,
        &mut gl[DENSE2_W],
        &mut gr[0],
        true,
    );
    let dh_pre: Vec<f64> = dhidden
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let d = c.mask.as_ref().map_or(d, |m| d * m[k]);
            if c.h_pre[k] > 0.0 {
                d
            } else {
                0.0
            }
        })
        .collect();

    let (gl, gr) = g.split_at_mut(DENSE1_B);
    let dp2 = affine_backward(
        &c.p2,
        n,
        t[DENSE1_W].data(),
        &dh_pre,
        &mut gl[DENSE1_W],
        &mut gr[0],
        true,
    );

    let dz2 = relu_maxpool2_backward(&c.z2, &c.idx2, &dp2);
    let (gl, gr) = g.split_at_mut(CONV2_B);
    let dcols2 = affine_backward(
        &c.cols2,
        n * h2 * w2,
        t[CONV2_W].data(),
        &dz2,
        &mut gl[CONV2_W],
        &mut gr[0],
        true,
    );
    let dp1 = col2im(&dcols2, n, (h2, w2, CONV1_FILTERS));

    let dz1 = relu_maxpool2_backward(&c.z1, &c.idx1, &dp1);
    let (gl, gr) = g.split_at_mut(CONV1_B);
    affine_backward(
        &c.cols1,
        n * h * w,
        t[CONV1_W].data(),
        &dz1,
        &mut gl[CONV1_W],
        &mut gr[0],
        false,
    );
    g
}

/// Backpropagate `dlogits` (`B×K`, gradient of the loss with respect to the
/// pre-softmax outputs) through the network, reusing the trace's dropout masks.
pub fn backprop(
    params: &NetworkParams,
    trace: &ForwardTrace,
    dlogits: &Tensor,
) -> Result<GradientSet> {
    if trace.arch != params.arch() {
        return Err(Error::Dimension(format!(
            "trace built for {:?} but parameters are {:?}",
            trace.arch,
            params.arch()
        )));
    }
    let b = trace.batch;
    let k = params.arch().classes;
    if dlogits.shape() != [b, k] {
        return Err(Error::Dimension(format!(
            "logit gradient {:?} does not match trace of {b} samples",
            dlogits.shape()
        )));
    }
    let per_chunk: Vec<Vec<Vec<f64>>> = trace
        .chunks
        .par_iter()
        .zip(dlogits.data().par_chunks(CHUNK * k))
        .map(|(c, d)| backward_chunk(params, c, d))
        .collect();
    let mut grads = GradientSet::zeros_like(params);
    // summed in chunk order for reproducibility
    for g in per_chunk {
        for (acc, part) in grads.tensors_mut().iter_mut().zip(g) {
            for (a, p) in acc.data_mut().iter_mut().zip(part) {
                *a += p;
            }
        }
    }
    for (t, name) in grads.tensors().iter().zip(PARAM_NAMES) {
        finite(name, t.data())?;
    }
    Ok(grads)
}
