//! Batched NHWC kernels for the reference network, forward and backward.
//!
//! A batch of `n` images `h×w×c` is stored as one tall `(n·h)×w×c` image;
//! since `h` is even, 2×2 pooling windows never straddle two samples.

use super::params::KERNEL;

const TAPS: usize = KERNEL * KERNEL;

/// `c = beta·c + op(a)·op(b)` with `op(a)` `m×k` and `op(b)` `k×n`, all
/// row-major; `ta`/`tb` mean the operand is stored transposed.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    ta: bool,
    b: &[f64],
    tb: bool,
    beta: f64,
    c: &mut [f64],
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if ta { (1, m) } else { (k, 1) };
    let (rsb, csb) = if tb { (1, k) } else { (n, 1) };
    // SAFETY: the assertion above keeps every strided access in bounds.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Calls `$f::<C>` with `C` equal to the channel count when it is one of the
/// counts this network uses, so the inner loops get fixed trip counts, and
/// with `C = 0` (meaning "read it at runtime") otherwise.
macro_rules! by_channels {
    ($c:expr, $f:ident($($arg:expr),*)) => {
        match $c {
            1 => $f::<1>($($arg),*),
            3 => $f::<3>($($arg),*),
            8 => $f::<8>($($arg),*),
            16 => $f::<16>($($arg),*),
            _ => $f::<0>($($arg),*),
        }
    };
}

/// Patch matrix of a batch for a 3×3 convolution with one pixel of zero
/// padding: row `(s, y, x)`, column `(ky, kx, ci)`.
pub(super) fn im2col(input: &[f64], n: usize, dims: (usize, usize, usize)) -> Vec<f64> {
    by_channels!(dims.2, im2col_c(input, n, dims))
}

fn im2col_c<const C: usize>(input: &[f64], n: usize, (h, w, c): (usize, usize, usize)) -> Vec<f64> {
    let c = if C == 0 { c } else { C };
    let row = TAPS * c;
    let mut cols = vec![0.0; n * h * w * row];
    for (img, out) in input
        .chunks_exact(h * w * c)
        .zip(cols.chunks_exact_mut(h * w * row))
        .take(n)
    {
        for y in 0..h {
            for ky in 0..KERNEL {
                let Some(iy) = (y + ky).checked_sub(1).filter(|&v| v < h) else {
                    continue;
                };
                let src = &img[iy * w * c..][..w * c];
                for x in 0..w {
                    let dst = &mut out[(y * w + x) * row + ky * KERNEL * c..][..KERNEL * c];
                    for kx in 0..KERNEL {
                        if let Some(ix) = (x + kx).checked_sub(1).filter(|&v| v < w) {
                            dst[kx * c..][..c].copy_from_slice(&src[ix * c..][..c]);
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-add patch gradients back onto the input.
pub(super) fn col2im(dcols: &[f64], n: usize, dims: (usize, usize, usize)) -> Vec<f64> {
    by_channels!(dims.2, col2im_c(dcols, n, dims))
}

fn col2im_c<const C: usize>(dcols: &[f64], n: usize, (h, w, c): (usize, usize, usize)) -> Vec<f64> {
    let c = if C == 0 { c } else { C };
    let row = TAPS * c;
    let mut dinput = vec![0.0; n * h * w * c];
    for (img, patches) in dinput
        .chunks_exact_mut(h * w * c)
        .zip(dcols.chunks_exact(h * w * row))
        .take(n)
    {
        for y in 0..h {
            for ky in 0..KERNEL {
                let Some(iy) = (y + ky).checked_sub(1).filter(|&v| v < h) else {
                    continue;
                };
                let dst = &mut img[iy * w * c..][..w * c];
                for x in 0..w {
                    let src = &patches[(y * w + x) * row + ky * KERNEL * c..][..KERNEL * c];
                    for kx in 0..KERNEL {
                        if let Some(ix) = (x + kx).checked_sub(1).filter(|&v| v < w) {
                            for (d, &g) in dst[ix * c..][..c].iter_mut().zip(&src[kx * c..][..c]) {
                                *d += g;
                            }
                        }
                    }
                }
            }
        }
    }
    dinput
}

/// `bias + input·weight` for `rows` input rows, `weight` stored `[in, out]`.
pub(super) fn affine(input: &[f64], rows: usize, weight: &[f64], bias: &[f64]) -> Vec<f64> {
    let out_dim = bias.len();
    let in_dim = weight.len() / out_dim;
    let mut out = vec![0.0; rows * out_dim];
    gemm(
        rows, in_dim, out_dim, input, false, weight, false, 0.0, &mut out,
    );
    for r in out.chunks_exact_mut(out_dim) {
        for (v, &b) in r.iter_mut().zip(bias) {
            *v += b;
        }
    }
    out
}

/// Backward of [`affine`]: accumulates `dweight` and `dbias`, and returns the
/// input gradient when asked (empty otherwise).
#[allow(clippy::too_many_arguments)]
pub(super) fn affine_backward(
    input: &[f64],
    rows: usize,
    weight: &[f64],
    dout: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
    want_input: bool,
) -> Vec<f64> {
    let out_dim = dbias.len();
    let in_dim = weight.len() / out_dim;
    for r in dout.chunks_exact(out_dim) {
        for (b, &d) in dbias.iter_mut().zip(r) {
            *b += d;
        }
    }
    gemm(
        in_dim, rows, out_dim, input, true, dout, false, 1.0, dweight,
    );
    if !want_input {
        return Vec::new();
    }
    let mut dinput = vec![0.0; rows * in_dim];
    gemm(
        rows,
        out_dim,
        in_dim,
        dout,
        false,
        weight,
        true,
        0.0,
        &mut dinput,
    );
    dinput
}

/// ReLU followed by 2×2/2 max pooling. Returns the pooled values and, for
/// each, the flat input index it came from (first maximum on ties).
pub(super) fn relu_maxpool2(z: &[f64], dims: (usize, usize, usize)) -> (Vec<f64>, Vec<u32>) {
    by_channels!(dims.2, relu_maxpool2_c(z, dims))
}

fn relu_maxpool2_c<const C: usize>(
    z: &[f64],
    (h, w, c): (usize, usize, usize),
) -> (Vec<f64>, Vec<u32>) {
    let c = if C == 0 { c } else { C };
    let (h2, w2) = (h / 2, w / 2);
    let mut out = vec![0.0; h2 * w2 * c];
    let mut idx = vec![0u32; h2 * w2 * c];
    for (o, (out, idx)) in out
        .chunks_exact_mut(c)
        .zip(idx.chunks_exact_mut(c))
        .enumerate()
    {
        let (y, x) = (o / w2, o % w2);
        let i00 = (2 * y * w + 2 * x) * c;
        let quad = [i00, i00 + c, i00 + w * c, i00 + w * c + c];
        let rows = quad.map(|q| &z[q..q + c]);
        for ch in 0..c {
            let mut at = (quad[0] + ch) as u32;
            let mut best = rows[0][ch].max(0.0);
            for (&q, r) in quad[1..].iter().zip(&rows[1..]) {
                let v = r[ch].max(0.0);
                let gt = v > best;
                best = if gt { v } else { best };
                at = if gt { (q + ch) as u32 } else { at };
            }
            out[ch] = best;
            idx[ch] = at;
        }
    }
    (out, idx)
}

/// Smallest gap between the largest and second-largest post-ReLU value over
/// the 2×2 windows whose maximum is positive.
pub(super) fn pool_margin(z: &[f64], (h, w, c): (usize, usize, usize)) -> f64 {
    let mut margin = f64::INFINITY;
    for y in 0..h / 2 {
        for x in 0..w / 2 {
            let i00 = (2 * y * w + 2 * x) * c;
            for ch in 0..c {
                let mut v =
                    [i00, i00 + c, i00 + w * c, i00 + w * c + c].map(|i| z[i + ch].max(0.0));
                v.sort_by(|a, b| b.total_cmp(a));
                if v[0] > 0.0 {
                    margin = margin.min(v[0] - v[1]);
                }
            }
        }
    }
    margin
}

/// Route pooled gradients back to their source positions, through the ReLU.
pub(super) fn relu_maxpool2_backward(z: &[f64], idx: &[u32], dout: &[f64]) -> Vec<f64> {
    let mut dz = vec![0.0; z.len()];
    for (&i, &d) in idx.iter().zip(dout) {
        let i = i as usize;
        if z[i] > 0.0 {
            dz[i] += d;
        }
    }
    dz
}

/// Numerically stable softmax with entries floored at the smallest normal
/// double so that they stay strictly positive.
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let s: f64 = p.iter().sum();
    for v in &mut p {
        *v = (*v / s).max(f64::MIN_POSITIVE);
    }
    p
}
