//! Mixup virtual examples, MixAugment batch triples and horizontal flips.

use crate::error::{Error, Result};
use crate::numerics::{sample_beta, Rng, Tensor};

/// Tolerance on the label simplex (non-negative entries summing to one).
pub const LABEL_TOLERANCE: f64 = 1e-9;

fn check_pixels(pixels: &Tensor) -> Result<()> {
    if let Some(v) = pixels.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Argument(format!("pixel value {v} outside [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_simplex_row(row: &[f64], tol: f64) -> Result<()> {
    if row.iter().any(|&v| v < -tol) {
        return Err(Error::Argument(format!("negative probability in {row:?}")));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(Error::Argument(format!(
            "probability row sums to {s}, expected 1"
        )));
    }
    Ok(())
}

/// Length-`k` one-hot vector.
pub fn one_hot(class: usize, k: usize) -> Result<Tensor> {
    if class >= k {
        return Err(Error::Argument(format!(
            "class {class} out of range for {k} classes"
        )));
    }
    let mut v = vec![0.0; k];
    v[class] = 1.0;
    Tensor::vector(v)
}

/// An `H×W×C` image in `[0, 1]` with a label on the `K`-simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledImage {
    pixels: Tensor,
    label: Tensor,
}

impl LabeledImage {
    pub fn new(pixels: Tensor, label: Tensor) -> Result<Self> {
        if pixels.ndim() != 3 {
            return Err(Error::Dimension(format!(
                "image must be H×W×C, got {:?}",
                pixels.shape()
            )));
        }
        if label.ndim() != 1 {
            return Err(Error::Dimension(format!(
                "label must be a vector, got {:?}",
                label.shape()
            )));
        }
        check_pixels(&pixels)?;
        check_simplex_row(label.data(), LABEL_TOLERANCE)?;
        Ok(LabeledImage { pixels, label })
    }

    pub fn with_class(pixels: Tensor, class: usize, k: usize) -> Result<Self> {
        Self::new(pixels, one_hot(class, k)?)
    }

    pub fn pixels(&self) -> &Tensor {
        &self.pixels
    }

    pub fn label(&self) -> &Tensor {
        &self.label
    }

    pub fn num_classes(&self) -> usize {
        self.label.len()
    }

    /// Index of the largest label entry, lowest index on ties.
    pub fn class(&self) -> usize {
        crate::metrics::argmax(self.label.data())
    }

    /// `(H, W, C)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        let s = self.pixels.shape();
        (s[0], s[1], s[2])
    }
}

/// `B` images stacked as `B×H×W×C` with labels `B×K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    images: Tensor,
    labels: Tensor,
}

impl Batch {
    pub fn new(images: Tensor, labels: Tensor) -> Result<Self> {
        if images.ndim() != 4 || labels.ndim() != 2 {
            return Err(Error::Dimension(format!(
                "batch needs B×H×W×C images and B×K labels, got {:?} and {:?}",
                images.shape(),
                labels.shape()
            )));
        }
        if images.shape()[0] != labels.shape()[0] {
            return Err(Error::Dimension(format!(
                "{} images but {} labels",
                images.shape()[0],
                labels.shape()[0]
            )));
        }
        check_pixels(&images)?;
        for row in labels.rows() {
            check_simplex_row(row, LABEL_TOLERANCE)?;
        }
        Ok(Batch { images, labels })
    }

    pub fn from_images(items: &[LabeledImage]) -> Result<Self> {
        Self::gather(items, 0..items.len())
    }

    /// Stack the items at `indices`, in that order.
    pub fn gather(
        items: &[LabeledImage],
        indices: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut pix = Vec::new();
        let mut lab = Vec::new();
        let mut dims: Option<(Vec<usize>, usize)> = None;
        let mut b = 0;
        for i in indices {
            let item = items.get(i).ok_or_else(|| {
                Error::Argument(format!("index {i} out of range for {} items", items.len()))
            })?;
            let d = (item.pixels.shape().to_vec(), item.label.len());
            match &dims {
                None => dims = Some(d),
                Some(prev) if *prev != d => {
                    return Err(Error::Dimension(format!(
                        "item {i} has shape {:?}/{} but batch expects {:?}/{}",
                        d.0, d.1, prev.0, prev.1
                    )))
                }
                _ => {}
            }
            pix.extend_from_slice(item.pixels.data());
            lab.extend_from_slice(item.label.data());
            b += 1;
        }
        let (img_shape, k) =
            dims.ok_or_else(|| Error::Argument("batch must contain at least one image".into()))?;
        let mut shape = vec![b];
        shape.extend(img_shape);
        Ok(Batch {
            images: Tensor::from_parts(shape, pix),
            labels: Tensor::from_parts(vec![b, k], lab),
        })
    }

    pub fn images(&self) -> &Tensor {
        &self.images
    }

    pub fn labels(&self) -> &Tensor {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.images.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_classes(&self) -> usize {
        self.labels.shape()[1]
    }

    pub fn image_shape(&self) -> &[usize] {
        &self.images.shape()[1..]
    }

    pub fn item(&self, i: usize) -> LabeledImage {
        LabeledImage {
            pixels: Tensor::from_parts(self.image_shape().to_vec(), self.images.row(i).to_vec()),
            label: Tensor::from_parts(vec![self.num_classes()], self.labels.row(i).to_vec()),
        }
    }

    pub fn items(&self) -> Vec<LabeledImage> {
        (0..self.len()).map(|i| self.item(i)).collect()
    }

    /// Rows reordered so that row `r` of the result is row `perm[r]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Batch> {
        if perm.len() != self.len() {
            return Err(Error::Dimension(format!(
                "permutation of length {} for batch of {}",
                perm.len(),
                self.len()
            )));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Argument(format!("{perm:?} is not a permutation")));
            }
        }
        let (ri, rl) = (self.images.row_len(), self.num_classes());
        let mut pix = Vec::with_capacity(self.images.len());
        let mut lab = Vec::with_capacity(self.labels.len());
        for &p in perm {
            pix.extend_from_slice(&self.images.data()[p * ri..(p + 1) * ri]);
            lab.extend_from_slice(&self.labels.data()[p * rl..(p + 1) * rl]);
        }
        Ok(Batch {
            images: Tensor::from_parts(self.images.shape().to_vec(), pix),
            labels: Tensor::from_parts(self.labels.shape().to_vec(), lab),
        })
    }
}

/// A real batch, its shuffled partner and their Mixup blend.
#[derive(Clone, Debug, PartialEq)]
pub struct MixBatch {
    pub real_i: Batch,
    pub real_j: Batch,
    pub virtual_: Batch,
    pub lambda: f64,
    /// `real_j` row `r` is `real_i` row `permutation[r]`.
    pub permutation: Vec<usize>,
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

/// Blend two labelled images: `λ·a + (1−λ)·b` for pixels and labels alike.
pub fn mixup_pair(a: &LabeledImage, b: &LabeledImage, lambda: f64) -> Result<LabeledImage> {
    check_lambda(lambda)?;
    if a.pixels.shape() != b.pixels.shape() || a.label.len() != b.label.len() {
        return Err(Error::Dimension(format!(
            "cannot mix {:?}/{} with {:?}/{}",
            a.pixels.shape(),
            a.label.len(),
            b.pixels.shape(),
            b.label.len()
        )));
    }
    let pixels = a.pixels.lerp(&b.pixels, lambda)?;
    let label = a.label.lerp(&b.label, lambda)?;
    Ok(LabeledImage {
        pixels: clamp_unit(pixels),
        label,
    })
}

// `λa + (1−λ)b` of values in [0,1] can only leave the interval by rounding.
fn clamp_unit(t: Tensor) -> Tensor {
    let shape = t.shape().to_vec();
    let data = t
        .into_data()
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    Tensor::from_parts(shape, data)
}

/// Mix a batch with a given permutation of itself at a fixed `lambda`.
pub fn mix_with(batch: &Batch, permutation: Vec<usize>, lambda: f64) -> Result<MixBatch> {
    check_lambda(lambda)?;
    let real_j = batch.permuted(&permutation)?;
    let images = batch.images.lerp(&real_j.images, lambda)?;
    let labels = batch.labels.lerp(&real_j.labels, lambda)?;
    let virtual_ = Batch {
        images: clamp_unit(images),
        labels,
    };
    Ok(MixBatch {
        real_i: batch.clone(),
        real_j,
        virtual_,
        lambda,
        permutation,
    })
}

/// Draw one `λ ~ Beta(alpha, alpha)` and a uniformly random partner
/// permutation, then blend the batch with its shuffled self.
pub fn make_mixup_batch(batch: &Batch, alpha: f64, rng: &mut Rng) -> Result<MixBatch> {
    if batch.len() < 2 {
        return Err(Error::Argument(format!(
            "mixup needs at least two samples, batch has {}",
            batch.len()
        )));
    }
    let lambda = sample_beta(alpha, rng)?;
    let perm = rng.permutation(batch.len());
    mix_with(batch, perm, lambda)
}

fn flip_in_place(data: &mut [f64], h: usize, w: usize, c: usize) {
    for y in 0..h {
        let row = &mut data[y * w * c..(y + 1) * w * c];
        for x in 0..w / 2 {
            let (l, r) = (x * c, (w - 1 - x) * c);
            for ch in 0..c {
                row.swap(l + ch, r + ch);
            }
        }
    }
}

/// Mirror an image left to right. The label is unchanged.
pub fn hflip(img: &LabeledImage) -> LabeledImage {
    let (h, w, c) = img.dims();
    let mut data = img.pixels.data().to_vec();
    flip_in_place(&mut data, h, w, c);
    LabeledImage {
        pixels: Tensor::from_parts(img.pixels.shape().to_vec(), data),
        label: img.label.clone(),
    }
}

/// Flip each row of the batch independently with probability `p`.
pub fn random_hflip_batch(batch: &Batch, p: f64, rng: &mut Rng) -> Result<Batch> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "flip probability must lie in [0, 1], got {p}"
        )));
    }
    let s = batch.image_shape();
    let (h, w, c) = (s[0], s[1], s[2]);
    let n = batch.images.row_len();
    let mut data = batch.images.data().to_vec();
    for row in data.chunks_exact_mut(n) {
        if rng.bernoulli(p) {
            flip_in_place(row, h, w, c);
        }
    }
    Ok(Batch {
        images: Tensor::from_parts(batch.images.shape().to_vec(), data),
        labels: batch.labels.clone(),
    })
}
