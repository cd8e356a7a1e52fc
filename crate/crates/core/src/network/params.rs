use crate::error::{Error, Result};
use crate::numerics::{Rng, Tensor};

pub const CONV1_FILTERS: usize = 8;
pub const CONV2_FILTERS: usize = 16;
pub const HIDDEN: usize = 64;
pub const KERNEL: usize = 3;

/// Parameter tensor names, in storage and checkpoint order.
pub const PARAM_NAMES: [&str; 8] = [
    "conv1.weight",
    "conv1.bias",
    "conv2.weight",
    "conv2.bias",
    "dense1.weight",
    "dense1.bias",
    "dense2.weight",
    "dense2.bias",
];

pub(crate) const CONV1_W: usize = 0;
pub(crate) const CONV1_B: usize = 1;
pub(crate) const CONV2_W: usize = 2;
pub(crate) const CONV2_B: usize = 3;
pub(crate) const DENSE1_W: usize = 4;
pub(crate) const DENSE1_B: usize = 5;
pub(crate) const DENSE2_W: usize = 6;
pub(crate) const DENSE2_B: usize = 7;

/// Input geometry and class count of the reference network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Architecture {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub classes: usize,
}

impl Architecture {
    pub fn new(height: usize, width: usize, channels: usize, classes: usize) -> Result<Self> {
        let arch = Architecture {
            height,
            width,
            channels,
            classes,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.height < 4
            || self.width < 4
            || !self.height.is_multiple_of(4)
            || !self.width.is_multiple_of(4)
        {
            return Err(Error::Dimension(format!(
                "input {}×{} must be at least 4×4 and divisible by 4 for two 2×2 poolings",
                self.height, self.width
            )));
        }
        if self.channels == 0 {
            return Err(Error::Dimension("input needs at least one channel".into()));
        }
        if self.classes < 2 {
            return Err(Error::Dimension(format!(
                "need at least two classes, got {}",
                self.classes
            )));
        }
        Ok(())
    }

    /// Length of the flattened second pooling output.
    pub fn flat_len(&self) -> usize {
        (self.height / 4) * (self.width / 4) * CONV2_FILTERS
    }

    pub fn param_shapes(&self) -> [Vec<usize>; 8] {
        [
            vec![KERNEL, KERNEL, self.channels, CONV1_FILTERS],
            vec![CONV1_FILTERS],
            vec![KERNEL, KERNEL, CONV1_FILTERS, CONV2_FILTERS],
            vec![CONV2_FILTERS],
            vec![self.flat_len(), HIDDEN],
            vec![HIDDEN],
            vec![HIDDEN, self.classes],
            vec![self.classes],
        ]
    }

    pub fn input_shape(&self) -> [usize; 3] {
        [self.height, self.width, self.channels]
    }
}

fn check_congruent(arch: &Architecture, tensors: &[Tensor], what: &str) -> Result<()> {
    if tensors.len() != PARAM_NAMES.len() {
        return Err(Error::Dimension(format!(
            "{what} holds {} tensors, expected {}",
            tensors.len(),
            PARAM_NAMES.len()
        )));
    }
    for ((t, shape), name) in tensors.iter().zip(arch.param_shapes()).zip(PARAM_NAMES) {
        if t.shape() != shape.as_slice() {
            return Err(Error::Dimension(format!(
                "{what} {name} has shape {:?}, architecture expects {shape:?}",
                t.shape()
            )));
        }
    }
    Ok(())
}

/// Weights and biases of the reference CNN.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    arch: Architecture,
    tensors: Vec<Tensor>,
}

impl NetworkParams {
    pub fn from_tensors(arch: Architecture, tensors: Vec<Tensor>) -> Result<Self> {
        arch.validate()?;
        check_congruent(&arch, &tensors, "parameter")?;
        Ok(NetworkParams { arch, tensors })
    }

    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let tensors = arch
            .param_shapes()
            .iter()
            .map(|s| Tensor::zeros(s))
            .collect::<Result<_>>()?;
        Ok(NetworkParams { arch, tensors })
    }

    /// He-normal weights, zero biases.
    pub fn init(arch: Architecture, rng: &mut Rng) -> Result<Self> {
        arch.validate()?;
        let fan_in = [
            KERNEL * KERNEL * arch.channels,
            0,
            KERNEL * KERNEL * CONV1_FILTERS,
            0,
            arch.flat_len(),
            0,
            HIDDEN,
            0,
        ];
        let tensors = arch
            .param_shapes()
            .into_iter()
            .zip(fan_in)
            .map(|(shape, fan)| {
                let n: usize = shape.iter().product();
                let data = if fan == 0 {
                    vec![0.0; n]
                } else {
                    let std = (2.0 / fan as f64).sqrt();
                    (0..n).map(|_| std * rng.gaussian()).collect()
                };
                Tensor::new(shape, data)
            })
            .collect::<Result<_>>()?;
        Ok(NetworkParams { arch, tensors })
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensor(&self, i: usize) -> &Tensor {
        &self.tensors[i]
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    /// Copy with parameter tensor `i` replaced.
    pub fn with_tensor(&self, i: usize, t: Tensor) -> Result<Self> {
        let mut tensors = self.tensors.clone();
        *tensors
            .get_mut(i)
            .ok_or_else(|| Error::Argument(format!("no parameter tensor {i}")))? = t;
        Self::from_tensors(self.arch, tensors)
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}

/// Gradients matching a [`NetworkParams`] tensor for tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    tensors: Vec<Tensor>,
}

impl GradientSet {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        GradientSet {
            tensors: params
                .tensors
                .iter()
                .map(|t| Tensor::from_parts(t.shape().to_vec(), vec![0.0; t.len()]))
                .collect(),
        }
    }

    pub fn from_tensors(params: &NetworkParams, tensors: Vec<Tensor>) -> Result<Self> {
        check_congruent(&params.arch, &tensors, "gradient")?;
        Ok(GradientSet { tensors })
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensor(&self, i: usize) -> &Tensor {
        &self.tensors[i]
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn check_congruent(&self, params: &NetworkParams) -> Result<()> {
        check_congruent(&params.arch, &self.tensors, "gradient")
    }

    pub fn add(&self, other: &GradientSet) -> Result<GradientSet> {
        if self.tensors.len() != other.tensors.len() {
            return Err(Error::Dimension("gradient sets differ in length".into()));
        }
        let tensors = self
            .tensors
            .iter()
            .zip(&other.tensors)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(GradientSet { tensors })
    }

    pub fn scale(&self, k: f64) -> Result<GradientSet> {
        let tensors = self
            .tensors
            .iter()
            .map(|t| t.scale(k))
            .collect::<Result<_>>()?;
        Ok(GradientSet { tensors })
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors.iter().map(Tensor::max_abs).fold(0.0, f64::max)
    }
}
