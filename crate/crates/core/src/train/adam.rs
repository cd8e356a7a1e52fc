use crate::error::{Error, Result};
use crate::network::{GradientSet, NetworkParams};
use crate::numerics::Tensor;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates for every parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &NetworkParams) -> Self {
        let zeros: Vec<Tensor> = params
            .tensors()
            .iter()
            .map(|t| Tensor::from_parts(t.shape().to_vec(), vec![0.0; t.len()]))
            .collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
            beta1: BETA1,
            beta2: BETA2,
            eps: EPSILON,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(
    params: &mut NetworkParams,
    grads: &GradientSet,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    grads.check_congruent(params)?;
    let congruent = state.m.len() == params.tensors().len()
        && state
            .m
            .iter()
            .zip(&state.v)
            .zip(params.tensors())
            .all(|((m, v), p)| m.shape() == p.shape() && v.shape() == p.shape());
    if !congruent {
        return Err(Error::Dimension(
            "optimizer moments do not match the parameter shapes".into(),
        ));
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::Domain(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    state.step += 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let bc1 = 1.0 - b1.powf(state.step as f64);
    let bc2 = 1.0 - b2.powf(state.step as f64);
    for (((p, g), m), v) in params
        .tensors_mut()
        .iter_mut()
        .zip(grads.tensors())
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        let (m, v) = (m.data_mut(), v.data_mut());
        for (i, (pv, &gv)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
            m[i] = b1 * m[i] + (1.0 - b1) * gv;
            v[i] = b2 * v[i] + (1.0 - b2) * gv * gv;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            *pv -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Architecture;
    use crate::numerics::Rng;

    fn setup() -> (NetworkParams, AdamState) {
        let arch = Architecture::new(4, 4, 1, 2).unwrap();
        let p = NetworkParams::init(arch, &mut Rng::new(1)).unwrap();
        let s = AdamState::new(&p);
        (p, s)
    }

    fn constant_grads(p: &NetworkParams, g: f64) -> GradientSet {
        let ts = p
            .tensors()
            .iter()
            .map(|t| Tensor::full(t.shape(), g).unwrap())
            .collect();
        GradientSet::from_tensors(p, ts).unwrap()
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [-3.0, 1e-3, 250.0] {
            let (mut p, mut s) = setup();
            let before = p.clone();
            let grads = constant_grads(&p, g);
            adam_step(&mut p, &grads, &mut s, 1e-3).unwrap();
            let expect = 1e-3 * g.abs() / (g.abs() + EPSILON);
            for (a, b) in p.tensors().iter().zip(before.tensors()) {
                for (x, y) in a.data().iter().zip(b.data()) {
                    assert!(((y - x) * g.signum() - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let (mut p, mut s) = setup();
        let before = p.clone();
        let z = GradientSet::zeros_like(&p);
        for _ in 0..50 {
            adam_step(&mut p, &z, &mut s, 1e-3).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(s.step, 50);
    }

    #[test]
    fn shape_mismatch() {
        let (mut p, _) = setup();
        let other = NetworkParams::zeros(Architecture::new(8, 8, 1, 2).unwrap()).unwrap();
        let mut wrong_state = AdamState::new(&other);
        let g = GradientSet::zeros_like(&p);
        assert!(matches!(
            adam_step(&mut p, &g, &mut wrong_state, 1e-3),
            Err(Error::Dimension(_))
        ));
        let g_other = GradientSet::zeros_like(&other);
        let mut s = AdamState::new(&p);
        assert!(matches!(
            adam_step(&mut p, &g_other, &mut s, 1e-3),
            Err(Error::Dimension(_))
        ));
    }
}
