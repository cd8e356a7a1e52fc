use super::Tensor;
use crate::error::{Error, Result};

/// Central-difference gradient of `f` at `x`, one element at a time.
pub fn finite_diff_grad(mut f: impl FnMut(&Tensor) -> f64, x: &Tensor, eps: f64) -> Result<Tensor> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let mut probe = x.clone();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = x.data()[i];
        probe.data_mut()[i] = orig + eps;
        let hi = f(&probe);
        probe.data_mut()[i] = orig - eps;
        let lo = f(&probe);
        probe.data_mut()[i] = orig;
        if !hi.is_finite() || !lo.is_finite() {
            return Err(Error::Numeric(format!(
                "objective is not finite near flat index {i}"
            )));
        }
        grad.push((hi - lo) / (2.0 * eps));
    }
    Tensor::new(x.shape().to_vec(), grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_squares() {
        let x = Tensor::vector(vec![1.0, 2.0]).unwrap();
        let g = finite_diff_grad(|t| t.data().iter().map(|v| v * v).sum(), &x, 1e-5).unwrap();
        assert!((g.data()[0] - 2.0).abs() < 1e-8);
        assert!((g.data()[1] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let x = Tensor::vector(vec![0.3, -4.0, 9.0]).unwrap();
        let g = finite_diff_grad(|_| 3.5, &x, 1e-5).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_recovers_weights() {
        let w = Tensor::vector(vec![0.5, -2.0, 3.25]).unwrap();
        let x = Tensor::vector(vec![1.0, 1.0, 1.0]).unwrap();
        let g = finite_diff_grad(|t| t.dot(&w).unwrap(), &x, 1e-5).unwrap();
        for (a, b) in g.data().iter().zip(w.data()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let x = Tensor::vector(vec![0.0]).unwrap();
        let r = finite_diff_grad(|t| 1.0 / t.data()[0].signum().max(0.0), &x, 1e-5);
        assert!(matches!(r, Err(Error::Numeric(_))));
        assert!(finite_diff_grad(|_| 0.0, &x, 0.0).is_err());
    }
}
