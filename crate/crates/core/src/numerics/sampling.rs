//! Gamma and Beta draws built on [`Rng`].

use super::Rng;
use crate::error::{Error, Result};

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

/// Natural log of one Gamma(shape, 1) draw.
///
/// Marsaglia–Tsang squeeze for shape ≥ 1. Smaller shapes use the boost
/// `Gamma(a) = Gamma(a+1)·U^(1/a)`, kept in log space so that tiny shapes
/// cannot underflow to zero.
fn log_gamma_draw(shape: f64, rng: &mut Rng) -> f64 {
    if shape < 1.0 {
        let boosted = log_gamma_draw(shape + 1.0, rng);
        return boosted + rng.uniform_pos().ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = rng.gaussian();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.uniform_pos();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return (d * v).ln();
        }
    }
}

/// One draw from Gamma(`shape`, scale 1).
pub fn sample_gamma(shape: f64, rng: &mut Rng) -> Result<f64> {
    check_positive("gamma shape", shape)?;
    Ok(log_gamma_draw(shape, rng).exp())
}

/// One draw from the symmetric Beta(`alpha`, `alpha`), as `G1/(G1+G2)` for
/// two independent Gamma(`alpha`) draws. The ratio is formed from the log
/// draws and clamped to `[0, 1]`.
pub fn sample_beta(alpha: f64, rng: &mut Rng) -> Result<f64> {
    check_positive("beta alpha", alpha)?;
    let lg1 = log_gamma_draw(alpha, rng);
    let lg2 = log_gamma_draw(alpha, rng);
    // G1/(G1+G2) = 1/(1 + exp(ln G2 − ln G1))
    let lambda = 1.0 / (1.0 + (lg2 - lg1).exp());
    Ok(lambda.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
        let v: Vec<f64> = xs.collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        (mean, var, v.len())
    }

    #[test]
    fn gamma_mean_matches_shape() {
        let mut rng = Rng::new(11);
        for (shape, tol) in [(1.0, 0.01), (0.1, 0.005)] {
            let (mean, _, _) =
                moments((0..1_000_000).map(|_| sample_gamma(shape, &mut rng).unwrap()));
            assert!((mean - shape).abs() < tol, "shape {shape}: mean {mean}");
        }
    }

    #[test]
    fn gamma_rejects_non_positive_shape() {
        let mut rng = Rng::new(0);
        assert!(matches!(sample_gamma(0.0, &mut rng), Err(Error::Domain(_))));
        assert!(matches!(
            sample_gamma(-1.0, &mut rng),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            sample_gamma(f64::NAN, &mut rng),
            Err(Error::Domain(_))
        ));
        assert!(matches!(sample_beta(0.0, &mut rng), Err(Error::Domain(_))));
    }

    #[test]
    fn beta_uniform_case() {
        let mut rng = Rng::new(5);
        let (mean, var, _) = moments((0..1_000_000).map(|_| sample_beta(1.0, &mut rng).unwrap()));
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
        assert!((var - 1.0 / 12.0).abs() < 0.005, "{var}");
    }

    #[test]
    fn beta_small_alpha_is_u_shaped() {
        let mut rng = Rng::new(6);
        let (mean, var, _) = moments((0..1_000_000).map(|_| sample_beta(0.1, &mut rng).unwrap()));
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
        assert!((var - 1.0 / 4.8).abs() < 0.01, "{var}");
    }

    #[test]
    fn beta_is_symmetric_about_half() {
        for alpha in [0.1, 0.2, 0.6, 1.0, 4.0] {
            let mut rng = Rng::new(77);
            let (mean, var, n) =
                moments((0..100_000).map(|_| sample_beta(alpha, &mut rng).unwrap()));
            let se = var.sqrt() / (n as f64).sqrt();
            assert!(
                (mean - 0.5).abs() < 3.0 * se,
                "alpha {alpha}: {mean} ± {se}"
            );
        }
    }

    #[test]
    fn beta_support_even_for_extreme_alpha() {
        let mut rng = Rng::new(8);
        for alpha in [1e-3, 0.01, 0.1, 1.0, 100.0] {
            for _ in 0..10_000 {
                let x = sample_beta(alpha, &mut rng).unwrap();
                assert!((0.0..=1.0).contains(&x));
            }
        }
    }
}
