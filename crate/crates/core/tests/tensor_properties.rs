use mixaug::numerics::{sample_beta, Rng, Tensor};
use proptest::prelude::*;

fn random_matrix(rng: &mut Rng, r: usize, c: usize) -> Tensor {
    Tensor::matrix(
        r,
        c,
        (0..r * c).map(|_| rng.uniform_range(-1.0, 1.0)).collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn matmul_is_associative(seed in any::<u64>(), m in 1usize..6, k in 1usize..6, n in 1usize..6, p in 1usize..6) {
        let mut rng = Rng::new(seed);
        let (a, b, c) = (random_matrix(&mut rng, m, k), random_matrix(&mut rng, k, n), random_matrix(&mut rng, n, p));
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        prop_assert!(left.sub(&right).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn transpose_reverses_products(seed in any::<u64>(), m in 1usize..6, k in 1usize..6, n in 1usize..6) {
        let mut rng = Rng::new(seed);
        let (a, b) = (random_matrix(&mut rng, m, k), random_matrix(&mut rng, k, n));
        let lhs = a.matmul(&b).unwrap().transpose().unwrap();
        let rhs = b.transpose().unwrap().matmul(&a.transpose().unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn beta_draws_stay_in_the_unit_interval(seed in any::<u64>(), alpha in 0.01f64..20.0) {
        let mut rng = Rng::new(seed);
        for _ in 0..200 {
            let l = sample_beta(alpha, &mut rng).unwrap();
            prop_assert!((0.0..=1.0).contains(&l));
        }
    }

    #[test]
    fn lerp_endpoints(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let (a, b) = (random_matrix(&mut rng, 3, 4), random_matrix(&mut rng, 3, 4));
        prop_assert_eq!(a.lerp(&b, 1.0).unwrap(), a.clone());
        prop_assert_eq!(a.lerp(&b, 0.0).unwrap(), b);
    }
}

#[test]
fn beta_rejects_non_positive_alpha() {
    let mut rng = Rng::new(0);
    for a in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(sample_beta(a, &mut rng).is_err(), "{a}");
    }
}
