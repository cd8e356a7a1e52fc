use mixaug::dataio::{solve_affine, warp_affine, Affine, AlignmentTemplate, Landmarks5};
use mixaug::numerics::{Rng, Tensor};
use proptest::prelude::*;

fn random_similarity(rng: &mut Rng, center: [f64; 2]) -> Affine {
    let angle = rng.uniform_range(-30.0, 30.0).to_radians();
    let scale = rng.uniform_range(0.7, 1.4);
    let shift = [
        rng.uniform_range(-10.0, 10.0),
        rng.uniform_range(-10.0, 10.0),
    ];
    Affine::similarity(angle, scale, center, shift)
}

proptest! {
    #[test]
    fn similarity_round_trip(seed in any::<u64>(), size in prop::sample::select(vec![64usize, 100, 112])) {
        let mut rng = Rng::new(seed);
        let t = AlignmentTemplate::frontal(size).unwrap();
        let c = (size as f64 - 1.0) / 2.0;
        let moved = t.as_landmarks().transformed(&random_similarity(&mut rng, [c, c])).unwrap();
        let a = solve_affine(&moved, &t).unwrap();
        for (p, q) in moved.points().iter().zip(t.points()) {
            let r = a.apply(*p);
            prop_assert!((r[0] - q[0]).hypot(r[1] - q[1]) < 0.5);
        }
    }

    #[test]
    fn general_affine_is_recovered_exactly(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let t = AlignmentTemplate::frontal(112).unwrap();
        let m = Affine([
            rng.uniform_range(0.8, 1.2), rng.uniform_range(-0.2, 0.2), rng.uniform_range(-5.0, 5.0),
            rng.uniform_range(-0.2, 0.2), rng.uniform_range(0.8, 1.2), rng.uniform_range(-5.0, 5.0),
        ]);
        let a = solve_affine(&t.as_landmarks().transformed(&m).unwrap(), &t).unwrap();
        let id = a.compose(&m);
        for (x, y) in id.0.iter().zip(Affine::IDENTITY.0) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }
}

#[test]
fn warp_moves_a_blob_onto_the_template() {
    let size = 64;
    let t = AlignmentTemplate::frontal(size).unwrap();
    let c = (size as f64 - 1.0) / 2.0;
    let pose = Affine::similarity(0.3, 0.9, [c, c], [3.0, -2.0]);
    let src = t.as_landmarks().transformed(&pose).unwrap();
    // a soft blob at the posed nose tip
    let nose = src.points()[2];
    let data = (0..size * size)
        .map(|i| {
            let (x, y) = ((i % size) as f64, (i / size) as f64);
            (-((x - nose[0]).powi(2) + (y - nose[1]).powi(2)) / 8.0).exp()
        })
        .collect();
    let img = Tensor::new(vec![size, size, 1], data).unwrap();
    let out = warp_affine(&img, &solve_affine(&src, &t).unwrap(), size).unwrap();
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for (i, &v) in out.data().iter().enumerate() {
        sx += v * (i % size) as f64;
        sy += v * (i / size) as f64;
        sw += v;
    }
    let target = t.points()[2];
    assert!((sx / sw - target[0]).hypot(sy / sw - target[1]) < 0.5);
}

#[test]
fn collinear_landmarks_are_rejected() {
    let pts: Vec<f64> = (0..5).flat_map(|i| [i as f64, 2.0 * i as f64]).collect();
    let err = Landmarks5::from_flat(&pts).unwrap_err();
    assert!(matches!(err, mixaug::Error::DegenerateGeometry(_)));
    let coincident = [[3.0, 4.0]; 5];
    assert!(matches!(
        Landmarks5::new(coincident),
        Err(mixaug::Error::DegenerateGeometry(_))
    ));
}
