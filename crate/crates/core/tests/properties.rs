use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use simplexflow::measure::DiscreteMeasure;
use simplexflow::{energy, energy_gradient, make_unit_simplex, power_energy, PowerLawParams};

fn measure_strategy(max_dim: usize, max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
    (1..=max_dim, 1..=max_atoms).prop_flat_map(|(dim, atoms)| {
        (
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, dim), atoms),
            prop::collection::vec(0.05f64..1.0, atoms),
        )
            .prop_map(|(points, weights)| DiscreteMeasure::normalized(points, weights).unwrap())
    })
}

/// `alpha > beta >= 2` with `alpha` up to 12.
fn params_strategy() -> impl Strategy<Value = PowerLawParams> {
    (2.0f64..10.0, 0.05f64..2.0).prop_map(|(beta, gap)| PowerLawParams::new(beta + gap, beta).unwrap())
}

fn random_rotation(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let q = g.qr().q();
    (0..dim).flat_map(|r| (0..dim).map(move |c| (r, c))).map(|(r, c)| q[(r, c)]).collect()
}

/// Variance from the definition `sum m |x|^2 - |sum m x|^2`.
fn variance_oracle(mu: &DiscreteMeasure) -> f64 {
    let dim = mu.dim();
    let mut second = 0.0;
    let mut mean = vec![0.0; dim];
    for (i, x) in mu.points().enumerate() {
        let m = mu.weight(i);
        second += m * x.iter().map(|c| c * c).sum::<f64>();
        for d in 0..dim {
            mean[d] += m * x[d];
        }
    }
    second - mean.iter().map(|c| c * c).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quadratic_energy_is_variance(mu in measure_strategy(5, 8)) {
        let e2 = power_energy(&mu, 2.0).unwrap();
        prop_assert!((e2 - variance_oracle(&mu)).abs() <= 1e-12);
        prop_assert!((mu.variance() - e2).abs() <= 1e-12);
    }

    #[test]
    fn energy_is_rigid_motion_invariant(mu in measure_strategy(4, 8), params in params_strategy(), seed in any::<u64>(), shift in prop::collection::vec(-3.0f64..3.0, 4)) {
        let rot = random_rotation(mu.dim(), seed);
        let moved = mu.transformed(&rot, &shift[..mu.dim()]);
        let (a, b) = (energy(&mu, &params), energy(&moved, &params));
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn gradients_sum_to_zero(mu in measure_strategy(4, 10), params in params_strategy()) {
        let g = energy_gradient(&mu, &params).unwrap();
        let scale: f64 = g.iter().flatten().map(|c| c.abs()).fold(1.0, f64::max);
        for d in 0..mu.dim() {
            let total: f64 = g.iter().map(|row| row[d]).sum();
            prop_assert!(total.abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn scaling_identity_on_simplex_vertices(n in 1usize..=4, raw in prop::collection::vec(0.01f64..1.0, 5), params in params_strategy()) {
        let total: f64 = raw[..=n].iter().sum();
        let masses: Vec<f64> = raw[..=n].iter().map(|r| r / total).collect();
        let nu = make_unit_simplex(n, false).unwrap().measure(&masses).unwrap();
        let alpha = params.alpha_finite().unwrap();
        let beta = params.beta();
        let hard = energy(&nu, &PowerLawParams::hard(beta).unwrap());
        let soft = energy(&nu, &params);
        prop_assert!((soft - (1.0 - beta / alpha) * hard).abs() <= 1e-12);
        let off_diagonal = 1.0 - nu.weights().iter().map(|m| m * m).sum::<f64>();
        prop_assert!((hard + off_diagonal / beta).abs() <= 1e-12);
    }

    #[test]
    fn pool_size_does_not_change_energy(seed in any::<u64>(), params in params_strategy()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let mu = DiscreteMeasure::uniform(points).unwrap();
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = serial.install(|| (energy(&mu, &params), energy_gradient(&mu, &params).unwrap()));
        let b = wide.install(|| (energy(&mu, &params), energy_gradient(&mu, &params).unwrap()));
        prop_assert_eq!(a.0.to_bits(), b.0.to_bits());
        prop_assert_eq!(a.1, b.1);
    }
}
