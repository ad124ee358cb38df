//! Network gradients, determinism and gate ranges on random shapes.

use eh_uplink::nn::{lstm_cell_forward, network_gradcheck, weight_init, Activation, NetworkShape};
use eh_uplink::rng::stream_rng;
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

fn random_inputs<R: Rng>(steps: usize, batch: usize, width: usize, rng: &mut R) -> Vec<Array2<f64>> {
    (0..steps)
        .map(|_| Array2::from_shape_fn((batch, width), |_| rng.random_range(-2.0..2.0)))
        .collect()
}

fn shape(input: usize, hidden: usize, output: usize, activation: Activation) -> NetworkShape {
    NetworkShape {
        input_size: input,
        hidden_size: hidden,
        output_size: output,
        activation,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn analytic_gradients_match_finite_differences(
        seed in 0u64..10_000,
        input in 1usize..5,
        hidden in 1usize..5,
        output in 1usize..4,
        steps in 1usize..5,
        batch in 1usize..4,
        tanh_out in any::<bool>(),
    ) {
        let mut rng = stream_rng(seed, 9);
        let act = if tanh_out { Activation::Tanh } else { Activation::Identity };
        let params = weight_init(shape(input, hidden, output, act), &mut rng);
        let xs = random_inputs(steps, batch, input, &mut rng);
        let target = Array2::from_shape_fn((batch, output), |_| rng.random_range(-1.0..1.0));
        // half the squared error against a random target
        let report = network_gradcheck(
            &params,
            &xs,
            |y| {
                let d = y - &target;
                (0.5 * d.mapv(|v| v * v).sum(), d)
            },
            1e-5,
        )
        .unwrap();
        prop_assert!(report.max_rel_error < 1e-5, "{:?}", report);
    }

    #[test]
    fn forward_is_pure_and_deterministic(seed in 0u64..10_000, steps in 1usize..6) {
        let mut rng = stream_rng(seed, 9);
        let params = weight_init(shape(3, 4, 2, Activation::Identity), &mut rng);
        let before = params.clone();
        let xs = random_inputs(steps, 2, 3, &mut rng);
        let a = params.forward(&xs).unwrap();
        let b = params.forward(&xs).unwrap();
        prop_assert_eq!(&params, &before);
        prop_assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let again = weight_init(shape(3, 4, 2, Activation::Identity), &mut stream_rng(seed, 9));
        prop_assert_eq!(again, before);
    }

    #[test]
    fn gates_stay_in_range(seed in 0u64..10_000, scale in 0.1f64..10.0) {
        let mut rng = stream_rng(seed, 9);
        let mut params = weight_init(shape(3, 5, 1, Activation::Identity), &mut rng);
        params.lstm.w.mapv_inplace(|w| w * scale);
        let x = Array2::from_shape_fn((4, 3), |_| rng.random_range(-3.0..3.0));
        let h = Array2::from_shape_fn((4, 5), |_| rng.random_range(-1.0..1.0));
        let c = Array2::from_shape_fn((4, 5), |_| rng.random_range(-3.0..3.0));
        let (h1, _, cache) = lstm_cell_forward(x.view(), h.view(), c.view(), &params.lstm).unwrap();
        for gate in [&cache.forget, &cache.input, &cache.output] {
            prop_assert!(gate.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        prop_assert!(cache.cell.iter().all(|&v| (-1.0..=1.0).contains(&v)));
        prop_assert!(h1.iter().all(|&v| v.abs() <= 1.0));
    }
}
