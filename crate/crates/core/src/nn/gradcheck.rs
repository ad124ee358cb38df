//! Central finite-difference verification of analytic gradients.

use ndarray::Array2;

use super::network::NetworkParams;
use crate::error::{Error, Result};

/// Absolute denominator floor for [`relative_error`].
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-8;

/// Per-unit-of-loss part of the denominator floor used by
/// [`finite_diff_gradcheck`]. A central difference carries a rounding error
/// of a few ulps of the loss divided by `2 * epsilon`, so entries much
/// smaller than `|loss| * 1e-5` cannot be resolved to a relative `1e-5` at
/// `epsilon = 1e-5`; those are compared on that absolute scale instead.
pub const LOSS_RELATIVE_FLOOR: f64 = 1e-5;

/// `|a - n| / max(|a| + |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(floor)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub n_params: usize,
}

/// Perturbs every coordinate of `params` by `+-epsilon`, and compares the
/// central difference of `loss` with `analytic`.
pub fn finite_diff_gradcheck<F>(
    params: &[f64],
    analytic: &[f64],
    mut loss: F,
    epsilon: f64,
) -> Result<GradcheckReport>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::Config(format!("gradcheck epsilon {epsilon} outside [1e-7, 1e-3]")));
    }
    if params.len() != analytic.len() {
        return Err(Error::LengthMismatch {
            expected: params.len(),
            got: analytic.len(),
        });
    }
    let mut theta = params.to_vec();
    let floor = RELATIVE_ERROR_FLOOR.max(LOSS_RELATIVE_FLOOR * loss(&theta).abs());
    let mut report = GradcheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        n_params: params.len(),
    };
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + epsilon;
        let up = loss(&theta);
        theta[i] = orig - epsilon;
        let down = loss(&theta);
        theta[i] = orig;
        let numeric = (up - down) / (2.0 * epsilon);
        let err = relative_error(analytic[i], numeric, floor);
        if !(err <= report.max_rel_error) {
            report = GradcheckReport {
                max_rel_error: err,
                worst_index: i,
                analytic: analytic[i],
                numeric,
                n_params: params.len(),
            };
        }
    }
    Ok(report)
}

/// Gradient check of one network under an output-space loss.
///
/// `loss` maps the network output to `(value, dvalue/doutput)`.
pub fn network_gradcheck<L>(
    params: &NetworkParams,
    inputs: &[Array2<f64>],
    loss: L,
    epsilon: f64,
) -> Result<GradcheckReport>
where
    L: Fn(&Array2<f64>) -> (f64, Array2<f64>),
{
    let (y, cache) = params.forward_cached(inputs)?;
    let (_, dy) = loss(&y);
    let (grads, _) = params.backward(&cache, &dy)?;
    let mut probe = params.clone();
    finite_diff_gradcheck(
        &params.flatten(),
        &grads.flatten(),
        |theta| {
            probe.set_flat(theta).expect("same length");
            loss(&probe.forward(inputs).expect("shapes checked")).0
        },
        epsilon,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::network::{Activation, NetworkShape};
    use crate::nn::optim::weight_init;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn squared_loss(target: Array2<f64>) -> impl Fn(&Array2<f64>) -> (f64, Array2<f64>) {
        move |y| {
            let d = y - &target;
            (d.iter().map(|v| v * v).sum(), 2.0 * d)
        }
    }

    fn setup(seed: u64, act: Activation) -> (NetworkParams, Vec<Array2<f64>>, Array2<f64>) {
        let shape = NetworkShape {
            input_size: 4,
            hidden_size: 6,
            output_size: 3,
            activation: act,
        };
        let mut rng = stream_rng(seed, 0);
        let p = weight_init(shape, &mut rng);
        let xs = (0..3)
            .map(|_| Array2::from_shape_fn((2, 4), |_| rng.random_range(-1.0..1.0)))
            .collect();
        let target = Array2::from_shape_fn((2, 3), |_| rng.random_range(-1.0..1.0));
        (p, xs, target)
    }

    #[test]
    fn correct_gradients_pass() {
        for seed in 0..5 {
            for act in [Activation::Tanh, Activation::Identity] {
                let (p, xs, target) = setup(seed, act);
                let r = network_gradcheck(&p, &xs, squared_loss(target), 1e-5).unwrap();
                assert!(r.max_rel_error < 1e-5, "seed {seed} {act:?}: {r:?}");
            }
        }
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let (p, xs, target) = setup(9, Activation::Tanh);
        let loss = squared_loss(target);
        let (y, cache) = p.forward_cached(&xs).unwrap();
        let (g, _) = p.backward(&cache, &loss(&y).1).unwrap();
        let mut flat = g.flatten();
        let big = (0..flat.len())
            .max_by(|&a, &b| flat[a].abs().total_cmp(&flat[b].abs()))
            .unwrap();
        flat[big] *= 1.01;
        let mut probe = p.clone();
        let r = finite_diff_gradcheck(
            &p.flatten(),
            &flat,
            |th| {
                probe.set_flat(th).unwrap();
                loss(&probe.forward(&xs).unwrap()).0
            },
            1e-5,
        )
        .unwrap();
        assert!(r.max_rel_error > 1e-3, "{r:?}");
        assert_eq!(r.worst_index, big);
    }

    #[test]
    fn all_zero_network_passes() {
        let shape = NetworkShape {
            input_size: 3,
            hidden_size: 4,
            output_size: 2,
            activation: Activation::Tanh,
        };
        let p = NetworkParams::zeros(shape);
        let xs = vec![Array2::ones((1, 3)); 2];
        let r = network_gradcheck(&p, &xs, squared_loss(Array2::ones((1, 2))), 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-5, "{r:?}");
    }

    #[test]
    fn epsilon_range_enforced() {
        assert!(finite_diff_gradcheck(&[0.0], &[0.0], |_| 0.0, 1e-2).is_err());
    }
}
