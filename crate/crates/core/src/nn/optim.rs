use rand::Rng;

use super::network::{GradientSet, NetworkParams, NetworkShape};
use crate::error::{Error, Result};

/// `theta <- theta - learning_rate * grad`.
///
/// Rejects gradients containing NaN or infinity without touching the
/// parameters.
pub fn sgd_step(params: &mut NetworkParams, grads: &GradientSet, learning_rate: f64) -> Result<()> {
    if !grads.is_congruent(params) {
        return Err(Error::Shape("gradient set not congruent with parameters".into()));
    }
    for (k, s) in grads.slices().iter().enumerate() {
        if let Some(pos) = s.iter().position(|g| !g.is_finite()) {
            return Err(Error::non_finite(
                "sgd_step",
                format!("gradient array {k} entry {pos} = {}", s[pos]),
            ));
        }
    }
    for (p, g) in params.slices_mut().into_iter().zip(grads.slices()) {
        p.iter_mut().zip(g).for_each(|(p, g)| *p -= learning_rate * g);
    }
    params.bump_generation();
    Ok(())
}

/// Rescales the gradient sets together so their joint L2 norm is at most
/// `max_norm`. Returns the norm before clipping. `max_norm <= 0` disables.
pub fn clip_global_norm(grads: &mut [&mut GradientSet], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g.squared_norm()).sum::<f64>().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let f = max_norm / norm;
        for g in grads.iter_mut() {
            g.scale(f);
        }
    }
    norm
}

/// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` weights, zero biases except
/// the forget gate, which starts at +1.
pub fn weight_init<R: Rng + ?Sized>(shape: NetworkShape, rng: &mut R) -> NetworkParams {
    let mut p = NetworkParams::zeros(shape);
    let lstm_bound = 1.0 / ((shape.input_size + shape.hidden_size) as f64).sqrt();
    p.lstm.w.mapv_inplace(|_| rng.random_range(-lstm_bound..=lstm_bound));
    p.lstm
        .b
        .slice_mut(ndarray::s![0..shape.hidden_size])
        .fill(1.0);
    let dense_bound = 1.0 / (shape.hidden_size as f64).sqrt();
    p.dense.w.mapv_inplace(|_| rng.random_range(-dense_bound..=dense_bound));
    p
}
