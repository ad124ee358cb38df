//! Battery-level prediction from the scheduling history, trained by TD(0).

use ndarray::{Array2, Axis};

use super::dqn::stack_sequences;
use crate::env::AccessAction;
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, sgd_step, GradientSet, NetworkParams};

/// Network outputs are batteries divided by `capacity`.
pub fn to_battery_units(raw: &[f64], capacity: u32) -> Vec<f64> {
    let c = capacity as f64;
    raw.iter().map(|&y| (y * c).clamp(0.0, c)).collect()
}

/// `b_t`: one forward pass over an encoded `W x 3N` history; clamped to `[0, C]`.
pub fn predict_batteries(params: &NetworkParams, history: &Array2<f64>, capacity: u32) -> Result<Vec<f64>> {
    let y = params.forward(&stack_sequences([history])?)?;
    Ok(to_battery_units(y.row(0).as_slice().expect("standard layout"), capacity))
}

/// What one TD(0) prediction update needs from a transition.
#[derive(Debug, Clone, Copy)]
pub struct PredictionSample<'a> {
    pub state: &'a Array2<f64>,
    pub selected: &'a AccessAction,
    /// Batteries reported by the scheduled UEs, ascending UE order.
    pub reported: &'a [f64],
    pub next_state: &'a Array2<f64>,
}

/// Frozen TD(0) targets `R + gamma * v(S')` on the scheduled coordinates,
/// in network units.
pub fn td_targets(
    params: &NetworkParams,
    batch: &[PredictionSample<'_>],
    gamma_pred: f64,
    capacity: u32,
) -> Result<Vec<Vec<f64>>> {
    let c = capacity as f64;
    let next = if gamma_pred == 0.0 {
        None
    } else {
        Some(params.forward(&stack_sequences(batch.iter().map(|s| s.next_state))?)?)
    };
    batch
        .iter()
        .enumerate()
        .map(|(b, s)| {
            if s.reported.len() != s.selected.len() {
                return Err(Error::LengthMismatch {
                    expected: s.selected.len(),
                    got: s.reported.len(),
                });
            }
            Ok(s.selected
                .selected()
                .iter()
                .zip(s.reported)
                .map(|(&i, &r)| r / c + next.as_ref().map_or(0.0, |v| gamma_pred * v[[b, i]]))
                .collect())
        })
        .collect()
}

/// Semi-gradient of `1/(2B) * sum_b sum_{i in selected} (target - v(S))^2`
/// with frozen targets, plus the TD errors in battery units.
pub fn prediction_gradients(
    params: &NetworkParams,
    batch: &[PredictionSample<'_>],
    targets: &[Vec<f64>],
    capacity: u32,
) -> Result<(f64, GradientSet, Vec<Vec<f64>>)> {
    let inputs = stack_sequences(batch.iter().map(|s| s.state))?;
    let (v, cache) = params.forward_cached(&inputs)?;
    let (err_signal, td, loss) = td_errors(&v, batch, targets, capacity);
    if !loss.is_finite() {
        return Err(Error::non_finite("prediction loss", format!("loss = {loss}")));
    }
    let (grads, _) = params.backward(&cache, &err_signal)?;
    Ok((loss, grads, td))
}

/// Output-error matrix, TD errors in battery units and the loss, given
/// predictions `v` (`B x N`, network units).
pub(crate) fn td_errors(
    v: &Array2<f64>,
    batch: &[PredictionSample<'_>],
    targets: &[Vec<f64>],
    capacity: u32,
) -> (Array2<f64>, Vec<Vec<f64>>, f64) {
    let c = capacity as f64;
    let scale = 1.0 / batch.len() as f64;
    let mut signal = Array2::zeros(v.raw_dim());
    let mut loss = 0.0;
    let td = batch
        .iter()
        .zip(targets)
        .zip(v.axis_iter(Axis(0)))
        .enumerate()
        .map(|(b, ((s, tgt), row))| {
            s.selected
                .selected()
                .iter()
                .zip(tgt)
                .map(|(&i, &y)| {
                    let delta = y - row[i];
                    loss += 0.5 * delta * delta * scale;
                    signal[[b, i]] = -delta * scale;
                    delta * c
                })
                .collect()
        })
        .collect();
    (signal, td, loss)
}

/// One TD(0) step on `params`. Returns the per-sample TD error vectors in
/// battery units (scheduled UEs only, ascending order).
pub fn td0_update(
    params: &mut NetworkParams,
    batch: &[PredictionSample<'_>],
    alpha: f64,
    gamma_pred: f64,
    capacity: u32,
    grad_clip: f64,
) -> Result<Vec<Vec<f64>>> {
    if batch.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    let targets = td_targets(params, batch, gamma_pred, capacity)?;
    let (_, mut grads, td) = prediction_gradients(params, batch, &targets, capacity)?;
    clip_global_norm(&mut [&mut grads], grad_clip);
    sgd_step(params, &grads, alpha)?;
    Ok(td)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::history::HistoryWindow;
    use crate::nn::{weight_init, Activation, NetworkShape};
    use crate::rng::stream_rng;

    fn net(seed: u64) -> NetworkParams {
        weight_init(
            NetworkShape {
                input_size: 6,
                hidden_size: 4,
                output_size: 2,
                activation: Activation::Identity,
            },
            &mut stream_rng(seed, 0),
        )
    }

    fn hist() -> (Array2<f64>, Array2<f64>) {
        let h0 = HistoryWindow::zeros(2, 1, 2).update(&[1.0, 0.0], &[1.0, 2.0], &[3.0]).unwrap();
        let h1 = h0.update(&[0.0, 1.0], &[2.0, 2.0], &[1.0]).unwrap();
        (h0.encode(4), h1.encode(4))
    }

    #[test]
    fn predictions_clamped() {
        let (s, _) = hist();
        for seed in 0..10 {
            let mut p = net(seed);
            p.dense.b.fill(3.0 * (seed as f64 - 5.0));
            let b = predict_batteries(&p, &s, 4).unwrap();
            assert_eq!(b.len(), 2);
            assert!(b.iter().all(|&x| (0.0..=4.0).contains(&x)));
        }
    }

    #[test]
    fn fixed_point_leaves_parameters() {
        let (s, s2) = hist();
        let mut p = net(1);
        let a = AccessAction::new(vec![1], 2).unwrap();
        let gamma = 0.5;
        let v = p.forward(&stack_sequences([&s]).unwrap()).unwrap()[[0, 1]];
        let v2 = p.forward(&stack_sequences([&s2]).unwrap()).unwrap()[[0, 1]];
        let reported = [(v - gamma * v2) * 4.0];
        let batch = [PredictionSample {
            state: &s,
            selected: &a,
            reported: &reported,
            next_state: &s2,
        }];
        let before = p.flatten();
        let td = td0_update(&mut p, &batch, 0.1, gamma, 4, 0.0).unwrap();
        assert!(td[0][0].abs() < 1e-12);
        let after = p.flatten();
        assert!(before.iter().zip(&after).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn scalar_td_error() {
        // K=1, R=2, gamma=0.99, v'=2, v=2 in battery units -> delta = 1.98
        let (s, s2) = hist();
        let mut p = net(2);
        p.dense.w.fill(0.0);
        p.dense.b.fill(0.5);
        let a = AccessAction::new(vec![0], 2).unwrap();
        let batch = [PredictionSample {
            state: &s,
            selected: &a,
            reported: &[2.0],
            next_state: &s2,
        }];
        let tgt = td_targets(&p, &batch, 0.99, 4).unwrap();
        let (_, g, td) = prediction_gradients(&p, &batch, &tgt, 4).unwrap();
        assert!((td[0][0] - 1.98).abs() < 1e-12);
        // unscheduled output receives no signal
        assert_eq!(g.dense_b[1], 0.0);
        assert!(g.dense_b[0] < 0.0);
    }
}
