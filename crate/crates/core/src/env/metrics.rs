use super::action::AccessAction;
use super::channel::ChannelSnapshot;
use super::scenario::LinkBudget;
use crate::error::{Error, Result};

/// Sum of Shannon rates over the scheduled UEs that could transmit.
///
/// `flags[i]` is the transmit indicator of UE `i` (indexed over all UEs).
pub fn sum_rate(
    action: &AccessAction,
    flags: &[u8],
    gains: &ChannelSnapshot,
    budget: &LinkBudget,
) -> f64 {
    action
        .selected()
        .iter()
        .filter(|&&i| flags[i] == 1)
        .map(|&i| budget.rate(gains.gains[i]))
        .sum()
}

/// Euclidean distance between reported and predicted batteries on the
/// scheduled set.
pub fn prediction_loss(true_batteries: &[f64], predicted: &[f64]) -> Result<f64> {
    if true_batteries.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: true_batteries.len(),
            got: predicted.len(),
        });
    }
    Ok(true_batteries
        .iter()
        .zip(predicted)
        .map(|(b, p)| (b - p).powi(2))
        .sum::<f64>()
        .sqrt())
}
