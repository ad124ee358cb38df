//! Discrete action spaces over `K`-subsets of `N` UEs.
//!
//! Enumerated mode ranks every subset lexicographically (combinadic order)
//! and gives the Q-network one output per subset. Factorized mode gives one
//! score per UE, values a subset as the sum of its members' scores and acts
//! greedily by taking the top `K`.

use rand::seq::index::sample;
use rand::Rng;

use crate::env::AccessAction;
use crate::error::{Error, Result};

pub const DEFAULT_ACTION_CAP: usize = 4096;

/// `n choose k`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact: acc * (n - i) is divisible by (i + 1)
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Lexicographic rank of a `k`-subset of `0..n`.
pub fn action_encode(selected: &[usize], n: usize, k: usize) -> Result<usize> {
    let a = AccessAction::with_k(selected.to_vec(), n, k)?;
    let mut rank: u128 = 0;
    let mut prev = 0usize;
    for (pos, &s) in a.selected().iter().enumerate() {
        let remaining = k - pos - 1;
        for skipped in prev..s {
            rank += binomial(n - skipped - 1, remaining);
        }
        prev = s + 1;
    }
    usize::try_from(rank).map_err(|_| Error::InvalidAction("rank overflows usize".into()))
}

/// Inverse of [`action_encode`].
pub fn action_decode(index: usize, n: usize, k: usize) -> Result<AccessAction> {
    let total = binomial(n, k);
    if k > n || index as u128 >= total {
        return Err(Error::IndexOutOfRange {
            index,
            len: usize::try_from(total).unwrap_or(usize::MAX),
        });
    }
    let mut rest = index as u128;
    let mut out = Vec::with_capacity(k);
    let mut next = 0usize;
    for pos in 0..k {
        let remaining = k - pos - 1;
        loop {
            let block = binomial(n - next - 1, remaining);
            if rest < block {
                break;
            }
            rest -= block;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    AccessAction::with_k(out, n, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSpace {
    Enumerated { n: usize, k: usize, size: usize },
    Factorized { n: usize, k: usize },
}

impl ActionSpace {
    pub fn new(n: usize, k: usize, factorized: bool, cap: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Config(format!("need 1 <= K <= N, got K={k}, N={n}")));
        }
        if factorized {
            return Ok(Self::Factorized { n, k });
        }
        let size = binomial(n, k);
        if size > cap as u128 {
            return Err(Error::Config(format!(
                "C({n},{k}) = {size} actions exceeds the enumeration cap {cap}; \
                 raise action_cap or set factorized_actions = true"
            )));
        }
        Ok(Self::Enumerated {
            n,
            k,
            size: size as usize,
        })
    }

    pub fn n_ues(&self) -> usize {
        match *self {
            Self::Enumerated { n, .. } | Self::Factorized { n, .. } => n,
        }
    }

    pub fn k(&self) -> usize {
        match *self {
            Self::Enumerated { k, .. } | Self::Factorized { k, .. } => k,
        }
    }

    /// Width of the Q-network output.
    pub fn output_size(&self) -> usize {
        match *self {
            Self::Enumerated { size, .. } => size,
            Self::Factorized { n, .. } => n,
        }
    }

    pub fn is_factorized(&self) -> bool {
        matches!(self, Self::Factorized { .. })
    }

    /// Q-value of `action` read from one output row.
    pub fn value(&self, row: &[f64], action: &AccessAction) -> Result<f64> {
        match *self {
            Self::Enumerated { n, k, .. } => Ok(row[action_encode(action.selected(), n, k)?]),
            Self::Factorized { .. } => Ok(action.selected().iter().map(|&i| row[i]).sum()),
        }
    }

    /// Highest-valued action of one output row; ties go to the lowest index.
    pub fn greedy(&self, row: &[f64]) -> Result<AccessAction> {
        match *self {
            Self::Enumerated { n, k, .. } => action_decode(argmax(row)?, n, k),
            Self::Factorized { n, k } => AccessAction::with_k(top_k(row, k), n, k),
        }
    }

    pub fn max_value(&self, row: &[f64]) -> Result<f64> {
        match *self {
            Self::Enumerated { .. } => Ok(row[argmax(row)?]),
            Self::Factorized { k, .. } => Ok(top_k(row, k).iter().map(|&i| row[i]).sum()),
        }
    }

    /// Uniformly random `K`-subset.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> AccessAction {
        random_subset(self.n_ues(), self.k(), rng)
    }

    /// Writes `d loss / d Q(s, action)` onto the output coordinates that
    /// `action`'s Q-value depends on.
    pub fn scatter_error(&self, row: &mut [f64], action: &AccessAction, error: f64) -> Result<()> {
        match *self {
            Self::Enumerated { n, k, .. } => row[action_encode(action.selected(), n, k)?] += error,
            Self::Factorized { .. } => action.selected().iter().for_each(|&i| row[i] += error),
        }
        Ok(())
    }
}

pub fn random_subset<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> AccessAction {
    AccessAction::new(sample(rng, n, k).into_vec(), n).expect("distinct indices below n")
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(row: &[f64]) -> Result<usize> {
    if row.is_empty() {
        return Err(Error::Empty("q-value row"));
    }
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Indices of the `k` largest entries, lower index first among equals.
pub fn top_k(row: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}
