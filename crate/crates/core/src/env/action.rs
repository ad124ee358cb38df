use crate::error::{Error, Result};

/// The set of UEs granted an uplink channel in one slot, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AccessAction {
    selected: Vec<usize>,
}

impl AccessAction {
    /// Validates that the indices are distinct and below `n_ues`.
    pub fn new(mut selected: Vec<usize>, n_ues: usize) -> Result<Self> {
        selected.sort_unstable();
        if selected.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidAction(format!("duplicate UE in {selected:?}")));
        }
        if let Some(&max) = selected.last() {
            if max >= n_ues {
                return Err(Error::InvalidAction(format!(
                    "UE index {max} out of range for {n_ues} UEs"
                )));
            }
        }
        Ok(Self { selected })
    }

    /// Like [`AccessAction::new`], additionally requiring exactly `k` UEs.
    pub fn with_k(selected: Vec<usize>, n_ues: usize, k: usize) -> Result<Self> {
        let a = Self::new(selected, n_ues)?;
        if a.len() != k {
            return Err(Error::InvalidAction(format!(
                "expected {k} UEs, got {}",
                a.len()
            )));
        }
        Ok(a)
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn contains(&self, ue: usize) -> bool {
        self.selected.binary_search(&ue).is_ok()
    }

    /// Indicator view `I_i` over all `n_ues`.
    pub fn indicators(&self, n_ues: usize) -> Vec<u8> {
        let mut v = vec![0u8; n_ues];
        for &i in &self.selected {
            v[i] = 1;
        }
        v
    }
}
