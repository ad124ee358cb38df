use ndarray::{s, Array2, Axis};

use crate::error::{Error, Result};

/// Sliding memory of the last `W` slots, oldest column first.
///
/// * `x`: `N x W` scheduling indicators,
/// * `m`: `N x W` predicted batteries (battery units),
/// * `g`: `K x W` batteries reported by the scheduled UEs, ascending UE order.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryWindow {
    pub x: Array2<f64>,
    pub m: Array2<f64>,
    pub g: Array2<f64>,
}

impl HistoryWindow {
    pub fn zeros(n_ues: usize, k: usize, width: usize) -> Self {
        Self {
            x: Array2::zeros((n_ues, width)),
            m: Array2::zeros((n_ues, width)),
            g: Array2::zeros((k, width)),
        }
    }

    pub fn width(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_ues(&self) -> usize {
        self.x.nrows()
    }

    fn shifted(a: &Array2<f64>, col: &[f64]) -> Array2<f64> {
        let w = a.ncols();
        let mut out = Array2::zeros(a.raw_dim());
        out.slice_mut(s![.., ..w - 1]).assign(&a.slice(s![.., 1..]));
        out.column_mut(w - 1).iter_mut().zip(col).for_each(|(o, &v)| *o = v);
        out
    }

    /// Drops the oldest column of each matrix and appends the new ones.
    pub fn update(&self, indicators: &[f64], predicted: &[f64], reported: &[f64]) -> Result<Self> {
        let (n, k) = (self.x.nrows(), self.g.nrows());
        if indicators.len() != n || predicted.len() != n || reported.len() != k {
            return Err(Error::Shape(format!(
                "history columns must have lengths ({n}, {n}, {k}), got ({}, {}, {})",
                indicators.len(),
                predicted.len(),
                reported.len()
            )));
        }
        Ok(Self {
            x: Self::shifted(&self.x, indicators),
            m: Self::shifted(&self.m, predicted),
            g: Self::shifted(&self.g, reported),
        })
    }

    /// `W x 3N` network input, one row per slot (oldest first):
    /// indicators, predictions / C, and reports / C placed at the scheduled
    /// UEs' positions (zero elsewhere).
    pub fn encode(&self, capacity: u32) -> Array2<f64> {
        let (n, w) = self.x.dim();
        let c = capacity as f64;
        let mut out = Array2::zeros((w, 3 * n));
        for (t, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
            let mut reports = self.g.column(t).into_iter();
            for i in 0..n {
                let sel = self.x[[i, t]];
                row[i] = sel;
                row[n + i] = self.m[[i, t]] / c;
                if sel != 0.0 {
                    row[2 * n + i] = reports.next().copied().unwrap_or(0.0) / c;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn width_one_holds_latest() {
        let h = HistoryWindow::zeros(2, 1, 1);
        let h = h.update(&[1.0, 0.0], &[2.0, 3.0], &[4.0]).unwrap();
        let h = h.update(&[0.0, 1.0], &[1.0, 1.0], &[2.0]).unwrap();
        assert_eq!(h.x, array![[0.0], [1.0]]);
        assert_eq!(h.g, array![[2.0]]);
    }

    #[test]
    fn shift_and_encode() {
        let h = HistoryWindow::zeros(3, 1, 2)
            .update(&[0.0, 1.0, 0.0], &[1.0, 2.0, 3.0], &[4.0])
            .unwrap();
        assert_eq!(h.x, array![[0.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let e = h.encode(4);
        assert_eq!(e.row(0).to_vec(), vec![0.0; 9]);
        assert_eq!(
            e.row(1).to_vec(),
            vec![0.0, 1.0, 0.0, 0.25, 0.5, 0.75, 0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn dimension_mismatch() {
        let h = HistoryWindow::zeros(3, 2, 4);
        assert!(h.update(&[0.0; 3], &[0.0; 3], &[0.0; 1]).is_err());
    }
}
