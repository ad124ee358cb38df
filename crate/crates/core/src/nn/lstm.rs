//! Batched LSTM layer with backpropagation through time.
//!
//! Gate pre-activations are computed in one product against the stacked
//! weight matrix `W` of shape `4H x (In + H)` acting on `[x_t, h_{t-1}]`.
//! Row blocks of `W` and `b` are, in order: forget, input, cell, output.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis, Zip};

use crate::error::{Error, Result};

pub const GATES: [&str; 4] = ["forget", "input", "cell", "output"];

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            w: Array2::zeros((4 * hidden_size, input_size + hidden_size)),
            b: Array1::zeros(4 * hidden_size),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.b.len() / 4
    }

    pub fn input_size(&self) -> usize {
        self.w.ncols() - self.hidden_size()
    }

    pub(crate) fn check(&self) -> Result<()> {
        let h4 = self.b.len();
        if h4 == 0 || !h4.is_multiple_of(4) || self.w.nrows() != h4 || self.w.ncols() < h4 / 4 {
            return Err(Error::Shape(format!(
                "lstm weights {:?} inconsistent with bias {}",
                self.w.dim(),
                h4
            )));
        }
        Ok(())
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Intermediates of one cell evaluation, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct CellCache {
    /// `[x_t, h_{t-1}]`, `B x (In + H)`.
    pub xh: Array2<f64>,
    pub forget: Array2<f64>,
    pub input: Array2<f64>,
    pub cell: Array2<f64>,
    pub output: Array2<f64>,
    pub c_prev: Array2<f64>,
    pub tanh_c: Array2<f64>,
}

/// One LSTM step for a batch of rows. Returns `(h, c, cache)`.
pub fn lstm_cell_forward(
    input: ArrayView2<f64>,
    hidden_prev: ArrayView2<f64>,
    cell_prev: ArrayView2<f64>,
    params: &LstmParams,
) -> Result<(Array2<f64>, Array2<f64>, CellCache)> {
    params.check()?;
    let hs = params.hidden_size();
    let batch = input.nrows();
    if input.ncols() != params.input_size()
        || hidden_prev.dim() != (batch, hs)
        || cell_prev.dim() != (batch, hs)
    {
        return Err(Error::Shape(format!(
            "lstm cell expects input (B, {}) and state (B, {hs}); got {:?}, {:?}, {:?}",
            params.input_size(),
            input.dim(),
            hidden_prev.dim(),
            cell_prev.dim()
        )));
    }
    let xh = concatenate(Axis(1), &[input, hidden_prev]).expect("row counts checked");
    let mut z = xh.dot(&params.w.t());
    z += &params.b;

    let forget = z.slice(s![.., 0..hs]).mapv(sigmoid);
    let input_gate = z.slice(s![.., hs..2 * hs]).mapv(sigmoid);
    let cell_gate = z.slice(s![.., 2 * hs..3 * hs]).mapv(f64::tanh);
    let output = z.slice(s![.., 3 * hs..4 * hs]).mapv(sigmoid);

    let mut c = Array2::zeros((batch, hs));
    Zip::from(&mut c)
        .and(&forget)
        .and(&cell_prev)
        .and(&input_gate)
        .and(&cell_gate)
        .for_each(|c, &f, &cp, &i, &g| *c = f * cp + i * g);
    let tanh_c = c.mapv(f64::tanh);
    let h = &output * &tanh_c;

    let cache = CellCache {
        xh,
        forget,
        input: input_gate,
        cell: cell_gate,
        output,
        c_prev: cell_prev.to_owned(),
        tanh_c,
    };
    Ok((h, c, cache))
}

/// Backward through one cell.
///
/// Takes the gradients flowing into `h` and `c` of this step, accumulates
/// parameter gradients into `dw`/`db`, and returns the gradients with respect
/// to `(x_t, h_{t-1}, c_{t-1})`.
pub fn lstm_cell_backward(
    cache: &CellCache,
    dh: &Array2<f64>,
    dc: &Array2<f64>,
    params: &LstmParams,
    dw: &mut Array2<f64>,
    db: &mut Array1<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let hs = params.hidden_size();
    let batch = dh.nrows();
    let mut dz = Array2::zeros((batch, 4 * hs));
    let mut dc_total = dc.clone();
    Zip::from(&mut dc_total)
        .and(dh)
        .and(&cache.output)
        .and(&cache.tanh_c)
        .for_each(|dct, &dh, &o, &tc| *dct += dh * o * (1.0 - tc * tc));

    {
        let (mut dzf, rest) = dz.view_mut().split_at(Axis(1), hs);
        let (mut dzi, rest) = rest.split_at(Axis(1), hs);
        let (mut dzg, mut dzo) = rest.split_at(Axis(1), hs);
        Zip::from(&mut dzf)
            .and(&dc_total)
            .and(&cache.c_prev)
            .and(&cache.forget)
            .for_each(|d, &dc, &cp, &f| *d = dc * cp * f * (1.0 - f));
        Zip::from(&mut dzi)
            .and(&dc_total)
            .and(&cache.cell)
            .and(&cache.input)
            .for_each(|d, &dc, &g, &i| *d = dc * g * i * (1.0 - i));
        Zip::from(&mut dzg)
            .and(&dc_total)
            .and(&cache.input)
            .and(&cache.cell)
            .for_each(|d, &dc, &i, &g| *d = dc * i * (1.0 - g * g));
        Zip::from(&mut dzo)
            .and(dh)
            .and(&cache.tanh_c)
            .and(&cache.output)
            .for_each(|d, &dh, &tc, &o| *d = dh * tc * o * (1.0 - o));
    }

    *dw += &dz.t().dot(&cache.xh);
    *db += &dz.sum_axis(Axis(0));
    let dxh = dz.dot(&params.w);
    let n_in = params.input_size();
    let dx = dxh.slice(s![.., ..n_in]).to_owned();
    let dh_prev = dxh.slice(s![.., n_in..]).to_owned();
    let dc_prev = &dc_total * &cache.forget;
    (dx, dh_prev, dc_prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use ndarray::array;
    use rand::Rng;

    /// Scalar-loop reference with per-gate weights, independent of the
    /// stacked-matrix layout beyond reading it.
    fn reference_cell(x: &[f64], h: &[f64], c: &[f64], p: &LstmParams) -> (Vec<f64>, Vec<f64>) {
        let hs = p.hidden_size();
        let n_in = x.len();
        let pre = |gate: usize, j: usize| {
            let row = gate * hs + j;
            let mut acc = p.b[row];
            for k in 0..n_in {
                acc += p.w[[row, k]] * x[k];
            }
            for k in 0..hs {
                acc += p.w[[row, n_in + k]] * h[k];
            }
            acc
        };
        let mut h_out = vec![0.0; hs];
        let mut c_out = vec![0.0; hs];
        for j in 0..hs {
            let f = 1.0 / (1.0 + (-pre(0, j)).exp());
            let i = 1.0 / (1.0 + (-pre(1, j)).exp());
            let g = pre(2, j).tanh();
            let o = 1.0 / (1.0 + (-pre(3, j)).exp());
            c_out[j] = f * c[j] + i * g;
            h_out[j] = o * c_out[j].tanh();
        }
        (h_out, c_out)
    }

    #[test]
    fn zero_params_halve_the_cell() {
        let p = LstmParams::zeros(3, 2);
        let x = array![[1.0, -2.0, 0.5]];
        let h = array![[0.3, -0.7]];
        let c = array![[2.0, -4.0]];
        let (h1, c1, _) = lstm_cell_forward(x.view(), h.view(), c.view(), &p).unwrap();
        assert_eq!(c1, array![[1.0, -2.0]]);
        assert_eq!(h1, array![[0.5 * 1f64.tanh(), 0.5 * (-2f64).tanh()]]);

        let zero = Array2::zeros((1, 2));
        let (h0, c0, _) = lstm_cell_forward(x.view(), zero.view(), zero.view(), &p).unwrap();
        assert!(h0.iter().chain(c0.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn matches_scalar_reference() {
        let mut rng = stream_rng(21, 0);
        for _ in 0..20 {
            let (n_in, hs, batch) = (4, 5, 3);
            let mut p = LstmParams::zeros(n_in, hs);
            p.w.mapv_inplace(|_| rng.random_range(-1.0..1.0));
            p.b.mapv_inplace(|_| rng.random_range(-1.0..1.0));
            let x = Array2::from_shape_fn((batch, n_in), |_| rng.random_range(-2.0..2.0));
            let h = Array2::from_shape_fn((batch, hs), |_| rng.random_range(-1.0..1.0));
            let c = Array2::from_shape_fn((batch, hs), |_| rng.random_range(-3.0..3.0));
            let (h1, c1, _) = lstm_cell_forward(x.view(), h.view(), c.view(), &p).unwrap();
            for r in 0..batch {
                let (rh, rc) = reference_cell(
                    x.row(r).as_slice().unwrap(),
                    h.row(r).as_slice().unwrap(),
                    c.row(r).as_slice().unwrap(),
                    &p,
                );
                for j in 0..hs {
                    assert!((h1[[r, j]] - rh[j]).abs() < 1e-12);
                    assert!((c1[[r, j]] - rc[j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let p = LstmParams::zeros(3, 2);
        let x = Array2::zeros((1, 4));
        let h = Array2::zeros((1, 2));
        assert!(lstm_cell_forward(x.view(), h.view(), h.view(), &p).is_err());
    }
}
