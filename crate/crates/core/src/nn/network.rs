use ndarray::{Array1, Array2, Axis};

use super::lstm::{lstm_cell_backward, lstm_cell_forward, CellCache, LstmParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "identity" | "linear" => Some(Activation::Identity),
            _ => None,
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected read-out layer on the last hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    /// `Out x H`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub activation: Activation,
}

/// Layer sizes of one LSTM + dense network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkShape {
    pub input_size: usize,
    pub hidden_size: usize,
    pub output_size: usize,
    pub activation: Activation,
}

/// All trainable weights of one LSTM + dense network.
///
/// `generation` counts optimizer steps; caches remember the generation they
/// were computed at so a backward pass against updated weights is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub lstm: LstmParams,
    pub dense: DenseParams,
    generation: u64,
}

/// Gradients congruent with a [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub lstm_w: Array2<f64>,
    pub lstm_b: Array1<f64>,
    pub dense_w: Array2<f64>,
    pub dense_b: Array1<f64>,
}

impl NetworkParams {
    pub fn zeros(shape: NetworkShape) -> Self {
        Self {
            lstm: LstmParams::zeros(shape.input_size, shape.hidden_size),
            dense: DenseParams {
                w: Array2::zeros((shape.output_size, shape.hidden_size)),
                b: Array1::zeros(shape.output_size),
                activation: shape.activation,
            },
            generation: 0,
        }
    }

    pub fn from_parts(lstm: LstmParams, dense: DenseParams) -> Result<Self> {
        let p = Self {
            lstm,
            dense,
            generation: 0,
        };
        p.check()?;
        Ok(p)
    }

    pub fn shape(&self) -> NetworkShape {
        NetworkShape {
            input_size: self.lstm.input_size(),
            hidden_size: self.lstm.hidden_size(),
            output_size: self.dense.b.len(),
            activation: self.dense.activation,
        }
    }

    pub fn input_size(&self) -> usize {
        self.lstm.input_size()
    }

    pub fn output_size(&self) -> usize {
        self.dense.b.len()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub(crate) fn bump_generation(&mut self) {
        self.generation += 1;
    }

    pub fn check(&self) -> Result<()> {
        self.lstm.check()?;
        if self.dense.w.ncols() != self.lstm.hidden_size() || self.dense.w.nrows() != self.dense.b.len() {
            return Err(Error::Shape(format!(
                "dense weights {:?} do not fit hidden size {} / bias {}",
                self.dense.w.dim(),
                self.lstm.hidden_size(),
                self.dense.b.len()
            )));
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.lstm.w.len() + self.lstm.b.len() + self.dense.w.len() + self.dense.b.len()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }

    pub(crate) fn slices(&self) -> [&[f64]; 4] {
        [
            self.lstm.w.as_slice().expect("standard layout"),
            self.lstm.b.as_slice().expect("standard layout"),
            self.dense.w.as_slice().expect("standard layout"),
            self.dense.b.as_slice().expect("standard layout"),
        ]
    }

    pub(crate) fn slices_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.lstm.w.as_slice_mut().expect("standard layout"),
            self.lstm.b.as_slice_mut().expect("standard layout"),
            self.dense.w.as_slice_mut().expect("standard layout"),
            self.dense.b.as_slice_mut().expect("standard layout"),
        ]
    }

    /// All parameters in a fixed order: LSTM weights, LSTM bias, dense weights, dense bias.
    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::LengthMismatch {
                expected: self.num_params(),
                got: values.len(),
            });
        }
        let mut off = 0;
        for s in self.slices_mut() {
            s.copy_from_slice(&values[off..off + s.len()]);
            off += s.len();
        }
        self.generation += 1;
        Ok(())
    }

    /// Forward pass without keeping intermediates.
    pub fn forward(&self, inputs: &[Array2<f64>]) -> Result<Array2<f64>> {
        Ok(self.forward_cached(inputs)?.0)
    }

    /// Unrolls the LSTM over `inputs` (one `B x In` matrix per time step,
    /// zero initial state) and applies the dense layer to the final hidden
    /// state. Returns the `B x Out` output and the cache for [`Self::backward`].
    pub fn forward_cached(&self, inputs: &[Array2<f64>]) -> Result<(Array2<f64>, NetworkCache)> {
        self.check()?;
        let first = inputs.first().ok_or(Error::Empty("input sequence"))?;
        let batch = first.nrows();
        let hs = self.lstm.hidden_size();
        let mut h = Array2::zeros((batch, hs));
        let mut c = Array2::zeros((batch, hs));
        let mut steps = Vec::with_capacity(inputs.len());
        for x in inputs {
            if x.nrows() != batch {
                return Err(Error::Shape("ragged batch across time steps".into()));
            }
            let (h1, c1, cache) = lstm_cell_forward(x.view(), h.view(), c.view(), &self.lstm)?;
            h = h1;
            c = c1;
            steps.push(cache);
        }
        let act = self.dense.activation;
        let mut y = h.dot(&self.dense.w.t());
        y += &self.dense.b;
        y.mapv_inplace(|v| act.apply(v));
        let cache = NetworkCache {
            generation: self.generation,
            steps,
            last_hidden: h,
            output: y.clone(),
        };
        Ok((y, cache))
    }

    /// Backpropagation through time for a scalar loss whose gradient with
    /// respect to the network output is `output_error` (`B x Out`).
    ///
    /// Returns parameter gradients and the gradient with respect to each
    /// input time step.
    pub fn backward(
        &self,
        cache: &NetworkCache,
        output_error: &Array2<f64>,
    ) -> Result<(GradientSet, Vec<Array2<f64>>)> {
        if cache.generation != self.generation {
            return Err(Error::StaleCache {
                cached: cache.generation,
                current: self.generation,
            });
        }
        if output_error.dim() != cache.output.dim() {
            return Err(Error::Shape(format!(
                "output error {:?} does not match output {:?}",
                output_error.dim(),
                cache.output.dim()
            )));
        }
        let act = self.dense.activation;
        let mut dpre = output_error.clone();
        ndarray::Zip::from(&mut dpre)
            .and(&cache.output)
            .for_each(|d, &y| *d *= act.derivative_from_output(y));

        let mut grads = GradientSet::zeros_like(self);
        grads.dense_w = dpre.t().dot(&cache.last_hidden);
        grads.dense_b = dpre.sum_axis(Axis(0));

        let mut dh = dpre.dot(&self.dense.w);
        let mut dc = Array2::zeros(dh.raw_dim());
        let mut dx = vec![Array2::zeros((0, 0)); cache.steps.len()];
        for (t, step) in cache.steps.iter().enumerate().rev() {
            let (dxt, dh_prev, dc_prev) =
                lstm_cell_backward(step, &dh, &dc, &self.lstm, &mut grads.lstm_w, &mut grads.lstm_b);
            dx[t] = dxt;
            dh = dh_prev;
            dc = dc_prev;
        }
        Ok((grads, dx))
    }
}

/// Intermediates of a [`NetworkParams::forward_cached`] call.
#[derive(Debug, Clone)]
pub struct NetworkCache {
    generation: u64,
    steps: Vec<CellCache>,
    last_hidden: Array2<f64>,
    output: Array2<f64>,
}

impl NetworkCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

impl GradientSet {
    pub fn zeros_like(p: &NetworkParams) -> Self {
        Self {
            lstm_w: Array2::zeros(p.lstm.w.raw_dim()),
            lstm_b: Array1::zeros(p.lstm.b.raw_dim()),
            dense_w: Array2::zeros(p.dense.w.raw_dim()),
            dense_b: Array1::zeros(p.dense.b.raw_dim()),
        }
    }

    pub(crate) fn slices(&self) -> [&[f64]; 4] {
        [
            self.lstm_w.as_slice().expect("standard layout"),
            self.lstm_b.as_slice().expect("standard layout"),
            self.dense_w.as_slice().expect("standard layout"),
            self.dense_b.as_slice().expect("standard layout"),
        ]
    }

    pub(crate) fn slices_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.lstm_w.as_slice_mut().expect("standard layout"),
            self.lstm_b.as_slice_mut().expect("standard layout"),
            self.dense_w.as_slice_mut().expect("standard layout"),
            self.dense_b.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn is_congruent(&self, p: &NetworkParams) -> bool {
        self.lstm_w.dim() == p.lstm.w.dim()
            && self.lstm_b.dim() == p.lstm.b.dim()
            && self.dense_w.dim() == p.dense.w.dim()
            && self.dense_b.dim() == p.dense.b.dim()
    }

    pub fn squared_norm(&self) -> f64 {
        self.slices().iter().flat_map(|s| s.iter()).map(|g| g * g).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|g| *g *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &GradientSet) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|&g| g == 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::lstm::sigmoid;
    use crate::rng::stream_rng;
    use ndarray::array;
    use rand::Rng;

    fn random_params(shape: NetworkShape, seed: u64) -> NetworkParams {
        let mut rng = stream_rng(seed, 0);
        let mut p = NetworkParams::zeros(shape);
        let flat: Vec<f64> = (0..p.num_params()).map(|_| rng.random_range(-0.8..0.8)).collect();
        p.set_flat(&flat).unwrap();
        p
    }

    #[test]
    fn zero_network_outputs_tanh_of_bias() {
        let shape = NetworkShape {
            input_size: 3,
            hidden_size: 4,
            output_size: 2,
            activation: Activation::Tanh,
        };
        let mut p = NetworkParams::zeros(shape);
        p.dense.b = array![0.3, -1.2];
        let x = vec![array![[1.0, 2.0, 3.0]], array![[-1.0, 0.0, 5.0]]];
        let y = p.forward(&x).unwrap();
        assert_eq!(y, array![[0.3f64.tanh(), (-1.2f64).tanh()]]);
    }

    #[test]
    fn output_width() {
        let shape = NetworkShape {
            input_size: 6,
            hidden_size: 5,
            output_size: 15,
            activation: Activation::Identity,
        };
        let p = random_params(shape, 1);
        let y = p.forward(&[Array2::ones((4, 6))]).unwrap();
        assert_eq!(y.dim(), (4, 15));
    }

    /// Hand-unrolled two-step computation for a 1-input, 1-unit, 1-output net.
    #[test]
    fn two_step_reference() {
        let shape = NetworkShape {
            input_size: 1,
            hidden_size: 1,
            output_size: 1,
            activation: Activation::Tanh,
        };
        let p = random_params(shape, 2);
        let w = &p.lstm.w;
        let b = &p.lstm.b;
        let (x1, x2) = (0.7, -1.3);
        let (mut h, mut c) = (0.0, 0.0);
        for x in [x1, x2] {
            let f = sigmoid(w[[0, 0]] * x + w[[0, 1]] * h + b[0]);
            let i = sigmoid(w[[1, 0]] * x + w[[1, 1]] * h + b[1]);
            let g = (w[[2, 0]] * x + w[[2, 1]] * h + b[2]).tanh();
            let o = sigmoid(w[[3, 0]] * x + w[[3, 1]] * h + b[3]);
            c = f * c + i * g;
            h = o * c.tanh();
        }
        let want = (p.dense.w[[0, 0]] * h + p.dense.b[0]).tanh();
        let got = p.forward(&[array![[x1]], array![[x2]]]).unwrap()[[0, 0]];
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn zero_error_gives_zero_gradient() {
        let shape = NetworkShape {
            input_size: 3,
            hidden_size: 4,
            output_size: 2,
            activation: Activation::Tanh,
        };
        let p = random_params(shape, 3);
        let x = vec![Array2::ones((2, 3)); 3];
        let (y, cache) = p.forward_cached(&x).unwrap();
        let (g, dx) = p.backward(&cache, &Array2::zeros(y.raw_dim())).unwrap();
        assert!(g.is_zero());
        assert!(dx.iter().all(|d| d.iter().all(|&v| v == 0.0)));
    }

    /// Identity read-out with squared loss: dL/dW_dense = 2 (y - target) h^T.
    #[test]
    fn dense_gradient_closed_form() {
        let shape = NetworkShape {
            input_size: 2,
            hidden_size: 3,
            output_size: 2,
            activation: Activation::Identity,
        };
        let p = random_params(shape, 4);
        let x = vec![array![[0.4, -0.9]]];
        let target = array![[0.25, -0.5]];
        let (y, cache) = p.forward_cached(&x).unwrap();
        let err = 2.0 * (&y - &target);
        let (g, _) = p.backward(&cache, &err).unwrap();
        let h = &cache.last_hidden;
        for o in 0..2 {
            for j in 0..3 {
                assert!((g.dense_w[[o, j]] - err[[0, o]] * h[[0, j]]).abs() < 1e-15);
            }
            assert_eq!(g.dense_b[o], err[[0, o]]);
        }
    }

    #[test]
    fn stale_cache_rejected() {
        let shape = NetworkShape {
            input_size: 2,
            hidden_size: 2,
            output_size: 1,
            activation: Activation::Identity,
        };
        let mut p = random_params(shape, 5);
        let (y, cache) = p.forward_cached(&[Array2::ones((1, 2))]).unwrap();
        p.bump_generation();
        assert!(matches!(
            p.backward(&cache, &Array2::ones(y.raw_dim())),
            Err(Error::StaleCache { .. })
        ));
        let (_, cache2) = p.forward_cached(&[Array2::ones((2, 2))]).unwrap();
        assert!(p.backward(&cache2, &Array2::ones((1, 1))).is_err());
    }

    #[test]
    fn forward_does_not_touch_params() {
        let shape = NetworkShape {
            input_size: 2,
            hidden_size: 3,
            output_size: 2,
            activation: Activation::Tanh,
        };
        let p = random_params(shape, 6);
        let before = p.clone();
        let y1 = p.forward(&[Array2::ones((3, 2)), Array2::zeros((3, 2))]).unwrap();
        let y2 = p.forward(&[Array2::ones((3, 2)), Array2::zeros((3, 2))]).unwrap();
        assert_eq!(p, before);
        assert_eq!(y1, y2);
        assert!(y1.iter().all(|v| v.abs() < 1.0));
    }
}
