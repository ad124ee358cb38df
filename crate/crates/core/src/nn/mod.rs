//! Double-precision LSTM + dense networks with exact BPTT gradients and plain SGD.

pub mod checkpoint;
pub mod gradcheck;
pub mod lstm;
pub mod network;
pub mod optim;

pub use gradcheck::{finite_diff_gradcheck, network_gradcheck, relative_error, GradcheckReport};
pub use lstm::{lstm_cell_backward, lstm_cell_forward, CellCache, LstmParams};
pub use network::{Activation, DenseParams, GradientSet, NetworkCache, NetworkParams, NetworkShape};
pub use optim::{clip_global_norm, sgd_step, weight_init};
