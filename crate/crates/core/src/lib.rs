//! Split-boost training for two-layer ReLU regression networks.
//!
//! The hidden layer is trained by gradient descent while the output layer is
//! solved in closed form on two halves of the training set, each half scored
//! with the other's solution. A conventional L2-regularized trainer is
//! included as a reference, together with data preparation and an experiment
//! harness for paired comparisons.

pub mod baseline;
pub mod data;
pub mod error;
pub mod experiment;
pub mod gradcheck;
pub mod linalg;
pub mod model;
pub mod protocol;
pub mod splitboost;

pub use baseline::{baseline_cost, baseline_gradients, train_baseline, BaselineConfig};
pub use data::{load_csv, load_csv_with, split, Dataset, Samples, Scaler, Schema, SplitIndices};
pub use error::{Error, Result};
pub use experiment::{run_monte_carlo, run_sweep, BenchmarkReport, SweepParam, SweepSpec, Trainer};
pub use linalg::{finite_diff_gradient, least_squares, matmul, LinalgError, Matrix};
pub use model::{mse_cost, relu, relu_prime, ForwardCache, NetworkParams};
pub use protocol::LrSwitch;
pub use splitboost::{
    bilevel_cost, fit_w2, retrain, train, w1_gradient, w2_jacobian, EpochRecord, TrainConfig, TrainResult,
};
