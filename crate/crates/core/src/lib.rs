//! Sparse shallow ReLU networks trained with nonconvex outer-weight penalties.
//!
//! A network `N(x) = sum_n c_n max(a_n . x + b_n, 0)` is stored as an atomic
//! measure on the unit sphere: every node `(a_n, b_n)` has unit norm and all
//! scale is carried by the outer weight `c_n`. Training minimizes
//!
//! ```text
//! (1 / 2K) sum_k |N(x_k) - y_k|^2 + alpha * sum_n phi(|c_n|)
//! ```
//!
//! over the width, the nodes and the weights, by alternating greedy node
//! insertion (driven by the dual variable `p`), joint local training and a
//! semi-smooth Newton solve for the outer weights that produces exact zeros.
//!
//! The modules follow the pipeline:
//!
//! - [`penalty`]: the scalar penalties `phi`, their derivatives and proximal maps.
//! - [`geometry`]: stereographic chart of the sphere and the ReLU feature.
//! - [`network`]: the [`ShallowNet`] container and its structural transforms.
//! - [`data`]: datasets, synthetic targets and CSV I/O.
//! - [`loss_dual`]: least-squares loss, residuals and the dual variable.
//! - [`insertion`]: trial sampling, dual ascent and node insertion.
//! - [`outer`]: outer-weight solvers (proximal gradient, semi-smooth Newton).
//! - [`train`]: joint training and the insertion/training/pruning loop.
//! - [`analysis`]: stationarity certificates and approximation bounds.
//! - [`experiment`]: presets reproducing the reference experiments.
//! - [`cli`]: the command-line front end used by the `sparsenet` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod data;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod insertion;
pub mod loss_dual;
pub mod network;
pub mod outer;
pub mod penalty;
pub mod train;

pub use data::{Dataset, SyntheticSpec};
pub use error::{Error, Result};
pub use geometry::{ChartPoint, SphereNode};
pub use loss_dual::DualField;
pub use network::ShallowNet;
pub use penalty::Penalty;
pub use train::{run_algorithm, AlgorithmConfig, TrainReport};
