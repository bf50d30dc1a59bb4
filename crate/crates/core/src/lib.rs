//! Stochastic gradient descent for linear least squares with partially observed data.
//!
//! The problem is `min ‖Ax − b‖₂` where only a Bernoulli-masked copy of the data is
//! available: every entry of `A` is revealed independently with probability `p`, every
//! entry of `b` with probability `q`, and missing entries read as zero. Each iteration
//! samples a row block `I` and a column block `J` uniformly from fixed partitions and
//! moves along a rescaled, diagonally corrected gradient whose expectation equals the
//! true gradient of `‖Ax − b‖² / (2st)`.
//!
//! This crate is `no_std` (it needs `alloc`) and contains only the numerical parts:
//!
//! - [`densela`]: dense matrices and vectors, Householder QR, Jacobi eigenvalues and
//!   power iteration.
//! - [`observation`]: observation rates, masked matrices/vectors and the seeded RNG.
//! - [`partition`]: row/column partitions and uniform block-pair sampling.
//! - [`solver`]: the corrected and naive gradients, step schedules and the solver loop.
//! - [`theory`]: the convergence-bound constants and the bound curve.
//! - [`problem`]: seeded synthetic problem generation.
//!
//! Index sets are 0-based throughout. Block `i` here is block `i + 1` in the usual
//! 1-based mathematical notation.

#![no_std]
#![deny(missing_debug_implementations)]
// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod densela;
mod error;
mod math;
pub mod observation;
pub mod partition;
pub mod problem;
pub mod solver;
pub mod theory;

pub use densela::{DenseMatrix, DenseVector};
pub use error::{Error, Result};
pub use observation::{MaskedMatrix, MaskedVector, ObservationRates, SeededRng};
pub use partition::{PairSampler, Partition};
pub use problem::{generate_problem, Problem, ProblemSpec};
pub use solver::{
    GradientRule, IterateTrace, MaskMode, SolverConfig, SpecialCase, Stage, StepSchedule,
};
pub use theory::{RhoEstimate, TheoryConstants};
