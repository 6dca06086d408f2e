//! Boolean percolation on directed graphs and the constant-decrement random
//! exchange process.
//!
//! Every vertex `x` of a digraph draws an independent radius `Y_x ~ μ` and
//! covers the open out-ball `B_{Y_x}(x)`. On ℕ₀ the covered set is coupled to
//! the Markov chain `X_{n+1} = max(X_n − 1, Y_{n+1})`. The crate provides
//! exact computations for both objects (stationary measures, series tests,
//! spectral radii, the depth recurrence on the directed n-ary tree) and a
//! deterministic Monte Carlo engine whose output can be checked against them.

pub mod catalog;
pub mod cli;
pub mod dist;
pub mod error;
pub mod exchange;
pub mod graphs;
pub mod percolation;
pub mod spectral;
pub mod stats;
pub mod stream;
pub mod tree;

pub use dist::{DistributionSpec, SeriesVerdict, TailModel};
pub use error::{Error, Result};
