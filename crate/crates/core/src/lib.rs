//! Branch-and-cut for mixed-integer linear programs with learned cut selection.
//!
//! The crate is organized bottom-up:
//!
//! - [`milp`]: instances, the JSON instance format, and a revised simplex LP solver.
//! - [`cuts`]: Gomory cut generation, root separation plus branch-and-bound, and
//!   the primal-dual gap bookkeeping.
//! - [`features`]: thirteen per-cut features forming the selection state.
//! - [`select`]: the [`select::CutSelector`] trait with rule-based baselines and
//!   the MLP score-based policy.
//! - [`nn`]: a small reverse-mode autodiff engine (LSTM, MLP, attention, Adam).
//! - [`hem`]: the hierarchical ratio + pointer-network policy and its ablations.
//! - [`train`]: the hierarchical policy gradient and evolution strategies.
//! - [`generate`]: synthetic set covering, independent set and knapsack families.
//! - [`bench`]: evaluation reports, the order study, PCA export.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod bench;
pub mod cuts;
pub mod error;
pub mod features;
pub mod generate;
pub mod hem;
pub mod milp;
pub mod nn;
pub mod select;
pub mod train;

pub use error::{Error, Result};
