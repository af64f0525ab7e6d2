//! Gomory cut generation, the branch-and-cut driver and its bound bookkeeping.

mod bnc;
mod gomory;
mod stats;

pub use bnc::{branch_and_cut, SolveConfig};
pub use gomory::{generate_cuts, generate_cuts_from, Cut, CutOrigin, MIN_FRAC};
pub use stats::{
    improvement, pd_integral, pd_integral_of, Clock, RootInfo, SolveStats, SolveStatus, INITIAL_GAP,
};
