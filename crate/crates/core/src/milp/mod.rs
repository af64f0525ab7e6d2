//! MILP instances and their LP relaxations.

mod instance;
mod simplex;

pub use instance::{MilpInstance, Relation, Row, FEASIBILITY_TOL, INTEGRALITY_TOL};
pub use simplex::{
    solve_lp, solve_lp_with, solve_lp_with_bounds, Column, ColumnKind, LpSolution, LpStatus,
    SimplexOptions, TableauRow,
};
