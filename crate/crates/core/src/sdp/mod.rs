//! Dense primal-dual interior-point solver for semidefinite programs with
//! free scalar variables.

mod problem;
mod solver;

pub use problem::{Constraint, SdpProblem, SparseSym};
pub use solver::{residuals, solve, solve_with_monitor, IterationInfo, Residuals, SdpOptions, SdpSolution, SolveStatus};
