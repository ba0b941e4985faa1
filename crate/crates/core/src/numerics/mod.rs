//! Shared numerical kernels: tridiagonal solves, Gauss–Legendre rules and
//! nonlinear iterations for the implicit stages.

mod nonlinear;
mod quadrature;
mod tridiagonal;

pub use nonlinear::{fixed_point_solve, newton_solve, solve_nonlinear, NonlinearSolveConfig, SolveMode};
pub(crate) use nonlinear::max_abs_diff;
pub use quadrature::{gauss_legendre_nodes, integrate_unit, nodes_for_degree, Node};
pub use tridiagonal::{
    solve_complex_tridiagonal, solve_tridiagonal, ComplexTridiagonal, Scalar, TridiagonalMatrix,
};
