//! Residual assembly, regularized Newton linearization and multigrid solves.

mod assembly;
mod gmg;
mod newton;
mod sparse;

pub use assembly::{
    assemble_flux_jacobian, assemble_jacobian, assemble_residual, l1_norm, linf_norm, ResidualVector,
    SparseJacobian,
};
pub use gmg::{gmg_solve, ConvergenceReport, GmgHierarchy, GmgOptions, GmgSolver};
pub use newton::{solve_steady, solve_steady_with, NewtonConfig, NewtonHistory, NewtonStep};
pub use sparse::BlockCsr;
