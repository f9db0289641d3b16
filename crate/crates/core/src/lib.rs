//! Steady 2D Euler finite volumes on hierarchical triangle meshes, with
//! dual-weighted-residual adaptation driven by several target functionals
//! at once.

pub mod adjoint;
pub mod block;
pub mod driver;
pub mod error;
pub mod euler;
pub mod functionals;
pub mod io;
pub mod mesh;
pub mod solver;

pub use adjoint::{DualField, DualOptions, IndicatorField};
pub use block::{Block, Vec4};
pub use error::{ConfigIssue, Error, Result};
pub use euler::{ConservativeState, FreestreamSpec, JacobianMode};
pub use functionals::{CompositeFunctional, FunctionalKind, TargetFunctional};
pub use mesh::{CellField, CellKey, HierarchicalTree, LeafMesh, RootMesh};
pub use solver::{solve_steady, NewtonConfig, NewtonHistory};
pub use driver::{adapt_loop, single_mesh_baseline, AdaptationConfig, AdaptationOutcome, AdaptationState};
