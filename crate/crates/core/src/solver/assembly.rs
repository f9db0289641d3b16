use crate::block::{self, Block, Vec4, ZERO4};
use crate::euler::{
    farfield_ghost, farfield_ghost_with_jacobian, flux_jacobians_with_mode, lax_friedrichs_flux,
    validate, wall_ghost, wall_ghost_jacobian, ConservativeState, FreestreamSpec, JacobianMode,
};
use crate::error::Result;
use crate::mesh::{BoundaryKind, CellField, FaceNeighbor, LeafMesh, MarkerId};

use super::sparse::BlockCsr;

/// Per-cell sums of outward numerical flux times face length.
pub type ResidualVector = CellField;

fn check_states(u: &CellField, gamma: f64) -> Result<()> {
    for (i, v) in u.values.iter().enumerate() {
        validate(&ConservativeState(*v), gamma).map_err(|e| e.in_cell(i))?;
    }
    Ok(())
}

fn ghost(
    mesh: &LeafMesh,
    marker: MarkerId,
    u: &ConservativeState,
    n: [f64; 2],
    fs: &FreestreamSpec,
) -> Result<ConservativeState> {
    match mesh.marker_kind(marker) {
        BoundaryKind::Wall => Ok(wall_ghost(u, n)),
        BoundaryKind::Farfield => farfield_ghost(u, n, fs),
    }
}

pub fn assemble_residual(mesh: &LeafMesh, u: &CellField, fs: &FreestreamSpec) -> Result<ResidualVector> {
    u.check_mesh(mesh)?;
    check_states(u, fs.gamma)?;
    let mut r = vec![ZERO4; mesh.num_cells()];
    for face in &mesh.faces {
        let ul = ConservativeState(u.values[face.left]);
        let (ur, right) = match face.right {
            FaceNeighbor::Cell(j) => (ConservativeState(u.values[j]), Some(j)),
            FaceNeighbor::Boundary(m) => (
                ghost(mesh, m, &ul, face.normal, fs).map_err(|e| e.in_cell(face.left))?,
                None,
            ),
        };
        let h = lax_friedrichs_flux(&ul, &ur, face.normal, fs.gamma).map_err(|e| e.in_cell(face.left))?;
        block::axpy(&mut r[face.left], face.length, &h);
        if let Some(j) = right {
            block::axpy(&mut r[j], -face.length, &h);
        }
    }
    CellField::new(mesh, r)
}

/// Sum of absolute values over all cells and components.
pub fn l1_norm(values: &[Vec4]) -> f64 {
    values.iter().flatten().map(|v| v.abs()).sum()
}

pub fn linf_norm(values: &[Vec4]) -> f64 {
    values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

/// Linearization of the residual plus its diagonal regularization.
#[derive(Debug, Clone)]
pub struct SparseJacobian {
    pub matrix: BlockCsr,
    /// α·‖R(u)‖₁ added to every diagonal block.
    pub regularization: f64,
}

/// Flux Jacobian of the residual without regularization.
pub fn assemble_flux_jacobian(
    mesh: &LeafMesh,
    u: &CellField,
    fs: &FreestreamSpec,
    mode: JacobianMode,
) -> Result<BlockCsr> {
    u.check_mesh(mesh)?;
    check_states(u, fs.gamma)?;
    let mut a = BlockCsr::with_mesh_pattern(mesh);
    let g = fs.gamma;
    for face in &mesh.faces {
        let l = face.left;
        let ul = ConservativeState(u.values[l]);
        match face.right {
            FaceNeighbor::Cell(r) => {
                let ur = ConservativeState(u.values[r]);
                let (jl, jr) = flux_jacobians_with_mode(&ul, &ur, face.normal, g, mode)?;
                a.add_to(l, l, &jl, face.length);
                a.add_to(l, r, &jr, face.length);
                a.add_to(r, l, &jl, -face.length);
                a.add_to(r, r, &jr, -face.length);
            }
            FaceNeighbor::Boundary(m) => {
                let (ur, dg): (ConservativeState, Block) = match mesh.marker_kind(m) {
                    BoundaryKind::Wall => (wall_ghost(&ul, face.normal), wall_ghost_jacobian(face.normal)),
                    BoundaryKind::Farfield => {
                        farfield_ghost_with_jacobian(&ul, face.normal, fs).map_err(|e| e.in_cell(l))?
                    }
                };
                let (jl, jr) = flux_jacobians_with_mode(&ul, &ur, face.normal, g, mode)?;
                let mut total = jl;
                block::add_assign(&mut total, &block::matmul(&jr, &dg));
                a.add_to(l, l, &total, face.length);
            }
        }
    }
    Ok(a)
}

/// Flux Jacobian plus `alpha·‖R(u)‖₁·I` on the diagonal.
pub fn assemble_jacobian(
    mesh: &LeafMesh,
    u: &CellField,
    fs: &FreestreamSpec,
    alpha: f64,
    mode: JacobianMode,
) -> Result<SparseJacobian> {
    let residual = assemble_residual(mesh, u, fs)?;
    let weight = alpha * l1_norm(&residual.values);
    let mut matrix = assemble_flux_jacobian(mesh, u, fs, mode)?;
    add_regularization(&mut matrix, weight);
    Ok(SparseJacobian {
        matrix,
        regularization: weight,
    })
}

pub(crate) fn add_regularization(matrix: &mut BlockCsr, weight: f64) {
    if weight == 0.0 {
        return;
    }
    for i in 0..matrix.n() {
        let d = matrix.diag_block_mut(i);
        for (k, row) in d.iter_mut().enumerate() {
            row[k] += weight;
        }
    }
}
