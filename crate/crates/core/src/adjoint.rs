//! Dual problems, dual-weighted-residual indicators and error estimates.

use serde::{Deserialize, Serialize};

use crate::block::{dot, Vec4};
use crate::euler::{FreestreamSpec, JacobianMode};
use crate::error::{Error, Result};
use crate::functionals::{composite_weights, gradient, CompositeFunctional, TargetFunctional};
use crate::mesh::{ancestor_map, project_to_finer, CellField, FaceNeighbor, LeafMesh};
use crate::solver::{assemble_flux_jacobian, assemble_residual, gmg_solve, GmgHierarchy, GmgOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualOptions {
    /// Relative tolerance on ‖Jᵀz + g‖ / ‖g‖.
    pub tol: f64,
    pub jacobian: JacobianMode,
    pub gmg: GmgOptions,
}

impl Default for DualOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            jacobian: JacobianMode::Exact,
            gmg: GmgOptions {
                max_cycles: 400,
                ..GmgOptions::default()
            },
        }
    }
}

/// Dual weights for one target on one mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualField {
    pub target: TargetFunctional,
    pub z: CellField,
    /// Achieved ‖Jᵀz + g‖₂ / ‖g‖₂ (0 for a zero gradient).
    pub relative_residual: f64,
}

/// Per-cell indicators of one target on its own mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorField {
    pub mesh_id: u64,
    /// Accumulated |z·R| per cell.
    pub values: Vec<f64>,
    /// Σ z·R before absolute values.
    pub signed_sum: f64,
}

/// Solves `Jᵀ zᵢ = −gᵢ` for all targets with one shared multigrid call.
pub fn solve_duals(
    mesh: &LeafMesh,
    u: &CellField,
    fs: &FreestreamSpec,
    targets: &[TargetFunctional],
    opts: &DualOptions,
) -> Result<Vec<DualField>> {
    let hierarchy = GmgHierarchy::new(mesh, opts.gmg.coarse_cells);
    solve_duals_with(mesh, u, fs, targets, opts, &hierarchy)
}

pub fn solve_duals_with(
    mesh: &LeafMesh,
    u: &CellField,
    fs: &FreestreamSpec,
    targets: &[TargetFunctional],
    opts: &DualOptions,
    hierarchy: &GmgHierarchy,
) -> Result<Vec<DualField>> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no targets to solve duals for".into()));
    }
    let rhs: Vec<Vec<Vec4>> = targets
        .iter()
        .map(|t| gradient(mesh, u, t).map(|g| g.values.iter().map(|v| v.map(|x| -x)).collect()))
        .collect::<Result<_>>()?;
    let fields = solve_dual_systems(mesh, u, fs, &rhs, opts, hierarchy)?;
    Ok(targets
        .iter()
        .zip(fields)
        .map(|(t, (z, r))| DualField {
            target: t.clone(),
            z,
            relative_residual: r,
        })
        .collect())
}

/// Transposed solves for arbitrary right-hand sides; returns each solution with its relative residual.
pub fn solve_dual_systems(
    mesh: &LeafMesh,
    u: &CellField,
    fs: &FreestreamSpec,
    rhs: &[Vec<Vec4>],
    opts: &DualOptions,
    hierarchy: &GmgHierarchy,
) -> Result<Vec<(CellField, f64)>> {
    let jac = assemble_flux_jacobian(mesh, u, fs, opts.jacobian)?;
    let (sols, report) = gmg_solve(&jac, rhs, hierarchy, opts.tol, true, opts.gmg)?;
    sols.into_iter()
        .zip(report.relative_residuals)
        .map(|(z, r)| Ok((CellField::new(mesh, z)?, r)))
        .collect()
}

/// Per-cell `z·R(I u)` on the dual mesh, with `u` given on `coarse`.
pub fn weighted_residual(
    dual_mesh: &LeafMesh,
    z: &CellField,
    coarse: &LeafMesh,
    u_coarse: &CellField,
    fs: &FreestreamSpec,
) -> Result<Vec<f64>> {
    z.check_mesh(dual_mesh)?;
    let iu = project_to_finer(u_coarse, coarse, dual_mesh)?;
    let r = assemble_residual(dual_mesh, &iu, fs)?;
    Ok(z.values.iter().zip(&r.values).map(|(a, b)| dot(a, b)).collect())
}

/// Localizes `zᵀR(I u)` onto the cells of `target_mesh`.
pub fn dwr_indicator(
    target_mesh: &LeafMesh,
    dual: &DualField,
    dual_mesh: &LeafMesh,
    u_on_target: &CellField,
    fs: &FreestreamSpec,
) -> Result<IndicatorField> {
    u_on_target.check_mesh(target_mesh)?;
    let map = ancestor_map(dual_mesh, target_mesh)?;
    let local = weighted_residual(dual_mesh, &dual.z, target_mesh, u_on_target, fs)?;
    Ok(localize(target_mesh, &map, &local))
}

/// Sums |values| per ancestor in cell order.
pub fn localize(target_mesh: &LeafMesh, map: &[usize], local: &[f64]) -> IndicatorField {
    let mut values = vec![0.0; target_mesh.num_cells()];
    let mut signed_sum = 0.0;
    for (&t, &e) in map.iter().zip(local) {
        values[t] += e.abs();
        signed_sum += e;
    }
    IndicatorField {
        mesh_id: target_mesh.id(),
        values,
        signed_sum,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    /// Σ Cᵢ·(zᵢᵀRᵢ).
    pub total: f64,
    /// Raw zᵢᵀRᵢ per target.
    pub per_target: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Combines per-target terms with the composite sensitivities at `values`.
pub fn error_estimate(values: &[f64], residual_terms: &[f64], comp: &CompositeFunctional) -> Result<ErrorEstimate> {
    if residual_terms.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} residual terms for {} targets",
            residual_terms.len(),
            values.len()
        )));
    }
    let weights = composite_weights(values, comp)?;
    Ok(ErrorEstimate {
        total: weights.iter().zip(residual_terms).map(|(c, t)| c * t).sum(),
        per_target: residual_terms.to_vec(),
        weights,
    })
}

/// `|zᵀR(u)|` with the dual solved on the mesh of `u` itself.
pub fn galerkin_orthogonality_check(
    mesh: &LeafMesh,
    u: &CellField,
    fs: &FreestreamSpec,
    target: &TargetFunctional,
    opts: &DualOptions,
) -> Result<f64> {
    let dual = solve_duals(mesh, u, fs, std::slice::from_ref(target), opts)?;
    let r = assemble_residual(mesh, u, fs)?;
    let s: f64 = dual[0].z.values.iter().zip(&r.values).map(|(a, b)| dot(a, b)).sum();
    Ok(s.abs())
}

/// Euclidean norm over all cell components.
pub fn field_norm(f: &CellField) -> f64 {
    f.values.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// `(Σ |z_L − z_R|²·len)^{1/2}` over interior faces with at least one side touching `marker`.
pub fn wall_ring_jump_norm(mesh: &LeafMesh, z: &CellField, marker: &str) -> Result<f64> {
    z.check_mesh(mesh)?;
    let id = mesh
        .marker_id(marker)
        .ok_or_else(|| Error::UnknownBoundaryMarker(marker.into()))?;
    let mut ring = vec![false; mesh.num_cells()];
    for f in &mesh.faces {
        if f.right == FaceNeighbor::Boundary(id) {
            ring[f.left] = true;
        }
    }
    let mut sum = 0.0;
    for f in &mesh.faces {
        if let FaceNeighbor::Cell(r) = f.right {
            if ring[f.left] || ring[r] {
                let (a, b) = (z.values[f.left], z.values[r]);
                sum += f.length * (0..4).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>();
            }
        }
    }
    Ok(sum.sqrt())
}
