use serde::{Deserialize, Serialize};

use super::leaf::LeafMesh;
use crate::block::Vec4;
use crate::error::{Error, Result};

/// One 4-vector per leaf cell of a particular [`LeafMesh`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellField {
    mesh_id: u64,
    pub values: Vec<Vec4>,
}

impl CellField {
    pub fn new(mesh: &LeafMesh, values: Vec<Vec4>) -> Result<Self> {
        if values.len() != mesh.num_cells() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, mesh has {} cells",
                values.len(),
                mesh.num_cells()
            )));
        }
        Ok(Self {
            mesh_id: mesh.id(),
            values,
        })
    }

    pub fn uniform(mesh: &LeafMesh, value: Vec4) -> Self {
        Self {
            mesh_id: mesh.id(),
            values: vec![value; mesh.num_cells()],
        }
    }

    pub fn zeros(mesh: &LeafMesh) -> Self {
        Self::uniform(mesh, [0.0; 4])
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_mesh(&self, mesh: &LeafMesh) -> Result<()> {
        if self.mesh_id != mesh.id() || self.values.len() != mesh.num_cells() {
            return Err(Error::MeshMismatch {
                field: self.mesh_id,
                mesh: mesh.id(),
            });
        }
        Ok(())
    }

    /// Area integral of each component.
    pub fn integral(&self, mesh: &LeafMesh) -> Result<Vec4> {
        self.check_mesh(mesh)?;
        let mut acc = [0.0; 4];
        for (v, c) in self.values.iter().zip(&mesh.cells) {
            for k in 0..4 {
                acc[k] += c.area * v[k];
            }
        }
        Ok(acc)
    }
}

/// Piecewise-constant injection onto a mesh whose leaves refine the source leaves.
pub fn project_to_finer(field: &CellField, source: &LeafMesh, target: &LeafMesh) -> Result<CellField> {
    field.check_mesh(source)?;
    if !target.is_refinement_of(source) {
        return Err(Error::NotARefinement);
    }
    let values = target
        .cells
        .iter()
        .map(|c| {
            source
                .containing_cell(&c.key)
                .map(|i| field.values[i])
                .ok_or(Error::NotARefinement)
        })
        .collect::<Result<Vec<_>>>()?;
    CellField::new(target, values)
}

/// For every cell of `fine`, the index of the `coarse` cell containing it.
pub fn ancestor_map(fine: &LeafMesh, coarse: &LeafMesh) -> Result<Vec<usize>> {
    if !fine.is_refinement_of(coarse) {
        return Err(Error::NotARefinement);
    }
    fine.cells
        .iter()
        .map(|c| coarse.containing_cell(&c.key).ok_or(Error::NotARefinement))
        .collect()
}

/// Area-weighted average of a fine field over each coarse cell.
pub fn restrict_to_coarser(field: &CellField, source: &LeafMesh, target: &LeafMesh) -> Result<CellField> {
    field.check_mesh(source)?;
    let map = ancestor_map(source, target)?;
    let mut sums = vec![[0.0; 4]; target.num_cells()];
    let mut weights = vec![0.0; target.num_cells()];
    for ((&t, v), c) in map.iter().zip(&field.values).zip(&source.cells) {
        for k in 0..4 {
            sums[t][k] += c.area * v[k];
        }
        weights[t] += c.area;
    }
    if weights.iter().any(|&w| w == 0.0) {
        return Err(Error::NotARefinement);
    }
    for (s, w) in sums.iter_mut().zip(&weights) {
        for v in s.iter_mut() {
            *v /= w;
        }
    }
    CellField::new(target, sums)
}

/// Sums a per-cell scalar of `fine` onto the containing cells of `coarse`.
pub fn accumulate_to_coarser(values: &[f64], fine: &LeafMesh, coarse: &LeafMesh) -> Result<Vec<f64>> {
    if values.len() != fine.num_cells() {
        return Err(Error::MeshMismatch {
            field: 0,
            mesh: fine.id(),
        });
    }
    let map = ancestor_map(fine, coarse)?;
    let mut out = vec![0.0; coarse.num_cells()];
    for (&t, v) in map.iter().zip(values) {
        out[t] += v;
    }
    Ok(out)
}
