//! Saved solver states and run manifests.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::block::Vec4;
use crate::error::{Error, Result};
use crate::euler::FreestreamSpec;
use crate::mesh::{leaf_mesh, CellField, CellKey, HierarchicalTree, LeafMesh, RootMesh};

/// A tree stored as its root mesh plus the ordered refinement paths, with one
/// primal value per leaf in leaf order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedState {
    pub freestream: FreestreamSpec,
    pub root: RootMesh,
    pub refinements: Vec<CellKey>,
    pub solution: Vec<Vec4>,
}

impl SavedState {
    pub fn new(tree: &HierarchicalTree, solution: &CellField, fs: &FreestreamSpec) -> Result<Self> {
        let mesh = leaf_mesh(tree)?;
        solution.check_mesh(&mesh)?;
        Ok(Self {
            freestream: *fs,
            root: tree.root_mesh().as_ref().clone(),
            refinements: tree.refinement_paths(),
            solution: solution.values.clone(),
        })
    }

    /// Rebuilds the tree, its leaf mesh and the field on it.
    pub fn restore(&self) -> Result<(HierarchicalTree, LeafMesh, CellField)> {
        self.root.validate()?;
        let tree = HierarchicalTree::from_refinement_paths(Arc::new(self.root.clone()), &self.refinements)?;
        let mesh = leaf_mesh(&tree)?;
        let field = CellField::new(&mesh, self.solution.clone())?;
        Ok((tree, mesh, field))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Keys that carry timing information and are ignored by [`manifests_equivalent`].
pub const VOLATILE_KEYS: [&str; 3] = ["wallclock", "timestamp", "elapsed_seconds"];

pub fn write_manifest(path: &Path, manifest: &Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(manifest)? + "\n")?;
    Ok(())
}

/// The manifest with every volatile key removed at any depth.
pub fn strip_volatile(manifest: &Value) -> Value {
    match manifest {
        Value::Object(map) => Value::Object(
            map.iter()
                .filter(|(k, _)| !VOLATILE_KEYS.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), strip_volatile(v)))
                .collect(),
        ),
        Value::Array(items) => Value::Array(items.iter().map(strip_volatile).collect()),
        other => other.clone(),
    }
}

/// Byte equality of the serialized manifests after stripping volatile keys.
pub fn manifests_equivalent(a: &Value, b: &Value) -> Result<bool> {
    Ok(serde_json::to_string(&strip_volatile(a))? == serde_json::to_string(&strip_volatile(b))?)
}

pub fn read_manifest(path: &Path) -> Result<Value> {
    serde_json::from_str(&std::fs::read_to_string(path)?).map_err(Error::from)
}
