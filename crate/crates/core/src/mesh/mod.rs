//! Hierarchical geometry tree over triangles and its finite-volume leaf view.

mod field;
pub mod geometry;
mod leaf;
mod root;
mod tree;

pub use field::{accumulate_to_coarser, ancestor_map, project_to_finer, restrict_to_coarser, CellField};
pub use geometry::BoundaryCurve;
pub use leaf::{Cell, Face, FaceNeighbor, LeafMesh};
pub use root::{signed_area, BoundaryEdge, BoundaryKind, Marker, MarkerId, RootMesh};
pub use tree::{union_all, union_trees, CellKey, HierarchicalTree, NodeId, TreeNode, MAX_DEPTH};

/// Leaf mesh of a tree; shorthand for [`LeafMesh::from_tree`].
pub fn leaf_mesh(tree: &HierarchicalTree) -> crate::error::Result<LeafMesh> {
    LeafMesh::from_tree(tree)
}
