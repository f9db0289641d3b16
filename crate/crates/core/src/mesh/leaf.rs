use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

use super::root::{edge_key, signed_area, BoundaryKind, MarkerId, RootMesh};
use super::tree::{CellKey, HierarchicalTree, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceNeighbor {
    Cell(usize),
    Boundary(MarkerId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub left: usize,
    pub right: FaceNeighbor,
    /// Unit normal pointing out of `left`.
    pub normal: [f64; 2],
    pub length: f64,
    pub midpoint: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub key: CellKey,
    pub node: NodeId,
    pub vertices: [u32; 3],
    pub area: f64,
    pub centroid: [f64; 2],
}

/// Finite-volume view of the leaves of a tree.
///
/// A leaf carrying a hanging point contributes two half faces on that edge and
/// therefore has four faces.
#[derive(Debug, Clone)]
pub struct LeafMesh {
    id: u64,
    root: Arc<RootMesh>,
    pub cells: Vec<Cell>,
    pub faces: Vec<Face>,
    /// Vertex coordinates referenced by `Cell::vertices`.
    pub points: Vec<[f64; 2]>,
    cell_face_offsets: Vec<usize>,
    cell_face_list: Vec<usize>,
    index: HashMap<CellKey, usize>,
}

impl LeafMesh {
    pub fn from_tree(tree: &HierarchicalTree) -> Result<Self> {
        let leaves = tree.leaves();
        let mut cells = Vec::with_capacity(leaves.len());
        let mut vertex_map: HashMap<u32, u32> = HashMap::new();
        let mut points = Vec::new();
        for &id in &leaves {
            let node = tree.node(id);
            let [a, b, c] = tree.node_coords(id);
            let area = signed_area(a, b, c);
            if area <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "leaf {} has nonpositive area {area:e}",
                    node.key
                )));
            }
            let local = node.vertices.map(|v| {
                *vertex_map.entry(v).or_insert_with(|| {
                    points.push(tree.vertex(v));
                    (points.len() - 1) as u32
                })
            });
            cells.push(Cell {
                key: node.key,
                node: id,
                vertices: local,
                area,
                centroid: [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0],
            });
        }

        let mut faces: Vec<Face> = Vec::new();
        let mut open: HashMap<(u32, u32), (usize, u32, u32)> = HashMap::new();
        let mut pending_boundary: Vec<(usize, u32, u32)> = Vec::new();
        let mut segments = Vec::with_capacity(4);
        for (ci, &id) in leaves.iter().enumerate() {
            let v = tree.node(id).vertices;
            segments.clear();
            for k in 0..3 {
                let (p, q) = (v[k], v[(k + 1) % 3]);
                match tree.midpoint_of(p, q) {
                    Some(m) => {
                        segments.push((p, m));
                        segments.push((m, q));
                    }
                    None => segments.push((p, q)),
                }
            }
            for &(p, q) in &segments {
                let key = edge_key(p, q);
                match open.remove(&key) {
                    Some((left, lp, lq)) => {
                        faces.push(make_face(tree, left, FaceNeighbor::Cell(ci), lp, lq));
                    }
                    None => {
                        if tree.boundary_marker(p, q).is_some() {
                            pending_boundary.push((ci, p, q));
                        } else {
                            open.insert(key, (ci, p, q));
                        }
                    }
                }
            }
        }
        if !open.is_empty() {
            return Err(Error::InvalidMesh(format!(
                "{} leaf edges have no neighbor and no boundary marker",
                open.len()
            )));
        }
        for (ci, p, q) in pending_boundary {
            let marker = tree.boundary_marker(p, q).expect("checked above");
            faces.push(make_face(tree, ci, FaceNeighbor::Boundary(marker), p, q));
        }

        let mut counts = vec![0usize; cells.len() + 1];
        for f in &faces {
            counts[f.left + 1] += 1;
            if let FaceNeighbor::Cell(r) = f.right {
                counts[r + 1] += 1;
            }
        }
        for i in 0..cells.len() {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut list = vec![0usize; offsets[cells.len()]];
        for (fi, f) in faces.iter().enumerate() {
            list[fill[f.left]] = fi;
            fill[f.left] += 1;
            if let FaceNeighbor::Cell(r) = f.right {
                list[fill[r]] = fi;
                fill[r] += 1;
            }
        }

        let index = cells.iter().enumerate().map(|(i, c)| (c.key, i)).collect();
        let mut h = DefaultHasher::new();
        tree.root_mesh().fingerprint().hash(&mut h);
        for c in &cells {
            c.key.hash(&mut h);
        }
        Ok(Self {
            id: h.finish(),
            root: tree.root_mesh().clone(),
            cells,
            faces,
            points,
            cell_face_offsets: offsets,
            cell_face_list: list,
            index,
        })
    }

    /// Fingerprint of the root mesh and leaf set; fields carry it.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn root_mesh(&self) -> &Arc<RootMesh> {
        &self.root
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_faces(&self, cell: usize) -> &[usize] {
        &self.cell_face_list[self.cell_face_offsets[cell]..self.cell_face_offsets[cell + 1]]
    }

    pub fn cell_index(&self, key: &CellKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Index of the cell of this mesh that contains `key` (itself or an ancestor).
    pub fn containing_cell(&self, key: &CellKey) -> Option<usize> {
        (0..=key.depth())
            .rev()
            .find_map(|d| self.index.get(&key.ancestor(d)).copied())
    }

    pub fn marker_id(&self, name: &str) -> Option<MarkerId> {
        self.root.marker_id(name)
    }

    pub fn marker_kind(&self, marker: MarkerId) -> BoundaryKind {
        self.root.markers[marker as usize].kind
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    pub fn neighbor_of(&self, face: &Face, cell: usize) -> FaceNeighbor {
        if face.left == cell {
            face.right
        } else {
            FaceNeighbor::Cell(face.left)
        }
    }

    /// Cells sharing a face with `cell`.
    pub fn neighbors(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        self.cell_faces(cell)
            .iter()
            .filter_map(move |&f| match self.neighbor_of(&self.faces[f], cell) {
                FaceNeighbor::Cell(c) => Some(c),
                FaceNeighbor::Boundary(_) => None,
            })
    }

    pub fn is_refinement_of(&self, coarse: &LeafMesh) -> bool {
        Arc::ptr_eq(&self.root, &coarse.root) || *self.root == *coarse.root
    }
}

fn make_face(tree: &HierarchicalTree, left: usize, right: FaceNeighbor, p: u32, q: u32) -> Face {
    let (a, b) = (tree.vertex(p), tree.vertex(q));
    let d = [b[0] - a[0], b[1] - a[1]];
    let length = d[0].hypot(d[1]);
    Face {
        left,
        right,
        normal: [d[1] / length, -d[0] / length],
        length,
        midpoint: [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
    }
}
