use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::root::{edge_key, MarkerId, RootMesh};
use crate::error::{Error, Result};

pub const MAX_DEPTH: u8 = 31;

/// Position of a tree node: root triangle plus the child index taken at every level.
///
/// Keys are independent of any particular tree instance, which is what makes
/// unions and cross-mesh transfers possible. Ordering is depth-first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellKey {
    root: u32,
    depth: u8,
    path: u64,
}

impl CellKey {
    pub fn root(root: u32) -> Self {
        Self {
            root,
            depth: 0,
            path: 0,
        }
    }

    pub fn root_index(&self) -> u32 {
        self.root
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn child(&self, k: u8) -> Self {
        debug_assert!(k < 4 && self.depth < MAX_DEPTH);
        Self {
            root: self.root,
            depth: self.depth + 1,
            path: (self.path << 2) | k as u64,
        }
    }

    pub fn parent(&self) -> Option<Self> {
        (self.depth > 0).then(|| Self {
            root: self.root,
            depth: self.depth - 1,
            path: self.path >> 2,
        })
    }

    /// Ancestor at `depth`, or `self` when `depth` is not shallower.
    pub fn ancestor(&self, depth: u8) -> Self {
        if depth >= self.depth {
            return *self;
        }
        Self {
            root: self.root,
            depth,
            path: self.path >> (2 * (self.depth - depth)),
        }
    }

    pub fn is_ancestor_or_self(&self, other: &CellKey) -> bool {
        self.root == other.root && self.depth <= other.depth && other.ancestor(self.depth) == *self
    }

    pub fn child_index(&self) -> Option<u8> {
        (self.depth > 0).then_some((self.path & 3) as u8)
    }
}

impl Ord for CellKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.root.cmp(&other.root).then_with(|| {
            let d = self.depth.min(other.depth);
            let a = self.ancestor(d).path;
            let b = other.ancestor(d).path;
            a.cmp(&b).then(self.depth.cmp(&other.depth))
        })
    }
}

impl PartialOrd for CellKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)?;
        if self.depth > 0 {
            write!(f, ":")?;
            for level in (0..self.depth).rev() {
                write!(f, "{}", (self.path >> (2 * level)) & 3)?;
            }
        }
        Ok(())
    }
}

impl FromStr for CellKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("malformed cell path `{s}`"));
        let (root, path) = match s.split_once(':') {
            Some((r, p)) => (r, p),
            None => (s, ""),
        };
        let mut key = CellKey::root(root.parse().map_err(|_| bad())?);
        for c in path.chars() {
            let k = c.to_digit(4).ok_or_else(bad)?;
            if key.depth >= MAX_DEPTH {
                return Err(bad());
            }
            key = key.child(k as u8);
        }
        Ok(key)
    }
}

impl Serialize for CellKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CellKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub key: CellKey,
    /// Counterclockwise vertex ids into the tree's vertex table.
    pub vertices: [u32; 3],
    pub parent: Option<NodeId>,
    pub children: Option<[NodeId; 4]>,
}

impl TreeNode {
    pub fn level(&self) -> u8 {
        self.key.depth
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Triangle forest over a root mesh with red (midpoint) refinement.
///
/// Every public mutation returns a new tree in which no leaf has more than one
/// hanging point on its edges.
#[derive(Debug, Clone)]
pub struct HierarchicalTree {
    root: Arc<RootMesh>,
    nodes: Vec<TreeNode>,
    by_key: HashMap<CellKey, NodeId>,
    vertices: Vec<[f64; 2]>,
    midpoints: HashMap<(u32, u32), u32>,
    boundary: HashMap<(u32, u32), MarkerId>,
}

impl HierarchicalTree {
    pub fn new(root: RootMesh) -> Result<Self> {
        root.validate()?;
        Ok(Self::from_shared(Arc::new(root)))
    }

    pub fn from_shared(root: Arc<RootMesh>) -> Self {
        let nodes: Vec<TreeNode> = root
            .triangles
            .iter()
            .enumerate()
            .map(|(i, t)| TreeNode {
                key: CellKey::root(i as u32),
                vertices: *t,
                parent: None,
                children: None,
            })
            .collect();
        let by_key = nodes.iter().enumerate().map(|(i, n)| (n.key, i)).collect();
        let boundary = root
            .boundary
            .iter()
            .map(|e| (edge_key(e.a, e.b), e.marker))
            .collect();
        Self {
            vertices: root.vertices.clone(),
            root,
            nodes,
            by_key,
            midpoints: HashMap::new(),
            boundary,
        }
    }

    pub fn root_mesh(&self) -> &Arc<RootMesh> {
        &self.root
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn node_by_key(&self, key: &CellKey) -> Option<NodeId> {
        self.by_key.get(key).copied()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn vertex(&self, v: u32) -> [f64; 2] {
        self.vertices[v as usize]
    }

    pub fn node_coords(&self, id: NodeId) -> [[f64; 2]; 3] {
        self.nodes[id].vertices.map(|v| self.vertex(v))
    }

    pub fn midpoint_of(&self, a: u32, b: u32) -> Option<u32> {
        self.midpoints.get(&edge_key(a, b)).copied()
    }

    pub fn boundary_marker(&self, a: u32, b: u32) -> Option<MarkerId> {
        self.boundary.get(&edge_key(a, b)).copied()
    }

    /// Boundary marker of each edge `(v0,v1)`, `(v1,v2)`, `(v2,v0)` of a node.
    pub fn edge_markers(&self, id: NodeId) -> [Option<MarkerId>; 3] {
        let v = self.nodes[id].vertices;
        [0, 1, 2].map(|k| self.boundary_marker(v[k], v[(k + 1) % 3]))
    }

    pub fn same_roots(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.root, &other.root) || *self.root == *other.root
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = (0..self.root.triangles.len()).rev().collect();
        while let Some(id) = stack.pop() {
            match self.nodes[id].children {
                Some(ch) => stack.extend(ch.iter().rev()),
                None => out.push(id),
            }
        }
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn leaf_keys(&self) -> Vec<CellKey> {
        self.leaves().into_iter().map(|i| self.nodes[i].key).collect()
    }

    pub fn max_depth(&self) -> u8 {
        self.nodes.iter().map(|n| n.key.depth).max().unwrap_or(0)
    }

    /// Keys of all refined nodes, parents before children.
    pub fn refinement_paths(&self) -> Vec<CellKey> {
        let mut keys: Vec<CellKey> = self
            .nodes
            .iter()
            .filter(|n| !n.is_leaf())
            .map(|n| n.key)
            .collect();
        keys.sort_by(|a, b| a.depth.cmp(&b.depth).then(a.cmp(b)));
        keys
    }

    /// Rebuilds a tree from a refinement-path list.
    pub fn from_refinement_paths(root: Arc<RootMesh>, paths: &[CellKey]) -> Result<Self> {
        let mut tree = Self::from_shared(root);
        let mut sorted = paths.to_vec();
        sorted.sort_by(|a, b| a.depth.cmp(&b.depth).then(a.cmp(b)));
        sorted.dedup();
        for key in sorted {
            if key.root as usize >= tree.root.triangles.len() {
                return Err(Error::InvalidArgument(format!("cell path {key} has no root")));
            }
            let Some(id) = tree.node_by_key(&key) else {
                return Err(Error::InvalidArgument(format!(
                    "cell path {key} has an unrefined ancestor"
                )));
            };
            if tree.nodes[id].is_leaf() {
                tree.split(id);
            }
        }
        tree.close_hanging();
        Ok(tree)
    }

    /// Red refinement of the given leaves followed by hanging-point closure.
    pub fn refine_cells(&self, marked: &[NodeId]) -> Result<Self> {
        for &id in marked {
            if id >= self.nodes.len() || !self.nodes[id].is_leaf() {
                return Err(Error::UnknownCell(id));
            }
        }
        let mut ids = marked.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let mut tree = self.clone();
        for id in ids {
            tree.split(id);
        }
        tree.close_hanging();
        Ok(tree)
    }

    /// Same as [`refine_cells`](Self::refine_cells) with leaves addressed by key.
    pub fn refine_keys(&self, keys: &[CellKey]) -> Result<Self> {
        let ids = keys
            .iter()
            .map(|k| {
                self.node_by_key(k)
                    .filter(|&id| self.nodes[id].is_leaf())
                    .ok_or(Error::InvalidArgument(format!("cell {k} is not a leaf")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.refine_cells(&ids)
    }

    pub fn refine_uniform(&self) -> Self {
        let leaves = self.leaves();
        let mut tree = self.clone();
        for id in leaves {
            tree.split(id);
        }
        tree.close_hanging();
        tree
    }

    pub fn enforce_hanging_rule(&self) -> Self {
        let mut tree = self.clone();
        tree.close_hanging();
        tree
    }

    /// Number of hanging vertices lying on the edges of a leaf.
    pub fn hanging_points(&self, id: NodeId) -> usize {
        let v = self.nodes[id].vertices;
        (0..3)
            .map(|k| self.hanging_on_edge(v[k], v[(k + 1) % 3]))
            .sum()
    }

    fn hanging_on_edge(&self, a: u32, b: u32) -> usize {
        match self.midpoint_of(a, b) {
            Some(m) => 1 + self.hanging_on_edge(a, m) + self.hanging_on_edge(m, b),
            None => 0,
        }
    }

    /// Leaves violating the at-most-one-hanging-point rule.
    pub fn hanging_violations(&self) -> Vec<NodeId> {
        self.leaves()
            .into_iter()
            .filter(|&id| self.hanging_points(id) >= 2)
            .collect()
    }

    fn close_hanging(&mut self) {
        loop {
            let mut bad = self.hanging_violations();
            if bad.is_empty() {
                break;
            }
            bad.sort_unstable();
            for id in bad {
                self.split(id);
            }
        }
    }

    fn midpoint(&mut self, a: u32, b: u32) -> u32 {
        let key = edge_key(a, b);
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let (pa, pb) = (self.vertex(key.0), self.vertex(key.1));
        let marker = self.boundary.get(&key).copied();
        let coords = match marker.and_then(|m| self.root.markers[m as usize].curve.as_ref()) {
            Some(curve) => curve.midpoint(pa, pb),
            None => [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
        };
        let m = self.vertices.len() as u32;
        self.vertices.push(coords);
        self.midpoints.insert(key, m);
        if let Some(marker) = marker {
            self.boundary.insert(edge_key(key.0, m), marker);
            self.boundary.insert(edge_key(m, key.1), marker);
        }
        m
    }

    fn split(&mut self, id: NodeId) {
        debug_assert!(self.nodes[id].is_leaf());
        let [a, b, c] = self.nodes[id].vertices;
        let key = self.nodes[id].key;
        let mab = self.midpoint(a, b);
        let mbc = self.midpoint(b, c);
        let mca = self.midpoint(c, a);
        let tris = [[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mbc, mca, mab]];
        let first = self.nodes.len();
        for (k, t) in tris.into_iter().enumerate() {
            let child_key = key.child(k as u8);
            self.by_key.insert(child_key, first + k);
            self.nodes.push(TreeNode {
                key: child_key,
                vertices: t,
                parent: Some(id),
                children: None,
            });
        }
        self.nodes[id].children = Some([first, first + 1, first + 2, first + 3]);
    }
}

/// Coarsest tree refining both inputs: a node is refined iff it is refined in
/// either tree, followed by hanging-point closure.
pub fn union_trees(a: &HierarchicalTree, b: &HierarchicalTree) -> Result<HierarchicalTree> {
    if !a.same_roots(b) {
        return Err(Error::RootMismatch);
    }
    let refined: BTreeSet<(u8, CellKey)> = a
        .refinement_paths()
        .into_iter()
        .chain(b.refinement_paths())
        .map(|k| (k.depth, k))
        .collect();
    let paths: Vec<CellKey> = refined.into_iter().map(|(_, k)| k).collect();
    HierarchicalTree::from_refinement_paths(a.root.clone(), &paths)
}

/// Left fold of [`union_trees`].
pub fn union_all<'a, I>(trees: I) -> Result<HierarchicalTree>
where
    I: IntoIterator<Item = &'a HierarchicalTree>,
{
    let mut iter = trees.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidArgument("union of an empty tree list".into()))?;
    iter.try_fold(first.clone(), |acc, t| union_trees(&acc, t))
}

impl PartialEq for HierarchicalTree {
    /// Same roots and the same set of refined nodes.
    fn eq(&self, other: &Self) -> bool {
        self.same_roots(other) && self.refinement_paths() == other.refinement_paths()
    }
}
