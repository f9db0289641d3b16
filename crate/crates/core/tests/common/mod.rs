#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use multidwr_core::mesh::{BoundaryEdge, BoundaryKind, Marker, RootMesh};
use multidwr_core::{ConservativeState, HierarchicalTree};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Valid state with ρ, p in [0.5, 2] and |v| components below 1.
pub fn random_state(r: &mut impl Rng) -> ConservativeState {
    let rho = r.random_range(0.5..2.0);
    let vx = r.random_range(-1.0..1.0);
    let vy = r.random_range(-1.0..1.0);
    let p = r.random_range(0.5..2.0);
    ConservativeState::from_primitive(rho, vx, vy, p, 1.4)
}

pub fn random_normal(r: &mut impl Rng) -> [f64; 2] {
    let t: f64 = r.random_range(0.0..std::f64::consts::TAU);
    [t.cos(), t.sin()]
}

/// Two counterclockwise triangles on the unit square, all edges on one marker.
pub fn unit_square(marker: &str) -> RootMesh {
    let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let triangles = vec![[0, 1, 2], [0, 2, 3]];
    let boundary = [(0, 1), (1, 2), (2, 3), (3, 0)]
        .into_iter()
        .map(|(a, b)| BoundaryEdge { a, b, marker: 0 })
        .collect();
    let markers = vec![Marker {
        name: marker.into(),
        kind: BoundaryKind::from_marker_name(marker),
        curve: None,
    }];
    RootMesh::new(vertices, triangles, boundary, markers).unwrap()
}

/// Square `[0, 1]²` split into `n × n × 2` triangles, all boundary far-field.
pub fn farfield_square(n: usize) -> RootMesh {
    let id = |i: usize, j: usize| (j * (n + 1) + i) as u32;
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut boundary = Vec::new();
    for i in 0..n {
        boundary.push(BoundaryEdge { a: id(i, 0), b: id(i + 1, 0), marker: 0 });
        boundary.push(BoundaryEdge { a: id(i + 1, n), b: id(i, n), marker: 0 });
        boundary.push(BoundaryEdge { a: id(0, i + 1), b: id(0, i), marker: 0 });
        boundary.push(BoundaryEdge { a: id(n, i), b: id(n, i + 1), marker: 0 });
    }
    let markers = vec![Marker {
        name: "farfield".into(),
        kind: BoundaryKind::Farfield,
        curve: None,
    }];
    RootMesh::new(vertices, triangles, boundary, markers).unwrap()
}

/// Refines a random subset of leaves `generations` times.
pub fn random_refinement(tree: &HierarchicalTree, generations: usize, fraction: f64, r: &mut impl Rng) -> HierarchicalTree {
    let mut t = tree.clone();
    for _ in 0..generations {
        let leaves = t.leaves();
        let marked: Vec<_> = leaves.into_iter().filter(|_| r.random_bool(fraction)).collect();
        t = t.refine_cells(&marked).unwrap();
    }
    t
}
