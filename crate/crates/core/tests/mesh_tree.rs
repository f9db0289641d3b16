mod common;

use std::sync::Arc;

use common::{random_refinement, rng, unit_square};
use multidwr_core::io::{builtin_airfoil_omesh, builtin_channel_bump, format_vtk, parse_vtk};
use multidwr_core::mesh::{
    leaf_mesh, project_to_finer, restrict_to_coarser, union_all, union_trees, CellField, FaceNeighbor, HierarchicalTree,
    LeafMesh,
};
use multidwr_core::mesh::geometry::Naca4Params;
use proptest::prelude::*;
use rand::Rng;

fn channel() -> HierarchicalTree {
    builtin_channel_bump(6, 4, 0.1).unwrap()
}

/// Straight-sided domain, where refinement preserves area exactly.
fn flat_channel() -> HierarchicalTree {
    builtin_channel_bump(6, 4, 0.0).unwrap()
}

fn sorted_leaves(t: &HierarchicalTree) -> Vec<multidwr_core::CellKey> {
    let mut k = t.leaf_keys();
    k.sort();
    k
}

fn refines(fine: &HierarchicalTree, coarse: &HierarchicalTree) -> bool {
    let coarse_mesh = leaf_mesh(coarse).unwrap();
    fine.leaf_keys().iter().all(|k| coarse_mesh.containing_cell(k).is_some())
}

fn face_closure(mesh: &LeafMesh) -> f64 {
    let mut sums = vec![[0.0f64; 2]; mesh.num_cells()];
    for f in &mesh.faces {
        let v = [f.normal[0] * f.length, f.normal[1] * f.length];
        sums[f.left][0] += v[0];
        sums[f.left][1] += v[1];
        if let FaceNeighbor::Cell(r) = f.right {
            sums[r][0] -= v[0];
            sums[r][1] -= v[1];
        }
    }
    sums.iter().map(|s| s[0].abs().max(s[1].abs())).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn union_laws_hold(sa in any::<u64>(), sb in any::<u64>(), ga in 0usize..4, gb in 0usize..4) {
        let root = channel();
        let a = random_refinement(&root, ga, 0.15, &mut rng(sa));
        let b = random_refinement(&root, gb, 0.15, &mut rng(sb));
        let ab = union_trees(&a, &b).unwrap();
        let ba = union_trees(&b, &a).unwrap();
        prop_assert_eq!(sorted_leaves(&ab), sorted_leaves(&ba));
        prop_assert_eq!(&union_trees(&a, &a).unwrap(), &a);
        prop_assert_eq!(&union_trees(&a, &root).unwrap(), &a);
        prop_assert!(refines(&ab, &a) && refines(&ab, &b));
        prop_assert!(ab.hanging_violations().is_empty());
        prop_assert!(a.hanging_violations().is_empty() && b.hanging_violations().is_empty());
    }

    #[test]
    fn nary_union_is_fold_order_independent(s in any::<u64>()) {
        let root = channel();
        let mut r = rng(s);
        let trees: Vec<_> = (0..3).map(|_| random_refinement(&root, 2, 0.2, &mut r)).collect();
        let fwd = union_all(&trees).unwrap();
        let rev = union_all(trees.iter().rev()).unwrap();
        prop_assert_eq!(sorted_leaves(&fwd), sorted_leaves(&rev));
    }
}

#[test]
fn union_of_corner_refinements_forces_the_center_child() {
    let tree = HierarchicalTree::new(unit_square("wall")).unwrap();
    let parent = tree.refine_cells(&[0]).unwrap();
    let t = parent.leaf_keys()[0].parent().unwrap();
    let (t0, t2, t3) = (t.child(0), t.child(2), t.child(3));
    let a = parent.refine_keys(&[t0]).unwrap();
    let b = parent.refine_keys(&[t2]).unwrap();
    let is_leaf = |tree: &HierarchicalTree, k| tree.leaf_keys().contains(&k);
    assert!(is_leaf(&a, t3) && is_leaf(&b, t3));
    let u = union_trees(&a, &b).unwrap();
    assert!(!is_leaf(&u, t3), "T3 must be refined in the union");
    assert!(u.hanging_violations().is_empty());
    // Only T3 is added on top of the merged refinements of T0 and T2.
    let mut expected = a.refinement_paths();
    expected.extend(b.refinement_paths());
    expected.push(t3);
    expected.sort();
    expected.dedup();
    let mut got = u.refinement_paths();
    got.sort();
    assert_eq!(got, expected);
}

#[test]
fn deep_cascade_is_closed() {
    let mut t = channel();
    for _ in 0..5 {
        let k = *t.leaf_keys().iter().max_by_key(|k| k.depth()).unwrap();
        t = t.refine_keys(&[k]).unwrap();
        assert!(t.hanging_violations().is_empty());
    }
    assert!(t.max_depth() >= 3);
}

#[test]
fn random_trees_keep_area_and_closure() {
    let root = flat_channel();
    let area = root.root_mesh().area();
    for s in 0..100 {
        let t = random_refinement(&root, 3, 0.2, &mut rng(s));
        let mesh = leaf_mesh(&t).unwrap();
        assert!((mesh.total_area() - area).abs() < 1e-10 * area);
        assert!(face_closure(&mesh) < 1e-12);
        for id in t.nodes().iter().enumerate().filter_map(|(i, n)| n.children.map(|c| (i, c))) {
            let parent: f64 = area_of(&t, id.0);
            let kids: f64 = id.1.iter().map(|&c| area_of(&t, c)).sum();
            assert!((parent - kids).abs() < 1e-12 * parent);
        }
    }
}

fn area_of(t: &HierarchicalTree, id: usize) -> f64 {
    let [a, b, c] = t.node_coords(id);
    multidwr_core::mesh::signed_area(a, b, c)
}

#[test]
fn unrefined_square_has_one_interior_face() {
    let mesh = leaf_mesh(&HierarchicalTree::new(unit_square("wall")).unwrap()).unwrap();
    let interior = mesh.faces.iter().filter(|f| matches!(f.right, FaceNeighbor::Cell(_))).count();
    assert_eq!((mesh.num_cells(), interior, mesh.faces.len() - interior), (2, 1, 4));
}

#[test]
fn transfers_conserve_integrals() {
    let root = flat_channel();
    let mut r = rng(21);
    for _ in 0..20 {
        let coarse_tree = random_refinement(&root, 2, 0.3, &mut r);
        let fine_tree = random_refinement(&coarse_tree, 2, 0.3, &mut r);
        let coarse = leaf_mesh(&coarse_tree).unwrap();
        let fine = leaf_mesh(&fine_tree).unwrap();
        let values = (0..coarse.num_cells()).map(|_| [r.random::<f64>(), r.random(), r.random(), r.random()]).collect();
        let f = CellField::new(&coarse, values).unwrap();
        let up = project_to_finer(&f, &coarse, &fine).unwrap();
        let i0 = f.integral(&coarse).unwrap();
        let i1 = up.integral(&fine).unwrap();
        let back = restrict_to_coarser(&up, &fine, &coarse).unwrap();
        for k in 0..4 {
            assert!((i0[k] - i1[k]).abs() < 1e-14 * i0[k].abs().max(1.0));
        }
        for (a, b) in back.values.iter().zip(&f.values) {
            for k in 0..4 {
                assert!((a[k] - b[k]).abs() < 1e-14 * b[k].abs().max(1.0));
            }
        }
        let fine_vals = (0..fine.num_cells()).map(|i| [fine.cells[i].centroid[0], 1.0, 0.0, 0.0]).collect();
        let g = CellField::new(&fine, fine_vals).unwrap();
        let down = restrict_to_coarser(&g, &fine, &coarse).unwrap();
        let j0 = g.integral(&fine).unwrap();
        let j1 = down.integral(&coarse).unwrap();
        assert!((j0[0] - j1[0]).abs() < 1e-14 * j0[0].abs().max(1.0));
    }
}

#[test]
fn identical_markings_give_identical_trees() {
    let root = channel();
    let a = random_refinement(&root, 3, 0.3, &mut rng(99));
    let b = random_refinement(&root, 3, 0.3, &mut rng(99));
    assert_eq!(a, b);
    assert_eq!(a.refinement_paths(), b.refinement_paths());
    let rebuilt = HierarchicalTree::from_refinement_paths(Arc::clone(a.root_mesh()), &a.refinement_paths()).unwrap();
    assert_eq!(sorted_leaves(&rebuilt), sorted_leaves(&a));
}

#[test]
fn flat_channel_has_area_four_and_two_nx_ny_cells() {
    let t = builtin_channel_bump(10, 6, 0.0).unwrap();
    assert_eq!(t.leaf_count(), 120);
    assert!((t.root_mesh().area() - 4.0).abs() < 1e-12);
}

#[test]
fn channel_wall_is_one_open_polyline_from_inlet_to_outlet() {
    let t = builtin_channel_bump(12, 4, 0.1).unwrap();
    let root = t.root_mesh();
    let wall = root.marker_id("wall").unwrap();
    let edges: Vec<(u32, u32)> = root.boundary.iter().filter(|e| e.marker == wall).map(|e| (e.a, e.b)).collect();
    assert_eq!(edges.len(), 12);
    let start = edges
        .iter()
        .find(|(a, _)| root.vertices[*a as usize][0] == -2.0)
        .expect("wall starts at the inlet");
    let mut at = start.1;
    let mut visited = 1;
    while let Some(next) = edges.iter().find(|(a, _)| *a == at) {
        at = next.1;
        visited += 1;
    }
    assert_eq!(visited, edges.len());
    assert_eq!(root.vertices[at as usize][0], 2.0);
}

#[test]
fn airfoil_wall_is_closed_and_outer_ring_on_circle() {
    let t = builtin_airfoil_omesh("0012", 64, 12, 35.0).unwrap();
    for tree in [t.clone(), t.refine_uniform()] {
        let mesh = leaf_mesh(&tree).unwrap();
        let wall = mesh.marker_id("wall").unwrap();
        let far = mesh.marker_id("farfield").unwrap();
        let mut s = [0.0f64; 2];
        for f in mesh.faces.iter().filter(|f| f.right == FaceNeighbor::Boundary(wall)) {
            s[0] += f.length * f.normal[0];
            s[1] += f.length * f.normal[1];
        }
        assert!(s[0].abs() < 1e-12 && s[1].abs() < 1e-12, "{s:?}");
        let root = tree.root_mesh();
        for e in root.boundary.iter().filter(|e| e.marker == far) {
            let p = root.vertices[e.a as usize];
            assert!((p[0].hypot(p[1]) - 35.0).abs() < 1e-12);
        }
    }
}

#[test]
fn naca0012_max_half_thickness_near_thirty_percent_chord() {
    let p = Naca4Params::parse("0012").unwrap();
    let (mut best, mut at) = (0.0, 0.0);
    for i in 0..=10_000 {
        let x = i as f64 / 10_000.0;
        let y = p.half_thickness(x);
        if y > best {
            best = y;
            at = x;
        }
    }
    assert!((best - 0.06).abs() < 2e-4, "{best}");
    assert!((at - 0.30).abs() < 0.01, "{at}");
}

#[test]
fn vtk_round_trip_recovers_connectivity() {
    let t = random_refinement(&channel(), 2, 0.3, &mut rng(3));
    let mesh = leaf_mesh(&t).unwrap();
    let back = parse_vtk(&format_vtk(&mesh, &[], "x").unwrap()).unwrap();
    assert_eq!(back.cells.len(), mesh.num_cells());
    for (c, v) in mesh.cells.iter().zip(&back.cells) {
        assert_eq!(&c.vertices, v);
    }
    assert_eq!(back.points, mesh.points);
}
