mod common;

use common::rng;
use multidwr_core::functionals::{combine_gradients, composite_evaluate, composite_weights, evaluate, gradient};
use multidwr_core::io::{builtin_airfoil_omesh, builtin_channel_bump};
use multidwr_core::mesh::{leaf_mesh, FaceNeighbor, LeafMesh};
use multidwr_core::{
    CellField, CompositeFunctional, ConservativeState, Error, FreestreamSpec, FunctionalKind, TargetFunctional,
};
use rand::Rng;

fn airfoil() -> LeafMesh {
    leaf_mesh(&builtin_airfoil_omesh("0012", 48, 8, 20.0).unwrap()).unwrap()
}

fn fs() -> FreestreamSpec {
    FreestreamSpec::standard(0.8, 1.25f64.to_radians())
}

fn random_field(mesh: &LeafMesh, seed: u64) -> CellField {
    let mut r = rng(seed);
    let values = (0..mesh.num_cells())
        .map(|_| {
            let rho = r.random_range(0.8..1.2);
            let vx = r.random_range(-0.3..0.3);
            let vy = r.random_range(-0.3..0.3);
            let p = r.random_range(0.6..0.9);
            ConservativeState::from_primitive(rho, vx, vy, p, 1.4).0
        })
        .collect();
    CellField::new(mesh, values).unwrap()
}

fn targets(fs: &FreestreamSpec) -> Vec<TargetFunctional> {
    vec![
        TargetFunctional::lift("wall", fs),
        TargetFunctional::drag("wall", fs),
        TargetFunctional::moment("wall", fs, [0.25, 0.0]),
    ]
}

#[test]
fn uniform_pressure_on_a_closed_wall_gives_nothing() {
    let mesh = airfoil();
    let fs = fs();
    for state in [fs.state(), ConservativeState::from_primitive(1.3, 0.0, 0.0, 2.0, 1.4)] {
        let u = CellField::uniform(&mesh, state.0);
        for t in targets(&fs) {
            let v = evaluate(&mesh, &u, &t).unwrap();
            assert!(v.abs() < 1e-12, "{:?} {v:e}", t.kind);
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mesh = airfoil();
    let fs = fs();
    let u = random_field(&mesh, 1);
    let mut r = rng(2);
    for t in targets(&fs) {
        let g = gradient(&mesh, &u, &t).unwrap();
        for _ in 0..5 {
            let v: Vec<[f64; 4]> = (0..mesh.num_cells()).map(|_| std::array::from_fn(|_| r.random_range(-1.0..1.0))).collect();
            let eps = 1e-6;
            let shifted = |s: f64| {
                let vals = u.values.iter().zip(&v).map(|(a, b)| std::array::from_fn(|k| a[k] + s * b[k])).collect();
                evaluate(&mesh, &CellField::new(&mesh, vals).unwrap(), &t).unwrap()
            };
            let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
            let exact: f64 = g.values.iter().zip(&v).map(|(a, b)| (0..4).map(|k| a[k] * b[k]).sum::<f64>()).sum();
            assert!((fd - exact).abs() < 1e-8 * exact.abs().max(1.0), "{:?} {fd} {exact}", t.kind);
        }
    }
}

#[test]
fn gradient_lives_on_cells_touching_the_marker() {
    let mesh = airfoil();
    let fs = fs();
    let wall = mesh.marker_id("wall").unwrap();
    let touching: Vec<bool> = {
        let mut t = vec![false; mesh.num_cells()];
        for f in mesh.faces.iter().filter(|f| f.right == FaceNeighbor::Boundary(wall)) {
            t[f.left] = true;
        }
        t
    };
    let u = random_field(&mesh, 3);
    for t in targets(&fs) {
        let g = gradient(&mesh, &u, &t).unwrap();
        for (i, v) in g.values.iter().enumerate() {
            if !touching[i] {
                assert_eq!(v, &[0.0; 4]);
            }
        }
    }
}

#[test]
fn values_scale_inversely_with_reference_length() {
    let mesh = airfoil();
    let fs = fs();
    let u = random_field(&mesh, 4);
    for kind in [FunctionalKind::Lift, FunctionalKind::Drag] {
        let a = evaluate(&mesh, &u, &TargetFunctional::new(kind, "wall", &fs, 1.0)).unwrap();
        let b = evaluate(&mesh, &u, &TargetFunctional::new(kind, "wall", &fs, 1000.0)).unwrap();
        assert!((a - 1000.0 * b).abs() < 1e-12 * a.abs());
    }
}

#[test]
fn normalization_is_half_gamma_p_mach_squared_length() {
    let fs = FreestreamSpec::standard(0.729, 2.31f64.to_radians());
    let t = TargetFunctional::new(FunctionalKind::Drag, "wall", &fs, 2.0);
    assert!((t.c_inf() - 0.5 * 1.4 * 0.729 * 0.729 * 2.0).abs() < 1e-15);
}

#[test]
fn unknown_marker_is_reported() {
    let mesh = airfoil();
    let u = CellField::uniform(&mesh, fs().state().0);
    let t = TargetFunctional::lift("flap", &fs());
    assert!(matches!(evaluate(&mesh, &u, &t), Err(Error::UnknownBoundaryMarker(m)) if m == "flap"));
}

#[test]
fn composite_chain_rule_matches_directional_derivative() {
    let mesh = airfoil();
    let fs = fs();
    let u = random_field(&mesh, 5);
    let [l, d, m]: [TargetFunctional; 3] = targets(&fs).try_into().unwrap();
    let comps = [
        CompositeFunctional::ratio(l.clone(), d.clone()),
        CompositeFunctional::product(vec![(l.clone(), 1), (d.clone(), 1), (m.clone(), -1)]),
        CompositeFunctional::linear(vec![(l, 1.0), (d, 50.0), (m, -2.0)]),
    ];
    let mut r = rng(6);
    for comp in comps {
        let eval = |f: &CellField| {
            let values: Vec<f64> = comp.components().iter().map(|t| evaluate(&mesh, f, t).unwrap()).collect();
            composite_evaluate(&values, &comp).unwrap()
        };
        let values: Vec<f64> = comp.components().iter().map(|t| evaluate(&mesh, &u, t).unwrap()).collect();
        let grads: Vec<CellField> = comp.components().iter().map(|t| gradient(&mesh, &u, t).unwrap()).collect();
        let g = combine_gradients(&grads, &composite_weights(&values, &comp).unwrap());
        let v: Vec<[f64; 4]> = (0..mesh.num_cells()).map(|_| std::array::from_fn(|_| r.random_range(-1.0..1.0))).collect();
        let eps = 1e-6;
        let shifted = |s: f64| {
            let vals = u.values.iter().zip(&v).map(|(a, b)| std::array::from_fn(|k| a[k] + s * b[k])).collect();
            eval(&CellField::new(&mesh, vals).unwrap())
        };
        let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        let exact: f64 = g.iter().zip(&v).map(|(a, b)| (0..4).map(|k| a[k] * b[k]).sum::<f64>()).sum();
        assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1e-3), "{fd} {exact}");
    }
}

#[test]
fn composite_weights_by_hand() {
    let fs = fs();
    let (l, d) = (TargetFunctional::lift("wall", &fs), TargetFunctional::drag("wall", &fs));
    let ratio = CompositeFunctional::ratio(l.clone(), d.clone());
    assert_eq!(composite_evaluate(&[3.0, 2.0], &ratio).unwrap(), 1.5);
    assert_eq!(composite_weights(&[3.0, 2.0], &ratio).unwrap(), vec![0.5, -0.75]);
    assert!(matches!(composite_evaluate(&[3.0, 0.0], &ratio), Err(Error::DivisionByZero(1))));
    let lin = CompositeFunctional::linear(vec![(l, 1.0), (d, 50.0)]);
    assert_eq!(composite_evaluate(&[3.0, 2.0], &lin).unwrap(), 103.0);
    assert_eq!(composite_weights(&[3.0, 2.0], &lin).unwrap(), vec![1.0, 50.0]);
}

#[test]
fn bump_lift_and_drag_use_only_the_wall() {
    let mesh = leaf_mesh(&builtin_channel_bump(12, 4, 0.1).unwrap()).unwrap();
    let fs = FreestreamSpec::standard(0.5, 0.0);
    let u = CellField::uniform(&mesh, fs.state().0);
    // Open wall: uniform pressure gives a net vertical force but no drag.
    let drag = evaluate(&mesh, &u, &TargetFunctional::drag("wall", &fs)).unwrap();
    let lift = evaluate(&mesh, &u, &TargetFunctional::lift("wall", &fs)).unwrap();
    assert!(drag.abs() < 1e-12);
    assert!(lift.abs() > 1.0);
}
