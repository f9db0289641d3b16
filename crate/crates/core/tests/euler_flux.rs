mod common;

use common::{random_normal, random_state, rng};
use multidwr_core::euler::{
    contract, farfield_ghost, flux_jacobians, flux_jacobians_with_mode, lax_friedrichs_flux,
    lax_friedrichs_flux_with_speed, max_wave_speed, normal_flux, physical_flux, wall_ghost,
};
use multidwr_core::{Block, ConservativeState, FreestreamSpec, JacobianMode};
use proptest::prelude::*;
use rand::Rng;

const G: f64 = 1.4;

fn inf_norm(v: &[f64; 4]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn frobenius(b: &Block) -> f64 {
    b.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// Central differences of the flux with λ held at its value for (ul, ur).
fn frozen_fd(ul: &ConservativeState, ur: &ConservativeState, n: [f64; 2]) -> (Block, Block) {
    let lambda = max_wave_speed(ul, n, G).unwrap().max(max_wave_speed(ur, n, G).unwrap());
    let mut jl = [[0.0; 4]; 4];
    let mut jr = [[0.0; 4]; 4];
    for k in 0..4 {
        for (side, out) in [(0, &mut jl), (1, &mut jr)] {
            let base = if side == 0 { ul } else { ur };
            let h = 1e-7 * (1.0 + base.0[k].abs());
            let mut p = *base;
            let mut m = *base;
            p.0[k] += h;
            m.0[k] -= h;
            let (fp, fm) = if side == 0 {
                (
                    lax_friedrichs_flux_with_speed(&p, ur, n, G, lambda).unwrap(),
                    lax_friedrichs_flux_with_speed(&m, ur, n, G, lambda).unwrap(),
                )
            } else {
                (
                    lax_friedrichs_flux_with_speed(ul, &p, n, G, lambda).unwrap(),
                    lax_friedrichs_flux_with_speed(ul, &m, n, G, lambda).unwrap(),
                )
            };
            for r in 0..4 {
                out[r][k] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
    }
    (jl, jr)
}

fn rel_err(a: &Block, b: &Block) -> f64 {
    let mut d = *a;
    for r in 0..4 {
        for c in 0..4 {
            d[r][c] -= b[r][c];
        }
    }
    frobenius(&d) / frobenius(b).max(1e-300)
}

#[test]
fn consistency_on_ten_thousand_states() {
    let mut r = rng(11);
    for _ in 0..10_000 {
        let u = random_state(&mut r);
        let n = random_normal(&mut r);
        let h = lax_friedrichs_flux(&u, &u, n, G).unwrap();
        let f = contract(&physical_flux(&u, G).unwrap(), n);
        let d = [h[0] - f[0], h[1] - f[1], h[2] - f[2], h[3] - f[3]];
        assert!(inf_norm(&d) <= 1e-14 * (1.0 + inf_norm(&f)), "{d:?}");
    }
}

#[test]
fn frozen_speed_jacobians_match_finite_differences() {
    let mut r = rng(12);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let ul = random_state(&mut r);
        let ur = random_state(&mut r);
        let n = random_normal(&mut r);
        let (jl, jr) = flux_jacobians(&ul, &ur, n, G).unwrap();
        let (fl, fr) = frozen_fd(&ul, &ur, n);
        worst = worst.max(rel_err(&jl, &fl)).max(rel_err(&jr, &fr));
    }
    assert!(worst < 1e-6, "worst relative error {worst:e}");
}

#[test]
fn exact_jacobians_match_finite_differences_of_the_full_flux() {
    let mut r = rng(13);
    for _ in 0..100 {
        let ul = random_state(&mut r);
        let ur = random_state(&mut r);
        let n = random_normal(&mut r);
        let (jl, _) = flux_jacobians_with_mode(&ul, &ur, n, G, JacobianMode::Exact).unwrap();
        let mut fd = [[0.0; 4]; 4];
        for k in 0..4 {
            let h = 1e-7 * (1.0 + ul.0[k].abs());
            let (mut p, mut m) = (ul, ul);
            p.0[k] += h;
            m.0[k] -= h;
            let fp = lax_friedrichs_flux(&p, &ur, n, G).unwrap();
            let fm = lax_friedrichs_flux(&m, &ur, n, G).unwrap();
            for row in 0..4 {
                fd[row][k] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        // Skip pairs whose wave speeds are close enough for FD to straddle the max switch.
        let (sl, sr) = (max_wave_speed(&ul, n, G).unwrap(), max_wave_speed(&ur, n, G).unwrap());
        if (sl - sr).abs() > 1e-4 {
            assert!(rel_err(&jl, &fd) < 1e-6);
        }
    }
}

#[test]
fn equal_states_at_rest_differ_by_lambda_identity() {
    let u = ConservativeState::new(1.0, 0.0, 0.0, 2.5);
    let n = [0.6, 0.8];
    let (jl, jr) = flux_jacobians(&u, &u, n, G).unwrap();
    let lambda = max_wave_speed(&u, n, G).unwrap();
    for r in 0..4 {
        for c in 0..4 {
            let want = if r == c { lambda } else { 0.0 };
            assert!((jl[r][c] - jr[r][c] - want).abs() < 1e-14);
        }
    }
}

#[test]
fn jacobian_sum_is_the_central_term_derivative() {
    let mut r = rng(14);
    for _ in 0..20 {
        let u = random_state(&mut r);
        let n = random_normal(&mut r);
        let (jl, jr) = flux_jacobians(&u, &u, n, G).unwrap();
        for k in 0..4 {
            let h = 1e-7 * (1.0 + u.0[k].abs());
            let (mut p, mut m) = (u, u);
            p.0[k] += h;
            m.0[k] -= h;
            let fp = normal_flux(&p, n, G).unwrap();
            let fm = normal_flux(&m, n, G).unwrap();
            for row in 0..4 {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                assert!((jl[row][k] + jr[row][k] - fd).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
    }
}

#[test]
fn physical_flux_is_rotation_covariant() {
    let mut r = rng(15);
    for _ in 0..200 {
        let u = random_state(&mut r);
        let n = random_normal(&mut r);
        let t: f64 = r.random_range(0.0..std::f64::consts::TAU);
        let (c, s) = (t.cos(), t.sin());
        let rot = |v: [f64; 2]| [c * v[0] - s * v[1], s * v[0] + c * v[1]];
        let m = rot([u.0[1], u.0[2]]);
        let ur = ConservativeState::new(u.0[0], m[0], m[1], u.0[3]);
        let f = normal_flux(&u, n, G).unwrap();
        let fr = normal_flux(&ur, rot(n), G).unwrap();
        let fm = rot([f[1], f[2]]);
        assert!((fr[0] - f[0]).abs() < 1e-12);
        assert!((fr[3] - f[3]).abs() < 1e-12);
        assert!((fr[1] - fm[0]).abs() < 1e-12 && (fr[2] - fm[1]).abs() < 1e-12);
    }
}

#[test]
fn farfield_ghost_of_freestream_is_freestream() {
    for (mach, alpha) in [(0.3, 0.0), (0.8, 0.05), (1.5, -0.2), (0.729, 2.31f64.to_radians())] {
        let fs = FreestreamSpec::standard(mach, alpha);
        let u = fs.state();
        for k in 0..16 {
            let t = k as f64 * std::f64::consts::TAU / 16.0;
            let g = farfield_ghost(&u, [t.cos(), t.sin()], &fs).unwrap();
            for c in 0..4 {
                assert!((g.0[c] - u.0[c]).abs() < 1e-13 * (1.0 + u.0[c].abs()), "{mach} {t}");
            }
        }
    }
}

fn state_strategy() -> impl Strategy<Value = ConservativeState> {
    (0.3..3.0f64, -2.0..2.0f64, -2.0..2.0f64, 0.3..3.0f64)
        .prop_map(|(rho, vx, vy, p)| ConservativeState::from_primitive(rho, vx, vy, p, G))
}

proptest! {
    #[test]
    fn flux_is_antisymmetric(ul in state_strategy(), ur in state_strategy(), t in 0.0..std::f64::consts::TAU) {
        let n = [t.cos(), t.sin()];
        let a = lax_friedrichs_flux(&ul, &ur, n, G).unwrap();
        let b = lax_friedrichs_flux(&ur, &ul, [-n[0], -n[1]], G).unwrap();
        for k in 0..4 {
            prop_assert!((a[k] + b[k]).abs() <= 1e-14 * (1.0 + a[k].abs()));
        }
    }

    #[test]
    fn wall_reflection_is_an_involution(u in state_strategy(), t in 0.0..std::f64::consts::TAU) {
        let n = [t.cos(), t.sin()];
        let back = wall_ghost(&wall_ghost(&u, n), n);
        for k in 0..4 {
            prop_assert!((back.0[k] - u.0[k]).abs() < 1e-14 * (1.0 + u.0[k].abs()));
        }
    }
}
