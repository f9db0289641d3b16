//! Characteristic far-field closure.
//!
//! Subsonic inflow takes entropy, tangential velocity and the incoming Riemann
//! invariant from the freestream and the outgoing invariant from the interior.
//! Subsonic outflow imposes the freestream pressure and keeps the interior
//! entropy, tangential velocity and outgoing invariant. Supersonic faces copy
//! the upwind side. Within a narrow band around tangential flow the two
//! subsonic states are blended with a smoothstep. The closure is written once over [`Real`] so that the
//! Jacobian comes from forward-mode differentiation of the same code.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{ConservativeState, FreestreamSpec, VACUUM_GUARD};
use crate::block::{Block, ZERO_BLOCK};
use crate::error::{Error, Result};

/// Half-width, in units of the interior sound speed, of the inflow/outflow blend.
const SWITCH_BAND: f64 = 0.05;

trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(self) -> f64;
    fn sqrt(self) -> Self;
    fn powf(self, e: f64) -> Self;
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
}

/// Value plus gradient with respect to the four conservative variables.
#[derive(Clone, Copy, Debug)]
struct Dual {
    v: f64,
    d: [f64; 4],
}

impl Dual {
    fn seed(v: f64, k: usize) -> Self {
        let mut d = [0.0; 4];
        d[k] = 1.0;
        Self { v, d }
    }

    fn chain(self, v: f64, dv: f64) -> Self {
        Self {
            v,
            d: self.d.map(|x| x * dv),
        }
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut d = self.d;
        for k in 0..4 {
            d[k] += o.d[k];
        }
        Self { v: self.v + o.v, d }
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut d = self.d;
        for k in 0..4 {
            d[k] -= o.d[k];
        }
        Self { v: self.v - o.v, d }
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; 4];
        for k in 0..4 {
            d[k] = self.d[k] * o.v + self.v * o.d[k];
        }
        Self { v: self.v * o.v, d }
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        let mut d = [0.0; 4];
        for k in 0..4 {
            d[k] = (self.d[k] - q * o.d[k]) * inv;
        }
        Self { v: q, d }
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            v: -self.v,
            d: self.d.map(|x| -x),
        }
    }
}

impl Real for Dual {
    fn cst(v: f64) -> Self {
        Self { v, d: [0.0; 4] }
    }
    fn value(self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn powf(self, e: f64) -> Self {
        let p = self.v.powf(e);
        self.chain(p, e * self.v.powf(e - 1.0))
    }
}

fn closure<T: Real>(u: [T; 4], n: [f64; 2], fs: &FreestreamSpec) -> Result<[T; 4]> {
    let g = fs.gamma;
    let gm1 = g - 1.0;
    let c = T::cst;
    let [rho, mx, my, e] = u;
    if !(rho.value() >= VACUUM_GUARD) {
        return Err(Error::NonphysicalState {
            rho: rho.value(),
            pressure: f64::NAN,
            cell: None,
        });
    }
    let vx = mx / rho;
    let vy = my / rho;
    let p = c(gm1) * (e - c(0.5) * rho * (vx * vx + vy * vy));
    if !(p.value() >= VACUUM_GUARD) {
        return Err(Error::NonphysicalState {
            rho: rho.value(),
            pressure: p.value(),
            cell: None,
        });
    }
    let snd = (c(g) * p / rho).sqrt();
    let vn = vx * c(n[0]) + vy * c(n[1]);

    let [vx_inf, vy_inf] = fs.velocity();
    let c_inf = fs.sound_speed();
    let vn_inf = vx_inf * n[0] + vy_inf * n[1];

    let free = || {
        let s = fs.state().0;
        [c(s[0]), c(s[1]), c(s[2]), c(s[3])]
    };

    if vn.value() <= -snd.value() {
        return Ok(free());
    }
    if vn.value() >= snd.value() {
        return Ok(u);
    }

    let r_plus = vn + c(2.0 / gm1) * snd;
    let inflow = || -> Result<[T; 4]> {
        let r_minus = vn_inf - 2.0 * c_inf / gm1;
        let vn_b = c(0.5) * (r_plus + c(r_minus));
        let c_b = c(0.25 * gm1) * (r_plus - c(r_minus));
        if !(c_b.value() > 0.0) {
            return Err(Error::NonphysicalState {
                rho: rho.value(),
                pressure: p.value(),
                cell: None,
            });
        }
        let entropy = fs.p_inf / fs.rho_inf.powf(g);
        let rho_b = (c_b * c_b / c(g * entropy)).powf(1.0 / gm1);
        let p_b = rho_b * c_b * c_b / c(g);
        let vtx = vx_inf - vn_inf * n[0];
        let vty = vy_inf - vn_inf * n[1];
        conservative(rho_b, c(vtx) + vn_b * c(n[0]), c(vty) + vn_b * c(n[1]), p_b, gm1)
    };
    let outflow = || -> Result<[T; 4]> {
        let p_b = c(fs.p_inf);
        let entropy = p / rho.powf(g);
        let rho_b = (p_b / entropy).powf(1.0 / g);
        let c_b = (c(g) * p_b / rho_b).sqrt();
        let vn_b = r_plus - c(2.0 / gm1) * c_b;
        let vtx = vx - vn * c(n[0]);
        let vty = vy - vn * c(n[1]);
        conservative(rho_b, vtx + vn_b * c(n[0]), vty + vn_b * c(n[1]), p_b, gm1)
    };

    // Near-tangent faces blend the two closures so the residual stays C¹ in vn.
    let m = vn.value() / snd.value();
    if m <= -SWITCH_BAND {
        return inflow();
    }
    if m >= SWITCH_BAND {
        return outflow();
    }
    let s = c(0.5) + c(0.5 / SWITCH_BAND) * vn / snd;
    let w = s * s * (c(3.0) - c(2.0) * s);
    let (a, b) = (inflow()?, outflow()?);
    Ok([0, 1, 2, 3].map(|k| a[k] + w * (b[k] - a[k])))
}

fn conservative<T: Real>(rho_b: T, vxb: T, vyb: T, p_b: T, gm1: f64) -> Result<[T; 4]> {
    if !(rho_b.value() >= VACUUM_GUARD && p_b.value() >= VACUUM_GUARD) {
        return Err(Error::NonphysicalState {
            rho: rho_b.value(),
            pressure: p_b.value(),
            cell: None,
        });
    }
    let c = T::cst;
    Ok([
        rho_b,
        rho_b * vxb,
        rho_b * vyb,
        p_b / c(gm1) + c(0.5) * rho_b * (vxb * vxb + vyb * vyb),
    ])
}

pub fn farfield_ghost(
    u: &ConservativeState,
    n: [f64; 2],
    fs: &FreestreamSpec,
) -> Result<ConservativeState> {
    closure(u.0, n, fs).map(ConservativeState)
}

/// Ghost state and its Jacobian with respect to the interior state.
pub fn farfield_ghost_with_jacobian(
    u: &ConservativeState,
    n: [f64; 2],
    fs: &FreestreamSpec,
) -> Result<(ConservativeState, Block)> {
    let seeded = [0, 1, 2, 3].map(|k| Dual::seed(u.0[k], k));
    let out = closure(seeded, n, fs)?;
    let mut jac = ZERO_BLOCK;
    for (row, d) in jac.iter_mut().zip(&out) {
        *row = d.d;
    }
    Ok((ConservativeState(out.map(|d| d.v)), jac))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs() -> FreestreamSpec {
        FreestreamSpec::standard(0.5, 0.1)
    }

    #[test]
    fn freestream_is_a_fixed_point() {
        let fs = fs();
        let u = fs.state();
        for k in 0..24 {
            let t = k as f64 * std::f64::consts::TAU / 24.0;
            let g = farfield_ghost(&u, [t.cos(), t.sin()], &fs).unwrap();
            for i in 0..4 {
                assert!((g.0[i] - u.0[i]).abs() < 1e-14 * (1.0 + u.0[i].abs()));
            }
        }
    }

    #[test]
    fn supersonic_faces_copy_the_upwind_side() {
        let fs = fs();
        let u = ConservativeState::from_primitive(1.0, 3.0, 0.0, 1.0, 1.4);
        assert_eq!(farfield_ghost(&u, [1.0, 0.0], &fs).unwrap(), u);
        let g = farfield_ghost(&u, [-1.0, 0.0], &fs).unwrap();
        assert_eq!(g, fs.state());
    }

    #[test]
    fn subsonic_outflow_imposes_farfield_pressure() {
        let fs = fs();
        let u = ConservativeState::from_primitive(1.1, 0.4, 0.1, 1.2, 1.4);
        let g = farfield_ghost(&u, [1.0, 0.0], &fs).unwrap();
        let p = super::super::pressure(&g, 1.4).unwrap();
        assert!((p - fs.p_inf).abs() < 1e-13);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let fs = fs();
        let states = [
            ConservativeState::from_primitive(1.1, 0.4, 0.1, 1.2, 1.4),
            ConservativeState::from_primitive(0.9, -0.3, 0.2, 0.8, 1.4),
            ConservativeState::from_primitive(1.0, 0.2, -0.5, 1.0, 1.4),
        ];
        let normals = [[1.0, 0.0], [0.6, -0.8], [-0.28, 0.96]];
        for u in &states {
            for &n in &normals {
                let (_, jac) = farfield_ghost_with_jacobian(u, n, &fs).unwrap();
                for k in 0..4 {
                    let h = 1e-6 * (1.0 + u.0[k].abs());
                    let mut up = *u;
                    let mut dn = *u;
                    up.0[k] += h;
                    dn.0[k] -= h;
                    let gp = farfield_ghost(&up, n, &fs).unwrap();
                    let gm = farfield_ghost(&dn, n, &fs).unwrap();
                    for i in 0..4 {
                        let fd = (gp.0[i] - gm.0[i]) / (2.0 * h);
                        assert!(
                            (fd - jac[i][k]).abs() < 1e-7 * (1.0 + fd.abs()),
                            "d{i}/d{k}: fd {fd} vs {}",
                            jac[i][k]
                        );
                    }
                }
            }
        }
    }
}
