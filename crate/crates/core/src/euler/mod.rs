//! Compressible Euler model: conservative state, ideal-gas closure, physical and
//! Lax-Friedrichs fluxes with analytic Jacobians, and boundary ghost states.

mod farfield;

use serde::{Deserialize, Serialize};

use crate::block::{self, Block, Vec4, ZERO_BLOCK};
use crate::error::{Error, Result};

pub use farfield::{farfield_ghost, farfield_ghost_with_jacobian};

pub const DEFAULT_GAMMA: f64 = 1.4;

/// Density or pressure below this is treated as vacuum and rejected.
pub const VACUUM_GUARD: f64 = 1e-12;

/// Cell average of (ρ, ρu_x, ρu_y, E).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservativeState(pub Vec4);

impl ConservativeState {
    pub fn new(rho: f64, mx: f64, my: f64, energy: f64) -> Self {
        Self([rho, mx, my, energy])
    }

    pub fn from_primitive(rho: f64, vx: f64, vy: f64, p: f64, gamma: f64) -> Self {
        Self([
            rho,
            rho * vx,
            rho * vy,
            p / (gamma - 1.0) + 0.5 * rho * (vx * vx + vy * vy),
        ])
    }

    pub fn rho(&self) -> f64 {
        self.0[0]
    }

    pub fn mx(&self) -> f64 {
        self.0[1]
    }

    pub fn my(&self) -> f64 {
        self.0[2]
    }

    pub fn energy(&self) -> f64 {
        self.0[3]
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.0[1] / self.0[0], self.0[2] / self.0[0]]
    }

    pub fn as_array(&self) -> &Vec4 {
        &self.0
    }
}

impl From<Vec4> for ConservativeState {
    fn from(v: Vec4) -> Self {
        Self(v)
    }
}

/// Far-field conditions. The attack angle is stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreestreamSpec {
    pub mach: f64,
    pub attack_angle: f64,
    pub p_inf: f64,
    pub rho_inf: f64,
    pub gamma: f64,
}

impl FreestreamSpec {
    pub fn new(mach: f64, attack_angle: f64, p_inf: f64, rho_inf: f64, gamma: f64) -> Result<Self> {
        let fs = Self {
            mach,
            attack_angle,
            p_inf,
            rho_inf,
            gamma,
        };
        fs.validate()?;
        Ok(fs)
    }

    /// Unit far-field density and pressure, γ = 1.4.
    pub fn standard(mach: f64, attack_angle: f64) -> Self {
        Self {
            mach,
            attack_angle,
            p_inf: 1.0,
            rho_inf: 1.0,
            gamma: DEFAULT_GAMMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mach > 0.0
            && self.p_inf > 0.0
            && self.rho_inf > 0.0
            && self.gamma > 1.0
            && self.attack_angle.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid freestream: Mach {}, p {}, rho {}, gamma {}",
                self.mach, self.p_inf, self.rho_inf, self.gamma
            )))
        }
    }

    pub fn sound_speed(&self) -> f64 {
        (self.gamma * self.p_inf / self.rho_inf).sqrt()
    }

    pub fn velocity(&self) -> [f64; 2] {
        let speed = self.mach * self.sound_speed();
        [
            speed * self.attack_angle.cos(),
            speed * self.attack_angle.sin(),
        ]
    }

    pub fn state(&self) -> ConservativeState {
        let [vx, vy] = self.velocity();
        ConservativeState::from_primitive(self.rho_inf, vx, vy, self.p_inf, self.gamma)
    }
}

/// Rows are conserved components, columns the x/y flux directions.
pub type FluxTensor = [[f64; 2]; 4];

fn nonphysical(rho: f64, pressure: f64) -> Error {
    Error::NonphysicalState {
        rho,
        pressure,
        cell: None,
    }
}

pub fn pressure(u: &ConservativeState, gamma: f64) -> Result<f64> {
    let [rho, mx, my, e] = u.0;
    if !(rho >= VACUUM_GUARD) {
        return Err(nonphysical(rho, f64::NAN));
    }
    let p = (gamma - 1.0) * (e - 0.5 * (mx * mx + my * my) / rho);
    if !(p >= VACUUM_GUARD) {
        return Err(nonphysical(rho, p));
    }
    Ok(p)
}

/// Checks the state and returns its pressure; alias kept for readability at call sites.
pub fn validate(u: &ConservativeState, gamma: f64) -> Result<f64> {
    pressure(u, gamma)
}

pub fn physical_flux(u: &ConservativeState, gamma: f64) -> Result<FluxTensor> {
    let p = pressure(u, gamma)?;
    let [rho, mx, my, e] = u.0;
    let (vx, vy) = (mx / rho, my / rho);
    Ok([
        [mx, my],
        [mx * vx + p, mx * vy],
        [my * vx, my * vy + p],
        [(e + p) * vx, (e + p) * vy],
    ])
}

pub fn contract(f: &FluxTensor, n: [f64; 2]) -> Vec4 {
    let mut out = [0.0; 4];
    for (o, row) in out.iter_mut().zip(f) {
        *o = row[0] * n[0] + row[1] * n[1];
    }
    out
}

/// F(u)·n without building the full tensor.
pub fn normal_flux(u: &ConservativeState, n: [f64; 2], gamma: f64) -> Result<Vec4> {
    let p = pressure(u, gamma)?;
    Ok(normal_flux_with_pressure(u, n, p))
}

#[inline]
fn normal_flux_with_pressure(u: &ConservativeState, n: [f64; 2], p: f64) -> Vec4 {
    let [rho, mx, my, e] = u.0;
    let vn = (mx * n[0] + my * n[1]) / rho;
    [
        rho * vn,
        mx * vn + p * n[0],
        my * vn + p * n[1],
        (e + p) * vn,
    ]
}

#[inline]
fn wave_speed_with_pressure(u: &ConservativeState, n: [f64; 2], p: f64, gamma: f64) -> f64 {
    let [rho, mx, my, _] = u.0;
    ((mx * n[0] + my * n[1]) / rho).abs() + (gamma * p / rho).sqrt()
}

pub fn max_wave_speed(u: &ConservativeState, n: [f64; 2], gamma: f64) -> Result<f64> {
    let p = pressure(u, gamma)?;
    Ok(wave_speed_with_pressure(u, n, p, gamma))
}

pub fn lax_friedrichs_flux(
    ul: &ConservativeState,
    ur: &ConservativeState,
    n: [f64; 2],
    gamma: f64,
) -> Result<Vec4> {
    let pl = pressure(ul, gamma)?;
    let pr = pressure(ur, gamma)?;
    let lambda = wave_speed_with_pressure(ul, n, pl, gamma)
        .max(wave_speed_with_pressure(ur, n, pr, gamma));
    let fl = normal_flux_with_pressure(ul, n, pl);
    let fr = normal_flux_with_pressure(ur, n, pr);
    Ok(lf_combine(&fl, &fr, ul, ur, lambda))
}

/// Lax-Friedrichs flux with a caller-supplied dissipation speed.
pub fn lax_friedrichs_flux_with_speed(
    ul: &ConservativeState,
    ur: &ConservativeState,
    n: [f64; 2],
    gamma: f64,
    lambda: f64,
) -> Result<Vec4> {
    let fl = normal_flux(ul, n, gamma)?;
    let fr = normal_flux(ur, n, gamma)?;
    Ok(lf_combine(&fl, &fr, ul, ur, lambda))
}

#[inline]
fn lf_combine(fl: &Vec4, fr: &Vec4, ul: &ConservativeState, ur: &ConservativeState, lambda: f64) -> Vec4 {
    let mut h = [0.0; 4];
    for k in 0..4 {
        h[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * lambda * (ur.0[k] - ul.0[k]);
    }
    h
}

/// ∂(F(u)·n)/∂u.
pub fn normal_flux_jacobian(u: &ConservativeState, n: [f64; 2], gamma: f64) -> Result<Block> {
    let p = pressure(u, gamma)?;
    Ok(normal_flux_jacobian_with_pressure(u, n, p, gamma))
}

fn normal_flux_jacobian_with_pressure(u: &ConservativeState, n: [f64; 2], p: f64, gamma: f64) -> Block {
    let [rho, mx, my, e] = u.0;
    let (vx, vy) = (mx / rho, my / rho);
    let (nx, ny) = (n[0], n[1]);
    let vn = vx * nx + vy * ny;
    let gm1 = gamma - 1.0;
    let phi = 0.5 * gm1 * (vx * vx + vy * vy);
    let h = (e + p) / rho;
    [
        [0.0, nx, ny, 0.0],
        [
            phi * nx - vx * vn,
            vn + vx * nx - gm1 * vx * nx,
            vx * ny - gm1 * vy * nx,
            gm1 * nx,
        ],
        [
            phi * ny - vy * vn,
            vy * nx - gm1 * vx * ny,
            vn + vy * ny - gm1 * vy * ny,
            gm1 * ny,
        ],
        [
            vn * (phi - h),
            h * nx - gm1 * vx * vn,
            h * ny - gm1 * vy * vn,
            gamma * vn,
        ],
    ]
}

/// ∂p/∂u = (γ−1)(½|v|², −v_x, −v_y, 1).
pub fn pressure_gradient(u: &ConservativeState, gamma: f64) -> Vec4 {
    let [rho, mx, my, _] = u.0;
    let (vx, vy) = (mx / rho, my / rho);
    let gm1 = gamma - 1.0;
    [0.5 * gm1 * (vx * vx + vy * vy), -gm1 * vx, -gm1 * vy, gm1]
}

/// Gradient of |v·n| + c with respect to the conservative variables.
fn wave_speed_gradient(u: &ConservativeState, n: [f64; 2], p: f64, gamma: f64) -> Vec4 {
    let [rho, mx, my, _] = u.0;
    let vn = (mx * n[0] + my * n[1]) / rho;
    let c = (gamma * p / rho).sqrt();
    let sign = if vn >= 0.0 { 1.0 } else { -1.0 };
    let dp = pressure_gradient(u, gamma);
    let k = gamma / (2.0 * c * rho);
    [
        sign * (-vn / rho) + k * (dp[0] - p / rho),
        sign * n[0] / rho + k * dp[1],
        sign * n[1] / rho + k * dp[2],
        k * dp[3],
    ]
}

/// How the Lax-Friedrichs dissipation speed is linearized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    /// λ held constant: only the central and jump terms are differentiated.
    #[default]
    FrozenSpeed,
    /// Includes ∂λ/∂u of whichever side attains the maximum.
    Exact,
}

/// `(∂H/∂u_L, ∂H/∂u_R)` of the Lax-Friedrichs flux with frozen λ.
pub fn flux_jacobians(
    ul: &ConservativeState,
    ur: &ConservativeState,
    n: [f64; 2],
    gamma: f64,
) -> Result<(Block, Block)> {
    flux_jacobians_with_mode(ul, ur, n, gamma, JacobianMode::FrozenSpeed)
}

pub fn flux_jacobians_with_mode(
    ul: &ConservativeState,
    ur: &ConservativeState,
    n: [f64; 2],
    gamma: f64,
    mode: JacobianMode,
) -> Result<(Block, Block)> {
    let pl = pressure(ul, gamma)?;
    let pr = pressure(ur, gamma)?;
    let sl = wave_speed_with_pressure(ul, n, pl, gamma);
    let sr = wave_speed_with_pressure(ur, n, pr, gamma);
    let lambda = sl.max(sr);
    let mut jl = block::scale(&normal_flux_jacobian_with_pressure(ul, n, pl, gamma), 0.5);
    let mut jr = block::scale(&normal_flux_jacobian_with_pressure(ur, n, pr, gamma), 0.5);
    for k in 0..4 {
        jl[k][k] += 0.5 * lambda;
        jr[k][k] -= 0.5 * lambda;
    }
    if mode == JacobianMode::Exact {
        let mut jump = [0.0; 4];
        for k in 0..4 {
            jump[k] = -0.5 * (ur.0[k] - ul.0[k]);
        }
        if sl >= sr {
            let ds = wave_speed_gradient(ul, n, pl, gamma);
            block::add_assign(&mut jl, &block::outer(&jump, &ds));
        } else {
            let ds = wave_speed_gradient(ur, n, pr, gamma);
            block::add_assign(&mut jr, &block::outer(&jump, &ds));
        }
    }
    Ok((jl, jr))
}

/// Mirror state for a slip wall with outward normal `n`.
pub fn wall_ghost(u: &ConservativeState, n: [f64; 2]) -> ConservativeState {
    let [rho, mx, my, e] = u.0;
    let mn = mx * n[0] + my * n[1];
    ConservativeState([rho, mx - 2.0 * mn * n[0], my - 2.0 * mn * n[1], e])
}

/// ∂(wall_ghost)/∂u, independent of the state.
pub fn wall_ghost_jacobian(n: [f64; 2]) -> Block {
    let (nx, ny) = (n[0], n[1]);
    let mut g = ZERO_BLOCK;
    g[0][0] = 1.0;
    g[1][1] = 1.0 - 2.0 * nx * nx;
    g[1][2] = -2.0 * nx * ny;
    g[2][1] = -2.0 * nx * ny;
    g[2][2] = 1.0 - 2.0 * ny * ny;
    g[3][3] = 1.0;
    g
}
