use std::io::Write;

use serde::{Deserialize, Serialize};

use super::assembly::{add_regularization, assemble_flux_jacobian, assemble_residual, l1_norm};
use super::gmg::{GmgHierarchy, GmgOptions, GmgSolver};
use crate::euler::{FreestreamSpec, JacobianMode};
use crate::error::{Error, Result};
use crate::mesh::{CellField, LeafMesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    /// Stop when ‖R‖₁ falls below this.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Coefficient α of the α‖R‖₁·I regularization.
    pub regularization: f64,
    /// Relative tolerance of each linear solve.
    pub linear_tol: f64,
    pub max_halvings: usize,
    pub jacobian: JacobianMode,
    pub gmg: GmgOptions,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton: 200,
            regularization: 0.005,
            linear_tol: 1e-3,
            max_halvings: 8,
            jacobian: JacobianMode::FrozenSpeed,
            gmg: GmgOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonStep {
    pub iteration: usize,
    pub residual_l1: f64,
    /// Step length accepted to reach this iterate (1 for the initial state).
    pub damping: f64,
    pub linear_cycles: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonHistory {
    pub steps: Vec<NewtonStep>,
}

impl NewtonHistory {
    pub fn iterations(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn final_residual(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.residual_l1)
    }

    /// CSV with columns `iteration,residual_l1,damping`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iteration,residual_l1,damping")?;
        for s in &self.steps {
            writeln!(w, "{},{:.17e},{}", s.iteration, s.residual_l1, s.damping)?;
        }
        Ok(())
    }
}

/// Regularized Newton iteration with multigrid linear solves and backtracking.
pub fn solve_steady(
    mesh: &LeafMesh,
    u0: &CellField,
    fs: &FreestreamSpec,
    cfg: &NewtonConfig,
) -> Result<(CellField, NewtonHistory)> {
    let hierarchy = GmgHierarchy::new(mesh, cfg.gmg.coarse_cells);
    solve_steady_with(mesh, u0, fs, cfg, &hierarchy)
}

pub fn solve_steady_with(
    mesh: &LeafMesh,
    u0: &CellField,
    fs: &FreestreamSpec,
    cfg: &NewtonConfig,
    hierarchy: &GmgHierarchy,
) -> Result<(CellField, NewtonHistory)> {
    u0.check_mesh(mesh)?;
    let mut u = u0.clone();
    let mut r = assemble_residual(mesh, &u, fs)?;
    let mut norm = l1_norm(&r.values);
    let mut history = NewtonHistory {
        steps: vec![NewtonStep {
            iteration: 0,
            residual_l1: norm,
            damping: 1.0,
            linear_cycles: 0,
        }],
    };
    let mut iteration = 0;
    while !(norm < cfg.newton_tol) {
        if iteration >= cfg.max_newton {
            return Err(Error::NewtonStalled {
                iterations: iteration,
                residual: norm,
            });
        }
        iteration += 1;
        let mut matrix = assemble_flux_jacobian(mesh, &u, fs, cfg.jacobian)?;
        add_regularization(&mut matrix, cfg.regularization * norm);
        let rhs: Vec<_> = r.values.iter().map(|v| v.map(|x| -x)).collect();
        let solver = GmgSolver::new(&matrix, hierarchy, false, cfg.gmg)?;
        let (mut sol, report) = solver.solve(std::slice::from_ref(&rhs), cfg.linear_tol);
        if report.relative_residuals.iter().any(|r| !r.is_finite()) {
            return Err(Error::NoConvergence(report));
        }
        let du = sol.pop().expect("one right-hand side");

        let mut omega = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        let mut last_err = None;
        for _ in 0..=cfg.max_halvings {
            let mut trial = u.clone();
            for (t, d) in trial.values.iter_mut().zip(&du) {
                for k in 0..4 {
                    t[k] += omega * d[k];
                }
            }
            match assemble_residual(mesh, &trial, fs) {
                Ok(rt) => {
                    let nt = l1_norm(&rt.values);
                    if nt <= (1.0 - 1e-4 * omega) * norm {
                        accepted = Some((trial, rt, nt, omega));
                        break;
                    }
                    if fallback.is_none() {
                        fallback = Some((trial, rt, nt, omega));
                    }
                }
                Err(e @ Error::NonphysicalState { .. }) => last_err = Some(e),
                Err(e) => return Err(e),
            }
            omega *= 0.5;
        }
        let Some((trial, rt, nt, omega)) = accepted.or(fallback) else {
            return Err(last_err.expect("every trial failed"));
        };
        u = trial;
        r = rt;
        norm = nt;
        history.steps.push(NewtonStep {
            iteration,
            residual_l1: norm,
            damping: omega,
            linear_cycles: report.cycles,
        });
        if diverging(&history) {
            return Err(Error::NewtonDiverged {
                iteration,
                residual: norm,
            });
        }
    }
    Ok((u, history))
}

/// Five consecutive increases totalling more than a factor of ten.
fn diverging(history: &NewtonHistory) -> bool {
    let s = &history.steps;
    if s.len() < 6 {
        return false;
    }
    let tail = &s[s.len() - 6..];
    tail.windows(2).all(|w| w[1].residual_l1 > w[0].residual_l1)
        && tail[5].residual_l1 > 10.0 * tail[0].residual_l1
}
