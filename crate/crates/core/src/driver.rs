//! Multi-mesh adaptation loop and the single-mesh combined-functional baseline.

use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adjoint::{
    dwr_indicator, error_estimate, localize, solve_dual_systems, solve_duals_with, weighted_residual, DualField,
    DualOptions, IndicatorField,
};
use crate::euler::FreestreamSpec;
use crate::error::{Error, Result};
use crate::functionals::{combine_gradients, composite_evaluate, evaluate, gradient, CompositeFunctional, TargetFunctional};
use crate::mesh::{
    ancestor_map, leaf_mesh, project_to_finer, restrict_to_coarser, union_all, CellField, CellKey, HierarchicalTree, LeafMesh,
};
use crate::solver::{solve_steady, GmgHierarchy, NewtonConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptationConfig {
    /// Fraction of indicator mass marked per round.
    pub theta: f64,
    pub max_iterations: usize,
    /// Stop once the composite changes by less than this between rounds.
    pub tol: f64,
    pub max_cells: usize,
    pub newton: NewtonConfig,
    pub dual: DualOptions,
    /// Baseline weights ω; one per target.
    pub weights: Option<Vec<f64>>,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        Self {
            theta: 0.2,
            max_iterations: 5,
            tol: 1e-6,
            max_cells: 250_000,
            newton: NewtonConfig::default(),
            dual: DualOptions::default(),
            weights: None,
        }
    }
}

impl AdaptationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidArgument(format!("theta = {} is outside (0, 1)", self.theta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("adaptation tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Smallest set of cells carrying a `theta` share of the total indicator mass.
///
/// Cells are taken in decreasing indicator order, lower index first on ties.
pub fn mark_elements(indicators: &[f64], theta: f64) -> Vec<usize> {
    let total: f64 = indicators.iter().sum();
    if !(total > 0.0) || !(theta > 0.0) {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    let goal = theta * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for i in order {
        if acc >= goal {
            break;
        }
        acc += indicators[i];
        marked.push(i);
    }
    marked.sort_unstable();
    marked
}

fn marked_keys(mesh: &LeafMesh, cells: &[usize]) -> Vec<CellKey> {
    cells.iter().map(|&c| mesh.cells[c].key).collect()
}

/// One row of the adaptation history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub cells_per_target: Vec<usize>,
    pub union_cells: usize,
    /// Fᵢ evaluated with the union-mesh solution.
    pub values: Vec<f64>,
    /// Fᵢ evaluated on each target's own mesh.
    pub target_values: Vec<f64>,
    pub composite: f64,
    /// Raw zᵢᵀRᵢ per target.
    pub estimates: Vec<f64>,
    /// Σ Cᵢ zᵢᵀRᵢ.
    pub estimate_total: f64,
    pub newton_iterations: usize,
    pub dual_cells: usize,
    /// Cells marked per target this round (sorted keys).
    #[serde(skip)]
    pub marked: Vec<Vec<CellKey>>,
    pub marked_counts: Vec<usize>,
    pub marked_digest: Vec<u64>,
    /// Seconds since the loop started.
    pub wallclock: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    MaxIterations,
    Budget { cells: usize },
    Diverged { iteration: usize, residual: f64 },
}

/// State after the last completed iteration.
#[derive(Debug, Clone)]
pub struct AdaptationState {
    pub k: usize,
    pub trees: Vec<HierarchicalTree>,
    pub solutions: Vec<CellField>,
    pub union_tree: HierarchicalTree,
    pub union_solution: CellField,
    /// Duals on the uniform refinement of the union mesh.
    pub duals: Vec<DualField>,
    pub indicators: Vec<IndicatorField>,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct AdaptationOutcome {
    pub state: AdaptationState,
    pub stop: StopReason,
}

fn digest(keys: &[CellKey]) -> u64 {
    let mut h = DefaultHasher::new();
    keys.hash(&mut h);
    h.finish()
}

/// Newton solve warm-started from `guess` when given.
fn solve_on(
    mesh: &LeafMesh,
    guess: Option<CellField>,
    fs: &FreestreamSpec,
    cfg: &NewtonConfig,
) -> Result<(CellField, usize)> {
    let u0 = guess.unwrap_or_else(|| CellField::uniform(mesh, fs.state().0));
    let (u, h) = solve_steady(mesh, &u0, fs, cfg)?;
    Ok((u, h.iterations()))
}

/// Classic single-target DWR step on one tree: primal, dual on the uniform refinement, mark.
fn dwr_marks(
    tree: &HierarchicalTree,
    mesh: &LeafMesh,
    u: &CellField,
    fs: &FreestreamSpec,
    rhs_of: impl Fn(&LeafMesh, &CellField) -> Result<Vec<crate::block::Vec4>>,
    cfg: &AdaptationConfig,
) -> Result<(IndicatorField, Vec<usize>)> {
    let fine_tree = tree.refine_uniform();
    let fine = leaf_mesh(&fine_tree)?;
    let iu = project_to_finer(u, mesh, &fine)?;
    let rhs = rhs_of(&fine, &iu)?;
    let hierarchy = GmgHierarchy::new(&fine, cfg.dual.gmg.coarse_cells);
    let (z, _) = solve_dual_systems(&fine, &iu, fs, std::slice::from_ref(&rhs), &cfg.dual, &hierarchy)?
        .pop()
        .expect("one system");
    let map = ancestor_map(&fine, mesh)?;
    let ind = localize(mesh, &map, &weighted_residual(&fine, &z, mesh, u, fs)?);
    let marked = mark_elements(&ind.values, cfg.theta);
    Ok((ind, marked))
}

fn negated(g: &CellField) -> Vec<crate::block::Vec4> {
    g.values.iter().map(|v| v.map(|x| -x)).collect()
}

/// Independent single-target DWR refinement of the root for every target.
pub fn initial_per_target_refine(
    root: &HierarchicalTree,
    targets: &[TargetFunctional],
    fs: &FreestreamSpec,
    cfg: &AdaptationConfig,
) -> Result<Vec<HierarchicalTree>> {
    let mesh = leaf_mesh(root)?;
    let (u, _) = solve_on(&mesh, None, fs, &cfg.newton)?;
    initial_refine_from(root, &mesh, &u, targets, fs, cfg)
}

fn initial_refine_from(
    root: &HierarchicalTree,
    mesh: &LeafMesh,
    u: &CellField,
    targets: &[TargetFunctional],
    fs: &FreestreamSpec,
    cfg: &AdaptationConfig,
) -> Result<Vec<HierarchicalTree>> {
    targets
        .iter()
        .map(|t| {
            let (_, marked) = dwr_marks(root, mesh, u, fs, |m, iu| gradient(m, iu, t).map(|g| negated(&g)), cfg)?;
            root.refine_keys(&marked_keys(mesh, &marked))
        })
        .collect()
}

fn check_dominance(union: &LeafMesh, meshes: &[LeafMesh]) -> Result<()> {
    if meshes.iter().all(|m| union.is_refinement_of(m)) {
        Ok(())
    } else {
        Err(Error::NotARefinement)
    }
}

/// Multi-mesh DWR adaptation for a composite of several targets.
pub fn adapt_loop(
    root: &HierarchicalTree,
    comp: &CompositeFunctional,
    fs: &FreestreamSpec,
    cfg: &AdaptationConfig,
) -> Result<AdaptationOutcome> {
    comp.validate()?;
    cfg.validate()?;
    let targets = comp.components().to_vec();
    if root.leaf_count() > cfg.max_cells {
        return Err(Error::BudgetExceeded {
            cells: root.leaf_count(),
            budget: cfg.max_cells,
        });
    }
    let start = Instant::now();
    let root_mesh = leaf_mesh(root)?;
    let (u_root, _) = solve_on(&root_mesh, None, fs, &cfg.newton)?;
    let mut trees = initial_refine_from(root, &root_mesh, &u_root, &targets, fs, cfg)?;
    let mut prev_union: (LeafMesh, CellField) = (root_mesh, u_root);
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut last: Option<AdaptationState> = None;
    let mut k = 0;
    let stop = loop {
        let union_tree = union_all(&trees)?;
        if union_tree.leaf_count() > cfg.max_cells {
            break StopReason::Budget {
                cells: union_tree.leaf_count(),
            };
        }
        let union = leaf_mesh(&union_tree)?;
        let meshes: Vec<LeafMesh> = trees.iter().map(leaf_mesh).collect::<Result<_>>()?;
        check_dominance(&union, &meshes)?;

        let guess = project_to_finer(&prev_union.1, &prev_union.0, &union)?;
        let (u_union, newton_iterations) = match solve_on(&union, Some(guess), fs, &cfg.newton) {
            Ok(r) => r,
            Err(Error::NewtonDiverged { iteration, residual }) => {
                break StopReason::Diverged { iteration, residual };
            }
            Err(e) => return Err(e),
        };
        let mut solutions = Vec::with_capacity(trees.len());
        let mut diverged = None;
        for m in &meshes {
            if m.id() == union.id() {
                solutions.push(u_union.clone());
                continue;
            }
            let guess = restrict_to_coarser(&u_union, &union, m)?;
            match solve_on(m, Some(guess), fs, &cfg.newton) {
                Ok((u, _)) => solutions.push(u),
                Err(Error::NewtonDiverged { iteration, residual }) => {
                    diverged = Some(StopReason::Diverged { iteration, residual });
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if let Some(d) = diverged {
            break d;
        }

        let values: Vec<f64> = targets
            .iter()
            .map(|t| evaluate(&union, &u_union, t))
            .collect::<Result<_>>()?;
        let target_values: Vec<f64> = targets
            .iter()
            .zip(meshes.iter().zip(&solutions))
            .map(|(t, (m, u))| evaluate(m, u, t))
            .collect::<Result<_>>()?;
        let composite = composite_evaluate(&values, comp)?;

        // Duals live on the uniform refinement of the union mesh.
        let dual_tree = union_tree.refine_uniform();
        let dual_mesh = leaf_mesh(&dual_tree)?;
        let iu = project_to_finer(&u_union, &union, &dual_mesh)?;
        let hierarchy = GmgHierarchy::new(&dual_mesh, cfg.dual.gmg.coarse_cells);
        let duals = solve_duals_with(&dual_mesh, &iu, fs, &targets, &cfg.dual, &hierarchy)?;
        let indicators: Vec<IndicatorField> = duals
            .iter()
            .zip(meshes.iter().zip(&solutions))
            .map(|(d, (m, u))| dwr_indicator(m, d, &dual_mesh, u, fs))
            .collect::<Result<_>>()?;
        let raw: Vec<f64> = indicators.iter().map(|i| i.signed_sum).collect();
        let estimate = error_estimate(&values, &raw, comp)?;
        let marked: Vec<Vec<CellKey>> = indicators
            .iter()
            .zip(&meshes)
            .map(|(ind, m)| marked_keys(m, &mark_elements(&ind.values, cfg.theta)))
            .collect();

        let converged = history
            .last()
            .is_some_and(|prev| (composite - prev.composite).abs() < cfg.tol);
        history.push(IterationRecord {
            k,
            cells_per_target: meshes.iter().map(LeafMesh::num_cells).collect(),
            union_cells: union.num_cells(),
            values,
            target_values,
            composite,
            estimates: raw,
            estimate_total: estimate.total,
            newton_iterations,
            dual_cells: dual_mesh.num_cells(),
            marked_counts: marked.iter().map(Vec::len).collect(),
            marked_digest: marked.iter().map(|m| digest(m)).collect(),
            marked: marked.clone(),
            wallclock: start.elapsed().as_secs_f64(),
        });
        last = Some(AdaptationState {
            k,
            trees: trees.clone(),
            solutions,
            union_tree,
            union_solution: u_union.clone(),
            duals,
            indicators,
            history: history.clone(),
        });
        if converged {
            break StopReason::Tolerance;
        }
        if k + 1 >= cfg.max_iterations {
            break StopReason::MaxIterations;
        }
        trees = trees
            .iter()
            .zip(&marked)
            .map(|(t, m)| t.refine_keys(m))
            .collect::<Result<_>>()?;
        prev_union = (union, u_union);
        k += 1;
    };
    let state = last.ok_or(match &stop {
        StopReason::Budget { cells } => Error::BudgetExceeded {
            cells: *cells,
            budget: cfg.max_cells,
        },
        StopReason::Diverged { iteration, residual } => Error::NewtonDiverged {
            iteration: *iteration,
            residual: *residual,
        },
        _ => Error::InvalidArgument("adaptation produced no iterations".into()),
    })?;
    Ok(AdaptationOutcome { state, stop })
}

/// Result of the single-mesh baseline.
#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub tree: HierarchicalTree,
    pub solution: CellField,
    pub history: Vec<IterationRecord>,
    pub stop: StopReason,
}

/// Single-mesh DWR with the combined functional `Σ ωᵢ Fᵢ`.
pub fn single_mesh_baseline(
    root: &HierarchicalTree,
    targets: &[TargetFunctional],
    weights: &[f64],
    fs: &FreestreamSpec,
    cfg: &AdaptationConfig,
) -> Result<BaselineOutcome> {
    cfg.validate()?;
    if targets.is_empty() || weights.len() != targets.len() {
        return Err(Error::InvalidArgument("baseline needs one weight per target".into()));
    }
    let comp = CompositeFunctional::linear(targets.iter().cloned().zip(weights.iter().copied()).collect());
    let start = Instant::now();
    let mut tree = root.clone();
    let mut prev: Option<(LeafMesh, CellField)> = None;
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut last = None;
    let mut k = 0;
    let stop = loop {
        if tree.leaf_count() > cfg.max_cells {
            break StopReason::Budget {
                cells: tree.leaf_count(),
            };
        }
        let mesh = leaf_mesh(&tree)?;
        let guess = prev.as_ref().map(|(m, u)| project_to_finer(u, m, &mesh)).transpose()?;
        let (u, newton_iterations) = match solve_on(&mesh, guess, fs, &cfg.newton) {
            Ok(r) => r,
            Err(Error::NewtonDiverged { iteration, residual }) => break StopReason::Diverged { iteration, residual },
            Err(e) => return Err(e),
        };
        let values: Vec<f64> = targets.iter().map(|t| evaluate(&mesh, &u, t)).collect::<Result<_>>()?;
        let composite = composite_evaluate(&values, &comp)?;
        let (ind, marked) = dwr_marks(
            &tree,
            &mesh,
            &u,
            fs,
            |m, iu| {
                let gs: Vec<CellField> = targets.iter().map(|t| gradient(m, iu, t)).collect::<Result<_>>()?;
                Ok(combine_gradients(&gs, weights).iter().map(|v| v.map(|x| -x)).collect())
            },
            cfg,
        )?;
        let keys = marked_keys(&mesh, &marked);
        let converged = history
            .last()
            .is_some_and(|p| (composite - p.composite).abs() < cfg.tol);
        history.push(IterationRecord {
            k,
            cells_per_target: vec![mesh.num_cells(); targets.len()],
            union_cells: mesh.num_cells(),
            target_values: values.clone(),
            values,
            composite,
            estimates: vec![ind.signed_sum],
            estimate_total: ind.signed_sum,
            newton_iterations,
            dual_cells: 4 * mesh.num_cells(),
            marked_counts: vec![keys.len()],
            marked_digest: vec![digest(&keys)],
            marked: vec![keys.clone()],
            wallclock: start.elapsed().as_secs_f64(),
        });
        last = Some((tree.clone(), u.clone()));
        if converged {
            break StopReason::Tolerance;
        }
        if k + 1 >= cfg.max_iterations {
            break StopReason::MaxIterations;
        }
        tree = tree.refine_keys(&keys)?;
        prev = Some((mesh, u));
        k += 1;
    };
    let (tree, solution) = last.ok_or(Error::BudgetExceeded {
        cells: root.leaf_count(),
        budget: cfg.max_cells,
    })?;
    Ok(BaselineOutcome {
        tree,
        solution,
        history,
        stop,
    })
}

/// CSV history: `k, cells_<i>..., union_cells, F_<i>..., composite, estimate_<i>..., wallclock`.
pub fn write_history_csv<W: Write>(history: &[IterationRecord], mut w: W) -> std::io::Result<()> {
    let n = history.first().map_or(0, |r| r.values.len());
    let m = history.first().map_or(0, |r| r.estimates.len());
    let mut header = vec!["k".to_string()];
    header.extend((0..n).map(|i| format!("cells_{i}")));
    header.push("union_cells".into());
    header.extend((0..n).map(|i| format!("F_{i}")));
    header.push("composite".into());
    header.extend((0..m).map(|i| format!("estimate_{i}")));
    header.push("wallclock".into());
    writeln!(w, "{}", header.join(","))?;
    for r in history {
        let mut row = vec![r.k.to_string()];
        row.extend(r.cells_per_target.iter().map(|c| c.to_string()));
        row.push(r.union_cells.to_string());
        row.extend(r.values.iter().map(|v| format!("{v:.17e}")));
        row.push(format!("{:.17e}", r.composite));
        row.extend(r.estimates.iter().map(|v| format!("{v:.17e}")));
        row.push(format!("{:.3}", r.wallclock));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marking_examples() {
        assert_eq!(mark_elements(&[1.0; 8], 0.25), vec![0, 1]);
        assert_eq!(mark_elements(&[0.1, 5.0, 0.2, 0.3], 0.2), vec![1]);
        let v = [0.3, 0.1, 0.7, 0.05, 0.2, 0.2];
        let scaled: Vec<f64> = v.iter().map(|x| x * 1000.0).collect();
        assert_eq!(mark_elements(&v, 0.4), mark_elements(&scaled, 0.4));
        assert!(mark_elements(&[0.0; 5], 0.5).is_empty());
    }

    #[test]
    fn config_validation() {
        let bad = AdaptationConfig {
            theta: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AdaptationConfig {
            tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(AdaptationConfig::default().validate().is_ok());
    }
}
