//! Geometric multigrid for block-sparse cell systems.
//!
//! Coarse levels follow tree generations: a level keeps every leaf ancestor up
//! to some depth, so coarse cells are exact unions of fine cells. Below the
//! root mesh, neighboring cells are agglomerated pairwise. Coarse operators are
//! Galerkin products with piecewise-constant prolongation and summing
//! restriction.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::block::{self, Block, Vec4, ZERO4};
use crate::error::{Error, Result};
use crate::mesh::{CellKey, LeafMesh};

use super::sparse::BlockCsr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmgOptions {
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    pub max_cycles: usize,
    /// Levels with at most this many cells are solved directly.
    pub coarse_cells: usize,
}

impl Default for GmgOptions {
    fn default() -> Self {
        Self {
            pre_sweeps: 3,
            post_sweeps: 3,
            max_cycles: 200,
            coarse_cells: 96,
        }
    }
}

/// Cell aggregation maps from the leaf mesh down to the coarsest level.
#[derive(Debug, Clone)]
pub struct GmgHierarchy {
    mesh_id: u64,
    sizes: Vec<usize>,
    /// `maps[l][i]`: level-`l+1` cell containing level-`l` cell `i`.
    maps: Vec<Vec<usize>>,
}

impl GmgHierarchy {
    pub fn new(mesh: &LeafMesh, coarse_cells: usize) -> Self {
        let n = mesh.num_cells();
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for f in &mesh.faces {
            if let crate::mesh::FaceNeighbor::Cell(r) = f.right {
                adjacency[f.left].push((r, f.length));
                adjacency[r].push((f.left, f.length));
            }
        }
        let mut keys: Option<Vec<CellKey>> = Some(mesh.cells.iter().map(|c| c.key).collect());
        let mut sizes = vec![n];
        let mut maps = Vec::new();
        let mut current = n;
        while current > coarse_cells.max(1) {
            let mut map = None;
            if let Some(k) = &keys {
                match coarsen_by_depth(k) {
                    Some((m, coarse_keys)) => {
                        keys = Some(coarse_keys);
                        map = Some(m);
                    }
                    None => keys = None,
                }
            }
            let map = match map {
                Some(m) => m,
                None => {
                    let first = pairwise_aggregate(&adjacency);
                    let first_adj = aggregate_graph(&adjacency, &first);
                    let second = pairwise_aggregate(&first_adj);
                    first.iter().map(|&c| second[c]).collect()
                }
            };
            let coarse = map.iter().copied().max().map_or(0, |m| m + 1);
            if coarse >= current {
                break;
            }
            adjacency = aggregate_graph(&adjacency, &map);
            maps.push(map);
            sizes.push(coarse);
            current = coarse;
        }
        Self {
            mesh_id: mesh.id(),
            sizes,
            maps,
        }
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn num_levels(&self) -> usize {
        self.sizes.len()
    }

    pub fn level_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn map(&self, level: usize) -> &[usize] {
        &self.maps[level]
    }
}

/// Truncates every key to the deepest depth that at least shrinks the level to
/// 60 % of its size (or to the roots).
fn coarsen_by_depth(keys: &[CellKey]) -> Option<(Vec<usize>, Vec<CellKey>)> {
    let max_depth = keys.iter().map(|k| k.depth()).max()?;
    if max_depth == 0 {
        return None;
    }
    let n = keys.len();
    let mut best = None;
    for d in (0..max_depth).rev() {
        let (map, coarse) = truncate(keys, d);
        let good = coarse.len() as f64 <= 0.6 * n as f64;
        if good || d == 0 {
            if coarse.len() < n {
                best = Some((map, coarse));
            }
            break;
        }
    }
    best
}

fn truncate(keys: &[CellKey], depth: u8) -> (Vec<usize>, Vec<CellKey>) {
    let mut index: HashMap<CellKey, usize> = HashMap::new();
    let mut coarse = Vec::new();
    let map = keys
        .iter()
        .map(|k| {
            let a = k.ancestor(depth);
            *index.entry(a).or_insert_with(|| {
                coarse.push(a);
                coarse.len() - 1
            })
        })
        .collect();
    (map, coarse)
}

/// Greedy heavy-edge matching; unmatched cells join their strongest neighbor's pair.
fn pairwise_aggregate(adjacency: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut agg = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        if agg[i] != usize::MAX {
            continue;
        }
        let partner = adjacency[i]
            .iter()
            .filter(|(j, _)| agg[*j] == usize::MAX && *j != i)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(j, _)| *j);
        agg[i] = next;
        if let Some(j) = partner {
            agg[j] = next;
        }
        next += 1;
    }
    agg
}

fn aggregate_graph(adjacency: &[Vec<(usize, f64)>], map: &[usize]) -> Vec<Vec<(usize, f64)>> {
    let nc = map.iter().copied().max().map_or(0, |m| m + 1);
    let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nc];
    for (i, nbrs) in adjacency.iter().enumerate() {
        let ci = map[i];
        for &(j, w) in nbrs {
            let cj = map[j];
            if cj == ci {
                continue;
            }
            match out[ci].iter_mut().find(|(k, _)| *k == cj) {
                Some(e) => e.1 += w,
                None => out[ci].push((cj, w)),
            }
        }
    }
    for row in &mut out {
        row.sort_by_key(|e| e.0);
    }
    out
}

fn galerkin(fine: &BlockCsr, map: &[usize], nc: usize) -> BlockCsr {
    let mut pattern: Vec<Vec<usize>> = (0..nc).map(|i| vec![i]).collect();
    for i in 0..fine.n() {
        let (cols, _) = fine.row(i);
        let ci = map[i];
        for &j in cols {
            pattern[ci].push(map[j]);
        }
    }
    for row in &mut pattern {
        row.sort_unstable();
        row.dedup();
    }
    let mut coarse = BlockCsr::from_pattern(nc, pattern);
    for i in 0..fine.n() {
        let (cols, blocks) = fine.row(i);
        let ci = map[i];
        for (&j, b) in cols.iter().zip(blocks) {
            block::add_assign(coarse.block_mut(ci, map[j]), b);
        }
    }
    coarse
}

struct Level {
    matrix: BlockCsr,
    diag_inv: Vec<Block>,
}

impl Level {
    fn new(matrix: BlockCsr) -> Result<Self> {
        let diag_inv = (0..matrix.n())
            .map(|i| {
                block::inverse(matrix.diag_block(i)).ok_or_else(|| {
                    Error::InvalidArgument(format!("singular diagonal block in row {i}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { matrix, diag_inv })
    }

    fn sweep(&self, b: &[Vec<Vec4>], x: &mut [Vec<Vec4>], forward: bool) {
        let n = self.matrix.n();
        let mut visit = |i: usize| {
            let (cols, blocks) = self.matrix.row(i);
            for (br, xr) in b.iter().zip(x.iter_mut()) {
                let mut s = br[i];
                for (&j, a) in cols.iter().zip(blocks) {
                    if j != i {
                        block::matvec_sub(&mut s, a, &xr[j]);
                    }
                }
                xr[i] = block::matvec(&self.diag_inv[i], &s);
            }
        };
        if forward {
            (0..n).for_each(&mut visit);
        } else {
            (0..n).rev().for_each(&mut visit);
        }
    }
}

/// Outcome of a multigrid solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub cycles: usize,
    /// Final ‖b − Ax‖₂/‖b‖₂ for each right-hand side (0 for a zero right-hand side).
    pub relative_residuals: Vec<f64>,
    pub converged: bool,
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} cycles, relative residuals [", self.cycles)?;
        for (i, r) in self.relative_residuals.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r:.3e}")?;
        }
        write!(f, "]")
    }
}

/// Multigrid operator set for one matrix.
pub struct GmgSolver<'h> {
    hierarchy: &'h GmgHierarchy,
    levels: Vec<Level>,
    coarse_lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    options: GmgOptions,
}

impl<'h> GmgSolver<'h> {
    /// Builds Galerkin coarse operators for `matrix` (or its transpose).
    pub fn new(matrix: &BlockCsr, hierarchy: &'h GmgHierarchy, transpose: bool, options: GmgOptions) -> Result<Self> {
        if matrix.n() != hierarchy.sizes[0] {
            return Err(Error::InvalidArgument(format!(
                "matrix has {} block rows, hierarchy expects {}",
                matrix.n(),
                hierarchy.sizes[0]
            )));
        }
        let finest = if transpose { matrix.transpose() } else { matrix.clone() };
        let mut mats = vec![finest];
        for (l, map) in hierarchy.maps.iter().enumerate() {
            let c = galerkin(&mats[l], map, hierarchy.sizes[l + 1]);
            mats.push(c);
        }
        let coarsest = mats.last().expect("at least one level");
        let dense = coarsest.to_dense();
        let m = dense.len();
        let coarse_lu = DMatrix::from_fn(m, m, |i, j| dense[i][j]).lu();
        if !coarse_lu.is_invertible() {
            return Err(Error::InvalidArgument("singular coarsest-level operator".into()));
        }
        let levels = mats.into_iter().map(Level::new).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            hierarchy,
            levels,
            coarse_lu,
            options,
        })
    }

    fn coarse_solve(&self, b: &[Vec<Vec4>], x: &mut [Vec<Vec4>]) {
        for (br, xr) in b.iter().zip(x.iter_mut()) {
            let rhs = DVector::from_iterator(4 * br.len(), br.iter().flatten().copied());
            let sol = self.coarse_lu.solve(&rhs).expect("invertible coarse operator");
            for (i, xi) in xr.iter_mut().enumerate() {
                for k in 0..4 {
                    xi[k] = sol[4 * i + k];
                }
            }
        }
    }

    fn vcycle(&self, level: usize, b: &[Vec<Vec4>], x: &mut [Vec<Vec4>]) {
        if level + 1 == self.levels.len() {
            self.coarse_solve(b, x);
            return;
        }
        let lv = &self.levels[level];
        for _ in 0..self.options.pre_sweeps {
            lv.sweep(b, x, true);
        }
        let map = &self.hierarchy.maps[level];
        let nc = self.hierarchy.sizes[level + 1];
        let mut rc = vec![vec![ZERO4; nc]; b.len()];
        let mut ax = vec![ZERO4; lv.matrix.n()];
        for ((br, xr), rcr) in b.iter().zip(x.iter()).zip(rc.iter_mut()) {
            lv.matrix.matvec_into(xr, &mut ax);
            for i in 0..br.len() {
                for k in 0..4 {
                    rcr[map[i]][k] += br[i][k] - ax[i][k];
                }
            }
        }
        let mut xc = vec![vec![ZERO4; nc]; b.len()];
        self.vcycle(level + 1, &rc, &mut xc);
        for (xr, xcr) in x.iter_mut().zip(&xc) {
            for (i, xi) in xr.iter_mut().enumerate() {
                block::axpy(xi, 1.0, &xcr[map[i]]);
            }
        }
        for _ in 0..self.options.post_sweeps {
            lv.sweep(b, x, false);
        }
    }

    fn relative_residuals(&self, b: &[Vec<Vec4>], x: &[Vec<Vec4>], norms: &[f64]) -> Vec<f64> {
        let a = &self.levels[0].matrix;
        b.iter()
            .zip(x)
            .zip(norms)
            .map(|((br, xr), &nb)| {
                if nb == 0.0 {
                    return 0.0;
                }
                let ax = a.matvec(xr);
                let r2: f64 = br
                    .iter()
                    .zip(&ax)
                    .map(|(p, q)| (0..4).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>())
                    .sum();
                r2.sqrt() / nb
            })
            .collect()
    }

    /// V-cycles from a zero initial guess until every right-hand side meets `tol`.
    pub fn solve(&self, rhs: &[Vec<Vec4>], tol: f64) -> (Vec<Vec<Vec4>>, ConvergenceReport) {
        let n = self.levels[0].matrix.n();
        let norms: Vec<f64> = rhs
            .iter()
            .map(|b| b.iter().flatten().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let mut x = vec![vec![ZERO4; n]; rhs.len()];
        let mut res: Vec<f64> = norms.iter().map(|&nb| if nb == 0.0 { 0.0 } else { 1.0 }).collect();
        let mut cycles = 0;
        while res.iter().any(|&r| !(r < tol)) && cycles < self.options.max_cycles {
            self.vcycle(0, rhs, &mut x);
            cycles += 1;
            res = self.relative_residuals(rhs, &x, &norms);
            if res.iter().any(|r| !r.is_finite()) {
                break;
            }
        }
        let converged = res.iter().all(|&r| r < tol);
        (
            x,
            ConvergenceReport {
                cycles,
                relative_residuals: res,
                converged,
            },
        )
    }
}

/// Solves `A x = b` (or `Aᵀ x = b`) for every right-hand side with shared V-cycles.
pub fn gmg_solve(
    matrix: &BlockCsr,
    rhs: &[Vec<Vec4>],
    hierarchy: &GmgHierarchy,
    tol: f64,
    transpose: bool,
    options: GmgOptions,
) -> Result<(Vec<Vec<Vec4>>, ConvergenceReport)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if rhs.iter().all(|b| b.iter().flatten().all(|v| *v == 0.0)) {
        let n = matrix.n();
        return Ok((
            vec![vec![ZERO4; n]; rhs.len()],
            ConvergenceReport {
                cycles: 0,
                relative_residuals: vec![0.0; rhs.len()],
                converged: true,
            },
        ));
    }
    let solver = GmgSolver::new(matrix, hierarchy, transpose, options)?;
    let (x, report) = solver.solve(rhs, tol);
    if report.converged {
        Ok((x, report))
    } else {
        Err(Error::NoConvergence(report))
    }
}
