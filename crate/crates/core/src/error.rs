use std::path::PathBuf;

use thiserror::Error;

use crate::solver::ConvergenceReport;

pub type Result<T> = std::result::Result<T, Error>;

/// One problem found while reading a run configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    /// 1-based line, when the problem can be attributed to one.
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("nonphysical state (rho = {rho:e}, p = {pressure:e}){}", cell_suffix(*.cell))]
    NonphysicalState {
        rho: f64,
        pressure: f64,
        cell: Option<usize>,
    },

    #[error("cell {0} is not a leaf of the tree")]
    UnknownCell(usize),

    #[error("trees do not share the same root mesh")]
    RootMismatch,

    #[error("target mesh is not a refinement of the source mesh")]
    NotARefinement,

    #[error("field belongs to mesh {field:016x}, operation expects mesh {mesh:016x}")]
    MeshMismatch { field: u64, mesh: u64 },

    #[error("boundary marker `{0}` does not exist on this mesh")]
    UnknownBoundaryMarker(String),

    #[error("division by zero in composite functional component {0}")]
    DivisionByZero(usize),

    #[error("linear solver did not converge: {0}")]
    NoConvergence(ConvergenceReport),

    #[error("Newton iteration diverged at step {iteration} (residual {residual:e})")]
    NewtonDiverged { iteration: usize, residual: f64 },

    #[error("Newton iteration did not reach tolerance within {iterations} steps (residual {residual:e})")]
    NewtonStalled { iterations: usize, residual: f64 },

    #[error("cell budget exceeded: {cells} > {budget}")]
    BudgetExceeded { cells: usize, budget: usize },

    #[error("invalid configuration:\n{}", join_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("mesh file {path}: line {line}: {message}")]
    MeshFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn cell_suffix(cell: Option<usize>) -> String {
    cell.map(|c| format!(" in cell {c}")).unwrap_or_default()
}

fn join_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    /// Attach a cell index to a `NonphysicalState` error.
    pub fn in_cell(self, cell: usize) -> Self {
        match self {
            Error::NonphysicalState {
                rho,
                pressure,
                cell: None,
            } => Error::NonphysicalState {
                rho,
                pressure,
                cell: Some(cell),
            },
            other => other,
        }
    }
}
