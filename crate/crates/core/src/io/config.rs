//! TOML run configuration.
//!
//! ```toml
//! [freestream]
//! mach = 0.5
//! attack_angle = 0.0      # degrees
//!
//! [geometry]
//! builtin = "channel_bump"
//!
//! [[targets]]
//! kind = "lift"
//! marker = "wall"
//!
//! [[targets]]
//! kind = "drag"
//! marker = "wall"
//!
//! [composite]
//! form = "product"
//! exponents = [1, -1]
//! ```
//!
//! Unknown keys are errors. Every problem found is reported at once.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adjoint::DualOptions;
use crate::driver::AdaptationConfig;
use crate::error::{ConfigIssue, Error, Result};
use crate::euler::{FreestreamSpec, DEFAULT_GAMMA};
use crate::functionals::{CompositeFunctional, FunctionalKind, TargetFunctional};
use crate::mesh::HierarchicalTree;
use crate::solver::NewtonConfig;

use super::builtin::{builtin_airfoil_omesh, builtin_channel_bump};
use super::meshfile::read_mesh_file;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreestreamConfig {
    pub mach: f64,
    /// Degrees, as written.
    #[serde(default)]
    pub attack_angle: f64,
    #[serde(default = "one")]
    pub p_inf: f64,
    #[serde(default = "one")]
    pub rho_inf: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// `attack_angle` in radians, filled in by [`parse_config`].
    #[serde(skip)]
    pub attack_angle_rad: f64,
}

fn one() -> f64 {
    1.0
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinCase {
    ChannelBump,
    Airfoil,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub builtin: Option<BuiltinCase>,
    /// Mesh file, relative to the configuration file.
    pub mesh: Option<PathBuf>,
    pub nx: usize,
    pub ny: usize,
    pub bump_height: f64,
    pub naca: String,
    pub n_around: usize,
    pub n_radial: usize,
    pub outer_radius: f64,
    /// Uniform refinements applied to the initial mesh.
    pub initial_refinements: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            builtin: None,
            mesh: None,
            nx: 32,
            ny: 8,
            bump_height: 0.1,
            naca: "0012".into(),
            n_around: 64,
            n_radial: 16,
            outer_radius: 35.0,
            initial_refinements: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub kind: FunctionalKind,
    pub marker: String,
    #[serde(default = "one")]
    pub chord: f64,
    /// Moment reference point; defaults to the quarter chord on the x axis.
    #[serde(default)]
    pub x_ref: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositeForm {
    Product,
    Linear,
}

/// `exponents` go with the product form, `weights` with the linear one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeConfig {
    pub form: CompositeForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptationSettings {
    pub theta: f64,
    pub max_iterations: usize,
    pub tol: f64,
    pub max_cells: usize,
    /// Baseline weights, one per target.
    pub weights: Option<Vec<f64>>,
    pub dual: DualOptions,
}

impl Default for AdaptationSettings {
    fn default() -> Self {
        let d = AdaptationConfig::default();
        Self {
            theta: d.theta,
            max_iterations: d.max_iterations,
            tol: d.tol,
            max_cells: d.max_cells,
            weights: None,
            dual: d.dual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub vtk: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            vtk: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub freestream: FreestreamConfig,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub targets: Vec<TargetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composite: Option<CompositeConfig>,
    #[serde(default)]
    pub solver: NewtonConfig,
    #[serde(default)]
    pub adaptation: AdaptationSettings,
    #[serde(default)]
    pub output: OutputConfig,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut issues = Vec::new();
    let mut work = text.to_string();
    let mut parsed = None;
    for _ in 0..=text.lines().count() {
        match toml::from_str::<RunConfig>(&work) {
            Ok(cfg) => {
                parsed = Some(cfg);
                break;
            }
            Err(e) => {
                let line = e.span().map(|s| line_of_offset(&work, s.start));
                issues.push(ConfigIssue {
                    line,
                    message: e.message().trim().to_string(),
                });
                // Blank out the offending key (or table) and look for more.
                match line {
                    Some(l) if e.message().contains("unknown field") => work = comment_out(&work, l),
                    _ => break,
                }
            }
        }
    }
    let Some(mut cfg) = parsed else {
        return Err(Error::Config(issues));
    };
    cfg.freestream.attack_angle_rad = cfg.freestream.attack_angle.to_radians();
    issues.extend(semantic_issues(&cfg, text));
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(issues))
    }
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn is_header(line: &str) -> bool {
    line.trim_start().starts_with('[')
}

/// Comments out line `l`, and the whole table if `l` is a header.
fn comment_out(text: &str, l: usize) -> String {
    let mut in_table = false;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let n = i + 1;
            if n == l {
                in_table = is_header(line);
                format!("# {line}")
            } else if in_table && n > l && !is_header(line) {
                format!("# {line}")
            } else {
                in_table = false;
                line.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Line of `key = ...` inside the `nth` occurrence of table `table`.
fn key_line(text: &str, table: &str, nth: usize, key: &str) -> Option<usize> {
    let mut seen = 0;
    let mut inside = false;
    let mut header_line = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            let name = t.trim_matches(|c| c == '[' || c == ']').trim();
            inside = name == table && {
                seen += 1;
                seen == nth + 1
            };
            if inside {
                header_line = Some(i + 1);
            }
            continue;
        }
        if inside {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header_line
}

fn semantic_issues(cfg: &RunConfig, text: &str) -> Vec<ConfigIssue> {
    let mut out = Vec::new();
    let mut check = |ok: bool, table: &str, nth: usize, key: &str, message: String| {
        if !ok {
            out.push(ConfigIssue {
                line: key_line(text, table, nth, key),
                message,
            });
        }
    };
    let fs = &cfg.freestream;
    check(fs.mach > 0.0 && fs.mach.is_finite(), "freestream", 0, "mach", format!("mach = {} must be positive", fs.mach));
    check(fs.attack_angle.abs() < 90.0, "freestream", 0, "attack_angle", "attack_angle must lie in (-90, 90) degrees".into());
    check(fs.p_inf > 0.0, "freestream", 0, "p_inf", "p_inf must be positive".into());
    check(fs.rho_inf > 0.0, "freestream", 0, "rho_inf", "rho_inf must be positive".into());
    check(fs.gamma > 1.0, "freestream", 0, "gamma", "gamma must exceed 1".into());

    let g = &cfg.geometry;
    check(
        g.builtin.is_some() != g.mesh.is_some(),
        "geometry",
        0,
        "builtin",
        "geometry needs exactly one of `builtin` or `mesh`".into(),
    );
    match g.builtin {
        Some(BuiltinCase::ChannelBump) => {
            check(g.nx >= 4, "geometry", 0, "nx", "nx must be at least 4".into());
            check(g.ny >= 4, "geometry", 0, "ny", "ny must be at least 4".into());
            check(
                (0.0..0.5).contains(&g.bump_height),
                "geometry",
                0,
                "bump_height",
                "bump_height must lie in [0, 0.5)".into(),
            );
        }
        Some(BuiltinCase::Airfoil) => {
            check(
                g.n_around >= 32 && g.n_around % 2 == 0,
                "geometry",
                0,
                "n_around",
                "n_around must be even and at least 32".into(),
            );
            check(g.n_radial >= 8, "geometry", 0, "n_radial", "n_radial must be at least 8".into());
            check(g.outer_radius > 2.0, "geometry", 0, "outer_radius", "outer_radius must exceed 2".into());
            check(
                crate::mesh::geometry::Naca4Params::parse(&g.naca).is_some(),
                "geometry",
                0,
                "naca",
                format!("`{}` is not a NACA 4-digit code", g.naca),
            );
        }
        None => {}
    }
    check(g.initial_refinements <= 6, "geometry", 0, "initial_refinements", "initial_refinements must be at most 6".into());

    for (i, t) in cfg.targets.iter().enumerate() {
        check(!t.marker.is_empty(), "targets", i, "marker", format!("target {i} has an empty marker"));
        check(t.chord > 0.0, "targets", i, "chord", format!("target {i} chord must be positive"));
    }
    let n = cfg.targets.len();
    match &cfg.composite {
        Some(c) => {
            let (own, other) = match c.form {
                CompositeForm::Product => ("exponents", "weights"),
                CompositeForm::Linear => ("weights", "exponents"),
            };
            let len = match c.form {
                CompositeForm::Product => c.exponents.as_ref().map(Vec::len),
                CompositeForm::Linear => c.weights.as_ref().map(Vec::len),
            };
            let stray = match c.form {
                CompositeForm::Product => c.weights.is_some(),
                CompositeForm::Linear => c.exponents.is_some(),
            };
            check(len.is_some(), "composite", 0, "form", format!("composite form needs `{own}`"));
            check(!stray, "composite", 0, other, format!("`{other}` does not belong to this composite form"));
            if let Some(len) = len {
                check(len == n, "composite", 0, own, format!("{len} {own} for {n} targets"));
            }
            if let Some(e) = &c.exponents {
                check(e.iter().all(|x| x.abs() == 1), "composite", 0, "exponents", "exponents must be +1 or -1".into());
            }
        }
        None => {}
    }

    let s = &cfg.solver;
    check(s.newton_tol > 0.0, "solver", 0, "newton_tol", "newton_tol must be positive".into());
    check(s.max_newton >= 1, "solver", 0, "max_newton", "max_newton must be at least 1".into());
    check(s.regularization >= 0.0, "solver", 0, "regularization", "regularization must be nonnegative".into());
    check(s.linear_tol > 0.0 && s.linear_tol < 1.0, "solver", 0, "linear_tol", "linear_tol must lie in (0, 1)".into());

    let a = &cfg.adaptation;
    check(a.theta > 0.0 && a.theta < 1.0, "adaptation", 0, "theta", format!("theta = {} is outside (0, 1)", a.theta));
    check(a.tol > 0.0, "adaptation", 0, "tol", "tol must be positive".into());
    check(a.max_iterations >= 1, "adaptation", 0, "max_iterations", "max_iterations must be at least 1".into());
    check(a.max_cells >= 1, "adaptation", 0, "max_cells", "max_cells must be at least 1".into());
    check(a.dual.tol > 0.0 && a.dual.tol < 1.0, "adaptation", 0, "dual", "dual tol must lie in (0, 1)".into());
    if let Some(w) = &a.weights {
        check(w.len() == n, "adaptation", 0, "weights", format!("{} baseline weights for {n} targets", w.len()));
        check(w.iter().all(|x| *x > 0.0), "adaptation", 0, "weights", "baseline weights must be positive".into());
    }
    check(!cfg.output.directory.as_os_str().is_empty(), "output", 0, "directory", "output directory is empty".into());
    out
}

impl RunConfig {
    pub fn freestream_spec(&self) -> FreestreamSpec {
        let f = &self.freestream;
        FreestreamSpec {
            mach: f.mach,
            attack_angle: f.attack_angle_rad,
            p_inf: f.p_inf,
            rho_inf: f.rho_inf,
            gamma: f.gamma,
        }
    }

    pub fn targets(&self) -> Vec<TargetFunctional> {
        let fs = self.freestream_spec();
        self.targets
            .iter()
            .map(|t| {
                let mut f = TargetFunctional::new(t.kind, t.marker.clone(), &fs, t.chord);
                if let Some(x) = t.x_ref {
                    f.x_ref = x;
                }
                f
            })
            .collect()
    }

    /// The configured composite; without a `[composite]` table, the product of all targets.
    pub fn composite(&self) -> CompositeFunctional {
        let t = self.targets();
        match &self.composite {
            Some(CompositeConfig { form: CompositeForm::Linear, weights: Some(w), .. }) => {
                CompositeFunctional::linear(t.into_iter().zip(w.iter().copied()).collect())
            }
            Some(CompositeConfig { form: CompositeForm::Product, exponents: Some(e), .. }) => {
                CompositeFunctional::product(t.into_iter().zip(e.iter().copied()).collect())
            }
            _ => CompositeFunctional::product(t.into_iter().map(|f| (f, 1)).collect()),
        }
    }

    pub fn adaptation_config(&self) -> AdaptationConfig {
        let a = &self.adaptation;
        AdaptationConfig {
            theta: a.theta,
            max_iterations: a.max_iterations,
            tol: a.tol,
            max_cells: a.max_cells,
            newton: self.solver.clone(),
            dual: a.dual,
            weights: a.weights.clone(),
        }
    }

    /// Builds the initial tree; mesh paths are resolved against `base_dir`.
    pub fn build_geometry(&self, base_dir: &Path) -> Result<HierarchicalTree> {
        let g = &self.geometry;
        let mut tree = match (&g.builtin, &g.mesh) {
            (Some(BuiltinCase::ChannelBump), None) => builtin_channel_bump(g.nx, g.ny, g.bump_height)?,
            (Some(BuiltinCase::Airfoil), None) => builtin_airfoil_omesh(&g.naca, g.n_around, g.n_radial, g.outer_radius)?,
            (None, Some(path)) => HierarchicalTree::new(read_mesh_file(&base_dir.join(path))?)?,
            _ => {
                return Err(Error::Config(vec![ConfigIssue {
                    line: None,
                    message: "geometry needs exactly one of `builtin` or `mesh`".into(),
                }]))
            }
        };
        for _ in 0..g.initial_refinements {
            tree = tree.refine_uniform();
        }
        Ok(tree)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidArgument(format!("cannot serialize configuration: {e}")))
    }
}
