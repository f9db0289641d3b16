//! Legacy ASCII VTK unstructured-grid output.

use std::fmt::Write as _;
use std::path::Path;

use crate::adjoint::{DualField, IndicatorField};
use crate::error::{Error, Result};
use crate::euler::{pressure, ConservativeState, FreestreamSpec};
use crate::mesh::{CellField, LeafMesh};

use super::meshfile::fmt_f64;

/// One scalar per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellScalar {
    pub name: String,
    pub values: Vec<f64>,
}

impl CellScalar {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

/// Density, pressure and Mach number of a primal field.
pub fn primal_scalars(mesh: &LeafMesh, u: &CellField, fs: &FreestreamSpec) -> Result<Vec<CellScalar>> {
    u.check_mesh(mesh)?;
    let mut rho = Vec::with_capacity(u.len());
    let mut p = Vec::with_capacity(u.len());
    let mut mach = Vec::with_capacity(u.len());
    for v in &u.values {
        let s = ConservativeState(*v);
        let pr = pressure(&s, fs.gamma)?;
        let speed = s.mx().hypot(s.my()) / s.rho();
        rho.push(s.rho());
        p.push(pr);
        mach.push(speed / (fs.gamma * pr / s.rho()).sqrt());
    }
    Ok(vec![
        CellScalar::new("rho", rho),
        CellScalar::new("p", p),
        CellScalar::new("mach", mach),
    ])
}

/// The four components of a dual field, named `z<k>_<target>`.
pub fn dual_scalars(dual: &DualField, label: &str) -> Vec<CellScalar> {
    (0..4)
        .map(|k| CellScalar::new(format!("z{k}_{label}"), dual.z.values.iter().map(|v| v[k]).collect()))
        .collect()
}

pub fn indicator_scalar(ind: &IndicatorField, label: &str) -> CellScalar {
    CellScalar::new(format!("eta_{label}"), ind.values.clone())
}

pub fn format_vtk(mesh: &LeafMesh, fields: &[CellScalar], title: &str) -> Result<String> {
    let n = mesh.num_cells();
    for f in fields {
        if f.values.len() != n {
            return Err(Error::InvalidArgument(format!(
                "field `{}` has {} values for {n} cells",
                f.name,
                f.values.len()
            )));
        }
        if f.name.is_empty() || f.name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("field name `{}` is not a VTK identifier", f.name)));
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or("multidwr"));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.points.len());
    for p in &mesh.points {
        let _ = writeln!(s, "{} {} 0", fmt_f64(p[0]), fmt_f64(p[1]));
    }
    let _ = writeln!(s, "CELLS {n} {}", 4 * n);
    for c in &mesh.cells {
        let _ = writeln!(s, "3 {} {} {}", c.vertices[0], c.vertices[1], c.vertices[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {n}");
    for _ in 0..n {
        let _ = writeln!(s, "5");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "CELL_DATA {n}");
        for f in fields {
            let _ = writeln!(s, "SCALARS {} double 1", f.name);
            let _ = writeln!(s, "LOOKUP_TABLE default");
            for v in &f.values {
                let _ = writeln!(s, "{}", fmt_f64(*v));
            }
        }
    }
    Ok(s)
}

pub fn export_vtk(path: &Path, mesh: &LeafMesh, fields: &[CellScalar]) -> Result<()> {
    let title = path.file_stem().and_then(|s| s.to_str()).unwrap_or("multidwr");
    std::fs::write(path, format_vtk(mesh, fields, title)?)?;
    Ok(())
}

/// What [`parse_vtk`] recovers from a file written by [`format_vtk`].
#[derive(Debug, Clone, PartialEq)]
pub struct VtkContents {
    pub points: Vec<[f64; 2]>,
    pub cells: Vec<[u32; 3]>,
    pub fields: Vec<CellScalar>,
}

/// Reader for the subset of the legacy format that [`format_vtk`] writes.
pub fn parse_vtk(text: &str) -> Result<VtkContents> {
    let bad = |m: &str| Error::InvalidArgument(format!("vtk: {m}"));
    let mut lines = text.lines();
    if !lines.next().is_some_and(|l| l.starts_with("# vtk DataFile")) {
        return Err(bad("missing header"));
    }
    lines.next();
    if lines.next() != Some("ASCII") || lines.next() != Some("DATASET UNSTRUCTURED_GRID") {
        return Err(bad("not an ASCII unstructured grid"));
    }
    let mut tokens = lines.flat_map(str::split_whitespace);
    let mut next = || tokens.next().ok_or_else(|| bad("unexpected end of file"));
    let expect = |want: &str, got: &str| if want == got { Ok(()) } else { Err(bad(&format!("expected {want}, found {got}"))) };
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad(&format!("`{s}` is not an integer")));

    expect("POINTS", next()?)?;
    let np = int(next()?)?;
    next()?;
    let mut points = Vec::with_capacity(np);
    for _ in 0..np {
        let (x, y) = (num(next()?)?, num(next()?)?);
        next()?;
        points.push([x, y]);
    }
    expect("CELLS", next()?)?;
    let nc = int(next()?)?;
    next()?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        expect("3", next()?)?;
        let v = [int(next()?)?, int(next()?)?, int(next()?)?];
        if v.iter().any(|&i| i >= np) {
            return Err(bad("cell references a missing point"));
        }
        cells.push(v.map(|i| i as u32));
    }
    expect("CELL_TYPES", next()?)?;
    if int(next()?)? != nc {
        return Err(bad("cell type count mismatch"));
    }
    for _ in 0..nc {
        expect("5", next()?)?;
    }
    let mut fields = Vec::new();
    if let Ok(tok) = next() {
        expect("CELL_DATA", tok)?;
        if int(next()?)? != nc {
            return Err(bad("cell data count mismatch"));
        }
        while let Ok(tok) = next() {
            expect("SCALARS", tok)?;
            let name = next()?.to_string();
            next()?;
            next()?;
            expect("LOOKUP_TABLE", next()?)?;
            next()?;
            let values = (0..nc).map(|_| num(next()?)).collect::<Result<Vec<_>>>()?;
            fields.push(CellScalar { name, values });
        }
    }
    Ok(VtkContents { points, cells, fields })
}
