//! Plain-text mesh format.
//!
//! ```text
//! VERTICES <n>
//! <id> <x> <y>
//! TRIANGLES <n>
//! <id> <v1> <v2> <v3>
//! BOUNDARY <n>
//! <edge> <va> <vb> <marker>
//! GEOMETRY <n>
//! <marker> circle <cx> <cy> <r>
//! <marker> naca4 <code> <chord> <x0> <y0>
//! <marker> polyline <file>
//! <marker> bumps <center> <height> <width> [...]
//! ```
//!
//! Ids must run 0..n in order. `#` starts a comment. A marker whose name
//! starts with `farfield` is a far-field boundary, any other is a wall.
//! Polyline files hold one `x y` pair per line, relative to the mesh file.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryCurve, BoundaryEdge, BoundaryKind, Marker, RootMesh};

/// Formats with 17 significant digits, enough to recover every f64 exactly.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn read_mesh_file(path: &Path) -> Result<RootMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, path)
}

/// Parses mesh text; `path` names the source in errors and anchors polyline files.
pub fn parse_mesh(text: &str, path: &Path) -> Result<RootMesh> {
    let err = |line: usize, message: String| Error::MeshFormat {
        path: path.to_path_buf(),
        line,
        message,
    };
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, t)| !t.is_empty())
        .collect();

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut boundary_rows: Vec<(usize, u32, u32, String)> = Vec::new();
    let mut geometry_rows: Vec<(usize, Vec<String>)> = Vec::new();
    let mut seen = HashMap::new();

    let mut pos = 0;
    while pos < lines.len() {
        let (lno, ref head) = lines[pos];
        if head.len() != 2 {
            return Err(err(lno, format!("expected `<BLOCK> <count>`, found `{}`", head.join(" "))));
        }
        let block = head[0];
        let count: usize = head[1]
            .parse()
            .map_err(|_| err(lno, format!("bad row count `{}`", head[1])))?;
        if seen.insert(block, lno).is_some() {
            return Err(err(lno, format!("block {block} appears twice")));
        }
        if pos + 1 + count > lines.len() {
            return Err(err(lno, format!("block {block} declares {count} rows but the file ends early")));
        }
        let rows = &lines[pos + 1..pos + 1 + count];
        for (k, (l, tok)) in rows.iter().enumerate() {
            let expect_id = |s: &str| -> Result<()> {
                match s.parse::<usize>() {
                    Ok(id) if id == k => Ok(()),
                    _ => Err(err(*l, format!("expected row id {k}, found `{s}`"))),
                }
            };
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| err(*l, format!("`{s}` is not a finite number")))
            };
            let index = |s: &str| -> Result<u32> { s.parse::<u32>().map_err(|_| err(*l, format!("`{s}` is not a vertex id"))) };
            match block {
                "VERTICES" => {
                    if tok.len() != 3 {
                        return Err(err(*l, "vertex rows are `id x y`".into()));
                    }
                    expect_id(tok[0])?;
                    vertices.push([num(tok[1])?, num(tok[2])?]);
                }
                "TRIANGLES" => {
                    if tok.len() != 4 {
                        return Err(err(*l, "triangle rows are `id v1 v2 v3`".into()));
                    }
                    expect_id(tok[0])?;
                    triangles.push([index(tok[1])?, index(tok[2])?, index(tok[3])?]);
                }
                "BOUNDARY" => {
                    if tok.len() != 4 {
                        return Err(err(*l, "boundary rows are `edge va vb marker`".into()));
                    }
                    expect_id(tok[0])?;
                    boundary_rows.push((*l, index(tok[1])?, index(tok[2])?, tok[3].to_string()));
                }
                "GEOMETRY" => {
                    if tok.len() < 2 {
                        return Err(err(*l, "geometry rows are `marker kind params...`".into()));
                    }
                    geometry_rows.push((*l, tok.iter().map(|s| s.to_string()).collect()));
                }
                other => return Err(err(lno, format!("unknown block `{other}`"))),
            }
        }
        pos += 1 + count;
    }
    for block in ["VERTICES", "TRIANGLES", "BOUNDARY"] {
        if !seen.contains_key(block) {
            return Err(err(lines.last().map_or(1, |l| l.0), format!("missing {block} block")));
        }
    }

    let mut markers: Vec<Marker> = Vec::new();
    let mut boundary = Vec::with_capacity(boundary_rows.len());
    for (_, a, b, name) in boundary_rows {
        let id = match markers.iter().position(|m| m.name == name) {
            Some(i) => i,
            None => {
                markers.push(Marker {
                    kind: BoundaryKind::from_marker_name(&name),
                    name,
                    curve: None,
                });
                markers.len() - 1
            }
        };
        boundary.push(BoundaryEdge { a, b, marker: id as u16 });
    }
    let base = path.parent().unwrap_or(Path::new("."));
    for (l, tok) in geometry_rows {
        let Some(m) = markers.iter_mut().find(|m| m.name == tok[0]) else {
            return Err(err(l, format!("geometry for unknown marker `{}`", tok[0])));
        };
        let nums = |from: usize, n: usize| -> Result<Vec<f64>> {
            if tok.len() != from + n {
                return Err(err(l, format!("`{}` takes {n} parameters", tok[1])));
            }
            tok[from..]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| err(l, format!("`{s}` is not a number"))))
                .collect()
        };
        let curve = match tok[1].as_str() {
            "circle" => {
                let p = nums(2, 3)?;
                BoundaryCurve::Circle {
                    center: [p[0], p[1]],
                    radius: p[2],
                }
            }
            "naca4" => {
                if tok.len() != 6 {
                    return Err(err(l, "`naca4` takes code chord x0 y0".into()));
                }
                let p = nums(3, 3)?;
                BoundaryCurve::Naca4 {
                    code: tok[2].clone(),
                    chord: p[0],
                    origin: [p[1], p[2]],
                }
            }
            "polyline" => {
                if tok.len() != 3 {
                    return Err(err(l, "`polyline` takes one file name".into()));
                }
                BoundaryCurve::Polyline {
                    points: read_polyline(&base.join(&tok[2]))?,
                }
            }
            "bumps" => {
                let n = tok.len() - 2;
                if n == 0 || n % 3 != 0 {
                    return Err(err(l, "`bumps` takes center height width triples".into()));
                }
                let p = nums(2, n)?;
                BoundaryCurve::GaussianBumps {
                    bumps: p.chunks(3).map(|c| [c[0], c[1], c[2]]).collect(),
                }
            }
            other => return Err(err(l, format!("unknown curve kind `{other}`"))),
        };
        m.curve = Some(curve);
    }
    RootMesh::new(vertices, triangles, boundary, markers)
}

fn read_polyline(path: &PathBuf) -> Result<Vec<[f64; 2]>> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tok: Vec<&str> = line.split('#').next().unwrap_or("").split_whitespace().collect();
        if tok.is_empty() {
            continue;
        }
        let parsed: Option<Vec<f64>> = tok.iter().map(|s| s.parse().ok()).collect();
        match parsed.as_deref() {
            Some([x, y]) => points.push([*x, *y]),
            _ => {
                return Err(Error::MeshFormat {
                    path: path.clone(),
                    line: i + 1,
                    message: "polyline rows are `x y`".into(),
                })
            }
        }
    }
    if points.len() < 2 {
        return Err(Error::MeshFormat {
            path: path.clone(),
            line: 1,
            message: "polyline needs at least two points".into(),
        });
    }
    Ok(points)
}

/// Mesh text. Polyline curves are referenced as `<marker>.xy`; [`write_mesh_file`]
/// writes those files too.
pub fn format_mesh(mesh: &RootMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "VERTICES {}", mesh.vertices.len());
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "{i} {} {}", fmt_f64(v[0]), fmt_f64(v[1]));
    }
    let _ = writeln!(s, "TRIANGLES {}", mesh.triangles.len());
    for (i, t) in mesh.triangles.iter().enumerate() {
        let _ = writeln!(s, "{i} {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "BOUNDARY {}", mesh.boundary.len());
    for (i, e) in mesh.boundary.iter().enumerate() {
        let _ = writeln!(s, "{i} {} {} {}", e.a, e.b, mesh.markers[e.marker as usize].name);
    }
    let curves: Vec<&Marker> = mesh.markers.iter().filter(|m| m.curve.is_some()).collect();
    if !curves.is_empty() {
        let _ = writeln!(s, "GEOMETRY {}", curves.len());
        for m in curves {
            let row = match m.curve.as_ref().expect("filtered") {
                BoundaryCurve::Circle { center, radius } => {
                    format!("circle {} {} {}", fmt_f64(center[0]), fmt_f64(center[1]), fmt_f64(*radius))
                }
                BoundaryCurve::Naca4 { code, chord, origin } => format!(
                    "naca4 {code} {} {} {}",
                    fmt_f64(*chord),
                    fmt_f64(origin[0]),
                    fmt_f64(origin[1])
                ),
                BoundaryCurve::Polyline { .. } => format!("polyline {}.xy", m.name),
                BoundaryCurve::GaussianBumps { bumps } => {
                    let p: Vec<String> = bumps.iter().flatten().map(|&x| fmt_f64(x)).collect();
                    format!("bumps {}", p.join(" "))
                }
            };
            let _ = writeln!(s, "{} {row}", m.name);
        }
    }
    s
}

/// Writes the mesh and, next to it, one `<marker>.xy` file per polyline curve.
pub fn write_mesh_file(mesh: &RootMesh, path: &Path) -> Result<()> {
    std::fs::write(path, format_mesh(mesh))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    for m in &mesh.markers {
        if let Some(BoundaryCurve::Polyline { points }) = &m.curve {
            let mut s = String::new();
            for p in points {
                let _ = writeln!(s, "{} {}", fmt_f64(p[0]), fmt_f64(p[1]));
            }
            std::fs::write(dir.join(format!("{}.xy", m.name)), s)?;
        }
    }
    Ok(())
}
