//! Built-in desk-scale geometries.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::mesh::geometry::{bump_height, Naca4Params};
use crate::mesh::{signed_area, BoundaryCurve, BoundaryEdge, BoundaryKind, HierarchicalTree, Marker, RootMesh};

pub const CHANNEL_X: (f64, f64) = (-2.0, 2.0);
pub const BUMP_WIDTH: f64 = 0.5;

/// Gaussian bump on the lower wall of the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub height: f64,
    pub width: f64,
    pub marker: String,
}

/// Channel `[−2, 2] × [y_wall(x), 1]` with one bump centered at x = 0.
pub fn builtin_channel_bump(nx: usize, ny: usize, bump_height: f64) -> Result<HierarchicalTree> {
    builtin_channel_bumps(
        nx,
        ny,
        &[Bump {
            center: 0.0,
            height: bump_height,
            width: BUMP_WIDTH,
            marker: "wall".into(),
        }],
    )
}

/// Channel with several bumps; each lower-wall edge takes the marker of the nearest bump.
pub fn builtin_channel_bumps(nx: usize, ny: usize, bumps: &[Bump]) -> Result<HierarchicalTree> {
    if nx < 4 || ny < 4 {
        return Err(Error::InvalidArgument("channel needs nx, ny >= 4".into()));
    }
    if bumps.is_empty() {
        return Err(Error::InvalidArgument("channel needs at least one wall marker".into()));
    }
    let curve: Vec<[f64; 3]> = bumps.iter().map(|b| [b.center, b.height, b.width]).collect();
    let (x0, x1) = CHANNEL_X;
    let id = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = x0 + (x1 - x0) * i as f64 / nx as f64;
            let yb = bump_height(&curve, x);
            vertices.push([x, yb + (1.0 - yb) * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let nearest: Vec<usize> = (0..nx)
        .map(|i| {
            let xm = x0 + (x1 - x0) * (i as f64 + 0.5) / nx as f64;
            (0..bumps.len())
                .min_by(|&a, &b| (bumps[a].center - xm).abs().total_cmp(&(bumps[b].center - xm).abs()))
                .unwrap_or(0)
        })
        .collect();
    // Marker ids follow first appearance along the wall, as a mesh file would number them.
    let mut order: Vec<usize> = Vec::new();
    for &b in &nearest {
        if !order.contains(&b) {
            order.push(b);
        }
    }
    let mut markers: Vec<Marker> = order
        .iter()
        .map(|&b| Marker {
            name: bumps[b].marker.clone(),
            kind: BoundaryKind::Wall,
            curve: Some(BoundaryCurve::GaussianBumps {
                bumps: curve.clone(),
            }),
        })
        .collect();
    let far = markers.len() as u16;
    markers.push(Marker {
        name: "farfield".into(),
        kind: BoundaryKind::Farfield,
        curve: None,
    });
    let mut boundary: Vec<BoundaryEdge> = nearest
        .iter()
        .enumerate()
        .map(|(i, b)| BoundaryEdge {
            a: id(i, 0),
            b: id(i + 1, 0),
            marker: order.iter().position(|o| o == b).expect("listed") as u16,
        })
        .collect();
    for i in 0..nx {
        boundary.push(BoundaryEdge {
            a: id(i + 1, ny),
            b: id(i, ny),
            marker: far,
        });
    }
    for j in 0..ny {
        boundary.push(BoundaryEdge {
            a: id(0, j + 1),
            b: id(0, j),
            marker: far,
        });
        boundary.push(BoundaryEdge {
            a: id(nx, j),
            b: id(nx, j + 1),
            marker: far,
        });
    }
    HierarchicalTree::new(RootMesh::new(vertices, triangles, boundary, markers)?)
}

/// O-grid around a NACA 4-digit airfoil (leading edge at the origin, unit
/// chord) out to a circle of `outer_radius` centered at the origin.
pub fn builtin_airfoil_omesh(
    code: &str,
    n_around: usize,
    n_radial: usize,
    outer_radius: f64,
) -> Result<HierarchicalTree> {
    let params = Naca4Params::parse(code)
        .ok_or_else(|| Error::InvalidArgument(format!("`{code}` is not a NACA 4-digit code")))?;
    if n_around < 32 || n_around % 2 != 0 || n_radial < 8 {
        return Err(Error::InvalidArgument(
            "airfoil mesh needs an even n_around >= 32 and n_radial >= 8".into(),
        ));
    }
    if !(outer_radius > 2.0) {
        return Err(Error::InvalidArgument("outer radius must exceed 2 chords".into()));
    }
    // Geometric radial spacing, first layer about one surface spacing thick.
    let first = 0.5 * TAU / n_around as f64;
    let ratio = stretching_ratio(first / outer_radius, n_radial);
    let fractions: Vec<f64> = (0..=n_radial)
        .map(|j| (ratio.powi(j as i32) - 1.0) / (ratio.powi(n_radial as i32) - 1.0))
        .collect();

    let id = |i: usize, j: usize| (j * n_around + (i % n_around)) as u32;
    let mut vertices = Vec::with_capacity(n_around * (n_radial + 1));
    for &s in &fractions {
        for i in 0..n_around {
            let theta = TAU * i as f64 / n_around as f64;
            let surf = params.surface(theta);
            let outer = [outer_radius * theta.cos(), outer_radius * theta.sin()];
            vertices.push([
                (1.0 - s) * surf[0] + s * outer[0],
                (1.0 - s) * surf[1] + s * outer[1],
            ]);
        }
    }
    // The last ring must sit exactly on the circle.
    for i in 0..n_around {
        let theta = TAU * i as f64 / n_around as f64;
        vertices[id(i, n_radial) as usize] = [outer_radius * theta.cos(), outer_radius * theta.sin()];
    }

    let mut triangles = Vec::with_capacity(2 * n_around * n_radial);
    for j in 0..n_radial {
        for i in 0..n_around {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            for t in [[a, c, b], [a, d, c]] {
                let [p, q, r] = t.map(|v| vertices[v as usize]);
                triangles.push(if signed_area(p, q, r) > 0.0 { t } else { [t[0], t[2], t[1]] });
            }
        }
    }
    let mut boundary = Vec::with_capacity(2 * n_around);
    for i in 0..n_around {
        boundary.push(BoundaryEdge {
            a: id(i, 0),
            b: id(i + 1, 0),
            marker: 0,
        });
        boundary.push(BoundaryEdge {
            a: id(i, n_radial),
            b: id(i + 1, n_radial),
            marker: 1,
        });
    }
    let markers = vec![
        Marker {
            name: "wall".into(),
            kind: BoundaryKind::Wall,
            curve: Some(BoundaryCurve::Naca4 {
                code: code.into(),
                chord: 1.0,
                origin: [0.0, 0.0],
            }),
        },
        Marker {
            name: "farfield".into(),
            kind: BoundaryKind::Farfield,
            curve: Some(BoundaryCurve::Circle {
                center: [0.0, 0.0],
                radius: outer_radius,
            }),
        },
    ];
    HierarchicalTree::new(RootMesh::new(vertices, triangles, boundary, markers)?)
}

/// Ratio `q` with `(q − 1)/(q^n − 1) = first`.
fn stretching_ratio(first: f64, n: usize) -> f64 {
    if first * n as f64 >= 1.0 {
        return 1.0 + 1e-9;
    }
    let f = |q: f64| (q - 1.0) / (q.powi(n as i32) - 1.0) - first;
    let (mut lo, mut hi) = (1.0 + 1e-12, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
