use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::geometry::BoundaryCurve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Wall,
    Farfield,
}

impl BoundaryKind {
    /// Markers whose name starts with `farfield` are far-field, everything else is a slip wall.
    pub fn from_marker_name(name: &str) -> Self {
        if name.starts_with("farfield") {
            BoundaryKind::Farfield
        } else {
            BoundaryKind::Wall
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub name: String,
    pub kind: BoundaryKind,
    pub curve: Option<BoundaryCurve>,
}

pub type MarkerId = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub a: u32,
    pub b: u32,
    pub marker: MarkerId,
}

/// Initial conforming triangulation that every tree is built on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[u32; 3]>,
    pub boundary: Vec<BoundaryEdge>,
    pub markers: Vec<Marker>,
}

pub(crate) fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl RootMesh {
    /// Checks orientation and boundary closure.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[u32; 3]>,
        boundary: Vec<BoundaryEdge>,
        markers: Vec<Marker>,
    ) -> Result<Self> {
        let mesh = Self {
            vertices,
            triangles,
            boundary,
            markers,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len() as u32;
        let mut edge_count: HashMap<(u32, u32), u32> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            let [a, b, c] = tri.map(|v| self.vertices[v as usize]);
            if signed_area(a, b, c) <= 0.0 {
                return Err(Error::InvalidMesh(format!("triangle {t} is not counterclockwise")));
            }
            for k in 0..3 {
                *edge_count
                    .entry(edge_key(tri[k], tri[(k + 1) % 3]))
                    .or_default() += 1;
            }
        }
        if edge_count.values().any(|&c| c > 2) {
            return Err(Error::InvalidMesh("an edge is shared by more than two triangles".into()));
        }
        let mut seen = HashMap::new();
        for (i, e) in self.boundary.iter().enumerate() {
            let key = edge_key(e.a, e.b);
            if edge_count.get(&key) != Some(&1) {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge {i} ({}, {}) does not belong to exactly one triangle",
                    e.a, e.b
                )));
            }
            if e.marker as usize >= self.markers.len() {
                return Err(Error::InvalidMesh(format!("boundary edge {i} has an unknown marker")));
            }
            if seen.insert(key, i).is_some() {
                return Err(Error::InvalidMesh(format!("boundary edge {i} is listed twice")));
            }
        }
        let open = edge_count
            .iter()
            .filter(|(k, &c)| c == 1 && !seen.contains_key(k))
            .count();
        if open > 0 {
            return Err(Error::InvalidMesh(format!("{open} boundary edges carry no marker")));
        }
        Ok(())
    }

    pub fn marker_id(&self, name: &str) -> Option<MarkerId> {
        self.markers
            .iter()
            .position(|m| m.name == name)
            .map(|i| i as MarkerId)
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|v| self.vertices[v as usize]);
                signed_area(a, b, c)
            })
            .sum()
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for v in &self.vertices {
            v[0].to_bits().hash(&mut h);
            v[1].to_bits().hash(&mut h);
        }
        self.triangles.hash(&mut h);
        for e in &self.boundary {
            (e.a, e.b, e.marker).hash(&mut h);
        }
        for m in &self.markers {
            m.name.hash(&mut h);
        }
        h.finish()
    }
}
