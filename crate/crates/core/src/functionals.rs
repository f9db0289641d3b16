//! Wall-pressure target functionals and their separable composites.

use serde::{Deserialize, Serialize};

use crate::block::Vec4;
use crate::euler::{pressure, pressure_gradient, ConservativeState, FreestreamSpec};
use crate::error::{Error, Result};
use crate::mesh::{CellField, FaceNeighbor, LeafMesh, MarkerId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    Lift,
    Drag,
    Moment,
}

/// One force or moment coefficient integrated over a boundary marker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetFunctional {
    pub kind: FunctionalKind,
    pub marker: String,
    /// Radians.
    pub attack_angle: f64,
    pub gamma: f64,
    pub p_inf: f64,
    pub mach: f64,
    pub chord: f64,
    /// Moment reference point.
    pub x_ref: [f64; 2],
}

impl TargetFunctional {
    pub fn new(kind: FunctionalKind, marker: impl Into<String>, fs: &FreestreamSpec, chord: f64) -> Self {
        Self {
            kind,
            marker: marker.into(),
            attack_angle: fs.attack_angle,
            gamma: fs.gamma,
            p_inf: fs.p_inf,
            mach: fs.mach,
            chord,
            x_ref: [0.25 * chord, 0.0],
        }
    }

    pub fn lift(marker: impl Into<String>, fs: &FreestreamSpec) -> Self {
        Self::new(FunctionalKind::Lift, marker, fs, 1.0)
    }

    pub fn drag(marker: impl Into<String>, fs: &FreestreamSpec) -> Self {
        Self::new(FunctionalKind::Drag, marker, fs, 1.0)
    }

    pub fn moment(marker: impl Into<String>, fs: &FreestreamSpec, x_ref: [f64; 2]) -> Self {
        Self {
            x_ref,
            ..Self::new(FunctionalKind::Moment, marker, fs, 1.0)
        }
    }

    /// γ p∞ Ma∞² l / 2.
    pub fn c_inf(&self) -> f64 {
        0.5 * self.gamma * self.p_inf * self.mach * self.mach * self.chord
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_inf() > 0.0 && self.c_inf().is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "normalization of target on `{}` must be positive",
                self.marker
            )))
        }
    }

    fn marker_id(&self, mesh: &LeafMesh) -> Result<MarkerId> {
        mesh.marker_id(&self.marker)
            .ok_or_else(|| Error::UnknownBoundaryMarker(self.marker.clone()))
    }

    /// Weight multiplying `p·length` on a wall face.
    fn face_weight(&self, normal: [f64; 2], midpoint: [f64; 2]) -> f64 {
        match self.kind {
            FunctionalKind::Lift | FunctionalKind::Drag => {
                let b = beta_vector(self.kind, self.attack_angle, self.c_inf());
                normal[0] * b[0] + normal[1] * b[1]
            }
            FunctionalKind::Moment => {
                let d = [midpoint[0] - self.x_ref[0], midpoint[1] - self.x_ref[1]];
                (d[0] * normal[1] - d[1] * normal[0]) / self.c_inf()
            }
        }
    }
}

/// Force direction over C∞: drag along the freestream, lift normal to it.
/// Moments have no direction vector and yield zero.
pub fn beta_vector(kind: FunctionalKind, alpha: f64, c_inf: f64) -> [f64; 2] {
    match kind {
        FunctionalKind::Drag => [alpha.cos() / c_inf, alpha.sin() / c_inf],
        FunctionalKind::Lift => [-alpha.sin() / c_inf, alpha.cos() / c_inf],
        FunctionalKind::Moment => [0.0, 0.0],
    }
}

fn wall_faces<'m>(mesh: &'m LeafMesh, marker: MarkerId) -> impl Iterator<Item = &'m crate::mesh::Face> {
    mesh.faces
        .iter()
        .filter(move |f| f.right == FaceNeighbor::Boundary(marker))
}

pub fn evaluate(mesh: &LeafMesh, u: &CellField, spec: &TargetFunctional) -> Result<f64> {
    u.check_mesh(mesh)?;
    let marker = spec.marker_id(mesh)?;
    let mut sum = 0.0;
    for f in wall_faces(mesh, marker) {
        let p = pressure(&ConservativeState(u.values[f.left]), spec.gamma).map_err(|e| e.in_cell(f.left))?;
        sum += p * f.length * spec.face_weight(f.normal, f.midpoint);
    }
    Ok(sum)
}

/// ∂(evaluate)/∂u per cell; zero away from the marked wall.
pub fn gradient(mesh: &LeafMesh, u: &CellField, spec: &TargetFunctional) -> Result<CellField> {
    u.check_mesh(mesh)?;
    let marker = spec.marker_id(mesh)?;
    let mut g = vec![[0.0; 4]; mesh.num_cells()];
    for f in wall_faces(mesh, marker) {
        let state = ConservativeState(u.values[f.left]);
        pressure(&state, spec.gamma).map_err(|e| e.in_cell(f.left))?;
        let dp = pressure_gradient(&state, spec.gamma);
        let w = f.length * spec.face_weight(f.normal, f.midpoint);
        for k in 0..4 {
            g[f.left][k] += w * dp[k];
        }
    }
    CellField::new(mesh, g)
}

/// Multi-target functional built from single-target components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CompositeFunctional {
    /// `Π F_i^{e_i}` with every exponent ±1.
    Product {
        components: Vec<TargetFunctional>,
        exponents: Vec<i32>,
    },
    /// `Σ ω_i F_i`.
    Linear {
        components: Vec<TargetFunctional>,
        weights: Vec<f64>,
    },
}

impl CompositeFunctional {
    pub fn product(components: Vec<(TargetFunctional, i32)>) -> Self {
        let (components, exponents) = components.into_iter().unzip();
        Self::Product {
            components,
            exponents,
        }
    }

    pub fn linear(components: Vec<(TargetFunctional, f64)>) -> Self {
        let (components, weights) = components.into_iter().unzip();
        Self::Linear {
            components,
            weights,
        }
    }

    /// A single target as a one-factor product.
    pub fn single(target: TargetFunctional) -> Self {
        Self::product(vec![(target, 1)])
    }

    /// Lift over drag.
    pub fn ratio(numerator: TargetFunctional, denominator: TargetFunctional) -> Self {
        Self::product(vec![(numerator, 1), (denominator, -1)])
    }

    pub fn components(&self) -> &[TargetFunctional] {
        match self {
            Self::Product { components, .. } | Self::Linear { components, .. } => components,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = match self {
            Self::Product {
                components,
                exponents,
            } => {
                if exponents.iter().any(|e| e.abs() != 1) {
                    return Err(Error::InvalidArgument("product exponents must be +1 or -1".into()));
                }
                (components.len(), exponents.len())
            }
            Self::Linear {
                components,
                weights,
            } => (components.len(), weights.len()),
        };
        if n == 0 || n != m {
            return Err(Error::InvalidArgument(
                "composite needs one exponent or weight per component".into(),
            ));
        }
        self.components().iter().try_for_each(|c| c.validate())
    }
}

fn check_len(values: &[f64], comp: &CompositeFunctional) -> Result<()> {
    if values.len() != comp.components().len() {
        return Err(Error::InvalidArgument(format!(
            "{} values for {} components",
            values.len(),
            comp.components().len()
        )));
    }
    Ok(())
}

pub fn composite_evaluate(values: &[f64], comp: &CompositeFunctional) -> Result<f64> {
    check_len(values, comp)?;
    match comp {
        CompositeFunctional::Product { exponents, .. } => {
            let mut acc = 1.0;
            for (i, (&v, &e)) in values.iter().zip(exponents).enumerate() {
                if e < 0 {
                    if v == 0.0 {
                        return Err(Error::DivisionByZero(i));
                    }
                    acc /= v;
                } else {
                    acc *= v;
                }
            }
            Ok(acc)
        }
        CompositeFunctional::Linear { weights, .. } => {
            Ok(values.iter().zip(weights).map(|(v, w)| v * w).sum())
        }
    }
}

/// `C_i = ∂F/∂F_i` at the given component values.
pub fn composite_weights(values: &[f64], comp: &CompositeFunctional) -> Result<Vec<f64>> {
    check_len(values, comp)?;
    match comp {
        CompositeFunctional::Product { exponents, .. } => {
            for (i, (&v, &e)) in values.iter().zip(exponents).enumerate() {
                if e < 0 && v == 0.0 {
                    return Err(Error::DivisionByZero(i));
                }
            }
            Ok((0..values.len())
                .map(|i| {
                    let others: f64 = values
                        .iter()
                        .zip(exponents)
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, (&v, &e))| if e < 0 { 1.0 / v } else { v })
                        .product();
                    let own = if exponents[i] < 0 {
                        -1.0 / (values[i] * values[i])
                    } else {
                        1.0
                    };
                    own * others
                })
                .collect())
        }
        CompositeFunctional::Linear { weights, .. } => Ok(weights.clone()),
    }
}

/// Linear combination of per-component gradients.
pub fn combine_gradients(gradients: &[CellField], weights: &[f64]) -> Vec<Vec4> {
    let n = gradients.first().map_or(0, |g| g.len());
    let mut out = vec![[0.0; 4]; n];
    for (g, &w) in gradients.iter().zip(weights) {
        for (o, v) in out.iter_mut().zip(&g.values) {
            for k in 0..4 {
                o[k] += w * v[k];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs() -> FreestreamSpec {
        FreestreamSpec::standard(0.729, 0.0)
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_vector(FunctionalKind::Drag, 0.0, 1.0), [1.0, 0.0]);
        assert_eq!(beta_vector(FunctionalKind::Lift, 0.0, 1.0), [-0.0, 1.0]);
        // 1.4 · 0.729² / 2
        let t = TargetFunctional::drag("wall", &fs());
        assert!((t.c_inf() - 0.3720087).abs() < 1e-12);
    }

    #[test]
    fn composite_examples() {
        let d = TargetFunctional::drag("wall", &fs());
        let l = TargetFunctional::lift("wall", &fs());
        let ratio = CompositeFunctional::ratio(l.clone(), d.clone());
        let r = composite_evaluate(&[0.406235, 0.0259659], &ratio).unwrap();
        assert!((r - 15.6449).abs() < 5e-5, "{r}");
        let c = composite_weights(&[0.406235, 0.0259659], &ratio).unwrap();
        assert!((c[0] - 38.51204849437146).abs() < 1e-9);
        assert!((c[1] + 602.5187657701443).abs() < 1e-8);

        let prod = CompositeFunctional::product(vec![(l.clone(), 1), (d.clone(), 1)]);
        assert_eq!(composite_evaluate(&[0.0, 3.0], &prod).unwrap(), 0.0);
        assert_eq!(composite_weights(&[2.0, 3.0], &prod).unwrap(), vec![3.0, 2.0]);

        let lin = CompositeFunctional::linear(vec![(l, 1.0), (d, 10.0)]);
        assert!((composite_evaluate(&[2.0, 0.1], &lin).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(composite_weights(&[5.0, 7.0], &lin).unwrap(), vec![1.0, 10.0]);

        assert!(matches!(
            composite_evaluate(&[1.0, 0.0], &ratio),
            Err(Error::DivisionByZero(1))
        ));
        assert!(matches!(
            composite_weights(&[1.0, 0.0], &ratio),
            Err(Error::DivisionByZero(1))
        ));
    }

    #[test]
    fn composite_weights_match_directional_derivative() {
        let d = TargetFunctional::drag("wall", &fs());
        let l = TargetFunctional::lift("wall", &fs());
        let m = TargetFunctional::moment("wall", &fs(), [0.25, 0.0]);
        let comp = CompositeFunctional::product(vec![(l, 1), (d, -1), (m, 1)]);
        let x = [0.7, 0.03, -0.2];
        let dir = [0.3, -0.7, 0.5];
        let c = composite_weights(&x, &comp).unwrap();
        let h = 1e-6;
        let plus: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a - h * b).collect();
        let fd = (composite_evaluate(&plus, &comp).unwrap() - composite_evaluate(&minus, &comp).unwrap())
            / (2.0 * h);
        let lin: f64 = c.iter().zip(&dir).map(|(a, b)| a * b).sum();
        assert!((fd - lin).abs() < 1e-7 * (1.0 + lin.abs()), "{fd} vs {lin}");
    }

    #[test]
    fn composite_shape_is_validated() {
        let d = TargetFunctional::drag("wall", &fs());
        let bad = CompositeFunctional::Product {
            components: vec![d.clone()],
            exponents: vec![2],
        };
        assert!(bad.validate().is_err());
        let bad = CompositeFunctional::Linear {
            components: vec![d],
            weights: vec![],
        };
        assert!(bad.validate().is_err());
    }
}
