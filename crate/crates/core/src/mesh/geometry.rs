use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// Analytic boundary curve used to place new midpoints on refined boundary edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryCurve {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    /// NACA 4-digit section with leading edge at `origin`, chord along +x.
    Naca4 {
        code: String,
        chord: f64,
        origin: [f64; 2],
    },
    /// Lower wall `y = Σ h·exp(−((x − c)/w)²)`, entries are `(c, h, w)`.
    GaussianBumps { bumps: Vec<[f64; 3]> },
    Polyline { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Naca4Params {
    pub camber: f64,
    pub camber_pos: f64,
    pub thickness: f64,
}

impl Naca4Params {
    pub fn parse(code: &str) -> Option<Self> {
        let digits: Vec<u32> = code.chars().map(|c| c.to_digit(10)).collect::<Option<_>>()?;
        if digits.len() != 4 {
            return None;
        }
        Some(Self {
            camber: digits[0] as f64 / 100.0,
            camber_pos: digits[1] as f64 / 10.0,
            thickness: (digits[2] * 10 + digits[3]) as f64 / 100.0,
        })
    }

    /// Half thickness at chord fraction `x`, closed trailing edge.
    pub fn half_thickness(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        5.0 * self.thickness
            * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x.powi(3)
                - 0.1036 * x.powi(4))
    }

    pub fn camber_line(&self, x: f64) -> f64 {
        let (m, p) = (self.camber, self.camber_pos);
        if m == 0.0 || p == 0.0 {
            0.0
        } else if x < p {
            m / (p * p) * (2.0 * p * x - x * x)
        } else {
            m / ((1.0 - p) * (1.0 - p)) * (1.0 - 2.0 * p + 2.0 * p * x - x * x)
        }
    }

    /// Surface point for angle parameter `theta`: 0 is the trailing edge, π the
    /// leading edge, upper surface for θ ∈ [0, π].
    pub fn surface(&self, theta: f64) -> [f64; 2] {
        let theta = theta.rem_euclid(TAU);
        let x = 0.5 * (1.0 + theta.cos());
        let yt = self.half_thickness(x);
        let yc = self.camber_line(x);
        if theta <= PI {
            [x, yc + yt]
        } else {
            [x, yc - yt]
        }
    }

    pub fn parameter(&self, p: [f64; 2]) -> f64 {
        let x = p[0].clamp(0.0, 1.0);
        let theta = (2.0 * x - 1.0).clamp(-1.0, 1.0).acos();
        if p[1] < self.camber_line(x) {
            TAU - theta
        } else {
            theta
        }
    }
}

impl BoundaryCurve {
    /// Point on the curve that replaces the straight midpoint of edge `a`–`b`.
    pub fn midpoint(&self, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        match self {
            BoundaryCurve::Circle { center, radius } => {
                let d = [mid[0] - center[0], mid[1] - center[1]];
                let r = d[0].hypot(d[1]);
                if r == 0.0 {
                    return mid;
                }
                [center[0] + radius * d[0] / r, center[1] + radius * d[1] / r]
            }
            BoundaryCurve::Naca4 {
                code,
                chord,
                origin,
            } => {
                let Some(params) = Naca4Params::parse(code) else {
                    return mid;
                };
                let local = |p: [f64; 2]| [(p[0] - origin[0]) / chord, (p[1] - origin[1]) / chord];
                let mut ta = params.parameter(local(a));
                let mut tb = params.parameter(local(b));
                if (ta - tb).abs() > PI {
                    if ta < tb {
                        ta += TAU;
                    } else {
                        tb += TAU;
                    }
                }
                let s = params.surface(0.5 * (ta + tb));
                [origin[0] + chord * s[0], origin[1] + chord * s[1]]
            }
            BoundaryCurve::GaussianBumps { bumps } => [mid[0], bump_height(bumps, mid[0])],
            BoundaryCurve::Polyline { points } => closest_on_polyline(points, mid).unwrap_or(mid),
        }
    }
}

pub fn bump_height(bumps: &[[f64; 3]], x: f64) -> f64 {
    bumps
        .iter()
        .map(|[c, h, w]| h * (-((x - c) / w).powi(2)).exp())
        .sum()
}

fn closest_on_polyline(points: &[[f64; 2]], p: [f64; 2]) -> Option<[f64; 2]> {
    points
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let t = if len2 > 0.0 {
                (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let q = [a[0] + t * d[0], a[1] + t * d[1]];
            ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2), q)
        })
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(_, q)| q)
}
