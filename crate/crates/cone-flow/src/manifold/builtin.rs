//! Built-in chart families: circle, ellipse, torus and sphere, all
//! placed in the hyperplane {x^{N+1} = 1} so the cone vertex sits at the
//! coordinate origin. Each is covered by a single (periodic) chart with
//! analytic first and second derivatives and a closed-form inversion.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use std::f64::consts::{PI, TAU};

/// Margin kept away from the sphere chart's polar singularities when
/// sampling initial conditions.
const SPHERE_POLE_MARGIN: f64 = 0.3;

/// Serializable description of a built-in manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum ManifoldConfig {
    /// Circle of radius rho in the plane {x³ = 1} ⊂ R³.
    Circle { rho: f64 },
    /// Axis-aligned ellipse with semi-axes a, b in {x³ = 1} ⊂ R³.
    Ellipse { a: f64, b: f64 },
    /// Torus of revolution with major radius R and minor radius r in
    /// {x⁴ = 1} ⊂ R⁴.
    Torus {
        #[serde(rename = "R")]
        major: f64,
        #[serde(rename = "r")]
        minor: f64,
    },
    /// Round 2-sphere of radius rho centered at (center, 1) in {x⁴ = 1}.
    Sphere {
        rho: f64,
        #[serde(default)]
        center: [f64; 3],
    },
}

impl ManifoldConfig {
    pub fn circle(rho: f64) -> Self {
        Self::Circle { rho }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Self::Ellipse { a, b }
    }

    pub fn torus(major: f64, minor: f64) -> Self {
        Self::Torus { major, minor }
    }

    pub fn sphere(rho: f64, center: [f64; 3]) -> Self {
        Self::Sphere { rho, center }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Circle { rho } => rho > 0.0,
            Self::Ellipse { a, b } => a > 0.0 && b > 0.0,
            Self::Torus { major, minor } => major > minor && minor > 0.0,
            Self::Sphere { rho, .. } => rho > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "manifold parameters out of range: {self:?}"
            )))
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Self::Circle { .. } | Self::Ellipse { .. } => 1,
            Self::Torus { .. } | Self::Sphere { .. } => 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Self::Circle { .. } | Self::Ellipse { .. } => 3,
            Self::Torus { .. } | Self::Sphere { .. } => 4,
        }
    }

    pub fn periods(&self) -> Vec<Option<f64>> {
        match self {
            Self::Circle { .. } | Self::Ellipse { .. } => vec![Some(TAU)],
            Self::Torus { .. } => vec![Some(TAU), Some(TAU)],
            Self::Sphere { .. } => vec![Some(TAU), None],
        }
    }

    pub fn domain(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Circle { .. } | Self::Ellipse { .. } => vec![(0.0, TAU)],
            Self::Torus { .. } => vec![(0.0, TAU), (0.0, TAU)],
            Self::Sphere { .. } => vec![(0.0, TAU), (0.0, PI)],
        }
    }

    pub fn sample_domain(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Sphere { .. } => vec![
                (0.0, TAU),
                (SPHERE_POLE_MARGIN, PI - SPHERE_POLE_MARGIN),
            ],
            other => other.domain(),
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            Self::Circle { rho } => format!("circle(rho={rho})"),
            Self::Ellipse { a, b } => format!("ellipse(a={a},b={b})"),
            Self::Torus { major, minor } => format!("torus(R={major},r={minor})"),
            Self::Sphere { rho, center } => {
                format!("sphere(rho={rho},center=[{},{},{}])", center[0], center[1], center[2])
            }
        }
    }

    pub fn eval(&self, u: &[f64]) -> DVector<f64> {
        match *self {
            Self::Circle { rho } => {
                DVector::from_vec(vec![rho * u[0].cos(), rho * u[0].sin(), 1.0])
            }
            Self::Ellipse { a, b } => DVector::from_vec(vec![a * u[0].cos(), b * u[0].sin(), 1.0]),
            Self::Torus { major, minor } => {
                let (su, cu) = u[0].sin_cos();
                let (sw, cw) = u[1].sin_cos();
                let ring = major + minor * cw;
                DVector::from_vec(vec![ring * cu, ring * su, minor * sw, 1.0])
            }
            Self::Sphere { rho, center } => {
                let (su, cu) = u[0].sin_cos();
                let (sw, cw) = u[1].sin_cos();
                DVector::from_vec(vec![
                    center[0] + rho * sw * cu,
                    center[1] + rho * sw * su,
                    center[2] + rho * cw,
                    1.0,
                ])
            }
        }
    }

    pub fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        match *self {
            Self::Circle { rho } => {
                DMatrix::from_column_slice(3, 1, &[-rho * u[0].sin(), rho * u[0].cos(), 0.0])
            }
            Self::Ellipse { a, b } => {
                DMatrix::from_column_slice(3, 1, &[-a * u[0].sin(), b * u[0].cos(), 0.0])
            }
            Self::Torus { major, minor } => {
                let (su, cu) = u[0].sin_cos();
                let (sw, cw) = u[1].sin_cos();
                let ring = major + minor * cw;
                DMatrix::from_column_slice(
                    4,
                    2,
                    &[
                        -ring * su,
                        ring * cu,
                        0.0,
                        0.0,
                        -minor * sw * cu,
                        -minor * sw * su,
                        minor * cw,
                        0.0,
                    ],
                )
            }
            Self::Sphere { rho, .. } => {
                let (su, cu) = u[0].sin_cos();
                let (sw, cw) = u[1].sin_cos();
                DMatrix::from_column_slice(
                    4,
                    2,
                    &[
                        -rho * sw * su,
                        rho * sw * cu,
                        0.0,
                        0.0,
                        rho * cw * cu,
                        rho * cw * su,
                        -rho * sw,
                        0.0,
                    ],
                )
            }
        }
    }

    /// One n×n matrix per ambient coordinate: out[a][(i,j)] = ∂²pᵃ/∂uⁱ∂uʲ.
    pub fn hessian(&self, u: &[f64]) -> Vec<DMatrix<f64>> {
        match *self {
            Self::Circle { rho } => {
                let (su, cu) = u[0].sin_cos();
                vec![
                    DMatrix::from_element(1, 1, -rho * cu),
                    DMatrix::from_element(1, 1, -rho * su),
                    DMatrix::zeros(1, 1),
                ]
            }
            Self::Ellipse { a, b } => {
                let (su, cu) = u[0].sin_cos();
                vec![
                    DMatrix::from_element(1, 1, -a * cu),
                    DMatrix::from_element(1, 1, -b * su),
                    DMatrix::zeros(1, 1),
                ]
            }
            Self::Torus { major, minor } => {
                let (su, cu) = u[0].sin_cos();
                let (sw, cw) = u[1].sin_cos();
                let ring = major + minor * cw;
                let h1 = DMatrix::from_row_slice(
                    2,
                    2,
                    &[-ring * cu, minor * sw * su, minor * sw * su, -minor * cw * cu],
                );
                let h2 = DMatrix::from_row_slice(
                    2,
                    2,
                    &[-ring * su, -minor * sw * cu, -minor * sw * cu, -minor * cw * su],
                );
                let h3 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -minor * sw]);
                vec![h1, h2, h3, DMatrix::zeros(2, 2)]
            }
            Self::Sphere { rho, .. } => {
                let (su, cu) = u[0].sin_cos();
                let (sw, cw) = u[1].sin_cos();
                let h1 = DMatrix::from_row_slice(
                    2,
                    2,
                    &[-rho * sw * cu, -rho * cw * su, -rho * cw * su, -rho * sw * cu],
                );
                let h2 = DMatrix::from_row_slice(
                    2,
                    2,
                    &[-rho * sw * su, rho * cw * cu, rho * cw * cu, -rho * sw * su],
                );
                let h3 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -rho * cw]);
                vec![h1, h2, h3, DMatrix::zeros(2, 2)]
            }
        }
    }

    /// Closed-form inversion: chart coordinates of a point `p_hyper`
    /// already rescaled to the hyperplane (last coordinate 1). Angles
    /// land in the fundamental domain.
    pub fn invert(&self, p_hyper: &DVector<f64>) -> Option<Vec<f64>> {
        match *self {
            Self::Circle { .. } => Some(vec![p_hyper[1].atan2(p_hyper[0]).rem_euclid(TAU)]),
            Self::Ellipse { a, b } => {
                Some(vec![(p_hyper[1] / b).atan2(p_hyper[0] / a).rem_euclid(TAU)])
            }
            Self::Torus { major, minor } => {
                let u = p_hyper[1].atan2(p_hyper[0]).rem_euclid(TAU);
                let ring = p_hyper[0].hypot(p_hyper[1]);
                let w = (p_hyper[2] / minor)
                    .atan2((ring - major) / minor)
                    .rem_euclid(TAU);
                Some(vec![u, w])
            }
            Self::Sphere { rho, center } => {
                let d = [
                    p_hyper[0] - center[0],
                    p_hyper[1] - center[1],
                    p_hyper[2] - center[2],
                ];
                let w = (d[2] / rho).clamp(-1.0, 1.0).acos();
                let u = if d[0] == 0.0 && d[1] == 0.0 {
                    0.0
                } else {
                    d[1].atan2(d[0]).rem_euclid(TAU)
                };
                Some(vec![u, w])
            }
        }
    }
}
