//! Ambient-space geometry of the cone.
//!
//! Everything here is coordinate-level linear algebra in R^{N+1}: the
//! conserved quantity `I`, the radial/non-radial split, the tangency
//! parameter and the scaling map. No manifold data is needed; operations
//! are pure functions of the phase point.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Euclidean coordinates in R^{N+1}.
pub type AmbientVector = DVector<f64>;

/// Default tolerance (length² units) below which `I` is treated as zero
/// and the state classified radial.
pub const TOL_RADIAL: f64 = 1e-10;

/// Default residual tolerance for cone-membership tests.
pub const TOL_CONE: f64 = 1e-9;

/// A point of the tangent bundle: position `x` on the cone and velocity
/// `v` in the tangent space at `x`, both in ambient coordinates.
///
/// Unit speed is not required; all formulas are written in their
/// `‖v‖`-normalized forms so affine parametrizations work. The vertex
/// state `x = 0` is allowed (with `v` pointing along a generatrix).
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: AmbientVector,
    pub v: AmbientVector,
}

impl PhasePoint {
    /// Builds a phase point, checking dimensions, finiteness and `‖v‖ > 0`.
    ///
    /// Cone membership is checked separately where a manifold is in scope
    /// (see `manifold::validate_on_cone`).
    pub fn new(x: AmbientVector, v: AmbientVector) -> Result<Self> {
        if x.len() != v.len() {
            return Err(Error::InvalidConfig(format!(
                "position has {} coordinates but velocity has {}",
                x.len(),
                v.len()
            )));
        }
        if x.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig(
                "phase point entries must be finite".into(),
            ));
        }
        if v.norm() == 0.0 {
            return Err(Error::ZeroVelocity);
        }
        Ok(Self { x, v })
    }

    pub fn from_slices(x: &[f64], v: &[f64]) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(x),
            DVector::from_column_slice(v),
        )
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn speed(&self) -> f64 {
        self.v.norm()
    }

    /// Same point with velocity rescaled to unit norm.
    pub fn unit_speed(&self) -> Self {
        Self {
            x: self.x.clone(),
            v: &self.v / self.v.norm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Radial,
    NonRadial,
}

/// Result of the radial/non-radial split, carrying the value of `I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub kind: Kind,
    pub i_value: f64,
}

impl Classification {
    pub fn is_radial(&self) -> bool {
        self.kind == Kind::Radial
    }
}

/// The conserved quantity `I = ‖x‖² − ⟨x,v⟩²/‖v‖²`: the squared distance
/// from the vertex to the line through `x` with direction `v`.
///
/// Always nonnegative in exact arithmetic; tiny negatives from round-off
/// (within `TOL_RADIAL`) are clamped to zero. Homogeneous of degree 2 in
/// `x` and degree 0 in `v`.
pub fn integral_i(p: &PhasePoint) -> Result<f64> {
    let v2 = p.v.norm_squared();
    if v2 == 0.0 {
        return Err(Error::ZeroVelocity);
    }
    let xv = p.x.dot(&p.v);
    let i = p.x.norm_squared() - xv * xv / v2;
    // I >= 0 is a theorem; negatives are cancellation noise.
    Ok(i.max(0.0))
}

/// Splits a state into radial (generatrix) vs non-radial by comparing
/// `I` against `tol_radial`.
pub fn classify(p: &PhasePoint, tol_radial: f64) -> Result<Classification> {
    let i = integral_i(p)?;
    let kind = if i <= tol_radial {
        Kind::Radial
    } else {
        Kind::NonRadial
    };
    Ok(Classification { kind, i_value: i })
}

/// The unique parameter `s₀ = −⟨x,v⟩/‖v‖²` at which `⟨γ(s), γ′(s)⟩ = 0`,
/// i.e. where the geodesic touches the sphere of radius `√I`.
///
/// `⟨γ,γ′⟩` is affine in `s` with slope `‖v‖²` along any cone geodesic,
/// which gives the closed form and the affine-parameter scaling
/// `s₀(x, c·v) = s₀(x, v)/c`.
pub fn tangency_parameter(p: &PhasePoint) -> Result<f64> {
    if classify(p, TOL_RADIAL)?.is_radial() {
        return Err(Error::RadialState);
    }
    Ok(-p.x.dot(&p.v) / p.v.norm_squared())
}

/// The scaling map `(x, v) ↦ (a1·x, a1·a2·v)`: the state at parameter 0
/// of the geodesic `a1·γ(a2·s)`. Multiplies `I` by `a1²` and the speed
/// by `|a1·a2|`.
pub fn scale_phase(p: &PhasePoint, a1: f64, a2: f64) -> Result<PhasePoint> {
    if a1 == 0.0 || a2 == 0.0 {
        return Err(Error::ZeroScale);
    }
    Ok(PhasePoint {
        x: &p.x * a1,
        v: &p.v * (a1 * a2),
    })
}
