//! The integral system that pins down non-radial geodesics: the
//! tangency-state vector J (position and velocity where the geodesic
//! touches the sphere of radius √I), its continuous extension
//! I^k = I·J^k vanishing on radial states, recovery of (I, J) from the
//! I-vector, and geodesic reconstruction.

use nalgebra::DVector;

use crate::ambient::{classify, scale_phase, AmbientVector, PhasePoint, TOL_RADIAL};
use crate::engine::{flow, Backend, IntegratorSettings};
use crate::error::{Error, Result};
use crate::manifold::{validate_on_cone, Manifold};

/// Ambient position and velocity at the tangency point, for the
/// canonical unit-speed parametrization of the orbit.
#[derive(Debug, Clone)]
pub struct JVector {
    pub position: AmbientVector,
    pub velocity: AmbientVector,
}

impl JVector {
    /// Flat 2(N+1)-vector (position then velocity coordinates).
    pub fn flatten(&self) -> Vec<f64> {
        self.position
            .iter()
            .chain(self.velocity.iter())
            .copied()
            .collect()
    }
}

/// The 2N+2 continuous first integrals I^k = I·J^k (all zero exactly on
/// radial states).
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralVector {
    pub values: Vec<f64>,
}

impl IntegralVector {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// The tangency state of the orbit through `p`: flows the unit-speed
/// normalization of `p` to its tangency parameter s₀ = −⟨x, v/‖v‖⟩ and
/// returns (γ(s₀), γ′(s₀)).
///
/// Constant along orbits, so it is a 2N+2-component first integral of
/// the flow on non-radial states.
pub fn integrals_j(
    m: &Manifold,
    p: &PhasePoint,
    backend: Backend,
    settings: &IntegratorSettings,
) -> Result<JVector> {
    if classify(p, TOL_RADIAL)?.is_radial() {
        return Err(Error::RadialState);
    }
    let unit = p.unit_speed();
    let s0 = -unit.x.dot(&unit.v);
    let at_tangency = flow(m, &unit, s0, backend, settings)?;
    Ok(JVector {
        position: at_tangency.x,
        velocity: at_tangency.v,
    })
}

/// The continuous integral vector: exactly zero for radial states
/// (including vertex states), I·J^k componentwise otherwise.
pub fn integrals_i_vec(
    m: &Manifold,
    p: &PhasePoint,
    backend: Backend,
    settings: &IntegratorSettings,
) -> Result<IntegralVector> {
    let class = classify(p, TOL_RADIAL)?;
    if class.is_radial() {
        return Ok(IntegralVector {
            values: vec![0.0; 2 * p.dim()],
        });
    }
    let j = integrals_j(m, p, backend, settings)?;
    let i = class.i_value;
    Ok(IntegralVector {
        values: j.flatten().iter().map(|c| i * c).collect(),
    })
}

/// Recovers (I, J) from a nonzero integral vector: the position block
/// satisfies Σ(I^k)² = I³, so I = cbrt(Σ(I^k)²) and J^k = I^k / I.
pub fn recover(iv: &IntegralVector) -> Result<(f64, JVector)> {
    if iv.is_zero() {
        return Err(Error::ZeroVector);
    }
    let len = iv.values.len();
    if len % 2 != 0 || len < 4 {
        return Err(Error::InvalidConfig(format!(
            "integral vector length {len} is not 2(N+1)"
        )));
    }
    let half = len / 2;
    let pos_sq: f64 = iv.values[..half].iter().map(|v| v * v).sum();
    let i = pos_sq.cbrt();
    if i <= 0.0 {
        // Zero position block with nonzero velocity block cannot come
        // from I·(γ(s₀), γ′(s₀)) with ‖γ(s₀)‖² = I > 0.
        return Err(Error::NotOnCone {
            residual: f64::INFINITY,
            tol: 0.0,
        });
    }
    let position = DVector::from_iterator(half, iv.values[..half].iter().map(|v| v / i));
    let velocity = DVector::from_iterator(half, iv.values[half..].iter().map(|v| v / i));
    Ok((i, JVector { position, velocity }))
}

/// Reconstructs the geodesic a (consistent) integral vector determines:
/// returns its phase point at the tangency parameter. The recovered
/// state is validated against the cone; inconsistent vectors fail with
/// `NotOnCone`.
pub fn reconstruct_geodesic(m: &Manifold, iv: &IntegralVector) -> Result<PhasePoint> {
    let (i, j) = recover(iv)?;
    let tol = m.numerics.tol_cone;

    // Off-image detection: the J invariants must hold before we even
    // look at the cone.
    let pos_norm_sq = j.position.norm_squared();
    if (pos_norm_sq - i).abs() > 1e-6 * i.max(1.0) {
        return Err(Error::NotOnCone {
            residual: (pos_norm_sq - i).abs(),
            tol,
        });
    }
    let speed = j.velocity.norm();
    if (speed - 1.0).abs() > 1e-6 {
        return Err(Error::NotOnCone {
            residual: (speed - 1.0).abs(),
            tol,
        });
    }
    let phi = j.position.dot(&j.velocity);
    if phi.abs() > 1e-6 * i.max(1.0) {
        return Err(Error::NotOnCone {
            residual: phi.abs(),
            tol,
        });
    }

    let p = PhasePoint::new(j.position, j.velocity)?;
    validate_on_cone(m, &p, tol)?;
    Ok(p)
}

/// Canonical-speed rescaling helper: reparametrizes the reconstructed
/// tangency state to a requested speed (the I-vector itself fixes only
/// the unit-speed data).
pub fn with_speed(p: &PhasePoint, speed: f64) -> Result<PhasePoint> {
    scale_phase(p, 1.0, speed / p.speed())
}

#[cfg(test)]
mod tests;
