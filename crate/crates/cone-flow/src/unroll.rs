//! Exact geodesics on round cones (cones over circles) by planar
//! development: cutting the cone along a generatrix and flattening it
//! isometrically onto the plane maps geodesics to straight lines.
//!
//! With sin α = ρ/√(1+ρ²) (half-angle sine), a cone point (t, u) maps
//! to planar polar coordinates (r, ψ) = (|t|, u·sin α). The module is
//! deliberately self-contained — it shares no chart or metric code with
//! the production path, so it can serve as an independent ground truth
//! for the integrators.

use nalgebra::DVector;

use crate::ambient::AmbientVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RoundConeSpec {
    pub rho: f64,
}

impl RoundConeSpec {
    pub fn new(rho: f64) -> Result<Self> {
        if rho <= 0.0 {
            return Err(Error::InvalidConfig("round cone needs rho > 0".into()));
        }
        Ok(Self { rho })
    }

    /// sin α = ρ/√(1+ρ²) ∈ (0, 1).
    pub fn sin_alpha(&self) -> f64 {
        self.rho / (1.0 + self.rho * self.rho).sqrt()
    }
}

/// A launch developed into the plane: the geodesic is the straight
/// line through (r0, ψ0) with the given heading, traversed at unit
/// speed.
#[derive(Debug, Clone, Copy)]
pub struct DevelopedLaunch {
    pub r0: f64,
    pub psi0: f64,
    /// Polar angle of the planar velocity.
    pub heading: f64,
    /// Parameter of closest approach to the origin.
    pub s0: f64,
    /// Impact parameter d (closest distance); d² = I.
    pub impact: f64,
    /// Polar angle of the closest-approach point.
    psi_foot: f64,
    /// Rotation direction of ψ along the line (±1).
    chi: f64,
    /// Sign of t (lower cone states develop identically).
    sign_t: f64,
    sin_alpha: f64,
}

/// Develops a chart-state launch (t0, u0, dt0, du0) into the plane.
/// The launch must have unit ambient speed and must not head along the
/// radius (radial states have no development line off the origin).
pub fn unroll_state(
    spec: &RoundConeSpec,
    t0: f64,
    u0: f64,
    dt0: f64,
    du0: f64,
) -> Result<DevelopedLaunch> {
    if t0 == 0.0 {
        return Err(Error::RadialState);
    }
    let sa = spec.sin_alpha();
    let sign_t = t0.signum();
    let r0 = t0.abs();
    let psi0 = u0 * sa;
    let dr0 = sign_t * dt0;
    let dpsi0 = sa * du0;

    let speed_sq = dr0 * dr0 + r0 * r0 * dpsi0 * dpsi0;
    if (speed_sq - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "development expects unit ambient speed, got ||v||² = {speed_sq}"
        )));
    }

    let (sp, cp) = psi0.sin_cos();
    let p0 = [r0 * cp, r0 * sp];
    let w = [dr0 * cp - r0 * sp * dpsi0, dr0 * sp + r0 * cp * dpsi0];

    let p0w = p0[0] * w[0] + p0[1] * w[1];
    let cross = p0[0] * w[1] - p0[1] * w[0];
    let d_sq = (r0 * r0 - p0w * p0w).max(0.0);
    if d_sq <= 1e-12 {
        return Err(Error::RadialState);
    }
    let impact = d_sq.sqrt();
    let s0 = -p0w;
    let foot = [p0[0] + s0 * w[0], p0[1] + s0 * w[1]];
    let mut psi_foot = foot[1].atan2(foot[0]);
    let chi = cross.signum();

    // Keep u(0) on the caller's branch: shift psi_foot by whole turns
    // so the line's angle at s = 0 reproduces psi0 exactly.
    let psi_at_0 = psi_foot + chi * (-s0 / impact).atan();
    let turns = ((psi0 - psi_at_0) / std::f64::consts::TAU).round();
    psi_foot += std::f64::consts::TAU * turns;

    Ok(DevelopedLaunch {
        r0,
        psi0,
        heading: w[1].atan2(w[0]),
        s0,
        impact,
        psi_foot,
        chi,
        sign_t,
        sin_alpha: sa,
    })
}

/// Chart state (t, u) of the developed geodesic at arc length `s`:
///   t(s) = ±√((s−s₀)² + d²),
///   u(s) = (ψ_foot + χ·arctan((s−s₀)/d)) / sin α,
/// continuous in s (no angle wrapping).
pub fn oracle_position(init: &DevelopedLaunch, s: f64) -> (f64, f64) {
    let rel = s - init.s0;
    let t = init.sign_t * rel.hypot(init.impact);
    let psi = init.psi_foot + init.chi * (rel / init.impact).atan();
    (t, psi / init.sin_alpha)
}

/// Chart velocity (dt, du) at arc length `s`.
pub fn oracle_velocity(init: &DevelopedLaunch, s: f64) -> (f64, f64) {
    let rel = s - init.s0;
    let r = rel.hypot(init.impact);
    let dt = init.sign_t * rel / r;
    let du = init.chi * init.impact / (r * r * init.sin_alpha);
    (dt, du)
}

/// The conserved quantity of the launch: the squared impact parameter
/// of the development line.
pub fn oracle_i(init: &DevelopedLaunch) -> f64 {
    init.impact * init.impact
}

/// Ambient state of the developed geodesic, from the raw chart
/// formulas of the round cone (independent of the production chart
/// code): q(u) = (ρ cos u, ρ sin u, 1)/√(1+ρ²).
pub fn oracle_ambient(
    spec: &RoundConeSpec,
    init: &DevelopedLaunch,
    s: f64,
) -> (AmbientVector, AmbientVector) {
    let (t, u) = oracle_position(init, s);
    let (dt, du) = oracle_velocity(init, s);
    let scale = (1.0 + spec.rho * spec.rho).sqrt();
    let (su, cu) = u.sin_cos();
    let q = DVector::from_vec(vec![spec.rho * cu / scale, spec.rho * su / scale, 1.0 / scale]);
    let qu = DVector::from_vec(vec![-spec.rho * su / scale, spec.rho * cu / scale, 0.0]);
    let x = &q * t;
    let v = q * dt + qu * (t * du);
    (x, v)
}
