//! The dictionary between non-radial cone geodesics and unit-speed link
//! geodesics: radial projection with s = tan(s̃), the lift backend,
//! asymptotic directions, and wrap-count / self-intersection
//! diagnostics.
//!
//! Canonical form: a non-radial geodesic is normalized to I = 1, unit
//! speed, and tangency at s = 0. Under that normalization the radial
//! projection γ̃(s̃) = γ(tan s̃)/‖γ(tan s̃)‖ is an arc-length geodesic of
//! Σ on s̃ ∈ (−π/2, π/2), and the inverse lift is
//! γ(s) = γ̃(arctan s)·√(s²+1).

use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;

use crate::ambient::{classify, integral_i, scale_phase, AmbientVector, PhasePoint, TOL_RADIAL};
use crate::engine::{flow, flow_sigma, Backend, IntegratorSettings, SigmaTrajectory, Trajectory};
use crate::error::{Error, Result};
use crate::manifold::{ambient_to_chart, induced_metric, sigma_frame, Manifold, ManifoldConfig};
use crate::rk::StepStats;

/// A unit-speed geodesic of the link Σ with the tangency direction
/// anchored at s̃ = 0, evaluable on a sub-interval of [−π/2, π/2].
#[derive(Debug, Clone)]
pub struct SigmaGeodesic {
    manifold: Manifold,
    backing: Backing,
}

#[derive(Debug, Clone)]
enum Backing {
    /// Chart-space Σ integration from the projected state of a phase
    /// point. `sign` is −1 on the lower cone (the projection lands on
    /// the antipodal link component −q(u)).
    Chart {
        sign: f64,
        anchor: f64,
        u0: Vec<f64>,
        du0: Vec<f64>,
        backward: Option<SigmaTrajectory>,
        forward: Option<SigmaTrajectory>,
        stats: StepStats,
    },
    /// Direct radial projection of a canonical cone trajectory.
    Projected { traj: Box<Trajectory> },
}

impl SigmaGeodesic {
    /// Builds the projected link geodesic of the orbit through `p`
    /// (any non-radial state, any speed) by integrating on Σ, covering
    /// at least `range` in s̃.
    ///
    /// The canonical data is read off `p` algebraically: with v̂ = v/‖v‖
    /// the projection of the state sits at s̃_p = arctan(⟨x,v̂⟩/√I) with
    ///   q(s̃_p)  = x/‖x‖,
    ///   q′(s̃_p) = (‖x‖²·v̂ − ⟨x,v̂⟩·x)/(‖x‖·√I).
    pub fn from_phase_point(
        m: &Manifold,
        p: &PhasePoint,
        range: (f64, f64),
        settings: &IntegratorSettings,
    ) -> Result<Self> {
        let class = classify(p, TOL_RADIAL)?;
        if class.is_radial() {
            return Err(Error::RadialState);
        }
        let i = class.i_value;
        let sqrt_i = i.sqrt();
        let v_hat = &p.v / p.v.norm();
        let xn = p.x.norm();
        let xv = p.x.dot(&v_hat);
        let anchor = (xv / sqrt_i).atan();

        let dq0_amb = (&v_hat * (xn * xn) - &p.x * xv) / (xn * sqrt_i);

        let (t_x, u0) = ambient_to_chart(m, &p.x)?;
        let sign = t_x.signum();
        let (_, jq) = sigma_frame(m, &u0)?;
        let sigma = induced_metric(m, &u0)?;
        let du0 = sigma.solve(&(jq.transpose() * (&dq0_amb * sign)));
        let du0 = du0.as_slice().to_vec();
        debug_assert!((sigma.norm(&du0) - 1.0).abs() < 1e-6);

        let lo = range.0.min(anchor).max(-FRAC_PI_2);
        let hi = range.1.max(anchor).min(FRAC_PI_2);

        let mut stats = StepStats::default();
        let backward = if lo < anchor {
            let t = flow_sigma(m, &u0, &du0, (anchor, lo), settings)?;
            stats.accepted += t.stats.accepted;
            stats.rejected += t.stats.rejected;
            stats.fevals += t.stats.fevals;
            Some(t)
        } else {
            None
        };
        let forward = if hi > anchor {
            let t = flow_sigma(m, &u0, &du0, (anchor, hi), settings)?;
            stats.accepted += t.stats.accepted;
            stats.rejected += t.stats.rejected;
            stats.fevals += t.stats.fevals;
            Some(t)
        } else {
            None
        };

        Ok(Self {
            manifold: m.clone(),
            backing: Backing::Chart {
                sign,
                anchor,
                u0,
                du0,
                backward,
                forward,
                stats,
            },
        })
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    /// Covered s̃ interval.
    pub fn domain(&self) -> (f64, f64) {
        match &self.backing {
            Backing::Chart {
                anchor,
                backward,
                forward,
                ..
            } => {
                let lo = backward.as_ref().map_or(*anchor, |t| t.span().1);
                let hi = forward.as_ref().map_or(*anchor, |t| t.span().1);
                (lo, hi)
            }
            Backing::Projected { traj } => {
                let (a, b) = traj.span();
                (a.atan(), b.atan())
            }
        }
    }

    pub fn stats(&self) -> StepStats {
        match &self.backing {
            Backing::Chart { stats, .. } => *stats,
            Backing::Projected { traj } => traj.meta.stats,
        }
    }

    /// Chart coordinates (u, du/ds̃) at s̃; None for projection-backed
    /// geodesics (those only expose ambient values).
    pub fn eval_chart(&self, s_tilde: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.backing {
            Backing::Chart {
                anchor,
                u0,
                du0,
                backward,
                forward,
                ..
            } => {
                let branch = if s_tilde >= *anchor {
                    forward.as_ref()
                } else {
                    backward.as_ref()
                };
                match branch {
                    Some(t) => Some(t.eval_chart(s_tilde)),
                    None => Some((u0.clone(), du0.clone())),
                }
            }
            Backing::Projected { .. } => None,
        }
    }

    /// Link point γ̃(s̃) and derivative γ̃′(s̃) in ambient coordinates.
    pub fn eval(&self, s_tilde: f64) -> (AmbientVector, AmbientVector) {
        match &self.backing {
            Backing::Chart { sign, .. } => {
                let (u, du) = self.eval_chart(s_tilde).expect("chart backing");
                let (q, jq) = sigma_frame(&self.manifold, &u).expect("chart state in domain");
                let dq = &jq * DVector::from_column_slice(&du);
                (q * *sign, dq * *sign)
            }
            Backing::Projected { traj } => {
                let s = s_tilde.tan();
                let (x, v) = traj.dense_eval(s);
                let q = &x / x.norm();
                // γ̃′(s̃) = −sin(s̃)·γ(tan s̃) + γ′(tan s̃)/cos(s̃) for the
                // canonical normalization.
                let dq = &x * (-s_tilde.sin()) + &v / s_tilde.cos();
                (q, dq)
            }
        }
    }
}

/// Radial projection of a canonical cone trajectory (I = 1, unit speed,
/// tangency at s = 0) onto Σ with the reparametrization s = tan(s̃).
pub fn project_geodesic(traj: Trajectory) -> Result<SigmaGeodesic> {
    if traj.meta.backend == "radial" || traj.meta.initial_i <= TOL_RADIAL {
        return Err(Error::RadialState);
    }
    let p0 = traj.initial_state();
    let i = integral_i(&p0)?;
    if (i - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized(format!("I = {i}, expected 1")));
    }
    let speed = p0.speed();
    if (speed - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized(format!(
            "speed = {speed}, expected 1"
        )));
    }
    let phi0 = p0.x.dot(&p0.v);
    if phi0.abs() > 1e-6 {
        return Err(Error::NotNormalized(format!(
            "tangency not at s = 0 (<x,v> = {phi0})"
        )));
    }
    let manifold = traj.manifold().clone();
    Ok(SigmaGeodesic {
        manifold,
        backing: Backing::Projected {
            traj: Box::new(traj),
        },
    })
}

/// The lift γ(s) = γ̃(arctan s)·√(s²+1) of a link geodesic, rescaled to
/// a prescribed integral value and speed.
#[derive(Debug, Clone)]
pub struct LiftedGeodesic {
    sigma: SigmaGeodesic,
    a1: f64,
    a2: f64,
}

impl LiftedGeodesic {
    /// State of the lifted geodesic at parameter `s` (tangency at 0).
    pub fn eval(&self, s: f64) -> PhasePoint {
        let s_base = self.a2 * s;
        let s_tilde = s_base.atan();
        let (q, dq) = self.sigma.eval(s_tilde);
        let stretch = s_base.hypot(1.0);
        let x = &q * (self.a1 * stretch);
        let v = (dq * s_tilde.cos() + q * s_tilde.sin()) * (self.a1 * self.a2);
        PhasePoint { x, v }
    }

    pub fn sigma(&self) -> &SigmaGeodesic {
        &self.sigma
    }
}

/// Builds the lift of `sg` carrying integral `i_target` and speed
/// `speed`; its tangency point is γ̃(0)·√i_target at s = 0.
pub fn lift_geodesic(sg: SigmaGeodesic, i_target: f64, speed: f64) -> Result<LiftedGeodesic> {
    if i_target <= 0.0 || speed <= 0.0 {
        return Err(Error::InvalidConfig(
            "lift needs a positive integral value and speed".into(),
        ));
    }
    let a1 = i_target.sqrt();
    Ok(LiftedGeodesic {
        sigma: sg,
        a1,
        a2: speed / a1,
    })
}

/// The lift backend for the geodesic flow through an arbitrary
/// non-radial phase point: Σ-side integration plus the algebraic lift,
/// carrying the original speed and parameter origin.
#[derive(Debug, Clone)]
pub struct LiftedFlow {
    sigma: SigmaGeodesic,
    sqrt_i: f64,
    /// Unit-speed parameter of the tangency point, measured from the
    /// state (σ₀ = −⟨x, v̂⟩).
    sigma0: f64,
    speed: f64,
    sign_t: f64,
    i_value: f64,
}

impl LiftedFlow {
    /// Prepares the lift so that it can evaluate everywhere in `span`
    /// (cone parameter, state at 0).
    pub fn from_phase_point(
        m: &Manifold,
        p: &PhasePoint,
        span: (f64, f64),
        settings: &IntegratorSettings,
    ) -> Result<Self> {
        let class = classify(p, TOL_RADIAL)?;
        if class.is_radial() {
            return Err(Error::RadialState);
        }
        let i = class.i_value;
        let sqrt_i = i.sqrt();
        let speed = p.speed();
        let v_hat = &p.v / speed;
        let sigma0 = -p.x.dot(&v_hat);

        let s_tilde_of = |s: f64| ((speed * s - sigma0) / sqrt_i).atan();
        let range = (s_tilde_of(span.0.min(span.1)), s_tilde_of(span.0.max(span.1)));
        let sigma = SigmaGeodesic::from_phase_point(m, p, range, settings)?;
        let sign_t = match &sigma.backing {
            Backing::Chart { sign, .. } => *sign,
            Backing::Projected { .. } => unreachable!(),
        };
        Ok(Self {
            sigma,
            sqrt_i,
            sigma0,
            speed,
            sign_t,
            i_value: i,
        })
    }

    pub fn manifold(&self) -> &Manifold {
        self.sigma.manifold()
    }

    pub fn stats(&self) -> StepStats {
        self.sigma.stats()
    }

    pub fn integral_i(&self) -> f64 {
        self.i_value
    }

    fn s_hat(&self, s: f64) -> f64 {
        (self.speed * s - self.sigma0) / self.sqrt_i
    }

    /// Ambient state at cone parameter `s` (in the original affine
    /// parametrization of the input state).
    pub fn eval(&self, s: f64) -> (AmbientVector, AmbientVector) {
        let s_hat = self.s_hat(s);
        let s_tilde = s_hat.atan();
        let (q, dq) = self.sigma.eval(s_tilde);
        let x = &q * (self.sqrt_i * s_hat.hypot(1.0));
        let v = (dq * s_tilde.cos() + q * s_tilde.sin()) * self.speed;
        (x, v)
    }

    /// Chart state (t, u, dt, du) at cone parameter `s`.
    pub fn eval_chart(&self, s: f64) -> (f64, Vec<f64>, f64, Vec<f64>) {
        let s_hat = self.s_hat(s);
        let s_tilde = s_hat.atan();
        let (u, du_tilde) = self
            .sigma
            .eval_chart(s_tilde)
            .expect("lift flows are chart backed");
        let stretch = s_hat.hypot(1.0);
        let t = self.sign_t * self.sqrt_i * stretch;
        let dt = self.sign_t * self.speed * s_hat / stretch;
        // ds̃/ds = speed / (√I·(1+ŝ²)).
        let scale = self.speed / (self.sqrt_i * (1.0 + s_hat * s_hat));
        let du = du_tilde.iter().map(|d| d * scale).collect();
        (t, u, dt, du)
    }
}

/// Limit directions of the geodesic through `p`: γ′(s) → d_plus as
/// s → +∞ and γ′(s) → d_minus as s → −∞, both computed on the Σ side
/// by integrating the projected geodesic to arc length ±π/2 from the
/// tangency anchor.
pub fn asymptotic_directions(
    m: &Manifold,
    p: &PhasePoint,
    settings: &IntegratorSettings,
) -> Result<(AmbientVector, AmbientVector)> {
    let sg = SigmaGeodesic::from_phase_point(m, p, (-FRAC_PI_2, FRAC_PI_2), settings)?;
    let (d_plus, _) = sg.eval(FRAC_PI_2);
    let (q_minus, _) = sg.eval(-FRAC_PI_2);
    Ok((d_plus, -q_minus))
}

/// Number of times the length-π projection interval covers the closed
/// link geodesic, for links whose geodesics are analytically known to
/// close (circle and ellipse: the link is a closed curve of length L,
/// so every geodesic wraps it and the count is π/L). Returns None for
/// other manifolds. Counts above 1 mean the projection overcovers and
/// the cone geodesic self-intersects.
pub fn wrap_count(m: &Manifold, _sg: &SigmaGeodesic) -> Option<f64> {
    let length = link_length(m)?;
    Some(std::f64::consts::PI / length)
}

/// Arc length of the (closed-curve) link for 1-dimensional built-ins.
pub fn link_length(m: &Manifold) -> Option<f64> {
    match m.config()? {
        ManifoldConfig::Circle { rho } => {
            Some(std::f64::consts::TAU * rho / (1.0 + rho * rho).sqrt())
        }
        ManifoldConfig::Ellipse { .. } => {
            // Composite Simpson over one period of ||dq/du||.
            let panels = 4096;
            let h = std::f64::consts::TAU / panels as f64;
            let speed = |u: f64| -> f64 {
                let (_, jq) = sigma_frame(m, &[u]).expect("ellipse chart is global");
                jq.column(0).norm()
            };
            let mut acc = speed(0.0) + speed(std::f64::consts::TAU);
            for k in 1..panels {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * speed(k as f64 * h);
            }
            Some(acc * h / 3.0)
        }
        _ => None,
    }
}

/// A located self-intersection of a trajectory: two parameters with
/// (numerically) equal ambient positions.
#[derive(Debug, Clone, Copy)]
pub struct SelfIntersection {
    pub s_a: f64,
    pub s_b: f64,
    pub distance: f64,
}

/// Scans a sampled trajectory for self-intersections: coarse candidate
/// pairs from the sample grid, refined on the dense output by
/// Gauss-Newton on ‖γ(a) − γ(b)‖². Pairs closer than `min_separation`
/// in parameter are ignored; matches are reported when the refined
/// distance is at most `tol`.
pub fn self_intersections(traj: &Trajectory, min_separation: f64, tol: f64) -> Vec<SelfIntersection> {
    let samples = &traj.samples;
    if samples.len() < 3 {
        return vec![];
    }
    // Grid resolution bound: the distance function moves at most at
    // twice the speed, so a crossing hides within 2·speed·Δs of a grid
    // pair.
    let speed = traj.meta.initial_speed;
    let max_gap = samples
        .windows(2)
        .map(|w| w[1].s - w[0].s)
        .fold(0.0f64, f64::max);
    let coarse = 2.0 * speed * max_gap + tol;

    // Keep only per-row local minima of the pair distance to bound the
    // candidate count.
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 0..samples.len() {
        let mut prev = f64::INFINITY;
        let mut prev_j = usize::MAX;
        let mut falling = false;
        for j in (i + 1)..samples.len() {
            if samples[j].s - samples[i].s < min_separation {
                continue;
            }
            let d = (&samples[i].x - &samples[j].x).norm();
            if d > prev && falling && prev < coarse {
                candidates.push((samples[i].s, samples[prev_j].s));
            }
            falling = d < prev;
            prev = d;
            prev_j = j;
        }
        if falling && prev < coarse && prev_j != usize::MAX {
            candidates.push((samples[i].s, samples[prev_j].s));
        }
    }

    let (span_a, span_b) = traj.span();
    let mut found: Vec<SelfIntersection> = Vec::new();
    for (mut a, mut b) in candidates {
        let mut dist = f64::INFINITY;
        for _ in 0..40 {
            let (xa, va) = traj.dense_eval(a);
            let (xb, vb) = traj.dense_eval(b);
            let diff = &xa - &xb;
            dist = diff.norm();
            if dist < 1e-13 {
                break;
            }
            // Gauss-Newton on F(a,b) = γ(a) − γ(b).
            let g = [va.dot(&diff), -vb.dot(&diff)];
            let h = [
                [va.dot(&va), -va.dot(&vb)],
                [-va.dot(&vb), vb.dot(&vb)],
            ];
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            if det.abs() < 1e-14 {
                break;
            }
            let da = (-g[0] * h[1][1] + g[1] * h[0][1]) / det;
            let db = (-h[0][0] * g[1] + h[1][0] * g[0]) / det;
            a = (a + da).clamp(span_a, span_b);
            b = (b + db).clamp(span_a, span_b);
            if da.abs() + db.abs() < 1e-14 {
                break;
            }
        }
        if dist <= tol && (b - a).abs() >= min_separation {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let dup = found
                .iter()
                .any(|f| (f.s_a - lo).abs() < 1e-6 && (f.s_b - hi).abs() < 1e-6);
            if !dup {
                found.push(SelfIntersection {
                    s_a: lo,
                    s_b: hi,
                    distance: dist,
                });
            }
        }
    }
    found.sort_by(|p, q| p.s_a.partial_cmp(&q.s_a).unwrap());
    found
}

/// Canonicalizes a non-radial state: flows it to its tangency point and
/// rescales so the result has I = 1, unit speed and tangency at
/// parameter 0. Returns the canonical state together with (I, s₀,
/// speed) of the input.
pub fn canonicalize(
    m: &Manifold,
    p: &PhasePoint,
    backend: Backend,
    settings: &IntegratorSettings,
) -> Result<(PhasePoint, CanonicalMeta)> {
    let class = classify(p, TOL_RADIAL)?;
    if class.is_radial() {
        return Err(Error::RadialState);
    }
    let speed = p.speed();
    let unit = p.unit_speed();
    let s0 = -unit.x.dot(&unit.v);
    let at_tangency = flow(m, &unit, s0, backend, settings)?;
    let sqrt_i = class.i_value.sqrt();
    let canonical = scale_phase(&at_tangency, 1.0 / sqrt_i, sqrt_i)?;
    Ok((
        canonical,
        CanonicalMeta {
            i_value: class.i_value,
            s0_unit_speed: s0,
            speed,
        },
    ))
}

#[derive(Debug, Clone, Copy)]
pub struct CanonicalMeta {
    pub i_value: f64,
    /// Tangency parameter of the unit-speed reparametrization.
    pub s0_unit_speed: f64,
    pub speed: f64,
}

#[cfg(test)]
mod tests;
