//! Geodesic integration: unit-speed geodesics on the link Σ in chart
//! coordinates, and cone geodesics through the warped metric
//! dt² + t²σ — the "direct" backend. Radial states flow exactly as
//! straight lines; the lift backend lives in `correspondence`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ambient::{classify, integral_i, AmbientVector, PhasePoint, TOL_RADIAL};
use crate::correspondence;
use crate::error::{Error, Result};
use crate::manifold::{ambient_to_chart, christoffels, induced_metric, sigma_frame, Manifold};
use crate::rk::{integrate_dopri5, integrate_rk4, OdeOptions, OdeSolution, StepStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StepperKind {
    /// Adaptive Dormand–Prince 5(4) with dense output.
    #[default]
    Dopri5,
    /// Fixed-step classical RK4 (step = `h_init`), for drift studies.
    Rk4,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Initial (Dopri5) or fixed (Rk4) step; 0 selects automatically.
    pub h_init: f64,
    /// Step cap; 0 means uncapped.
    pub h_max: f64,
    pub max_steps: usize,
    /// Rescale link-geodesic velocities to σ-norm 1 at launch and after
    /// every accepted step. Off by default so speed drift stays a
    /// genuine conservation signal.
    pub renormalize_speed: bool,
    pub stepper: StepperKind,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 0.0,
            h_max: 0.0,
            max_steps: 1_000_000,
            renormalize_speed: false,
            stepper: StepperKind::Dopri5,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        if self.rtol <= 0.0 || self.atol <= 0.0 {
            return Err(Error::InvalidConfig("rtol and atol must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        if self.stepper == StepperKind::Rk4 && self.h_init <= 0.0 {
            return Err(Error::InvalidConfig(
                "the fixed-step stepper needs h_init > 0".into(),
            ));
        }
        Ok(())
    }

    fn ode_options(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            h_init: self.h_init,
            h_max: self.h_max,
            max_steps: self.max_steps,
        }
    }
}

/// Which machinery produces non-radial trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Integrate the warped-metric geodesic equations on the cone.
    Direct,
    /// Integrate on the link Σ and lift through the radial
    /// correspondence.
    Lift,
}

impl Backend {
    pub fn id(&self) -> &'static str {
        match self {
            Backend::Direct => "direct",
            Backend::Lift => "lift",
        }
    }
}

/// One trajectory sample: arc parameter, ambient state, and chart state.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub s: f64,
    pub x: AmbientVector,
    pub v: AmbientVector,
    pub t: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrajectoryMeta {
    pub backend: String,
    pub settings: IntegratorSettings,
    pub manifold: String,
    pub manifold_hash: u64,
    pub initial_i: f64,
    pub initial_speed: f64,
    pub stats: StepStats,
}

/// A discretized geodesic with dense output.
///
/// `samples` are strictly increasing in `s`. Chart coordinates are kept
/// unwrapped (no mod-period reduction mid-flow); reduce on output with
/// `manifold::reduce_periodic`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub meta: TrajectoryMeta,
    dense: Dense,
}

#[derive(Debug, Clone)]
enum Dense {
    /// Straight line through (or toward) the vertex; exact.
    Radial {
        manifold: Manifold,
        x0: AmbientVector,
        v0: AmbientVector,
    },
    /// Chart-space solutions of the warped ODE, forward/backward of 0.
    Chart {
        manifold: Manifold,
        forward: Option<OdeSolution>,
        backward: Option<OdeSolution>,
        state0: DVector<f64>,
    },
    /// Lifted link geodesic (see `correspondence::LiftedFlow`).
    Lift(correspondence::LiftedFlow),
}

impl Trajectory {
    /// Dense evaluation of the ambient state at parameter `s`.
    pub fn dense_eval(&self, s: f64) -> (AmbientVector, AmbientVector) {
        match &self.dense {
            Dense::Radial { x0, v0, .. } => (x0 + v0 * s, v0.clone()),
            Dense::Chart {
                manifold,
                forward,
                backward,
                state0,
            } => {
                let y = if s >= 0.0 {
                    match forward {
                        Some(sol) => sol.eval(s),
                        None if s == 0.0 => state0.clone(),
                        None => unreachable!("forward span not integrated"),
                    }
                } else {
                    match backward {
                        Some(sol) => sol.eval(s),
                        None => unreachable!("backward span not integrated"),
                    }
                };
                chart_state_to_ambient(manifold, &y)
            }
            Dense::Lift(lift) => lift.eval(s),
        }
    }

    /// Chart state (t, u, dt, du) at parameter `s`.
    pub fn dense_eval_chart(&self, s: f64) -> (f64, Vec<f64>, f64, Vec<f64>) {
        match &self.dense {
            Dense::Radial { manifold, x0, v0 } => {
                let (t0, u, dt) = radial_chart_data(manifold, x0, v0)
                    .expect("radial trajectory carries chart data");
                let n = u.len();
                (t0 + s * dt, u, dt, vec![0.0; n])
            }
            Dense::Chart {
                manifold, forward, backward, state0,
            } => {
                let y = if s >= 0.0 {
                    match forward {
                        Some(sol) => sol.eval(s),
                        None if s == 0.0 => state0.clone(),
                        None => unreachable!(),
                    }
                } else {
                    backward.as_ref().expect("backward span").eval(s)
                };
                split_chart_state(manifold, &y)
            }
            Dense::Lift(lift) => lift.eval_chart(s),
        }
    }

    pub fn manifold(&self) -> &Manifold {
        match &self.dense {
            Dense::Radial { manifold, .. } | Dense::Chart { manifold, .. } => manifold,
            Dense::Lift(lift) => lift.manifold(),
        }
    }

    pub fn span(&self) -> (f64, f64) {
        (
            self.samples.first().map(|s| s.s).unwrap_or(0.0),
            self.samples.last().map(|s| s.s).unwrap_or(0.0),
        )
    }

    pub fn initial_state(&self) -> PhasePoint {
        let (x, v) = self.dense_eval(0.0);
        PhasePoint { x, v }
    }
}

/// FNV-1a over the manifold descriptor, for trajectory metadata.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn make_meta(
    m: &Manifold,
    backend: &str,
    settings: &IntegratorSettings,
    initial_i: f64,
    initial_speed: f64,
    stats: StepStats,
) -> TrajectoryMeta {
    let desc = m.descriptor();
    TrajectoryMeta {
        backend: backend.to_string(),
        settings: *settings,
        manifold_hash: fnv1a(desc.as_bytes()),
        manifold: desc,
        initial_i,
        initial_speed,
        stats,
    }
}

/// Chart state layout: y = [t, u₁..u_n, dt, du₁..du_n].
pub(crate) fn pack_chart_state(t: f64, u: &[f64], dt: f64, du: &[f64]) -> DVector<f64> {
    let n = u.len();
    let mut y = DVector::zeros(2 * n + 2);
    y[0] = t;
    for i in 0..n {
        y[1 + i] = u[i];
    }
    y[n + 1] = dt;
    for i in 0..n {
        y[n + 2 + i] = du[i];
    }
    y
}

pub(crate) fn split_chart_state(m: &Manifold, y: &DVector<f64>) -> (f64, Vec<f64>, f64, Vec<f64>) {
    let n = m.intrinsic_dim();
    let t = y[0];
    let u = y.as_slice()[1..=n].to_vec();
    let dt = y[n + 1];
    let du = y.as_slice()[n + 2..2 * n + 2].to_vec();
    (t, u, dt, du)
}

/// Ambient state of a chart state: x = t·q(u), v = dt·q + t·(∂q/∂u)·du.
pub(crate) fn chart_state_to_ambient(
    m: &Manifold,
    y: &DVector<f64>,
) -> (AmbientVector, AmbientVector) {
    let (t, u, dt, du) = split_chart_state(m, y);
    ambient_from_chart(m, t, &u, dt, &du)
}

pub fn ambient_from_chart(
    m: &Manifold,
    t: f64,
    u: &[f64],
    dt: f64,
    du: &[f64],
) -> (AmbientVector, AmbientVector) {
    let (q, jq) = sigma_frame(m, u).expect("chart state in domain");
    let x = &q * t;
    let du_vec = DVector::from_column_slice(du);
    let v = &q * dt + jq * du_vec * t;
    (x, v)
}

/// Chart data (t, u, dt, du) of an ambient phase point.
pub fn chart_from_ambient(m: &Manifold, p: &PhasePoint) -> Result<(f64, Vec<f64>, f64, Vec<f64>)> {
    let (t, u) = ambient_to_chart(m, &p.x)?;
    let (q, jq) = sigma_frame(m, &u)?;
    let dt = p.v.dot(&q);
    let sigma = induced_metric(m, &u)?;
    let rhs = jq.transpose() * &p.v;
    let du = sigma.solve(&rhs) / t;
    Ok((t, u, dt, du.as_slice().to_vec()))
}

fn radial_chart_data(m: &Manifold, x0: &AmbientVector, v0: &AmbientVector) -> Result<(f64, Vec<f64>, f64)> {
    if x0.norm() > 0.0 {
        let (t0, u) = ambient_to_chart(m, x0)?;
        let q = crate::manifold::sigma_point(m, &u)?;
        let dt = v0.dot(&q);
        Ok((t0, u, dt))
    } else {
        // Vertex state: v itself lies on the cone.
        let (tv, u) = ambient_to_chart(m, v0)?;
        Ok((0.0, u, tv))
    }
}

/// Right-hand side of the Σ geodesic equation in chart coordinates:
/// state [u, du], with ü^k = −Γ^k_{ij} u̇^i u̇^j.
fn sigma_rhs(m: &Manifold) -> impl FnMut(f64, &DVector<f64>, &mut DVector<f64>) + '_ {
    let n = m.intrinsic_dim();
    move |_s, y, dy| {
        let u = &y.as_slice()[..n];
        let du = &y.as_slice()[n..2 * n];
        let gamma = christoffels(m, u).expect("christoffels along flow");
        for i in 0..n {
            dy[i] = du[i];
        }
        for k in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += gamma[k][(i, j)] * du[i] * du[j];
                }
            }
            dy[n + k] = -acc;
        }
    }
}

/// Right-hand side of the warped-metric cone geodesic equation:
/// state [t, u, dt, du] with
///   ẗ = t·σ_ij u̇ⁱ u̇ʲ,
///   ü^k = −Γ^k_{ij} u̇ⁱ u̇ʲ − (2/t)·ṫ·u̇^k.
fn cone_rhs(m: &Manifold) -> impl FnMut(f64, &DVector<f64>, &mut DVector<f64>) + '_ {
    let n = m.intrinsic_dim();
    move |_s, y, dy| {
        let t = y[0];
        let u = &y.as_slice()[1..=n];
        let dt = y[n + 1];
        let du = &y.as_slice()[n + 2..2 * n + 2];
        let sigma = induced_metric(m, u).expect("metric along flow");
        let gamma = christoffels(m, u).expect("christoffels along flow");
        let du_sq = sigma.inner(du, du);
        dy[0] = dt;
        for i in 0..n {
            dy[1 + i] = du[i];
        }
        dy[n + 1] = t * du_sq;
        for k in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += gamma[k][(i, j)] * du[i] * du[j];
                }
            }
            dy[n + 2 + k] = -acc - 2.0 / t * dt * du[k];
        }
    }
}

/// Integrates a chart-space ODE over a span anchored at 0: backward to
/// `min(a,0)` and forward to `max(b,0)`.
fn integrate_two_sided(
    m: &Manifold,
    rhs_kind: RhsKind,
    y0: DVector<f64>,
    span: (f64, f64),
    settings: &IntegratorSettings,
    guard: Option<GuardSpec>,
) -> Result<(Option<OdeSolution>, Option<OdeSolution>, StepStats)> {
    let (a, b) = span;
    let left = a.min(0.0);
    let right = b.max(0.0);
    let opts = settings.ode_options();
    let mut stats = StepStats::default();

    let run = |target: f64, stats: &mut StepStats| -> Result<Option<OdeSolution>> {
        if target == 0.0 {
            return Ok(None);
        }
        let mut guard_cb = make_guard(m, settings, &guard, rhs_kind);
        let post = guard_cb.as_mut().map(|g| g.as_mut() as _);
        let sol = match settings.stepper {
            StepperKind::Dopri5 => match rhs_kind {
                RhsKind::Sigma => {
                    integrate_dopri5(sigma_rhs(m), 0.0, y0.clone(), target, &opts, post)?
                }
                RhsKind::Cone => {
                    integrate_dopri5(cone_rhs(m), 0.0, y0.clone(), target, &opts, post)?
                }
            },
            StepperKind::Rk4 => match rhs_kind {
                RhsKind::Sigma => integrate_rk4(
                    sigma_rhs(m),
                    0.0,
                    y0.clone(),
                    target,
                    settings.h_init,
                    &opts,
                    post,
                )?,
                RhsKind::Cone => integrate_rk4(
                    cone_rhs(m),
                    0.0,
                    y0.clone(),
                    target,
                    settings.h_init,
                    &opts,
                    post,
                )?,
            },
        };
        stats.accepted += sol.stats.accepted;
        stats.rejected += sol.stats.rejected;
        stats.fevals += sol.stats.fevals;
        Ok(Some(sol))
    };

    let backward = run(left, &mut stats)?;
    let forward = run(right, &mut stats)?;
    Ok((backward, forward, stats))
}

#[derive(Clone, Copy)]
enum RhsKind {
    Sigma,
    Cone,
}

#[derive(Clone, Copy)]
struct GuardSpec {
    /// Abort when |t| drops below this (√I/2 vertex guard).
    t_floor: f64,
}

type GuardCb = Box<dyn FnMut(f64, &mut DVector<f64>) -> Result<bool>>;

fn make_guard(
    m: &Manifold,
    settings: &IntegratorSettings,
    guard: &Option<GuardSpec>,
    rhs_kind: RhsKind,
) -> Option<GuardCb> {
    let n = m.intrinsic_dim();
    match rhs_kind {
        RhsKind::Cone => guard.map(|g| {
            let floor = g.t_floor;
            Box::new(move |s: f64, y: &mut DVector<f64>| -> Result<bool> {
                if y[0].abs() < floor {
                    Err(Error::VertexApproach {
                        s,
                        t: y[0],
                        limit: floor,
                    })
                } else {
                    Ok(false)
                }
            }) as GuardCb
        }),
        RhsKind::Sigma => {
            if settings.renormalize_speed {
                let m = m.clone();
                Some(Box::new(move |_s: f64, y: &mut DVector<f64>| -> Result<bool> {
                    let u = y.as_slice()[..n].to_vec();
                    let du = y.as_slice()[n..2 * n].to_vec();
                    let sigma = induced_metric(&m, &u)?;
                    let norm = sigma.norm(&du);
                    if norm > 0.0 && (norm - 1.0).abs() > 1e-15 {
                        for i in 0..n {
                            y[n + i] /= norm;
                        }
                        return Ok(true);
                    }
                    Ok(false)
                }))
            } else {
                None
            }
        }
    }
}

/// One sample of a link geodesic.
#[derive(Debug, Clone)]
pub struct SigmaSample {
    /// Arc-length parameter on Σ.
    pub s: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub q: AmbientVector,
    pub dq: AmbientVector,
}

/// A geodesic of the link Σ in chart coordinates, with dense output.
/// The initial state sits at the span start.
#[derive(Debug, Clone)]
pub struct SigmaTrajectory {
    pub samples: Vec<SigmaSample>,
    pub stats: StepStats,
    manifold: Manifold,
    solution: OdeSolution,
    anchor: f64,
}

impl SigmaTrajectory {
    pub fn eval_chart(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.manifold.intrinsic_dim();
        let y = self.solution.eval(s - self.anchor);
        (
            y.as_slice()[..n].to_vec(),
            y.as_slice()[n..2 * n].to_vec(),
        )
    }

    /// Ambient link point and its s-derivative (on the +q component).
    pub fn eval(&self, s: f64) -> (AmbientVector, AmbientVector) {
        let (u, du) = self.eval_chart(s);
        let (q, jq) = sigma_frame(&self.manifold, &u).expect("chart state in domain");
        let dq = jq * DVector::from_column_slice(&du);
        (q, dq)
    }

    pub fn span(&self) -> (f64, f64) {
        let (a, b) = self.solution.span();
        (a + self.anchor, b + self.anchor)
    }
}

/// Integrates the unit-speed (or as-given) geodesic of Σ from chart
/// state (u0, du0) at parameter `span.0` to `span.1`.
///
/// With `renormalize_speed` set, du0 is first rescaled to σ-norm 1 and
/// the σ-speed is re-projected to 1 after every accepted step.
pub fn flow_sigma(
    m: &Manifold,
    u0: &[f64],
    du0: &[f64],
    span: (f64, f64),
    settings: &IntegratorSettings,
) -> Result<SigmaTrajectory> {
    settings.validate()?;
    let n = m.intrinsic_dim();
    if u0.len() != n || du0.len() != n {
        return Err(Error::InvalidConfig(format!(
            "chart state must have {n} coordinates"
        )));
    }
    let sigma = induced_metric(m, u0)?;
    let mut du0 = du0.to_vec();
    let speed = sigma.norm(&du0);
    if speed == 0.0 {
        return Err(Error::ZeroVelocity);
    }
    if settings.renormalize_speed {
        for d in du0.iter_mut() {
            *d /= speed;
        }
    }

    let mut y0 = DVector::zeros(2 * n);
    for i in 0..n {
        y0[i] = u0[i];
        y0[n + i] = du0[i];
    }

    let target = span.1 - span.0;
    let opts = settings.ode_options();
    let mut guard_cb = make_guard(m, settings, &None, RhsKind::Sigma);
    let post = guard_cb.as_mut().map(|g| g.as_mut() as _);
    let solution = match settings.stepper {
        StepperKind::Dopri5 => integrate_dopri5(sigma_rhs(m), 0.0, y0, target, &opts, post)?,
        StepperKind::Rk4 => {
            integrate_rk4(sigma_rhs(m), 0.0, y0, target, settings.h_init, &opts, post)?
        }
    };

    let mut samples = Vec::with_capacity(solution.nodes.len());
    for (s_rel, y) in &solution.nodes {
        let u = y.as_slice()[..n].to_vec();
        let du = y.as_slice()[n..2 * n].to_vec();
        let (q, jq) = sigma_frame(m, &u)?;
        let dq = jq * DVector::from_column_slice(&du);
        samples.push(SigmaSample {
            s: s_rel + span.0,
            u,
            du,
            q,
            dq,
        });
    }
    Ok(SigmaTrajectory {
        samples,
        stats: solution.stats,
        manifold: m.clone(),
        solution,
        anchor: span.0,
    })
}

/// Integrates a non-radial cone geodesic from chart state
/// (t0, u0, dt0, du0) at s = 0 over `span` (two-sided around 0).
///
/// Fails with `VertexApproach` if |t| ever drops below √I/2, which is
/// impossible for exact non-radial geodesics.
pub fn flow_cone_direct(
    m: &Manifold,
    t0: f64,
    u0: &[f64],
    dt0: f64,
    du0: &[f64],
    span: (f64, f64),
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    settings.validate()?;
    if t0 == 0.0 {
        return Err(Error::InvalidConfig(
            "direct cone flow needs t0 != 0 (vertex states are radial)".into(),
        ));
    }
    let (x0, v0) = ambient_from_chart(m, t0, u0, dt0, du0);
    let p0 = PhasePoint::new(x0, v0)?;
    let i0 = integral_i(&p0)?;
    if i0 <= TOL_RADIAL {
        return Err(Error::RadialState);
    }

    let y0 = pack_chart_state(t0, u0, dt0, du0);
    let guard = GuardSpec {
        t_floor: i0.sqrt() / 2.0,
    };
    let (backward, forward, stats) =
        integrate_two_sided(m, RhsKind::Cone, y0.clone(), span, settings, Some(guard))?;

    let dense = Dense::Chart {
        manifold: m.clone(),
        forward,
        backward,
        state0: y0,
    };
    let samples = node_samples(m, &dense);
    let meta = make_meta(m, "direct", settings, i0, p0.speed(), stats);
    Ok(Trajectory {
        samples,
        meta,
        dense,
    })
}

/// Collects accepted-node samples from a chart dense representation,
/// merged in increasing s.
fn node_samples(m: &Manifold, dense: &Dense) -> Vec<TrajectorySample> {
    let Dense::Chart {
        forward, backward, ..
    } = dense
    else {
        return vec![];
    };
    let mut entries: Vec<(f64, DVector<f64>)> = Vec::new();
    if let Some(b) = backward {
        for (s, y) in b.nodes.iter().rev() {
            entries.push((*s, y.clone()));
        }
    }
    if let Some(f) = forward {
        let skip = usize::from(!entries.is_empty());
        for (s, y) in f.nodes.iter().skip(skip) {
            entries.push((*s, y.clone()));
        }
    }
    entries
        .into_iter()
        .map(|(s, y)| {
            let (t, u, _dt, du) = split_chart_state(m, &y);
            let (x, v) = chart_state_to_ambient(m, &y);
            TrajectorySample { s, x, v, t, u, du }
        })
        .collect()
}

/// The geodesic flow: state at parameter `s` of the geodesic through
/// `p`. Radial states move exactly in a straight line through the
/// vertex; non-radial states dispatch to the requested backend.
pub fn flow(
    m: &Manifold,
    p: &PhasePoint,
    s: f64,
    backend: Backend,
    settings: &IntegratorSettings,
) -> Result<PhasePoint> {
    if classify(p, TOL_RADIAL)?.is_radial() {
        return Ok(PhasePoint {
            x: &p.x + &p.v * s,
            v: p.v.clone(),
        });
    }
    if s == 0.0 {
        return Ok(p.clone());
    }
    match backend {
        Backend::Direct => {
            let (t0, u0, dt0, du0) = chart_from_ambient(m, p)?;
            let span = (s.min(0.0), s.max(0.0));
            let traj = flow_cone_direct(m, t0, &u0, dt0, &du0, span, settings)?;
            // Endpoint node, exact up to the integrator.
            let sample = if s >= 0.0 {
                traj.samples.last().unwrap()
            } else {
                traj.samples.first().unwrap()
            };
            Ok(PhasePoint {
                x: sample.x.clone(),
                v: sample.v.clone(),
            })
        }
        Backend::Lift => {
            let lift = correspondence::LiftedFlow::from_phase_point(m, p, (s.min(0.0), s.max(0.0)), settings)?;
            let (x, v) = lift.eval(s);
            Ok(PhasePoint { x, v })
        }
    }
}

/// Radial trajectory with exact dense output.
fn radial_trajectory(
    m: &Manifold,
    p: &PhasePoint,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    // Chart data must exist (state validated on the cone).
    radial_chart_data(m, &p.x, &p.v)?;
    let dense = Dense::Radial {
        manifold: m.clone(),
        x0: p.x.clone(),
        v0: p.v.clone(),
    };
    let meta = make_meta(m, "radial", settings, 0.0, p.speed(), StepStats::default());
    Ok(Trajectory {
        samples: vec![],
        meta,
        dense,
    })
}

/// Builds the trajectory through `p` over `span`; integration is
/// anchored at the state itself (s = 0), so the dense output always
/// covers span ∪ {0}.
pub fn trajectory(
    m: &Manifold,
    p: &PhasePoint,
    span: (f64, f64),
    backend: Backend,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    if classify(p, TOL_RADIAL)?.is_radial() {
        return radial_trajectory(m, p, settings);
    }
    match backend {
        Backend::Direct => {
            let (t0, u0, dt0, du0) = chart_from_ambient(m, p)?;
            flow_cone_direct(m, t0, &u0, dt0, &du0, span, settings)
        }
        Backend::Lift => {
            let lift = correspondence::LiftedFlow::from_phase_point(m, p, span, settings)?;
            let stats = lift.stats();
            let meta = make_meta(m, "lift", settings, lift.integral_i(), p.speed(), stats);
            Ok(Trajectory {
                samples: vec![],
                meta,
                dense: Dense::Lift(lift),
            })
        }
    }
}

/// Uniform-grid sampling of the geodesic through `p` over `span`.
pub fn sample_trajectory(
    m: &Manifold,
    p: &PhasePoint,
    span: (f64, f64),
    n_samples: usize,
    backend: Backend,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    if n_samples < 2 {
        return Err(Error::InvalidConfig("need at least 2 samples".into()));
    }
    if !(span.0 < span.1) {
        return Err(Error::InvalidConfig(format!(
            "span [{}, {}] is empty",
            span.0, span.1
        )));
    }
    let mut traj = trajectory(m, p, span, backend, settings)?;
    let grid: Vec<f64> = (0..n_samples)
        .map(|i| span.0 + (span.1 - span.0) * i as f64 / (n_samples - 1) as f64)
        .collect();
    traj.samples = grid
        .into_iter()
        .map(|s| {
            let (x, v) = traj.dense_eval(s);
            let (t, u, _dt, du) = traj.dense_eval_chart(s);
            TrajectorySample { s, x, v, t, u, du }
        })
        .collect();
    Ok(traj)
}
