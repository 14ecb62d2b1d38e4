//! Parametrized embeddings of the base manifold Γ into the hyperplane
//! {x^{N+1} = 1}, the spherical link Σ (radial projection of Γ onto the
//! unit sphere), its induced metric and Christoffel symbols, and chart
//! inversion for ambient points.
//!
//! The lower half of the cone is represented by a negative radial
//! coordinate `t` against the same chart: a cone point is `x = t·q(u)`
//! with `q = p/‖p‖` and `t ∈ R`. Non-radial geodesics never change the
//! sign of `t`, so a single chart per built-in suffices.

mod builtin;

pub use builtin::ManifoldConfig;

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::ambient::{AmbientVector, PhasePoint, TOL_CONE};
use crate::error::{Error, Result};

/// A user-supplied chart for a custom manifold.
///
/// `eval` must land in the hyperplane {x^{N+1} = 1}; `jacobian` is the
/// (N+1)×n matrix ∂p/∂u and must have full rank on the declared domain.
/// `hessian`, when given, returns one n×n matrix per ambient coordinate
/// (∂²pᵃ/∂uⁱ∂uʲ); without it second derivatives fall back to central
/// finite differences.
#[derive(Clone)]
pub struct ChartSpec {
    pub name: String,
    /// Intrinsic dimension n.
    pub intrinsic_dim: usize,
    /// Ambient dimension N+1.
    pub ambient_dim: usize,
    pub eval: Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>,
    pub jacobian: Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>,
    pub hessian: Option<Arc<dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync>>,
    /// Per-coordinate period, `None` for non-periodic coordinates.
    pub periods: Vec<Option<f64>>,
    /// Domain box for non-periodic coordinates (ignored for periodic ones).
    pub domain: Vec<(f64, f64)>,
}

impl std::fmt::Debug for ChartSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartSpec")
            .field("name", &self.name)
            .field("intrinsic_dim", &self.intrinsic_dim)
            .field("ambient_dim", &self.ambient_dim)
            .finish()
    }
}

/// Numerical knobs for derivative and inversion routines.
#[derive(Debug, Clone, Copy)]
pub struct ChartNumerics {
    /// Central-difference step for metric derivatives.
    pub h_fd: f64,
    /// Richardson-extrapolate the finite differences (one extra level).
    pub fd_richardson: bool,
    /// Residual tolerance for chart inversion (cone membership).
    pub tol_cone: f64,
    /// Newton iteration cap for custom-chart inversion.
    pub max_newton: usize,
}

impl Default for ChartNumerics {
    fn default() -> Self {
        Self {
            h_fd: 1e-5,
            fd_richardson: false,
            tol_cone: TOL_CONE,
            max_newton: 50,
        }
    }
}

/// A realized manifold: a built-in chart family or a custom chart,
/// plus numerical settings. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Manifold {
    kind: Kind,
    pub numerics: ChartNumerics,
}

#[derive(Debug, Clone)]
enum Kind {
    Builtin(ManifoldConfig),
    Custom(ChartSpec),
}

/// Which derivative path `christoffels_with` uses for ∂σ/∂u.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativePath {
    /// Analytic chart hessian (errors if the chart has none).
    Analytic,
    /// Central finite differences of the induced metric.
    FiniteDifference,
}

/// Symmetric positive-definite induced metric σ_ij(u) = ⟨q_i, q_j⟩ of
/// the link Σ at a chart point.
#[derive(Debug, Clone)]
pub struct SigmaMetric {
    pub matrix: DMatrix<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl SigmaMetric {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * (1.0 + matrix[(i, i)].abs()) {
                    return Err(Error::RankDeficient(format!(
                        "sigma not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let chol = Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::RankDeficient("sigma not positive definite".into()))?;
        Ok(Self { matrix, chol })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// σ-inner product of two chart velocities.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.matrix[(i, j)] * a[i] * b[j];
            }
        }
        acc
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// Solves σ x = rhs.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    /// Inverse of the lower Cholesky factor, for drawing σ-unit directions.
    pub fn chol_l(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

impl Manifold {
    pub fn from_config(cfg: &ManifoldConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            kind: Kind::Builtin(cfg.clone()),
            numerics: ChartNumerics::default(),
        })
    }

    pub fn custom(spec: ChartSpec) -> Result<Self> {
        if spec.intrinsic_dim == 0 || spec.ambient_dim <= spec.intrinsic_dim {
            return Err(Error::InvalidConfig(
                "custom chart must have 0 < n < N+1".into(),
            ));
        }
        if spec.periods.len() != spec.intrinsic_dim || spec.domain.len() != spec.intrinsic_dim {
            return Err(Error::InvalidConfig(
                "custom chart periods/domain must have length n".into(),
            ));
        }
        Ok(Self {
            kind: Kind::Custom(spec),
            numerics: ChartNumerics::default(),
        })
    }

    pub fn with_numerics(mut self, numerics: ChartNumerics) -> Self {
        self.numerics = numerics;
        self
    }

    pub fn config(&self) -> Option<&ManifoldConfig> {
        match &self.kind {
            Kind::Builtin(c) => Some(c),
            Kind::Custom(_) => None,
        }
    }

    /// Intrinsic dimension n of Γ.
    pub fn intrinsic_dim(&self) -> usize {
        match &self.kind {
            Kind::Builtin(c) => c.intrinsic_dim(),
            Kind::Custom(s) => s.intrinsic_dim,
        }
    }

    /// Ambient dimension N+1.
    pub fn ambient_dim(&self) -> usize {
        match &self.kind {
            Kind::Builtin(c) => c.ambient_dim(),
            Kind::Custom(s) => s.ambient_dim,
        }
    }

    pub fn periods(&self) -> Vec<Option<f64>> {
        match &self.kind {
            Kind::Builtin(c) => c.periods(),
            Kind::Custom(s) => s.periods.clone(),
        }
    }

    /// Box from which sweep initial conditions draw chart coordinates.
    pub fn sample_domain(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            Kind::Builtin(c) => c.sample_domain(),
            Kind::Custom(s) => s
                .periods
                .iter()
                .zip(&s.domain)
                .map(|(p, d)| match p {
                    Some(len) => (0.0, *len),
                    None => *d,
                })
                .collect(),
        }
    }

    /// Stable identifier used in trajectory metadata.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            Kind::Builtin(c) => c.descriptor(),
            Kind::Custom(s) => format!("custom:{}:{}x{}", s.name, s.intrinsic_dim, s.ambient_dim),
        }
    }

    fn domain_check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.intrinsic_dim() {
            return Err(Error::InvalidConfig(format!(
                "chart point has {} coordinates, expected {}",
                u.len(),
                self.intrinsic_dim()
            )));
        }
        let periods = self.periods();
        let domain = match &self.kind {
            Kind::Builtin(c) => c.domain(),
            Kind::Custom(s) => s.domain.clone(),
        };
        for (i, &ui) in u.iter().enumerate() {
            if !ui.is_finite() {
                return Err(Error::InvalidConfig(format!("chart coordinate {i} not finite")));
            }
            if periods[i].is_none() {
                let (lo, hi) = domain[i];
                if ui <= lo || ui >= hi {
                    return Err(Error::Domain {
                        index: i,
                        value: ui,
                        lo,
                        hi,
                    });
                }
            }
        }
        Ok(())
    }

    pub(crate) fn chart_eval(&self, u: &[f64]) -> DVector<f64> {
        match &self.kind {
            Kind::Builtin(c) => c.eval(u),
            Kind::Custom(s) => (s.eval)(u),
        }
    }

    pub(crate) fn chart_jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        match &self.kind {
            Kind::Builtin(c) => c.jacobian(u),
            Kind::Custom(s) => (s.jacobian)(u),
        }
    }

    /// One n×n matrix per ambient coordinate, or None when the chart has
    /// no analytic second derivatives.
    pub(crate) fn chart_hessian(&self, u: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        match &self.kind {
            Kind::Builtin(c) => Some(c.hessian(u)),
            Kind::Custom(s) => s.hessian.as_ref().map(|h| h(u)),
        }
    }

    pub fn has_analytic_hessian(&self) -> bool {
        match &self.kind {
            Kind::Builtin(_) => true,
            Kind::Custom(s) => s.hessian.is_some(),
        }
    }

    /// Closed-form chart inversion for built-ins: u with q(u) ∥ p_dir,
    /// where `p_dir` is the point rescaled to the hyperplane (last
    /// coordinate 1). Custom charts return None and go through Newton.
    fn invert_closed_form(&self, p_hyper: &DVector<f64>) -> Option<Vec<f64>> {
        match &self.kind {
            Kind::Builtin(c) => c.invert(p_hyper),
            Kind::Custom(_) => None,
        }
    }
}

/// Reduces periodic coordinates into [0, period).
pub fn reduce_periodic(m: &Manifold, u: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(m.periods())
        .map(|(&ui, p)| match p {
            Some(len) => ui.rem_euclid(len),
            None => ui,
        })
        .collect()
}

/// Evaluates the embedding p(u) ∈ {x^{N+1} = 1}.
pub fn evaluate_chart(m: &Manifold, u: &[f64]) -> Result<AmbientVector> {
    m.domain_check(u)?;
    Ok(m.chart_eval(u))
}

/// The link point q(u) = p(u)/‖p(u)‖ on the unit sphere.
pub fn sigma_point(m: &Manifold, u: &[f64]) -> Result<AmbientVector> {
    let p = evaluate_chart(m, u)?;
    Ok(&p / p.norm())
}

/// q(u) together with its Jacobian ∂q/∂u = (Id − q qᵀ)(∂p/∂u)/‖p‖.
pub fn sigma_frame(m: &Manifold, u: &[f64]) -> Result<(AmbientVector, DMatrix<f64>)> {
    m.domain_check(u)?;
    let p = m.chart_eval(u);
    let jp = m.chart_jacobian(u);
    let r = p.norm();
    let q = &p / r;
    let mut jq = jp / r;
    let proj = &q * q.transpose();
    jq -= &proj * &jq;
    Ok((q, jq))
}

/// Induced metric of Σ at u: σ_ij = ⟨q_i, q_j⟩.
pub fn induced_metric(m: &Manifold, u: &[f64]) -> Result<SigmaMetric> {
    let (_, jq) = sigma_frame(m, u)?;
    SigmaMetric::new(jq.transpose() * jq)
}

fn sigma_matrix(m: &Manifold, u: &[f64]) -> Result<DMatrix<f64>> {
    let (_, jq) = sigma_frame(m, u)?;
    Ok(jq.transpose() * jq)
}

/// Second derivatives of q: q_ij as one matrix per pair, flattened as
/// out[i][j] = column vector q_{ij} stacked in a (N+1) x n² matrix.
fn sigma_second_derivatives(m: &Manifold, u: &[f64]) -> Option<Vec<Vec<DVector<f64>>>> {
    let hess = m.chart_hessian(u)?;
    let p = m.chart_eval(u);
    let jp = m.chart_jacobian(u);
    let n = m.intrinsic_dim();
    let dim = m.ambient_dim();
    let r = p.norm();
    let q = &p / r;

    // q_ij from p, p_i, p_ij:
    //   q = p/r,  r_i = <q, p_i>
    //   q_i = p_i/r − q r_i / r
    //   q_ij = p_ij/r − (p_i r_j + p_j r_i)/r² − q r_ij / r + 2 q r_i r_j / r²
    //   with r_ij = (<p_ij, q> + <p_i, p_j>/r − r_i r_j / r).
    let p_cols: Vec<DVector<f64>> = (0..n).map(|i| jp.column(i).into_owned()).collect();
    let r_d: Vec<f64> = (0..n).map(|i| q.dot(&p_cols[i])).collect();
    let mut out = vec![vec![DVector::zeros(dim); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut p_ij = DVector::zeros(dim);
            for a in 0..dim {
                p_ij[a] = hess[a][(i, j)];
            }
            let r_ij = p_ij.dot(&q) + p_cols[i].dot(&p_cols[j]) / r - r_d[i] * r_d[j] / r;
            let q_ij = &p_ij / r - (&p_cols[i] * (r_d[j] / (r * r)))
                - (&p_cols[j] * (r_d[i] / (r * r)))
                - &q * (r_ij / r)
                + &q * (2.0 * r_d[i] * r_d[j] / (r * r));
            out[i][j] = q_ij;
        }
    }
    Some(out)
}

/// ∂σ_ij/∂u^k, analytic route (requires a chart hessian).
fn sigma_derivatives_analytic(m: &Manifold, u: &[f64]) -> Result<Option<Vec<DMatrix<f64>>>> {
    let Some(q2) = sigma_second_derivatives(m, u) else {
        return Ok(None);
    };
    let (_, jq) = sigma_frame(m, u)?;
    let n = m.intrinsic_dim();
    let q_cols: Vec<DVector<f64>> = (0..n).map(|i| jq.column(i).into_owned()).collect();
    let mut dsigma = vec![DMatrix::zeros(n, n); n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                dsigma[k][(i, j)] = q2[i][k].dot(&q_cols[j]) + q_cols[i].dot(&q2[j][k]);
            }
        }
    }
    Ok(Some(dsigma))
}

/// ∂σ_ij/∂u^k by central differences (optionally Richardson-extrapolated).
fn sigma_derivatives_fd(m: &Manifold, u: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let n = m.intrinsic_dim();
    let h = m.numerics.h_fd;
    let central = |h: f64, k: usize| -> Result<DMatrix<f64>> {
        let mut up = u.to_vec();
        let mut un = u.to_vec();
        up[k] += h;
        un[k] -= h;
        let sp = sigma_matrix(m, &up)?;
        let sn = sigma_matrix(m, &un)?;
        Ok((sp - sn) / (2.0 * h))
    };
    let mut dsigma = Vec::with_capacity(n);
    for k in 0..n {
        let d = if m.numerics.fd_richardson {
            // (4 D(h/2) − D(h)) / 3 cancels the O(h²) term.
            let dh = central(h, k)?;
            let dh2 = central(h / 2.0, k)?;
            (dh2 * 4.0 - dh) / 3.0
        } else {
            central(h, k)?
        };
        dsigma.push(d);
    }
    Ok(dsigma)
}

/// Christoffel symbols Γ^k_{ij} of σ, indexed out[k][(i,j)].
///
/// Uses the analytic chart hessian when available, otherwise central
/// finite differences with step `numerics.h_fd`.
pub fn christoffels(m: &Manifold, u: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let path = if m.has_analytic_hessian() {
        DerivativePath::Analytic
    } else {
        DerivativePath::FiniteDifference
    };
    christoffels_with(m, u, path)
}

/// Christoffel symbols with the derivative route pinned (for dual-path
/// verification).
pub fn christoffels_with(
    m: &Manifold,
    u: &[f64],
    path: DerivativePath,
) -> Result<Vec<DMatrix<f64>>> {
    let sigma = induced_metric(m, u)?;
    let dsigma = match path {
        DerivativePath::Analytic => sigma_derivatives_analytic(m, u)?.ok_or_else(|| {
            Error::InvalidConfig("chart has no analytic hessian; use FiniteDifference".into())
        })?,
        DerivativePath::FiniteDifference => sigma_derivatives_fd(m, u)?,
    };
    let n = m.intrinsic_dim();
    let mut gamma = vec![DMatrix::zeros(n, n); n];
    for i in 0..n {
        for j in i..n {
            let mut rhs = DVector::zeros(n);
            for l in 0..n {
                rhs[l] = 0.5 * (dsigma[i][(j, l)] + dsigma[j][(i, l)] - dsigma[l][(i, j)]);
            }
            let g = sigma.solve(&rhs);
            for k in 0..n {
                gamma[k][(i, j)] = g[k];
                gamma[k][(j, i)] = g[k];
            }
        }
    }
    Ok(gamma)
}

/// Inverts x = t·q(u): returns the signed radial coordinate t = ±‖x‖
/// (negative on the lower cone) and the chart coordinates u, with the
/// residual checked against `numerics.tol_cone`.
pub fn ambient_to_chart(m: &Manifold, x: &AmbientVector) -> Result<(f64, Vec<f64>)> {
    let norm = x.norm();
    if norm == 0.0 {
        return Err(Error::InvalidConfig(
            "cannot invert the vertex; chart coordinates are undefined at x = 0".into(),
        ));
    }
    let tol = m.numerics.tol_cone;

    // The hyperplane component x^{N+1} = t/‖p(u)‖ carries the sign of t.
    let last = x[x.len() - 1];
    let p_hyper: Option<DVector<f64>> = if last != 0.0 { Some(x / last) } else { None };

    if let Some(ph) = &p_hyper {
        if let Some(u) = m.invert_closed_form(ph) {
            let t = last.signum() * norm;
            return finish_inversion(m, x, t, u, tol);
        }
    }

    // Newton (Gauss-Newton on the unit sphere) for custom charts: solve
    // q(u) = ±x/‖x‖, trying the sign suggested by the hyperplane
    // coordinate first.
    let x_unit = x / norm;
    let signs: [f64; 2] = if last >= 0.0 { [1.0, -1.0] } else { [-1.0, 1.0] };
    let mut best_residual = f64::INFINITY;
    for sign in signs {
        let target = &x_unit * sign;
        match newton_invert(m, &target) {
            Ok(u) => {
                let t = sign * norm;
                return finish_inversion(m, x, t, u, tol);
            }
            Err(Error::NoConvergence { residual }) => {
                best_residual = best_residual.min(residual);
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoConvergence {
        residual: best_residual,
    })
}

fn finish_inversion(
    m: &Manifold,
    x: &AmbientVector,
    t: f64,
    u: Vec<f64>,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let u = reduce_periodic(m, &u);
    let q = sigma_point(m, &u)?;
    let residual = (&q * t - x).norm() / x.norm().max(1.0);
    if residual > tol {
        return Err(Error::NotOnCone { residual, tol });
    }
    Ok((t, u))
}

fn newton_invert(m: &Manifold, target_unit: &DVector<f64>) -> Result<Vec<f64>> {
    let n = m.intrinsic_dim();
    let domain = m.sample_domain();
    let grid = if n == 1 { 16 } else { 8 };

    // Multi-start: coarse grid seed with the smallest residual.
    let mut seed = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; n];
    loop {
        let u: Vec<f64> = (0..n)
            .map(|i| {
                let (lo, hi) = domain[i];
                lo + (hi - lo) * (idx[i] as f64 + 0.5) / grid as f64
            })
            .collect();
        if let Ok(q) = sigma_point(m, &u) {
            let r = (q - target_unit).norm();
            if r < best {
                best = r;
                seed = u;
            }
        }
        let mut carry = 0;
        loop {
            if carry == n {
                break;
            }
            idx[carry] += 1;
            if idx[carry] < grid {
                break;
            }
            idx[carry] = 0;
            carry += 1;
        }
        if carry == n {
            break;
        }
    }

    let mut u = seed;
    let mut residual = f64::INFINITY;
    for _ in 0..m.numerics.max_newton {
        let (q, jq) = sigma_frame(m, &u)?;
        let diff = target_unit - &q;
        residual = diff.norm();
        if residual < 1e-14 {
            return Ok(u);
        }
        // Gauss-Newton step: sigma du = Jq^T diff.
        let sigma = SigmaMetric::new(jq.transpose() * &jq)?;
        let du = sigma.solve(&(jq.transpose() * diff));
        for i in 0..n {
            u[i] += du[i];
        }
        if du.norm() < 1e-15 {
            break;
        }
    }
    let (q, _) = sigma_frame(m, &u)?;
    let residual_final = (target_unit - q).norm().min(residual);
    if residual_final < 1e-10 {
        Ok(u)
    } else {
        Err(Error::NoConvergence {
            residual: residual_final,
        })
    }
}

/// Checks that a phase point lies on the cone and its velocity in the
/// tangent space, both within `tol_cone` (relative residuals).
///
/// Vertex states pass when `v` itself lies on K (the tangent space at
/// the vertex is the cone).
pub fn validate_on_cone(m: &Manifold, p: &PhasePoint, tol_cone: f64) -> Result<()> {
    if p.dim() != m.ambient_dim() {
        return Err(Error::InvalidConfig(format!(
            "phase point dimension {} does not match ambient dimension {}",
            p.dim(),
            m.ambient_dim()
        )));
    }
    if p.x.norm() == 0.0 {
        // T_O K = K: the velocity must point along the cone.
        let (_t, _u) = ambient_to_chart(m, &p.v).map_err(|_| Error::NotOnCone {
            residual: f64::NAN,
            tol: tol_cone,
        })?;
        return Ok(());
    }
    let (t, u) = ambient_to_chart(m, &p.x)?;
    let (q, jq) = sigma_frame(m, &u)?;
    // v must decompose as dt·q + t·Jq·du.
    let dt = p.v.dot(&q);
    let sigma = SigmaMetric::new(jq.transpose() * &jq)?;
    let du = sigma.solve(&(jq.transpose() * (&p.v - &q * dt))) / t;
    let recon = &q * dt + &jq * du * t;
    let residual = (recon - &p.v).norm() / p.v.norm().max(1.0);
    if residual > tol_cone {
        return Err(Error::NotOnCone {
            residual,
            tol: tol_cone,
        });
    }
    Ok(())
}
