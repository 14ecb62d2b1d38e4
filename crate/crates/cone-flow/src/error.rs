//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A phase-space operation received a zero velocity vector.
    #[error("velocity vector is zero")]
    ZeroVelocity,

    /// The state is radial (lies on a generatrix) and the requested
    /// quantity is only defined for non-radial states.
    #[error("state is radial; operation requires a non-radial state")]
    RadialState,

    /// `scale_phase` called with a zero scale factor.
    #[error("scale factors must be nonzero")]
    ZeroScale,

    /// An integral vector that must be nonzero was all zeros.
    #[error("integral vector is zero (maps to the radial family)")]
    ZeroVector,

    /// A chart coordinate left the domain of a non-periodic chart.
    #[error("chart coordinate {index} = {value} outside domain [{lo}, {hi}]")]
    Domain {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// An ambient point failed the cone-membership residual test.
    #[error("point is not on the cone (residual {residual:.3e} > tol {tol:.3e})")]
    NotOnCone { residual: f64, tol: f64 },

    /// Newton chart inversion failed to converge.
    #[error("chart inversion did not converge (best residual {residual:.3e})")]
    NoConvergence { residual: f64 },

    /// The induced metric was not symmetric positive definite.
    #[error("induced metric is rank deficient or not SPD: {0}")]
    RankDeficient(String),

    /// The adaptive integrator exceeded its step budget.
    #[error("integrator exceeded {max_steps} steps at s = {s}")]
    StepLimit { s: f64, max_steps: usize },

    /// A non-radial cone trajectory came closer to the vertex than
    /// sqrt(I)/2, which signals numerical blow-up.
    #[error("trajectory approached the vertex: |t| = {t:.3e} < {limit:.3e} at s = {s}")]
    VertexApproach { s: f64, t: f64, limit: f64 },

    /// A correspondence operation requires a canonicalized geodesic
    /// (I = 1, unit speed, tangency at s = 0).
    #[error("trajectory is not in canonical form: {0}")]
    NotNormalized(String),

    /// Configuration or input validation failure.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
