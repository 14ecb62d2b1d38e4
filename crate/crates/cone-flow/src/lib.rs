//! Numerical laboratory for geodesic flows on cones over closed
//! manifolds embedded in the hyperplane {x^{N+1} = 1}.
//!
//! The cone over a closed manifold Γ ⊂ {x^{N+1}=1} is K = {t·p : p ∈ Γ},
//! a flat-ambient surface with a single singular point at the origin.
//! This crate integrates its geodesics by two independent routes,
//! computes the first integrals that make the flow reconstructible, and
//! cross-checks everything against an exact development oracle on round
//! cones:
//!
//! - [`ambient`]: phase points, the conserved quantity `I`, the
//!   radial/non-radial split, tangency parameter and scaling map.
//! - [`manifold`]: chart families (circle, ellipse, torus, sphere,
//!   custom), the spherical link Σ, its induced metric and Christoffel
//!   symbols, and chart inversion.
//! - [`engine`]: adaptive geodesic integration on Σ and on the cone
//!   (warped metric dt² + t²σ), trajectories with dense output.
//! - [`correspondence`]: the dictionary between cone geodesics and
//!   unit-speed link geodesics (radial projection / lift), asymptotic
//!   directions and wrap-count diagnostics.
//! - [`integrals`]: the tangency-state integral vector, its continuous
//!   extension, recovery and geodesic reconstruction.
//! - [`unroll`]: exact planar development of round cones, the test
//!   oracle.
//! - [`cli`]: file-based command-line front end (trace / integrals /
//!   verify / sweep).

pub mod ambient;
pub mod cli;
pub mod correspondence;
pub mod engine;
pub mod error;
pub mod integrals;
pub mod manifold;
pub mod rk;
pub mod unroll;

pub use ambient::{classify, integral_i, scale_phase, tangency_parameter, PhasePoint};
pub use error::{Error, Result};
pub use manifold::{Manifold, ManifoldConfig};
