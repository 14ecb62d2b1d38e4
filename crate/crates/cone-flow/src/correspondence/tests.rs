use super::*;
use crate::engine::sample_trajectory;
use crate::manifold::sigma_point;
use approx::assert_relative_eq;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

fn circle(rho: f64) -> Manifold {
    Manifold::from_config(&ManifoldConfig::circle(rho)).unwrap()
}

fn settings() -> IntegratorSettings {
    IntegratorSettings::default()
}

/// Canonical launch on the unit-circle cone: I = 1, unit speed,
/// tangency at s = 0, starting on the unit sphere.
fn canonical_launch() -> PhasePoint {
    let d = std::f64::consts::FRAC_1_SQRT_2;
    PhasePoint::from_slices(&[d, 0.0, d], &[0.0, 1.0, 0.0]).unwrap()
}

/// Canonical trajectory of the launch above over `span`.
fn canonical_trajectory(span: (f64, f64)) -> Trajectory {
    let m = circle(1.0);
    sample_trajectory(&m, &canonical_launch(), span, 51, Backend::Direct, &settings()).unwrap()
}

#[test]
fn projection_matches_link_parametrization() {
    // On the round link the projected geodesic is arc-length traversal
    // of the circle of radius 1/sqrt(2): gamma_tilde(s~) = q(sqrt(2)·s~).
    let m = circle(1.0);
    let sg = project_geodesic(canonical_trajectory((-4.0, 4.0))).unwrap();
    for st in [-1.2, -0.5, 0.0, 0.3, 1.2] {
        let (q, dq) = sg.eval(st);
        let expect = sigma_point(&m, &[2f64.sqrt() * st]).unwrap();
        assert!((q.clone() - expect).norm() < 1e-7, "projection off at {st}");
        assert_relative_eq!(dq.norm(), 1.0, epsilon = 1e-7);
        assert!(q.dot(&dq).abs() < 1e-7);
    }

    // s~ = 0 is the trajectory's own point.
    let (q0, _) = sg.eval(0.0);
    let p = canonical_launch();
    assert!((q0 - p.x).norm() < 1e-9);
}

#[test]
fn projection_derivative_matches_numeric_differentiation() {
    let sg = project_geodesic(canonical_trajectory((-4.0, 4.0))).unwrap();
    let h = 1e-6;
    for st in [-1.2, -0.5, 0.5, 1.2] {
        let (_, dq) = sg.eval(st);
        let (qp, _) = sg.eval(st + h);
        let (qm, _) = sg.eval(st - h);
        let fd = (qp - qm) / (2.0 * h);
        assert!((dq - fd).norm() < 1e-5);
    }
}

#[test]
fn projection_requires_canonical_form() {
    let m = circle(1.0);
    // I = 2, not 1.
    let p = PhasePoint::from_slices(&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).unwrap();
    let traj = sample_trajectory(&m, &p, (-1.0, 1.0), 11, Backend::Direct, &settings()).unwrap();
    assert!(matches!(
        project_geodesic(traj),
        Err(Error::NotNormalized(_))
    ));

    // Canonical I and speed but tangency away from s = 0.
    let d = std::f64::consts::FRAC_1_SQRT_2;
    let p = canonical_launch();
    let shifted = crate::engine::flow(&circle(1.0), &p, 0.7, Backend::Direct, &settings()).unwrap();
    let traj =
        sample_trajectory(&m, &shifted, (-1.0, 1.0), 11, Backend::Direct, &settings()).unwrap();
    assert!(matches!(
        project_geodesic(traj),
        Err(Error::NotNormalized(_))
    ));

    // Radial trajectories cannot be projected.
    let radial = PhasePoint::from_slices(&[d, 0.0, d], &[d, 0.0, d]).unwrap();
    let traj =
        sample_trajectory(&m, &radial, (-1.0, 1.0), 11, Backend::Direct, &settings()).unwrap();
    assert!(matches!(project_geodesic(traj), Err(Error::RadialState)));
}

#[test]
fn lift_hand_values_on_round_cone() {
    let m = circle(1.0);
    let p = canonical_launch();
    let sg = SigmaGeodesic::from_phase_point(&m, &p, (-1.5, 1.5), &settings()).unwrap();
    let lifted = lift_geodesic(sg, 1.0, 1.0).unwrap();

    let g0 = lifted.eval(0.0);
    assert_relative_eq!(g0.x[0], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-10);
    assert_relative_eq!(g0.x[1], 0.0, epsilon = 1e-10);
    assert_relative_eq!(g0.x[2], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-10);

    // gamma(1) = q(sqrt(2)·pi/4)·sqrt(2): spec'd coordinates.
    let g1 = lifted.eval(1.0);
    let u = 2f64.sqrt() * FRAC_PI_4;
    assert_relative_eq!(g1.x[0], u.cos(), epsilon = 1e-9);
    assert_relative_eq!(g1.x[1], u.sin(), epsilon = 1e-9);
    assert_relative_eq!(g1.x[2], 1.0, epsilon = 1e-9);
    assert_relative_eq!(g1.x[0], 0.44404810, epsilon = 1e-7);
    assert_relative_eq!(g1.x[1], 0.89600349, epsilon = 1e-7);
    assert_relative_eq!(g1.x.norm_squared(), 2.0, epsilon = 1e-9);
}

#[test]
fn lift_then_project_roundtrips() {
    let m = circle(1.0);
    let p = canonical_launch();
    let sg = SigmaGeodesic::from_phase_point(&m, &p, (-1.4, 1.4), &settings()).unwrap();
    let lifted = lift_geodesic(sg, 1.0, 1.0).unwrap();

    // The lifted curve, sampled as a trajectory, projects back to the
    // same link geodesic.
    let traj = sample_trajectory(&m, &p, (-5.0, 5.0), 101, Backend::Lift, &settings()).unwrap();
    let back = project_geodesic(traj).unwrap();
    for st in [-1.3, -0.4, 0.0, 0.8, 1.3] {
        let (q_lift, dq_lift) = lifted.sigma().eval(st);
        let (q_back, dq_back) = back.eval(st);
        assert!((q_lift.clone() - q_back).norm() < 1e-9, "q mismatch at {st}");
        assert!(
            (dq_lift.clone() - dq_back).norm() < 1e-8,
            "dq mismatch at {st}"
        );
    }
}

#[test]
fn lift_satisfies_cone_invariants_without_cone_integration() {
    // Lift on the torus cone: I conservation and the quadratic law hold
    // for the lifted states even though no cone ODE was integrated.
    let m = Manifold::from_config(&ManifoldConfig::torus(2.0, 0.5)).unwrap();
    let (x, v) = crate::engine::ambient_from_chart(&m, 1.3, &[0.4, 2.0], -0.2, &[0.4, 0.3]);
    let speed = v.norm();
    let p = PhasePoint::new(x, v / speed).unwrap();
    let i0 = integral_i(&p).unwrap();
    let s0 = -p.x.dot(&p.v);

    let lift = LiftedFlow::from_phase_point(&m, &p, (-6.0, 6.0), &settings()).unwrap();
    for k in 0..=40 {
        let s = -6.0 + 12.0 * k as f64 / 40.0;
        let (x, v) = lift.eval(s);
        let state = PhasePoint::new(x, v).unwrap();
        assert!((integral_i(&state).unwrap() - i0).abs() < 1e-9 * (1.0 + i0));
        assert!((state.x.norm_squared() - ((s - s0).powi(2) + i0)).abs() < 1e-8 * (1.0 + s * s));
        assert_relative_eq!(state.speed(), 1.0, epsilon = 1e-9);
    }
}

#[test]
fn canonical_lift_tangency_sign() {
    let m = circle(1.0);
    let p = canonical_launch();
    let sg = SigmaGeodesic::from_phase_point(&m, &p, (-1.5, 1.5), &settings()).unwrap();
    let lifted = lift_geodesic(sg, 1.0, 1.0).unwrap();
    let g0 = lifted.eval(0.0);
    assert!(g0.x.dot(&g0.v).abs() < 1e-12);
    for s in [-5.0, -0.1, 0.1, 5.0] {
        let g = lifted.eval(s);
        assert_eq!(g.x.dot(&g.v).signum(), s.signum());
    }
}

#[test]
fn asymptotic_directions_on_round_cone() {
    let m = circle(1.0);
    let p = PhasePoint::from_slices(&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).unwrap();
    let (d_plus, d_minus) = asymptotic_directions(&m, &p, &settings()).unwrap();

    // d_plus = q(sqrt(2)·pi/2), d_minus = −q(−sqrt(2)·pi/2).
    let u_inf = 2f64.sqrt() * FRAC_PI_2;
    let q_plus = sigma_point(&m, &[u_inf]).unwrap();
    let q_minus = sigma_point(&m, &[-u_inf]).unwrap();
    assert!((d_plus.clone() - q_plus).norm() < 1e-7);
    assert!((d_minus.clone() + q_minus).norm() < 1e-7);

    assert_relative_eq!(d_plus.norm(), 1.0, epsilon = 1e-9);
    assert_relative_eq!(d_minus.norm(), 1.0, epsilon = 1e-9);

    // Both limit directions lie on the cone (d_minus on the lower half).
    let (t_p, _) = crate::manifold::ambient_to_chart(&m, &d_plus).unwrap();
    let (t_m, _) = crate::manifold::ambient_to_chart(&m, &d_minus).unwrap();
    assert!(t_p > 0.0 && t_m < 0.0);
}

#[test]
fn finite_s_velocity_approaches_asymptote() {
    let m = circle(1.0);
    let p = PhasePoint::from_slices(&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).unwrap();
    let (d_plus, _) = asymptotic_directions(&m, &p, &settings()).unwrap();
    let big_s = 100.0;
    let far = crate::engine::flow(&m, &p, big_s, Backend::Direct, &settings()).unwrap();
    let cosang = (far.v.dot(&d_plus) / far.v.norm()).clamp(-1.0, 1.0);
    assert!(cosang.acos() <= 2.0 / big_s);
}

#[test]
fn wrap_counts_for_circle_links() {
    let m = circle(1.0);
    let p = canonical_launch();
    let sg = SigmaGeodesic::from_phase_point(&m, &p, (-0.1, 0.1), &settings()).unwrap();
    let w = wrap_count(&m, &sg).unwrap();
    assert_relative_eq!(w, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
    assert!(w < 1.0);

    // rho = 0.5 < 1/sqrt(3): the projection interval overcovers.
    let m_small = circle(0.5);
    let w = wrap_count(&m_small, &sg).unwrap();
    assert_relative_eq!(w, 1.25f64.sqrt(), epsilon = 1e-12);
    assert!(w > 1.0);

    // Ellipse degenerating to a circle reproduces the circle value
    // through the quadrature path.
    let m_ell = Manifold::from_config(&ManifoldConfig::ellipse(1.0, 1.0)).unwrap();
    let w_ell = wrap_count(&m_ell, &sg).unwrap();
    assert_relative_eq!(w_ell, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-10);

    // No closed-geodesic length is claimed for the torus.
    let m_torus = Manifold::from_config(&ManifoldConfig::torus(2.0, 0.5)).unwrap();
    assert!(wrap_count(&m_torus, &sg).is_none());
}

#[test]
fn overcovering_geodesic_self_intersects() {
    // Canonical geodesic on the rho = 0.5 cone: crossings at
    // s = ±tan(pi·sin(alpha)), about ±5.98.
    let m = circle(0.5);
    let sa = 0.5 / 1.25f64.sqrt();
    let q0 = sigma_point(&m, &[0.0]).unwrap();
    let (_, jq) = crate::manifold::sigma_frame(&m, &[0.0]).unwrap();
    let dq0 = jq.column(0).into_owned() / jq.column(0).norm();
    let p = PhasePoint::new(q0, dq0).unwrap();
    assert_relative_eq!(integral_i(&p).unwrap(), 1.0, epsilon = 1e-12);

    let traj = sample_trajectory(&m, &p, (-8.0, 8.0), 2001, Backend::Direct, &settings()).unwrap();
    let hits = self_intersections(&traj, 0.5, 1e-6);
    assert!(!hits.is_empty(), "no self-intersection found");
    let expect = (std::f64::consts::PI * sa).tan();
    let hit = hits
        .iter()
        .min_by(|a, b| {
            (a.s_a + expect)
                .abs()
                .partial_cmp(&(b.s_a + expect).abs())
                .unwrap()
        })
        .unwrap();
    assert_relative_eq!(hit.s_a, -expect, epsilon = 1e-5);
    assert_relative_eq!(hit.s_b, expect, epsilon = 1e-5);
    assert!(hit.distance <= 1e-6);
}

#[test]
fn no_false_intersections_on_wide_cone() {
    // rho = 1 > 1/sqrt(3): the development never overlaps itself.
    let m = circle(1.0);
    let p = canonical_launch();
    let traj = sample_trajectory(&m, &p, (-8.0, 8.0), 1001, Backend::Direct, &settings()).unwrap();
    assert!(self_intersections(&traj, 0.5, 1e-6).is_empty());
}

#[test]
fn canonicalize_normalizes_arbitrary_states() {
    let m = Manifold::from_config(&ManifoldConfig::torus(2.0, 0.5)).unwrap();
    let (x, v) = crate::engine::ambient_from_chart(&m, -1.4, &[5.0, 0.7], 0.3, &[-0.2, 0.5]);
    let p = PhasePoint::new(x, v).unwrap();

    let (canonical, meta) = canonicalize(&m, &p, Backend::Direct, &settings()).unwrap();
    assert_relative_eq!(integral_i(&canonical).unwrap(), 1.0, epsilon = 1e-9);
    assert_relative_eq!(canonical.speed(), 1.0, epsilon = 1e-9);
    assert!(canonical.x.dot(&canonical.v).abs() < 1e-9);
    assert_relative_eq!(meta.i_value, integral_i(&p).unwrap(), epsilon = 1e-12);
    assert_relative_eq!(meta.speed, p.speed(), epsilon = 1e-12);
}
