use super::*;
use crate::ambient::integral_i;
use crate::engine::{ambient_from_chart, sample_trajectory};
use crate::manifold::ManifoldConfig;
use crate::unroll::{oracle_ambient, unroll_state, RoundConeSpec};
use approx::assert_relative_eq;

fn circle() -> Manifold {
    Manifold::from_config(&ManifoldConfig::circle(1.0)).unwrap()
}

fn torus() -> Manifold {
    Manifold::from_config(&ManifoldConfig::torus(2.0, 0.5)).unwrap()
}

fn settings() -> IntegratorSettings {
    IntegratorSettings::default()
}

#[test]
fn j_at_tangency_is_identity() {
    // Already at the tangency point: s0 = 0, J is the state itself.
    let m = circle();
    let p = PhasePoint::from_slices(&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).unwrap();
    let j = integrals_j(&m, &p, Backend::Direct, &settings()).unwrap();
    assert!((&j.position - &p.x).norm() < 1e-12);
    assert!((&j.velocity - &p.v).norm() < 1e-12);
}

#[test]
fn j_reaches_the_tangency_sphere() {
    let m = circle();
    let d = std::f64::consts::FRAC_1_SQRT_2;
    let p = PhasePoint::from_slices(&[1.0, 0.0, 1.0], &[0.5, d, 0.5]).unwrap();
    let j = integrals_j(&m, &p, Backend::Direct, &settings()).unwrap();
    // I = 1 for this launch; the tangency point sits on the unit sphere
    // and is orthogonal to the velocity there.
    assert_relative_eq!(j.position.norm_squared(), 1.0, epsilon = 1e-9);
    assert!(j.position.dot(&j.velocity).abs() < 1e-9);

    // Cross-check against the development oracle at s0 = −1 (chart
    // launch: t0 = √2, dt0 = du0 = 1/√2).
    let spec = RoundConeSpec::new(1.0).unwrap();
    let init = unroll_state(&spec, 2f64.sqrt(), 0.0, d, d).unwrap();
    let (x_o, v_o) = oracle_ambient(&spec, &init, -1.0);
    assert!((&j.position - x_o).norm() < 1e-7);
    assert!((&j.velocity - v_o).norm() < 1e-7);
}

#[test]
fn j_rejects_radial_states() {
    let m = circle();
    let d = std::f64::consts::FRAC_1_SQRT_2;
    let p = PhasePoint::from_slices(&[d, 0.0, d], &[d, 0.0, d]).unwrap();
    assert!(matches!(
        integrals_j(&m, &p, Backend::Direct, &settings()),
        Err(Error::RadialState)
    ));
}

#[test]
fn j_is_constant_along_orbits() {
    let m = torus();
    let (x, v) = ambient_from_chart(&m, 1.0, &[0.3, 1.1], 0.2, &[0.5, -0.3]);
    let p = PhasePoint::new(x, v).unwrap();
    let j0 = integrals_j(&m, &p, Backend::Direct, &settings()).unwrap();
    for s in [-10.0, -1.0, 1.0, 10.0] {
        let moved = crate::engine::flow(&m, &p, s, Backend::Direct, &settings()).unwrap();
        let j = integrals_j(&m, &moved, Backend::Direct, &settings()).unwrap();
        assert!(
            (&j.position - &j0.position).norm() < 1e-7,
            "J position drifted at s = {s}"
        );
        assert!(
            (&j.velocity - &j0.velocity).norm() < 1e-7,
            "J velocity drifted at s = {s}"
        );
    }
}

#[test]
fn i_vec_examples() {
    let m = circle();
    // Radial (vertex convention included) states map to the exact zero
    // vector.
    let d = std::f64::consts::FRAC_1_SQRT_2;
    let radial = PhasePoint::from_slices(&[d, 0.0, d], &[d, 0.0, d]).unwrap();
    let iv = integrals_i_vec(&m, &radial, Backend::Direct, &settings()).unwrap();
    assert!(iv.is_zero());
    assert_eq!(iv.values.len(), 6);

    let vertex = PhasePoint::from_slices(&[0.0, 0.0, 0.0], &[d, 0.0, d]).unwrap();
    let iv = integrals_i_vec(&m, &vertex, Backend::Direct, &settings()).unwrap();
    assert!(iv.is_zero());

    // Perpendicular launch: I = 2 and J = (1,0,1,0,1,0).
    let p = PhasePoint::from_slices(&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).unwrap();
    let iv = integrals_i_vec(&m, &p, Backend::Direct, &settings()).unwrap();
    let expect = [2.0, 0.0, 2.0, 0.0, 2.0, 0.0];
    for (got, want) in iv.values.iter().zip(expect) {
        assert_relative_eq!(*got, want, epsilon = 1e-9);
    }
}

#[test]
fn i_vec_vanishes_continuously_toward_radial() {
    // v_theta sweeps from the Σ direction into the radial direction;
    // ||I_vec|| must fall monotonically to (numerical) zero.
    let m = circle();
    let d = std::f64::consts::FRAC_1_SQRT_2;
    let mut last = f64::INFINITY;
    for theta in [1.4, 1.5, 1.55, 1.57] {
        let v = [
            theta.sin() * d,
            theta.cos(),
            theta.sin() * d,
        ];
        let p = PhasePoint::from_slices(&[1.0, 0.0, 1.0], &v).unwrap();
        let iv = integrals_i_vec(&m, &p, Backend::Direct, &settings()).unwrap();
        let norm = iv.norm();
        assert!(norm < last, "||I_vec|| not decreasing at theta = {theta}");
        last = norm;
    }
    assert!(last < 1e-3);
}

#[test]
fn recover_inverts_the_forward_map() {
    let iv = IntegralVector {
        values: vec![2.0, 0.0, 2.0, 0.0, 2.0, 0.0],
    };
    let (i, j) = recover(&iv).unwrap();
    assert_relative_eq!(i, 2.0, epsilon = 1e-15);
    assert_eq!(j.position.as_slice(), &[1.0, 0.0, 1.0]);
    assert_eq!(j.velocity.as_slice(), &[0.0, 1.0, 0.0]);

    assert!(matches!(
        recover(&IntegralVector { values: vec![0.0; 6] }),
        Err(Error::ZeroVector)
    ));
}

#[test]
fn recover_roundtrip_is_algebraically_tight() {
    let m = torus();
    let (x, v) = ambient_from_chart(&m, 1.0, &[2.0, 0.8], -0.4, &[0.3, 0.9]);
    let p = PhasePoint::new(x, v).unwrap();
    let i0 = integral_i(&p).unwrap();
    let j0 = integrals_j(&m, &p, Backend::Direct, &settings()).unwrap();
    let iv = integrals_i_vec(&m, &p, Backend::Direct, &settings()).unwrap();

    let (i, j) = recover(&iv).unwrap();
    assert_relative_eq!(i, i0, max_relative = 1e-12);
    for (a, b) in j.flatten().iter().zip(j0.flatten()) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }

    // The algebraic identities behind the recovery.
    let half = iv.values.len() / 2;
    let pos_sq: f64 = iv.values[..half].iter().map(|c| c * c).sum();
    let vel_sq: f64 = iv.values[half..].iter().map(|c| c * c).sum();
    assert_relative_eq!(pos_sq, i0.powi(3), max_relative = 1e-10);
    assert_relative_eq!(vel_sq, i0.powi(2), max_relative = 1e-10);
}

#[test]
fn reconstruct_validates_and_roundtrips() {
    let m = circle();
    let iv = IntegralVector {
        values: vec![2.0, 0.0, 2.0, 0.0, 2.0, 0.0],
    };
    let p = reconstruct_geodesic(&m, &iv).unwrap();
    assert_eq!(p.x.as_slice(), &[1.0, 0.0, 1.0]);
    assert_eq!(p.v.as_slice(), &[0.0, 1.0, 0.0]);

    // A corrupted vector fails the cone residual.
    let bad = IntegralVector {
        values: vec![2.0, 0.3, 2.0, 0.0, 2.0, 0.0],
    };
    assert!(matches!(
        reconstruct_geodesic(&m, &bad),
        Err(Error::NotOnCone { .. })
    ));
    assert!(matches!(
        reconstruct_geodesic(&m, &IntegralVector { values: vec![0.0; 6] }),
        Err(Error::ZeroVector)
    ));
}

#[test]
fn reconstructed_orbit_matches_original() {
    let m = torus();
    let (x, v) = ambient_from_chart(&m, 1.0, &[0.9, 2.2], 0.1, &[-0.4, 0.6]);
    let speed = v.norm();
    let p = PhasePoint::new(x, v / speed).unwrap();
    let iv = integrals_i_vec(&m, &p, Backend::Direct, &settings()).unwrap();
    let rec = reconstruct_geodesic(&m, &iv).unwrap();

    // The reconstructed state is the tangency state: align parameters
    // with s0 and compare the orbits pointwise.
    let s0 = -p.x.dot(&p.v);
    let orig = sample_trajectory(&m, &p, (-5.0, 5.0), 41, Backend::Direct, &settings()).unwrap();
    let rec_traj = sample_trajectory(
        &m,
        &rec,
        (-5.0 - s0, 5.0 - s0),
        41,
        Backend::Direct,
        &settings(),
    )
    .unwrap();
    for (a, b) in orig.samples.iter().zip(&rec_traj.samples) {
        assert_relative_eq!(b.s, a.s - s0, epsilon = 1e-12);
        assert!(
            (&a.x - &b.x).norm() < 1e-6,
            "orbit mismatch at s = {}",
            a.s
        );
    }
}

#[test]
fn with_speed_rescales_parametrization() {
    let m = circle();
    let p = PhasePoint::from_slices(&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).unwrap();
    let fast = with_speed(&p, 3.0).unwrap();
    assert_relative_eq!(fast.speed(), 3.0, epsilon = 1e-15);
    assert_eq!(fast.x, p.x);
    assert_relative_eq!(
        integral_i(&fast).unwrap(),
        integral_i(&p).unwrap(),
        epsilon = 1e-15
    );
}
