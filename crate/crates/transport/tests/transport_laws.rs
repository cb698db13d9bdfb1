//! Transport identities along discrete paths: closed-form oracles on
//! structured paths, decay laws on random ones, and the inverse pairing of
//! the damped integral with the damped derivative.

use geometry::{Manifold, RotationGroup, Sphere};
use nalgebra::{Matrix3, Vector3};
use rand::{rngs::StdRng, RngExt, SeedableRng};
use transport::{
    covariant_time_derivative, density_l2_norm, frame_along,
    parallel_time_derivative, parallel_translate, script_w, PathVectorField,
};

fn normal(rng: &mut StdRng) -> f64 {
    // Box-Muller from two uniforms; the cosine branch only
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn brownian_path<M: Manifold>(seed: u64, n: usize, dt: f64) -> Vec<M::Point> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut points = vec![M::base_point()];
    for k in 0..n {
        let db = Vector3::new(normal(&mut rng), normal(&mut rng), normal(&mut rng)) * dt.sqrt();
        points.push(M::sde_step(&points[k], &db, dt));
    }
    points
}

#[test]
fn constant_path_has_identity_parallel_transport() {
    let points = vec![Sphere::base_point(); 64];
    let frame = parallel_translate::<Sphere>(&points, 1.0 / 63.0);
    for m in &frame.par {
        assert!((m - Matrix3::identity()).norm() < 1e-15);
    }
    let points = vec![RotationGroup::base_point(); 64];
    let frame = frame_along::<RotationGroup>(&points, 1.0 / 63.0);
    for m in frame.par.iter().chain(frame.adj_par.iter()).chain(frame.damped.iter()) {
        assert!((m - Matrix3::identity()).norm() < 1e-15);
    }
}

#[test]
fn transports_are_isometric_along_rough_paths() {
    let dt = 1e-3;
    for seed in 0..4 {
        let points = brownian_path::<Sphere>(seed, 1000, dt);
        let frame = parallel_translate::<Sphere>(&points, dt);
        assert!(frame.isometry_defect() < 1e-8, "defect {:.3e}", frame.isometry_defect());
        assert!(frame.split_defect < 1e-10, "split defect {:.3e}", frame.split_defect);

        let points = brownian_path::<RotationGroup>(seed, 1000, dt);
        let frame = parallel_translate::<RotationGroup>(&points, dt);
        assert!(frame.isometry_defect() < 1e-8, "defect {:.3e}", frame.isometry_defect());
        assert_eq!(frame.split_defect, 0.0);
    }
}

#[test]
fn great_circle_transport_matches_the_closed_form_rotation() {
    // points advance along a great circle; transport must be the single
    // rotation about the circle's normal by the swept angle
    let n = 500;
    let omega = 1.3;
    let dt = 1.0 / n as f64;
    let points: Vec<Vector3<f64>> = (0..=n)
        .map(|k| {
            let th = omega * k as f64 * dt;
            Vector3::new(th.sin(), 0.0, th.cos())
        })
        .collect();
    let frame = parallel_translate::<Sphere>(&points, dt);
    let axis = Vector3::new(0.0, 1.0, 0.0);
    for (k, m) in frame.par.iter().enumerate() {
        let oracle = geometry::so3::rodrigues(&(axis * (omega * k as f64 * dt)));
        assert!((m - oracle).norm() < 1e-6, "node {k}: {:.3e}", (m - oracle).norm());
    }
}

#[test]
fn damping_contracts_sphere_vectors_at_the_exact_exponential_rate() {
    let dt = 1e-3;
    let mut rng = StdRng::seed_from_u64(9);
    for seed in 10..14 {
        let points = brownian_path::<Sphere>(seed, 1000, dt);
        let frame = frame_along::<Sphere>(&points, dt);
        let v = Sphere::kernel_proj_perp(&points[0])
            * Vector3::new(normal(&mut rng), normal(&mut rng), normal(&mut rng));
        let v = v / v.norm();
        for (k, w) in frame.damped.iter().enumerate() {
            let expected = (-0.5 * k as f64 * dt).exp();
            let got = (w * v).norm();
            assert!(
                (got - expected).abs() < 1e-8,
                "node {k}: decay {got:.12} vs {expected:.12}"
            );
        }
    }
}

#[test]
fn group_damped_translation_equals_the_adjoint_transport() {
    // zero curvature term and zero drift leave the ODE inert
    let dt = 1e-3;
    let points = brownian_path::<RotationGroup>(3, 1000, dt);
    let frame = frame_along::<RotationGroup>(&points, dt);
    for (w, a) in frame.damped.iter().zip(frame.adj_par.iter()) {
        assert!((w - a).norm() < 1e-12);
    }
}

#[test]
fn damped_translation_starts_at_the_identity_and_stays_invertible() {
    let dt = 1e-3;
    let points = brownian_path::<Sphere>(21, 1000, dt);
    let frame = frame_along::<Sphere>(&points, dt);
    let kp0 = Sphere::kernel_proj_perp(&points[0]);
    assert!((frame.damped[0] - kp0).norm() < 1e-15);
    for k in 0..frame.len() {
        let defect = (frame.damped_inv[k] * frame.damped[k] - kp0).norm();
        assert!(defect < 1e-12, "node {k}: inverse defect {defect:.3e}");
    }
}

#[test]
fn damped_parallel_fields_have_zero_density() {
    let dt = 1e-3;
    let points = brownian_path::<Sphere>(5, 1000, dt);
    let frame = frame_along::<Sphere>(&points, dt);
    let v0 = Sphere::kernel_proj_perp(&points[0]) * Vector3::new(0.3, -1.1, 0.7);
    let field = PathVectorField {
        values: frame.damped.iter().map(|w| w * v0).collect(),
        density: None,
    };
    for u in covariant_time_derivative(&frame, &field) {
        assert!(u.norm() < 1e-9, "density residue {:.3e}", u.norm());
    }
}

#[test]
fn parallel_fields_have_zero_parallel_derivative() {
    let dt = 1e-3;
    let points = brownian_path::<RotationGroup>(6, 1000, dt);
    let frame = frame_along::<RotationGroup>(&points, dt);
    let v0 = Vector3::new(0.3, -1.1, 0.7);
    let field = PathVectorField {
        values: frame.par.iter().map(|p| p * v0).collect(),
        density: None,
    };
    for u in parallel_time_derivative(&frame, &field) {
        assert!(u.norm() < 1e-9, "density residue {:.3e}", u.norm());
    }
}

#[test]
fn constant_density_on_a_constant_path_is_recovered_exactly() {
    // with identity transports the integral is t*c and differencing is exact
    let n = 1000;
    let dt = 1.0 / n as f64;
    let points = vec![RotationGroup::base_point(); n + 1];
    let frame = frame_along::<RotationGroup>(&points, dt);
    let c = Vector3::new(1.0, 0.2, -0.4);
    let density = vec![c; n + 1];
    let field = script_w(&frame, &density);
    for (k, v) in field.values.iter().enumerate() {
        assert!((v - c * (k as f64 * dt)).norm() < 1e-12);
    }
    let recovered = covariant_time_derivative(&frame, &field);
    for u in recovered {
        assert!((u - c).norm() < 1e-11);
    }
}

fn smooth_slope(t: f64) -> Vector3<f64> {
    Vector3::new((1.3 * t).sin() + 0.4, (0.9 * t).cos(), 0.3 * (2.0 * t).sin())
}

#[test]
fn integral_and_derivative_are_mutually_inverse_on_frame_smooth_fields() {
    // densities transported from a smooth base curve: differencing sees a
    // smooth pullback, so recovery is second order in dt even though the
    // underlying path is rough
    let dt = 5e-4;
    let n = 2000;
    let points = brownian_path::<Sphere>(8, n, dt);
    let frame = frame_along::<Sphere>(&points, dt);
    let kp0 = Sphere::kernel_proj_perp(&points[0]);
    let density: Vec<Vector3<f64>> = (0..=n)
        .map(|k| frame.par[k] * (kp0 * smooth_slope(k as f64 * dt)))
        .collect();
    let field = script_w(&frame, &density);
    let recovered = covariant_time_derivative(&frame, &field);
    let mut worst: f64 = 0.0;
    for (u, d) in recovered.iter().zip(&density) {
        worst = worst.max((u - d).norm());
    }
    assert!(worst < 3e-6, "density recovery deviation {worst:.3e}");

    let rebuilt = script_w(&frame, &recovered);
    let mut worst: f64 = 0.0;
    for (a, b) in rebuilt.values.iter().zip(&field.values) {
        worst = worst.max((a - b).norm());
    }
    assert!(worst < 1e-5, "roundtrip deviation {worst:.3e}");

    let h_norm = density_l2_norm(dt, &recovered);
    let l2 = density_l2_norm(dt, &density);
    assert!(
        (h_norm - l2).abs() < 1e-6 * l2.max(1.0),
        "norm mismatch {h_norm:.9} vs {l2:.9}"
    );

    // the integral records its own density, and that record is exact
    let from_record = density_l2_norm(dt, field.density.as_deref().unwrap());
    assert_eq!(from_record, l2);
}

#[test]
fn group_frame_smooth_fields_roundtrip_too() {
    let dt = 5e-4;
    let n = 2000;
    let points = brownian_path::<RotationGroup>(12, n, dt);
    let frame = frame_along::<RotationGroup>(&points, dt);
    let density: Vec<Vector3<f64>> = (0..=n)
        .map(|k| frame.adj_par[k] * smooth_slope(k as f64 * dt))
        .collect();
    let field = script_w(&frame, &density);
    let recovered = covariant_time_derivative(&frame, &field);
    let mut worst: f64 = 0.0;
    for (u, d) in recovered.iter().zip(&density) {
        worst = worst.max((u - d).norm());
    }
    assert!(worst < 3e-6, "density recovery deviation {worst:.3e}");
}
