//! Pointwise algebraic identities that must hold at every configuration,
//! exercised over randomized inputs via proptest.

use geometry::{so3, Manifold, RotationGroup, Sphere};
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, c)| Vector3::new(a, b, c))
}

fn unit3() -> impl Strategy<Value = Vector3<f64>> {
    vec3().prop_filter_map("too short to normalize", |v| {
        let n = v.norm();
        (n > 0.2).then(|| v / n)
    })
}

fn rot3() -> impl Strategy<Value = Matrix3<f64>> {
    (unit3(), 0.0..3.0f64).prop_map(|(axis, angle)| so3::rodrigues(&(axis * angle)))
}

proptest! {
    #[test]
    fn sphere_diffusion_then_coords_is_identity_on_tangents(x in unit3(), e in vec3()) {
        // X(x) Y(x) v = v for tangent v
        let v = Sphere::diffusion(&x, &e);
        let back = Sphere::diffusion(&x, &Sphere::right_inverse(&x, &v));
        prop_assert!((back - v).norm() < 1e-10);
    }

    #[test]
    fn sphere_kernel_projections_resolve_identity(x in unit3()) {
        let kp = Sphere::kernel_proj_perp(&x);
        let kk = Sphere::kernel_proj(&x);
        prop_assert!((kp * kp - kp).norm() < 1e-12);
        prop_assert!((kk * kk - kk).norm() < 1e-12);
        prop_assert!((kp + kk - Matrix3::identity()).norm() < 1e-12);
        prop_assert!((kp * kk).norm() < 1e-12);
    }

    #[test]
    fn sphere_diffusion_annihilates_kernel(x in unit3(), s in -2.0..2.0f64) {
        for b in Sphere::kernel_basis(&x) {
            prop_assert!(Sphere::diffusion(&x, &(b * s)).norm() < 1e-12);
        }
    }

    #[test]
    fn sphere_diffusion_is_isometric_off_kernel(x in unit3(), e in vec3()) {
        let ep = Sphere::kernel_proj_perp(&x) * e;
        let v = Sphere::diffusion(&x, &ep);
        prop_assert!((Sphere::metric(&x, &v, &v) - ep.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn sphere_step_stays_on_the_manifold(x in unit3(), db in vec3()) {
        let y = Sphere::sde_step(&x, &(db * 0.05), 1e-3);
        prop_assert!(Sphere::constraint_residual(&y) < 1e-12);
        prop_assert!(Sphere::sde_step_defect(&x, &(db * 0.05), 1e-3) < 1e-3);
    }

    #[test]
    fn sphere_transport_steps_are_orthogonal_and_map_base(x in unit3(), e in vec3()) {
        let y = Sphere::sde_step(&x, &(e * 0.03), 1e-3);
        let r = Sphere::parallel_step(&x, &y);
        prop_assert!(so3::ortho_defect(&r) < 1e-12);
        prop_assert!((r * x - y).norm() < 1e-12);
        // transport respects tangency: r maps T_x onto T_y
        let v = Sphere::diffusion(&x, &e);
        prop_assert!(Sphere::tangency_residual(&y, &(r * v)) < 1e-10);
    }

    #[test]
    fn group_diffusion_then_coords_is_identity(g in rot3(), e in vec3()) {
        let v = RotationGroup::diffusion(&g, &e);
        let back = RotationGroup::right_inverse(&g, &v);
        prop_assert!((back - e).norm() < 1e-12);
    }

    #[test]
    fn group_metric_is_euclidean_in_noise_coords(g in rot3(), a in vec3(), b in vec3()) {
        let u = RotationGroup::diffusion(&g, &a);
        let w = RotationGroup::diffusion(&g, &b);
        prop_assert!((RotationGroup::metric(&g, &u, &w) - a.dot(&b)).abs() < 1e-12);
    }

    #[test]
    fn group_step_stays_in_the_group(g in rot3(), db in vec3()) {
        let h = RotationGroup::sde_step(&g, &(db * 0.05), 1e-3);
        prop_assert!(RotationGroup::constraint_residual(&h) < 1e-12);
    }

    #[test]
    fn group_adjoint_transport_conjugates_correctly(g in rot3(), db in vec3()) {
        // adjoint transport in noise coords is y^T x, an orthogonal matrix
        let h = RotationGroup::sde_step(&g, &(db * 0.05), 1e-3);
        let a = RotationGroup::adjoint_parallel_step(&g, &h);
        prop_assert!(so3::ortho_defect(&a) < 1e-11);
        // undoing the step recovers the identity
        let back = RotationGroup::adjoint_parallel_step(&h, &g);
        prop_assert!((a * back - Matrix3::identity()).norm() < 1e-11);
    }

    #[test]
    fn cleaning_restores_constraints(x in unit3(), g in rot3(), n in vec3()) {
        let x_noisy = x + n * 1e-8;
        prop_assert!(Sphere::constraint_residual(&Sphere::clean(&x_noisy)) < 1e-14);
        let g_noisy = g + so3::hat(&n) * 1e-8;
        prop_assert!(RotationGroup::constraint_residual(&RotationGroup::clean(&g_noisy)) < 1e-13);
    }
}
