//! The unit 2-sphere with the gradient diffusion `X(x)e = e - <x,e>x`.
//!
//! `X(x)` is the orthogonal projection of R^3 onto the tangent plane, so the
//! induced metric is the round one and the induced connection is Levi-Civita.
//! The kernel of `X(x)` is the normal line `span(x)`; the redundant noise is
//! one-dimensional. Closed forms used below:
//!
//!   nabla_v X^e = -<x,e> v          (vanishes for tangent e)
//!   Ric#(v)     = (n-1) v = v       (constant positive curvature, n = 2)
//!
//! Parallel transport between nearby points is the rotation about the axis
//! `x cross y`, which is exact along geodesics and first-order consistent
//! along sampled paths. The same rotation transports the trivial noise
//! bundle: it maps the normal line at `x` onto the normal line at `y` and
//! the tangent plane onto the tangent plane, orthogonally.

use crate::so3;
use crate::Manifold;
use nalgebra::{Matrix3, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sphere;

/// Projection onto the tangent plane at unit `x`.
fn proj(x: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::identity() - x * x.transpose()
}

/// The Stratonovich predictor-corrector step before re-projection.
/// Returns (corrector output, predictor point).
fn raw_step(x: &Vector3<f64>, db: &Vector3<f64>, dt: f64) -> (Vector3<f64>, Vector3<f64>) {
    let t1 = Sphere::diffusion(x, db) + Sphere::drift(x) * dt;
    let p = x + t1;
    // the coefficient field extended off the sphere: X(y)e = e - <y,e>y
    let t2 = db - p * p.dot(db) + Sphere::drift(&p) * dt;
    let c = x + (t1 + t2) * 0.5;
    (c, p)
}

impl Manifold for Sphere {
    type Point = Vector3<f64>;
    type Ambient = Vector3<f64>;

    const NAME: &'static str = "sphere";
    const INTRINSIC_DIM: usize = 2;
    const AMBIENT_DIM: usize = 3;
    const KERNEL_DIM: usize = 1;

    fn base_point() -> Vector3<f64> {
        Vector3::new(0.0, 0.0, 1.0)
    }

    fn amb_zero() -> Vector3<f64> {
        Vector3::zeros()
    }

    fn amb_norm(v: &Vector3<f64>) -> f64 {
        v.norm()
    }

    fn point_distance(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
        (a - b).norm()
    }

    fn embed(x: &Vector3<f64>) -> Vector3<f64> {
        *x
    }

    fn constraint_residual(x: &Vector3<f64>) -> f64 {
        (x.norm() - 1.0).abs()
    }

    fn tangency_residual(x: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
        x.dot(v).abs()
    }

    fn clean(x: &Vector3<f64>) -> Vector3<f64> {
        x.normalize()
    }

    fn diffusion(x: &Vector3<f64>, e: &Vector3<f64>) -> Vector3<f64> {
        e - x * x.dot(e)
    }

    fn right_inverse(_x: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
        // the inclusion: tangent vectors are their own noise coordinates
        *v
    }

    fn drift(_x: &Vector3<f64>) -> Vector3<f64> {
        Vector3::zeros()
    }

    fn nabla_drift(_x: &Vector3<f64>, _v: &Vector3<f64>) -> Vector3<f64> {
        Vector3::zeros()
    }

    fn nabla_x(x: &Vector3<f64>, v: &Vector3<f64>, e: &Vector3<f64>) -> Vector3<f64> {
        v * (-x.dot(e))
    }

    fn ricci_sharp(x: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
        // (n-1) v with n = 2, projected for hygiene
        Sphere::diffusion(x, v) * (Self::INTRINSIC_DIM as f64 - 1.0)
    }

    fn metric(_x: &Vector3<f64>, u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
        u.dot(v)
    }

    fn kernel_proj_perp(x: &Vector3<f64>) -> Matrix3<f64> {
        proj(x)
    }

    fn kernel_proj(x: &Vector3<f64>) -> Matrix3<f64> {
        x * x.transpose()
    }

    fn kernel_basis(x: &Vector3<f64>) -> Vec<Vector3<f64>> {
        vec![*x]
    }

    fn curve(x: &Vector3<f64>, v: &Vector3<f64>, s: f64) -> Vector3<f64> {
        (x + v * s).normalize()
    }

    fn sde_step(x: &Vector3<f64>, db: &Vector3<f64>, dt: f64) -> Vector3<f64> {
        raw_step(x, db, dt).0.normalize()
    }

    fn sde_step_defect(x: &Vector3<f64>, db: &Vector3<f64>, dt: f64) -> f64 {
        (raw_step(x, db, dt).0.norm() - 1.0).abs()
    }

    fn sde_step_jacobian_point(x: &Vector3<f64>, db: &Vector3<f64>, dt: f64) -> Matrix3<f64> {
        // Differentiate corrector + normalization; the drift is identically
        // zero for this model so its derivative contributes nothing.
        let (c, p) = raw_step(x, db, dt);
        let m0 = -x * db.transpose() - Matrix3::identity() * x.dot(db);
        let m2 = -p * db.transpose() - Matrix3::identity() * p.dot(db);
        let dc = Matrix3::identity() + (m0 + m2 * (Matrix3::identity() + m0)) * 0.5;
        let chat = c.normalize();
        let dretr = (Matrix3::identity() - chat * chat.transpose()) / c.norm();
        dretr * dc * proj(x)
    }

    fn sde_step_jacobian_noise(x: &Vector3<f64>, db: &Vector3<f64>, dt: f64) -> Matrix3<f64> {
        let (c, p) = raw_step(x, db, dt);
        let m2 = -p * db.transpose() - Matrix3::identity() * p.dot(db);
        let px = proj(x);
        let dp_amb = Matrix3::identity() - p * p.transpose();
        let dc = (px + dp_amb + m2 * px) * 0.5;
        let chat = c.normalize();
        let dretr = (Matrix3::identity() - chat * chat.transpose()) / c.norm();
        dretr * dc
    }

    fn parallel_step(x: &Vector3<f64>, y: &Vector3<f64>) -> Matrix3<f64> {
        so3::rotation_between(x, y)
    }

    fn adjoint_parallel_step(x: &Vector3<f64>, y: &Vector3<f64>) -> Matrix3<f64> {
        // Levi-Civita is torsion-free, so the adjoint transport coincides
        so3::rotation_between(x, y)
    }

    fn trivial_bundle_step(x: &Vector3<f64>, y: &Vector3<f64>) -> Matrix3<f64> {
        // the aligning rotation is the direct-sum transport: tangent block
        // to tangent block, normal line to normal line
        so3::rotation_between(x, y)
    }
}
