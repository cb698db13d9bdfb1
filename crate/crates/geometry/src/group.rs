//! The rotation group SO(3) with the left-invariant diffusion
//! `X(g)e = g hat(e)`.
//!
//! `X(g)` is injective (no redundant noise: `ker X = 0`, `K_perp = I`), and
//! the induced connection is the flat left-invariant one, for which every
//! field `X^e` is parallel: `nabla_v X^e = 0` for all `e`, and `Ric# = 0`.
//! The adjoint connection is the flat right-invariant one; its transport is
//! right translation, which is what conjugates the damping equation here.
//!
//! The induced metric makes `X(g)` an isometry from R^3, which is half the
//! Frobenius metric on tangent matrices (a skew matrix `hat(e)` has squared
//! Frobenius norm `2|e|^2`). All noise-coordinate bookkeeping goes through
//! `Y(g)v = vee(g^T v)`.

use crate::so3;
use crate::Manifold;
use nalgebra::{Matrix3, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RotationGroup;

impl Manifold for RotationGroup {
    type Point = Matrix3<f64>;
    type Ambient = Matrix3<f64>;

    const NAME: &'static str = "group";
    const INTRINSIC_DIM: usize = 3;
    const AMBIENT_DIM: usize = 9;
    const KERNEL_DIM: usize = 0;

    fn base_point() -> Matrix3<f64> {
        Matrix3::identity()
    }

    fn amb_zero() -> Matrix3<f64> {
        Matrix3::zeros()
    }

    fn amb_norm(v: &Matrix3<f64>) -> f64 {
        v.norm()
    }

    fn point_distance(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        (a - b).norm()
    }

    fn embed(g: &Matrix3<f64>) -> Matrix3<f64> {
        *g
    }

    fn constraint_residual(g: &Matrix3<f64>) -> f64 {
        // orthogonality plus the determinant sign (reflections are not points)
        so3::ortho_defect(g) + (g.determinant() - 1.0).abs()
    }

    fn tangency_residual(g: &Matrix3<f64>, v: &Matrix3<f64>) -> f64 {
        // tangent at g means g^T v is skew
        let m = g.transpose() * v;
        ((m + m.transpose()) * 0.5).norm()
    }

    fn clean(g: &Matrix3<f64>) -> Matrix3<f64> {
        so3::polar(g)
    }

    fn diffusion(g: &Matrix3<f64>, e: &Vector3<f64>) -> Matrix3<f64> {
        g * so3::hat(e)
    }

    fn right_inverse(g: &Matrix3<f64>, v: &Matrix3<f64>) -> Vector3<f64> {
        so3::vee(&so3::skew_part(&(g.transpose() * v)))
    }

    fn drift(_g: &Matrix3<f64>) -> Matrix3<f64> {
        Matrix3::zeros()
    }

    fn nabla_drift(_g: &Matrix3<f64>, _v: &Matrix3<f64>) -> Matrix3<f64> {
        Matrix3::zeros()
    }

    fn nabla_x(_g: &Matrix3<f64>, _v: &Matrix3<f64>, _e: &Vector3<f64>) -> Matrix3<f64> {
        // left-invariant fields are parallel for the flat connection
        Matrix3::zeros()
    }

    fn ricci_sharp(_g: &Matrix3<f64>, _v: &Matrix3<f64>) -> Matrix3<f64> {
        Matrix3::zeros()
    }

    fn metric(g: &Matrix3<f64>, u: &Matrix3<f64>, v: &Matrix3<f64>) -> f64 {
        Self::right_inverse(g, u).dot(&Self::right_inverse(g, v))
    }

    fn kernel_proj_perp(_g: &Matrix3<f64>) -> Matrix3<f64> {
        Matrix3::identity()
    }

    fn kernel_proj(_g: &Matrix3<f64>) -> Matrix3<f64> {
        Matrix3::zeros()
    }

    fn kernel_basis(_g: &Matrix3<f64>) -> Vec<Vector3<f64>> {
        Vec::new()
    }

    fn curve(g: &Matrix3<f64>, v: &Matrix3<f64>, s: f64) -> Matrix3<f64> {
        let e = Self::right_inverse(g, v);
        g * so3::rodrigues(&(e * s))
    }

    fn sde_step(g: &Matrix3<f64>, db: &Vector3<f64>, dt: f64) -> Matrix3<f64> {
        // exponential update; drift coordinates are zero for this model but
        // enter the exponent where a left-invariant drift would live
        let a = Self::right_inverse(g, &Self::drift(g));
        so3::polar(&(g * so3::rodrigues(&(db + a * dt))))
    }

    fn sde_step_defect(g: &Matrix3<f64>, db: &Vector3<f64>, dt: f64) -> f64 {
        let a = Self::right_inverse(g, &Self::drift(g));
        so3::ortho_defect(&(g * so3::rodrigues(&(db + a * dt))))
    }

    fn sde_step_jacobian_point(g: &Matrix3<f64>, db: &Vector3<f64>, dt: f64) -> Matrix3<f64> {
        // v |-> v exp(hat(w)) in noise coordinates is e |-> exp(hat(w))^T e
        let a = Self::right_inverse(g, &Self::drift(g));
        so3::rodrigues(&(db + a * dt)).transpose()
    }

    fn sde_step_jacobian_noise(g: &Matrix3<f64>, db: &Vector3<f64>, dt: f64) -> Matrix3<f64> {
        let a = Self::right_inverse(g, &Self::drift(g));
        so3::right_jacobian(&(db + a * dt))
    }

    fn parallel_step(_x: &Matrix3<f64>, _y: &Matrix3<f64>) -> Matrix3<f64> {
        // left transport is the identity on noise coordinates
        Matrix3::identity()
    }

    fn adjoint_parallel_step(x: &Matrix3<f64>, y: &Matrix3<f64>) -> Matrix3<f64> {
        // right translation by x^T y; in noise coordinates the step matrix
        // is its transpose, by Ad-equivariance of hat
        y.transpose() * x
    }

    fn trivial_bundle_step(_x: &Matrix3<f64>, _y: &Matrix3<f64>) -> Matrix3<f64> {
        // ker X is trivial; the noise bundle does not move
        Matrix3::identity()
    }
}
