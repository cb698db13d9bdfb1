//! Small helpers for the rotation group: hat/vee, Rodrigues exponential,
//! the right Jacobian of the exponential, polar re-orthonormalization, and
//! the rotation aligning one unit vector with another.

use nalgebra::{Matrix3, Vector3};

/// Skew matrix of a vector: `hat(v) w = v x w`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`] on skew matrices.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Skew-symmetric part of a matrix.
pub fn skew_part(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m - m.transpose()) * 0.5
}

/// Rotation `exp(hat(v))` by the Rodrigues formula, with series fallbacks
/// near zero so the map is smooth to machine precision.
pub fn rodrigues(v: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = v.norm_squared();
    let h = hat(v);
    let (a, b) = if theta2 < 1e-8 {
        // sin(t)/t and (1-cos t)/t^2 truncated at O(t^4)
        (1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0, 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0)
    } else {
        let theta = theta2.sqrt();
        ((theta.sin()) / theta, (1.0 - theta.cos()) / theta2)
    };
    Matrix3::identity() + h * a + h * h * b
}

/// Right Jacobian of the exponential: for small `d`,
/// `exp(hat(v + d)) = exp(hat(v)) exp(hat(J_r(v) d)) + O(|d|^2)`.
pub fn right_jacobian(v: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = v.norm_squared();
    let h = hat(v);
    let (a, b) = if theta2 < 1e-8 {
        (0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0, 1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0)
    } else {
        let theta = theta2.sqrt();
        ((1.0 - theta.cos()) / theta2, (theta - theta.sin()) / (theta2 * theta))
    };
    Matrix3::identity() - h * a + h * h * b
}

/// Nearest orthogonal matrix, by Newton iteration on the polar factor.
/// Two sweeps take a defect of 1e-6 below 1e-15; inputs here are always
/// close to orthogonal.
pub fn polar(m: &Matrix3<f64>) -> Matrix3<f64> {
    let mut q = *m;
    for _ in 0..4 {
        let qt_inv = match q.transpose().try_inverse() {
            Some(inv) => inv,
            None => break,
        };
        let next = (q + qt_inv) * 0.5;
        if (next - q).norm() < 1e-15 {
            q = next;
            break;
        }
        q = next;
    }
    q
}

/// Orthogonality defect `|| m^T m - I ||_F`.
pub fn ortho_defect(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).norm()
}

/// The rotation mapping unit vector `a` to unit vector `b` about the axis
/// `a x b`. This is parallel transport along the connecting geodesic on the
/// unit sphere, extended to all of R^3. Panics for (near-)antipodal pairs,
/// which cannot occur for the small steps the integrators take.
pub fn rotation_between(a: &Vector3<f64>, b: &Vector3<f64>) -> Matrix3<f64> {
    let c = a.cross(b);
    let d = a.dot(b);
    assert!(
        d > -0.999_999,
        "rotation_between: step spans nearly antipodal points (cos angle {d:.6})"
    );
    let h = hat(&c);
    Matrix3::identity() + h + h * h * (1.0 / (1.0 + d))
}
