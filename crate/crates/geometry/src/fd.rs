//! Finite-difference evaluators for the connection.
//!
//! These are the independent twins of the analytic formulas on the models:
//! every closed form is tested against the corresponding difference quotient
//! on random inputs. The covariant derivative is computed directly from its
//! definition, by differentiating the noise coordinates of a section along a
//! manifold curve and mapping back through the diffusion.

use crate::Manifold;
use nalgebra::Vector3;

/// `X(x) d(Y(U(.)))(v)` by central differences with the given step.
///
/// The direction is normalized internally and the result rescaled, so the
/// truncation error is controlled by `step` alone, not by `|v|`.
pub fn lw_cd_fd<M: Manifold>(
    x: &M::Point,
    v: &M::Ambient,
    section: &impl Fn(&M::Point) -> M::Ambient,
    step: f64,
) -> M::Ambient {
    let speed = M::metric(x, v, v).sqrt();
    if speed == 0.0 {
        return M::amb_zero();
    }
    let unit = *v * (1.0 / speed);
    let cp = M::curve(x, &unit, step);
    let cm = M::curve(x, &unit, -step);
    let yp = M::right_inverse(&cp, &section(&cp));
    let ym = M::right_inverse(&cm, &section(&cm));
    let d: Vector3<f64> = (yp - ym) * (speed / (2.0 * step));
    M::diffusion(x, &d)
}

/// Plain directional derivative of a section's ambient values along a
/// manifold curve, `(d/ds) U(c(s))` at `s = 0`. Used for Lie brackets.
pub fn section_derivative_fd<M: Manifold>(
    x: &M::Point,
    v: &M::Ambient,
    section: &impl Fn(&M::Point) -> M::Ambient,
    step: f64,
) -> M::Ambient {
    let speed = M::metric(x, v, v).sqrt();
    if speed == 0.0 {
        return M::amb_zero();
    }
    let unit = *v * (1.0 / speed);
    let up = section(&M::curve(x, &unit, step));
    let um = section(&M::curve(x, &unit, -step));
    (up - um) * (speed / (2.0 * step))
}

/// Derivative of a scalar function along a manifold curve.
pub fn scalar_derivative_fd<M: Manifold>(
    x: &M::Point,
    v: &M::Ambient,
    f: &impl Fn(&M::Point) -> f64,
    step: f64,
) -> f64 {
    let speed = M::metric(x, v, v).sqrt();
    if speed == 0.0 {
        return 0.0;
    }
    let unit = *v * (1.0 / speed);
    let fp = f(&M::curve(x, &unit, step));
    let fm = f(&M::curve(x, &unit, -step));
    (fp - fm) * (speed / (2.0 * step))
}
