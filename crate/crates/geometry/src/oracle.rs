//! Verification-only evaluators: curvature by nested finite differences.
//!
//! Nothing in the production pipeline calls these; they exist so the
//! analytic Ricci formulas can be checked against a computation that knows
//! nothing about them. The curvature tensor is assembled from its
//! definition, `R(u,w)z = nabla_u nabla_W Z - nabla_w nabla_U Z -
//! nabla_[U,W] Z`, with all fields extended by holding noise coordinates
//! constant: `S_c(y) = X(y) c`.
//!
//! Step sizes: the inner covariant derivatives use 1e-5, the outer
//! differentiation 1e-4. The inner evaluations carry roughly 1e-10 of
//! noise, so the outer quotient is good to about 1e-6 on unit-scale input,
//! well inside the 1e-4 acceptance band.

use crate::{fd, tangent_coords_basis, Manifold};

const INNER_STEP: f64 = 1e-5;
const OUTER_STEP: f64 = 1e-4;

/// Constant-coordinate extension of the tangent vector with coordinates `c`.
fn const_section<M: Manifold>(c: nalgebra::Vector3<f64>) -> impl Fn(&M::Point) -> M::Ambient {
    move |y: &M::Point| M::diffusion(y, &c)
}

/// `R(u, w) z` at `x` by nested central differences.
pub fn curvature_fd<M: Manifold>(
    x: &M::Point,
    u: &M::Ambient,
    w: &M::Ambient,
    z: &M::Ambient,
) -> M::Ambient {
    let cu = M::right_inverse(x, u);
    let cw = M::right_inverse(x, w);
    let cz = M::right_inverse(x, z);
    let sec_u = const_section::<M>(cu);
    let sec_w = const_section::<M>(cw);
    let sec_z = const_section::<M>(cz);

    // y -> nabla_{W(y)} Z and y -> nabla_{U(y)} Z as sections
    let g_wz = |y: &M::Point| fd::lw_cd_fd::<M>(y, &sec_w(y), &sec_z, INNER_STEP);
    let g_uz = |y: &M::Point| fd::lw_cd_fd::<M>(y, &sec_u(y), &sec_z, INNER_STEP);

    let t1 = fd::lw_cd_fd::<M>(x, u, &g_wz, OUTER_STEP);
    let t2 = fd::lw_cd_fd::<M>(x, w, &g_uz, OUTER_STEP);

    // [U, W](x) = dW(x)[U] - dU(x)[W], tangent up to O(step^2)
    let dw_u = fd::section_derivative_fd::<M>(x, u, &sec_w, OUTER_STEP);
    let du_w = fd::section_derivative_fd::<M>(x, w, &sec_u, OUTER_STEP);
    let bracket = dw_u - du_w;
    // re-express through coordinates to suppress the normal FD residue
    let bracket = M::diffusion(x, &M::right_inverse(x, &bracket));
    let t3 = fd::lw_cd_fd::<M>(x, &bracket, &sec_z, INNER_STEP);

    t1 - t2 - t3
}

/// `Ric#(u)` at `x`: the trace of `R(u, .).` over an orthonormal tangent
/// frame, computed entirely by finite differences.
pub fn ricci_sharp_fd<M: Manifold>(x: &M::Point, u: &M::Ambient) -> M::Ambient {
    let mut acc = M::amb_zero();
    for b in tangent_coords_basis::<M>(x) {
        let f = M::diffusion(x, &b);
        acc = acc + curvature_fd::<M>(x, u, &f, &f);
    }
    acc
}
