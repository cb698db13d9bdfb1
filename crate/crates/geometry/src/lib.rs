//! Ambient-coordinate models of the manifolds driven by the stochastic engine.
//!
//! Everything is expressed in explicit ambient coordinates: points on the
//! 2-sphere are unit vectors in R^3, rotation-group elements are orthogonal
//! 3x3 matrices. There are no charts. A model supplies the diffusion map
//! `X(x): R^3 -> T_x M`, its right inverse `Y(x)`, the induced metric
//! connection, curvature data, and the one-step integrator primitives the
//! higher crates build on.
//!
//! The connection used throughout is the metric connection induced by the
//! diffusion map: `nabla_v U = X(x) d(Y(U(.)))(v)`, differentiating the noise
//! coordinates of a section along a curve and mapping back through `X`. Its
//! defining property, `nabla_v X^e = 0` whenever `e` is orthogonal to
//! `ker X(x)`, is what the analytic formulas in the model impls encode and
//! what the finite-difference twin in [`fd`] checks them against.
//!
//! Coordinate convention used by the transport and path crates: a tangent
//! vector `v` at `x` is carried as its noise coordinates `Y(x)v` in R^3, and
//! linear maps between tangent spaces are 3x3 matrices sandwiched between
//! `Y` and `X`. The trait methods returning `Matrix3` all follow it.

pub mod fd;
pub mod group;
pub mod oracle;
pub mod so3;
pub mod sphere;

pub use group::RotationGroup;
pub use sphere::Sphere;

use nalgebra::{Matrix3, Vector3};
use std::fmt;

/// Largest constraint residual a validated [`Point`] may carry.
pub const POINT_TOL: f64 = 1e-10;
/// Largest tangency residual a validated [`Tangent`] may carry.
pub const TANGENT_TOL: f64 = 1e-10;
/// Default step for first-order central differences.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    /// The point fails its defining constraint (unit norm, orthogonality).
    ConstraintViolation { residual: f64 },
    /// The vector is not tangent at the claimed base point.
    NotTangent { residual: f64 },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::ConstraintViolation { residual } => {
                write!(f, "point violates the manifold constraint (residual {residual:.3e})")
            }
            GeometryError::NotTangent { residual } => {
                write!(f, "vector is not tangent at its base point (residual {residual:.3e})")
            }
        }
    }
}

impl std::error::Error for GeometryError {}

/// A manifold model with its diffusion structure.
///
/// `Point` and `Ambient` are concrete fixed-size nalgebra types per model;
/// `Ambient` holds both ambient vectors and tangent vectors (tangency is a
/// property, not a type). Noise vectors are always `Vector3<f64>`.
pub trait Manifold: Copy + Send + Sync + 'static {
    type Point: Copy + PartialEq + fmt::Debug + Send + Sync;
    type Ambient: Copy
        + fmt::Debug
        + Send
        + Sync
        + std::ops::Add<Output = Self::Ambient>
        + std::ops::Sub<Output = Self::Ambient>
        + std::ops::Neg<Output = Self::Ambient>
        + std::ops::Mul<f64, Output = Self::Ambient>;

    const NAME: &'static str;
    const INTRINSIC_DIM: usize;
    const AMBIENT_DIM: usize;
    /// Dimension of the driving noise, fixed at 3 for both models.
    const NOISE_DIM: usize = 3;
    /// Dimension of `ker X(x)` (constant over the manifold for these models).
    const KERNEL_DIM: usize;

    /// Canonical starting point used by defaults and tests.
    fn base_point() -> Self::Point;

    fn amb_zero() -> Self::Ambient;
    /// Ambient Euclidean (Frobenius) norm, used for residuals only.
    /// The Riemannian norm is `metric(x, v, v).sqrt()`.
    fn amb_norm(v: &Self::Ambient) -> f64;

    /// Ambient chordal distance between two points; used for path
    /// divergence diagnostics and refinement sweeps, not as an intrinsic
    /// metric.
    fn point_distance(a: &Self::Point, b: &Self::Point) -> f64;

    /// Inclusion of the constraint set into its ambient linear space, so
    /// generic code can form ambient differences of nearby points.
    fn embed(x: &Self::Point) -> Self::Ambient;

    /// Distance from the defining constraint set; zero on the manifold.
    fn constraint_residual(x: &Self::Point) -> f64;
    /// Distance of `v` from `T_x M`; zero for tangent vectors.
    fn tangency_residual(x: &Self::Point, v: &Self::Ambient) -> f64;
    /// Re-project a drifted point back onto the constraint set.
    fn clean(x: &Self::Point) -> Self::Point;

    /// Diffusion map `X(x)e`, a surjection onto `T_x M`.
    fn diffusion(x: &Self::Point, e: &Vector3<f64>) -> Self::Ambient;
    /// Right inverse `Y(x)`: `X(x) Y(x) v = v` for tangent `v`.
    fn right_inverse(x: &Self::Point, v: &Self::Ambient) -> Vector3<f64>;
    /// Drift vector field. Identically zero for both built-in models,
    /// kept in the step formulas so the structure stays visible.
    fn drift(x: &Self::Point) -> Self::Ambient;
    /// Covariant derivative of the drift field, `nabla_v A`.
    fn nabla_drift(x: &Self::Point, v: &Self::Ambient) -> Self::Ambient;

    /// Analytic `nabla_v X^e` for the induced metric connection.
    /// Vanishes whenever `e` is orthogonal to `ker X(x)`.
    fn nabla_x(x: &Self::Point, v: &Self::Ambient, e: &Vector3<f64>) -> Self::Ambient;
    /// Analytic Ricci trace `Ric#(v)`, metric-dual of the Ricci form.
    fn ricci_sharp(x: &Self::Point, v: &Self::Ambient) -> Self::Ambient;

    /// Riemannian inner product on `T_x M`, the metric induced by `X`:
    /// `<u, v> = <Y(x)u, Y(x)v>` in noise coordinates.
    fn metric(x: &Self::Point, u: &Self::Ambient, v: &Self::Ambient) -> f64;

    /// Projection onto `[ker X(x)]^perp` in noise space, `K_perp = Y(x) X(x)`.
    fn kernel_proj_perp(x: &Self::Point) -> Matrix3<f64>;
    /// Complementary projection `K = I - K_perp` onto `ker X(x)`.
    fn kernel_proj(x: &Self::Point) -> Matrix3<f64>;
    /// Orthonormal basis of `ker X(x)` in noise coordinates.
    fn kernel_basis(x: &Self::Point) -> Vec<Vector3<f64>>;

    /// A manifold curve with `c(0) = x` and `c'(0) = v`, used by the
    /// finite-difference evaluators.
    fn curve(x: &Self::Point, v: &Self::Ambient, s: f64) -> Self::Point;

    /// One step of the model's scheme for `dx = X(x) o dB + A(x) dt`:
    /// predictor-corrector with projection for the sphere, exponential
    /// update for the group.
    fn sde_step(x: &Self::Point, db: &Vector3<f64>, dt: f64) -> Self::Point;
    /// Constraint residual of the raw step output before re-projection.
    fn sde_step_defect(x: &Self::Point, db: &Vector3<f64>, dt: f64) -> f64;
    /// Exact derivative of `sde_step` in the base point, as a 3x3 matrix in
    /// noise coordinates: `Y(x') d(step) X(x)`.
    fn sde_step_jacobian_point(x: &Self::Point, db: &Vector3<f64>, dt: f64) -> Matrix3<f64>;
    /// Exact derivative of `sde_step` in the noise increment, mapped to
    /// noise coordinates at the step output.
    fn sde_step_jacobian_noise(x: &Self::Point, db: &Vector3<f64>, dt: f64) -> Matrix3<f64>;

    /// One step of discrete parallel transport `T_x M -> T_y M` for the
    /// induced connection, in noise coordinates. Isometric by construction.
    fn parallel_step(x: &Self::Point, y: &Self::Point) -> Matrix3<f64>;
    /// Same for the adjoint connection (the one whose transport conjugates
    /// the damping equation). Coincides with `parallel_step` when the
    /// connection is torsion-free.
    fn adjoint_parallel_step(x: &Self::Point, y: &Self::Point) -> Matrix3<f64>;
    /// One step of the direct-sum transport on the trivial noise bundle:
    /// orthogonal on R^3, maps `ker X(x)` onto `ker X(y)`.
    fn trivial_bundle_step(x: &Self::Point, y: &Self::Point) -> Matrix3<f64>;

    /// Noise coordinates of a tangent vector. Inverse of [`Manifold::diffusion`]
    /// restricted to the tangent space.
    fn to_coords(x: &Self::Point, v: &Self::Ambient) -> Vector3<f64> {
        Self::right_inverse(x, v)
    }
    /// Tangent vector from noise coordinates.
    fn from_coords(x: &Self::Point, e: &Vector3<f64>) -> Self::Ambient {
        Self::diffusion(x, e)
    }
}

/// A validated point: construction checks the constraint residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<M: Manifold> {
    raw: M::Point,
}

impl<M: Manifold> Point<M> {
    pub fn new(raw: M::Point) -> Result<Self, GeometryError> {
        let residual = M::constraint_residual(&raw);
        if residual < POINT_TOL {
            Ok(Point { raw })
        } else {
            Err(GeometryError::ConstraintViolation { residual })
        }
    }

    pub fn base() -> Self {
        Point { raw: M::base_point() }
    }

    pub fn raw(&self) -> &M::Point {
        &self.raw
    }
}

/// A validated tangent vector: construction checks tangency at the base.
#[derive(Debug, Clone, Copy)]
pub struct Tangent<M: Manifold> {
    base: M::Point,
    vec: M::Ambient,
}

impl<M: Manifold> Tangent<M> {
    pub fn new(base: &Point<M>, vec: M::Ambient) -> Result<Self, GeometryError> {
        let residual = M::tangency_residual(base.raw(), &vec);
        if residual < TANGENT_TOL {
            Ok(Tangent { base: *base.raw(), vec })
        } else {
            Err(GeometryError::NotTangent { residual })
        }
    }

    pub fn base(&self) -> &M::Point {
        &self.base
    }

    pub fn vec(&self) -> &M::Ambient {
        &self.vec
    }

    /// Riemannian length of the vector.
    pub fn norm(&self) -> f64 {
        M::metric(&self.base, &self.vec, &self.vec).sqrt()
    }
}

/// Apply the diffusion map: `X(x)e`, always tangent at `x`.
pub fn diffusion_map<M: Manifold>(x: &Point<M>, e: &Vector3<f64>) -> Tangent<M> {
    Tangent { base: *x.raw(), vec: M::diffusion(x.raw(), e) }
}

/// Noise coordinates of a tangent vector, `Y(x)v`.
pub fn right_inverse<M: Manifold>(v: &Tangent<M>) -> Vector3<f64> {
    M::right_inverse(v.base(), v.vec())
}

/// Covariant derivative of a section along `v`, evaluated by central
/// differences of the section's noise coordinates along a manifold curve:
/// `X(x) d(Y(U(.)))(v)`. This is the primary evaluator; the analytic
/// formulas on the models are checked against it.
pub fn lw_covariant_derivative<M: Manifold>(
    v: &Tangent<M>,
    section: impl Fn(&M::Point) -> M::Ambient,
) -> Tangent<M> {
    let d = fd::lw_cd_fd::<M>(v.base(), v.vec(), &section, FD_STEP);
    Tangent { base: *v.base(), vec: d }
}

/// Analytic Ricci trace of a tangent vector.
pub fn ricci_sharp<M: Manifold>(v: &Tangent<M>) -> Tangent<M> {
    Tangent { base: *v.base(), vec: M::ricci_sharp(v.base(), v.vec()) }
}

/// Orthonormal basis of `[ker X(x)]^perp` in noise coordinates; maps to an
/// orthonormal tangent frame through `X(x)`.
pub fn tangent_coords_basis<M: Manifold>(x: &M::Point) -> Vec<Vector3<f64>> {
    let k = M::kernel_proj_perp(x);
    let mut basis: Vec<Vector3<f64>> = Vec::with_capacity(M::INTRINSIC_DIM);
    for j in 0..3 {
        let mut cand = k.column(j).into_owned();
        for b in &basis {
            cand -= b * cand.dot(b);
        }
        let n = cand.norm();
        if n > 1e-8 {
            basis.push(cand / n);
        }
    }
    debug_assert_eq!(basis.len(), M::INTRINSIC_DIM);
    basis
}
