//! Transport of tangent vectors along discrete paths.
//!
//! Everything here operates on a path given as grid points `x_0..x_N` with
//! uniform spacing `dt`, and stores linear maps in noise coordinates: a map
//! `L: T_{x_a} -> T_{x_b}` is kept as the 3x3 matrix of `Y(x_b) . L . X(x_a)`.
//! Because the metric is Euclidean in these coordinates, isometries are
//! orthogonal matrices and adjoints are transposes.
//!
//! Three transports are built per path:
//!
//! * plain parallel translation for the metric connection (`par`), the
//!   stepwise closed form of project-then-reorthonormalize;
//! * parallel translation for the adjoint connection (`adj_par`), which is
//!   what the damping equation differentiates against;
//! * damped translation (`damped`), obtained from the adjoint transport by a
//!   conjugated linear ODE `d/dt M = G(t) M` with
//!   `G = adj_par^{-1} (-1/2 Ric# + nabla A) adj_par`, solved by RK4. The
//!   inverse family solves `d/dt N = -N G` alongside, so no matrix is ever
//!   inverted numerically.
//!
//! The damped maps are stored sandwiched between kernel projections,
//! `W_k = Kperp(x_k) adj_par_k M_k Kperp(x_0)`, which makes their intended
//! domain and range explicit in coordinates where the tangent space is a
//! proper subspace.

use geometry::Manifold;
use nalgebra::{Matrix3, Vector3};

/// Per-node transport maps along one discrete path, in noise coordinates.
#[derive(Debug, Clone)]
pub struct TransportFrame {
    pub dt: f64,
    /// Parallel translation `0 -> k` for the metric connection.
    pub par: Vec<Matrix3<f64>>,
    /// Parallel translation `0 -> k` for the adjoint connection.
    pub adj_par: Vec<Matrix3<f64>>,
    /// Damped translation `0 -> k`; empty until [`damped_translate`] runs.
    pub damped: Vec<Matrix3<f64>>,
    /// Inverse damped translation `k -> 0`; filled with `damped`.
    pub damped_inv: Vec<Matrix3<f64>>,
    /// Worst deviation of `par` and `adj_par` from commuting with the
    /// kernel/tangent splitting along the path. Zero for paths where the
    /// noise kernel is trivial.
    pub split_defect: f64,
}

impl TransportFrame {
    pub fn len(&self) -> usize {
        self.par.len()
    }

    pub fn is_empty(&self) -> bool {
        self.par.is_empty()
    }

    /// Inverse of the metric-connection translation; transports are
    /// isometric, so this is the transpose.
    pub fn par_inv(&self, k: usize) -> Matrix3<f64> {
        self.par[k].transpose()
    }

    pub fn adj_par_inv(&self, k: usize) -> Matrix3<f64> {
        self.adj_par[k].transpose()
    }

    /// Worst deviation of `par_k` from orthogonality, over all nodes.
    pub fn isometry_defect(&self) -> f64 {
        self.par
            .iter()
            .chain(self.adj_par.iter())
            .map(|m| (m.transpose() * m - Matrix3::identity()).norm())
            .fold(0.0, f64::max)
    }
}

/// A vector field along a path: noise coordinates of `v_k` at `x_k`, plus
/// the damped-derivative density when it is known by construction.
#[derive(Debug, Clone)]
pub struct PathVectorField {
    pub values: Vec<Vector3<f64>>,
    pub density: Option<Vec<Vector3<f64>>>,
}

impl PathVectorField {
    /// Wraps values after checking they carry no kernel component at their
    /// base points.
    pub fn new<M: Manifold>(points: &[M::Point], values: Vec<Vector3<f64>>) -> Self {
        let defect = tangency_defect::<M>(points, &values);
        assert!(
            defect < geometry::TANGENT_TOL,
            "path vector field has kernel components (worst {defect:.3e})"
        );
        PathVectorField { values, density: None }
    }
}

/// Largest kernel component among the coordinate vectors `v_k` at `x_k`.
pub fn tangency_defect<M: Manifold>(points: &[M::Point], values: &[Vector3<f64>]) -> f64 {
    points
        .iter()
        .zip(values)
        .map(|(x, v)| (M::kernel_proj(x) * v).norm())
        .fold(0.0, f64::max)
}

/// Builds the parallel translations (both connections) along a path.
///
/// Each step is the model's closed-form transport for the connecting step;
/// the accumulated maps are products of orthogonal matrices and therefore
/// isometric to roundoff.
pub fn parallel_translate<M: Manifold>(points: &[M::Point], dt: f64) -> TransportFrame {
    assert!(points.len() >= 2, "a path needs at least two nodes");
    let n = points.len();
    let mut par = Vec::with_capacity(n);
    let mut adj_par = Vec::with_capacity(n);
    par.push(Matrix3::identity());
    adj_par.push(Matrix3::identity());
    for k in 0..n - 1 {
        par.push(M::parallel_step(&points[k], &points[k + 1]) * par[k]);
        adj_par.push(M::adjoint_parallel_step(&points[k], &points[k + 1]) * adj_par[k]);
    }
    let kp0 = M::kernel_proj_perp(&points[0]);
    let split_defect = points
        .iter()
        .enumerate()
        .flat_map(|(k, x)| {
            let kpk = M::kernel_proj_perp(x);
            [
                (kpk * par[k] - par[k] * kp0).norm(),
                (kpk * adj_par[k] - adj_par[k] * kp0).norm(),
            ]
        })
        .fold(0.0, f64::max);
    TransportFrame { dt, par, adj_par, damped: Vec::new(), damped_inv: Vec::new(), split_defect }
}

/// Matrix of `v -> -1/2 Ric#(v) + nabla_v A` at `x`, in noise coordinates.
fn damping_generator<M: Manifold>(x: &M::Point) -> Matrix3<f64> {
    let mut h = Matrix3::zeros();
    for j in 0..3 {
        let v = M::diffusion(x, &Vector3::ith(j, 1.0));
        let col = M::ricci_sharp(x, &v) * (-0.5) + M::nabla_drift(x, &v);
        h.set_column(j, &M::right_inverse(x, &col));
    }
    h
}

/// Fills the damped translation and its inverse on an existing frame.
///
/// In the adjoint-transport frame the damping equation becomes the linear
/// ODE `M' = G(t) M` with `G` as above; one RK4 step per grid interval with
/// the midpoint generator averaged from the endpoints. The inverse solves
/// `N' = -N G` alongside, so `N M = I` holds up to the integrator error.
pub fn damped_translate<M: Manifold>(points: &[M::Point], frame: &mut TransportFrame) {
    let n = points.len();
    assert_eq!(n, frame.len(), "frame was built for a different path");
    let dt = frame.dt;
    let gens: Vec<Matrix3<f64>> = points
        .iter()
        .enumerate()
        .map(|(k, x)| frame.adj_par_inv(k) * damping_generator::<M>(x) * frame.adj_par[k])
        .collect();

    let mut m = Matrix3::identity();
    let mut minv = Matrix3::identity();
    let kp0 = M::kernel_proj_perp(&points[0]);
    let mut damped = Vec::with_capacity(n);
    let mut damped_inv = Vec::with_capacity(n);
    damped.push(kp0);
    damped_inv.push(kp0);
    for k in 0..n - 1 {
        let g0 = &gens[k];
        let g1 = &gens[k + 1];
        let gm = (g0 + g1) * 0.5;

        let k1 = g0 * m;
        let k2 = gm * (m + k1 * (dt / 2.0));
        let k3 = gm * (m + k2 * (dt / 2.0));
        let k4 = g1 * (m + k3 * dt);
        m += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);

        let k1 = -(minv * g0);
        let k2 = -((minv + k1 * (dt / 2.0)) * gm);
        let k3 = -((minv + k2 * (dt / 2.0)) * gm);
        let k4 = -((minv + k3 * dt) * g1);
        minv += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);

        let kpk = M::kernel_proj_perp(&points[k + 1]);
        damped.push(kpk * frame.adj_par[k + 1] * m * kp0);
        damped_inv.push(kp0 * minv * frame.adj_par_inv(k + 1) * kpk);
    }
    frame.damped = damped;
    frame.damped_inv = damped_inv;
}

/// Builds the complete frame: both parallel translations plus the damped
/// family.
pub fn frame_along<M: Manifold>(points: &[M::Point], dt: f64) -> TransportFrame {
    let mut frame = parallel_translate::<M>(points, dt);
    damped_translate::<M>(points, &mut frame);
    frame
}

/// Grid derivative: centered differences inside, three-point one-sided at
/// the ends. Second-order accurate throughout.
fn grid_derivative(dt: f64, w: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let n = w.len();
    assert!(n >= 4, "grid too coarse for differencing (need at least 4 nodes)");
    let half = 0.5 / dt;
    let mut out = Vec::with_capacity(n);
    out.push((w[1] * 4.0 - w[2] - w[0] * 3.0) * half);
    for k in 1..n - 1 {
        out.push((w[k + 1] - w[k - 1]) * half);
    }
    out.push((w[n - 1] * 3.0 - w[n - 2] * 4.0 + w[n - 3]) * half);
    out
}

/// Time derivative of a field through a family of translations: pull each
/// value to the base fiber with `inv`, difference on the grid, push back.
fn conjugated_derivative(
    dt: f64,
    maps: &[Matrix3<f64>],
    inv: impl Fn(usize) -> Matrix3<f64>,
    values: &[Vector3<f64>],
) -> Vec<Vector3<f64>> {
    assert_eq!(maps.len(), values.len(), "field and frame lengths differ");
    let pulled: Vec<Vector3<f64>> = values.iter().enumerate().map(|(k, v)| inv(k) * v).collect();
    grid_derivative(dt, &pulled)
        .into_iter()
        .enumerate()
        .map(|(k, d)| maps[k] * d)
        .collect()
}

/// Damped covariant time derivative of a field along the path: the density
/// `u_k = W_k d/dt (W^{-1} v)_k`. Inverse of [`script_w`] on fields that
/// vanish at the start.
pub fn covariant_time_derivative(frame: &TransportFrame, v: &PathVectorField) -> Vec<Vector3<f64>> {
    assert!(!frame.damped.is_empty(), "damped maps not built for this frame");
    conjugated_derivative(frame.dt, &frame.damped, |k| frame.damped_inv[k], &v.values)
}

/// Covariant time derivative for the plain metric connection,
/// `D v/dt = par_k d/dt (par^{-1} v)_k`.
pub fn parallel_time_derivative(frame: &TransportFrame, v: &PathVectorField) -> Vec<Vector3<f64>> {
    conjugated_derivative(frame.dt, &frame.par, |k| frame.par_inv(k), &v.values)
}

/// Integrates a density into a field: `v_t = W_t int_0^t W_s^{-1} u_s ds`
/// by the trapezoid rule, so `v_0 = 0`. The result keeps the input as its
/// density, because that identity is exact for this operator.
pub fn script_w(frame: &TransportFrame, density: &[Vector3<f64>]) -> PathVectorField {
    assert!(!frame.damped.is_empty(), "damped maps not built for this frame");
    assert_eq!(frame.len(), density.len(), "density and frame lengths differ");
    let half_dt = 0.5 * frame.dt;
    let mut acc = Vector3::zeros();
    let mut prev = frame.damped_inv[0] * density[0];
    let mut values = Vec::with_capacity(density.len());
    values.push(Vector3::zeros());
    for k in 1..density.len() {
        let cur = frame.damped_inv[k] * density[k];
        acc += (prev + cur) * half_dt;
        values.push(frame.damped[k] * acc);
        prev = cur;
    }
    PathVectorField { values, density: Some(density.to_vec()) }
}

/// Adjoint tail integral used to pull one-forms back through the damped
/// family: `rho_t = (W_t^{-1})^T int_t^T W_s^T a_s ds`, backward trapezoid.
pub fn damped_adjoint_tail_integral(
    frame: &TransportFrame,
    alpha: &[Vector3<f64>],
) -> Vec<Vector3<f64>> {
    assert!(!frame.damped.is_empty(), "damped maps not built for this frame");
    assert_eq!(frame.len(), alpha.len(), "integrand and frame lengths differ");
    let n = alpha.len();
    let half_dt = 0.5 * frame.dt;
    let mut tails = vec![Vector3::zeros(); n];
    let mut acc = Vector3::zeros();
    let mut prev = frame.damped[n - 1].transpose() * alpha[n - 1];
    for k in (0..n - 1).rev() {
        let cur = frame.damped[k].transpose() * alpha[k];
        acc += (prev + cur) * half_dt;
        tails[k] = acc;
        prev = cur;
    }
    tails
        .iter()
        .enumerate()
        .map(|(k, t)| frame.damped_inv[k].transpose() * t)
        .collect()
}

/// L² norm of a density on the grid, `(sum |u_k|^2 dt)^(1/2)` by the
/// trapezoid rule.
pub fn density_l2_norm(dt: f64, density: &[Vector3<f64>]) -> f64 {
    trapezoid(dt, density.iter().map(|u| u.norm_squared())).sqrt()
}

/// Trapezoid rule over grid samples.
pub fn trapezoid(dt: f64, samples: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    let mut prev: Option<f64> = None;
    for s in samples {
        if let Some(p) = prev {
            acc += 0.5 * (p + s) * dt;
        }
        prev = Some(s);
    }
    acc
}
