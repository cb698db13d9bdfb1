//! Tangent structure on the space of manifold paths.
//!
//! A solution path drags a Hilbert space of tangent fields behind it: fields
//! whose damped covariant derivative is square integrable. This crate builds
//! those fields from flat directions (`xbar`), reads flat directions back off
//! them (`ybar`), differentiates functions of finitely many path nodes along
//! them, and evaluates dual fields through either a direct pairing or the
//! stochastic pull-back integral driven by the kernel part of the noise.
//!
//! Everything is stored in noise coordinates: a tangent vector at a path node
//! is the 3-vector of its coefficients through the diffusion frame at that
//! node, in which the metric is Euclidean. Densities live per node; flat
//! slopes live per interval.

use geometry::Manifold;
use nalgebra::Vector3;
use sde_engine::{
    bismut_derivative, conditional_driver, decompose_noise, integrate, sample_beta,
    CameronMartinVector, NoiseSplit, SolutionPath,
};
use transport::{damped_adjoint_tail_integral, frame_along, script_w, TransportFrame};

pub mod cylinder;

pub use cylinder::CylindricalFunction;

/// A tangent field along one path: per-node values together with the per-node
/// density that generates them through the damped transport. The field starts
/// at zero and its Hilbert norm is the flat norm of the density.
#[derive(Debug, Clone)]
pub struct BismutTangent {
    pub dt: f64,
    /// Node values in noise coordinates at each node.
    pub values: Vec<Vector3<f64>>,
    /// Damped-derivative density in noise coordinates at each node.
    pub density: Vec<Vector3<f64>>,
}

impl BismutTangent {
    /// Assembles the field generated by a per-node density.
    pub fn from_density(frame: &TransportFrame, density: Vec<Vector3<f64>>) -> Self {
        let field = script_w(frame, &density);
        BismutTangent { dt: frame.dt, values: field.values, density }
    }

    pub fn zero(dt: f64, nodes: usize) -> Self {
        BismutTangent {
            dt,
            values: vec![Vector3::zeros(); nodes],
            density: vec![Vector3::zeros(); nodes],
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        BismutTangent {
            dt: self.dt,
            values: self.values.iter().map(|v| v * a).collect(),
            density: self.density.iter().map(|u| u * a).collect(),
        }
    }

    /// Squared Hilbert norm: left Riemann sum of the squared density over
    /// intervals, matching the flat norm convention so that reading slopes
    /// off the density is an exact isometry.
    pub fn norm_squared(&self) -> f64 {
        let n = self.density.len() - 1;
        self.density[..n].iter().map(|u| u.norm_squared() * self.dt).sum()
    }
}

/// A dual field along one path, specified by the density of its representing
/// tangent field. `adapted` records whether that density at a node depends
/// only on the path up to the node.
#[derive(Debug, Clone)]
pub struct HOneForm {
    pub density: Vec<Vector3<f64>>,
    pub adapted: bool,
}

impl HOneForm {
    pub fn scaled(&self, a: f64) -> Self {
        HOneForm { density: self.density.iter().map(|u| u * a).collect(), adapted: self.adapted }
    }
}

/// The dual field that evaluates tangent fields against a node integrand:
/// pairing the result with a field v reproduces the time integral of
/// <alpha_t, v_t>. The density is the damped adjoint tail integral of alpha,
/// which looks into the future of the path, so the form is not adapted.
///
/// The tail integral alone is the continuous adjoint; the exact adjoint of
/// the discrete field assembly differs in the two corner half-cells, because
/// fields start pinned at zero (their first half-cell never reaches the
/// direct integral) while the final half-cell does. The correction moves
/// that weight from the first node to the last, making the pairing identity
/// hold to roundoff.
pub fn l2_representer(frame: &TransportFrame, alpha: &[Vector3<f64>]) -> HOneForm {
    let mut density = damped_adjoint_tail_integral(frame, alpha);
    let n = density.len() - 1;
    let half = 0.5 * frame.dt;
    let head = frame.damped[0].transpose() * alpha[0];
    density[0] -= frame.damped_inv[0].transpose() * (head * half);
    let tail = frame.damped[n].transpose() * alpha[n];
    density[n] += frame.damped_inv[n].transpose() * (tail * half);
    HOneForm { density, adapted: false }
}

/// Hilbert pairing of a dual field with a tangent field: trapezoid integral
/// of the density inner products.
pub fn pairing(dt: f64, form: &HOneForm, v: &BismutTangent) -> f64 {
    assert_eq!(form.density.len(), v.density.len(), "pairing across different grids");
    transport::trapezoid(
        dt,
        form.density.iter().zip(&v.density).map(|(a, b)| a.dot(b)),
    )
}

/// Direct evaluation of a node integrand against a tangent field's values:
/// the trapezoid integral of <alpha_t, v_t>.
pub fn direct_evaluation(dt: f64, alpha: &[Vector3<f64>], v: &BismutTangent) -> f64 {
    assert_eq!(alpha.len(), v.values.len());
    transport::trapezoid(dt, alpha.iter().zip(&v.values).map(|(a, b)| a.dot(b)))
}

/// Projects a flat direction onto the tangent structure of one path:
/// the node density is the tangential part of the slope, and the values
/// integrate it through the damped transport.
pub fn xbar<M: Manifold>(
    path: &SolutionPath<M>,
    frame: &TransportFrame,
    h: &CameronMartinVector,
) -> BismutTangent {
    let n = h.slopes.len();
    assert_eq!(frame.len(), n + 1, "direction and frame lengths differ");
    let density: Vec<Vector3<f64>> = (0..=n)
        .map(|k| M::kernel_proj_perp(&path.points[k]) * h.slopes[k.min(n - 1)])
        .collect();
    BismutTangent::from_density(frame, density)
}

/// Reads a flat direction off a tangent field: the slope over an interval is
/// the density at its left node. Exact right inverse of the density norm, so
/// this map is an isometry onto its image.
pub fn ybar(v: &BismutTangent) -> CameronMartinVector {
    let n = v.density.len() - 1;
    CameronMartinVector::from_slopes(v.density[..n].to_vec())
}

/// The stochastic pull-back evaluation of a dual field in a flat direction:
/// an Ito sum of the form density against the kernel noise increments (left
/// endpoint evaluation) plus the trapezoid integral against the tangential
/// slope. The derivative field entering the noise term is the variational
/// route, recomputed on this path.
pub fn pullback_one_form<M: Manifold>(
    path: &SolutionPath<M>,
    split: &NoiseSplit,
    frame: &TransportFrame,
    form: &HOneForm,
    h: &CameronMartinVector,
) -> f64 {
    let n = h.slopes.len();
    assert_eq!(path.points.len(), n + 1);
    assert_eq!(form.density.len(), n + 1);
    let v = bismut_derivative(path, h);
    let mut ito = 0.0;
    for k in 0..n {
        let e = split.tilde[k] * split.dbeta[k];
        if e != Vector3::zeros() {
            let x = &path.points[k];
            let vamb = M::from_coords(x, &v[k]);
            let kick = M::to_coords(x, &M::nabla_x(x, &vamb, &e));
            ito += form.density[k].dot(&kick);
        }
    }
    let mut drift = 0.0;
    for k in 0..n {
        let s = h.slopes[k];
        let a = form.density[k].dot(&(M::kernel_proj_perp(&path.points[k]) * s));
        let b = form.density[k + 1].dot(&(M::kernel_proj_perp(&path.points[k + 1]) * s));
        drift += 0.5 * (a + b) * frame.dt;
    }
    ito + drift
}

/// Result of averaging the pull-back over kernel-noise redraws.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalCheck {
    pub conditional_mean: f64,
    pub se: f64,
    /// Pairing of the form with the projected direction on the base path.
    pub reference: f64,
    /// Standardized gap; zero-variance degenerate cases report infinity
    /// unless the gap is exactly zero.
    pub z: f64,
    pub resamples: u32,
}

/// Redraws the kernel noise `resamples` times, re-solves, rebuilds the form
/// from the node integrand `alpha` on each redrawn path, and averages the
/// pull-back. The mean must reproduce the pairing of the form with the
/// projected direction on the base path, up to Monte Carlo error.
pub fn conditional_pullback_check<M: Manifold>(
    base: &SolutionPath<M>,
    alpha: &(dyn Fn(&M::Point) -> Vector3<f64> + Sync),
    h: &CameronMartinVector,
    resamples: u32,
) -> ConditionalCheck {
    let grid = base.driver.grid;
    let split = decompose_noise(base);
    let frame = frame_along::<M>(&base.points, grid.dt());
    let alpha_base: Vec<Vector3<f64>> = base.points.iter().map(|x| alpha(x)).collect();
    let form_base = l2_representer(&frame, &alpha_base);
    let reference = pairing(grid.dt(), &form_base, &xbar(base, &frame, h));

    let x0 = base.points[0];
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for r in 0..resamples {
        let beta = sample_beta::<M>(
            &x0,
            &grid,
            base.driver.provenance.master_seed,
            base.driver.provenance.path_index,
            r,
        );
        let driver = conditional_driver(base, &split, &beta);
        let path = integrate::<M>(&x0, &driver);
        let split_r = decompose_noise(&path);
        let frame_r = frame_along::<M>(&path.points, grid.dt());
        let alpha_r: Vec<Vector3<f64>> = path.points.iter().map(|x| alpha(x)).collect();
        let form_r = l2_representer(&frame_r, &alpha_r);
        let value = pullback_one_form(&path, &split_r, &frame_r, &form_r, h);
        let delta = value - mean;
        mean += delta / (r + 1) as f64;
        m2 += delta * (value - mean);
    }
    let n = resamples as f64;
    let se = if resamples > 1 { (m2 / (n - 1.0) / n).sqrt() } else { f64::NAN };
    let diff = mean - reference;
    let z = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    ConditionalCheck { conditional_mean: mean, se, reference, z, resamples }
}
