//! Functions of finitely many path nodes and their derivative along tangent
//! fields.

use geometry::Manifold;
use nalgebra::{Matrix3, Vector3};
use sde_engine::TimeGrid;

use crate::BismutTangent;

type EvalFn<M> = Box<dyn Fn(&[<M as Manifold>::Point]) -> f64 + Send + Sync>;
type GradFn<M> =
    Box<dyn Fn(&[<M as Manifold>::Point], usize) -> <M as Manifold>::Ambient + Send + Sync>;

/// A smooth function of the path through finitely many sample nodes. Sample
/// times snap to the grid at construction; the gradient evaluator returns the
/// tangent gradient in the manifold metric at one sample slot.
pub struct CylindricalFunction<M: Manifold> {
    nodes: Vec<usize>,
    eval: EvalFn<M>,
    grad: GradFn<M>,
}

impl<M: Manifold> CylindricalFunction<M> {
    pub fn new(grid: &TimeGrid, times: &[f64], eval: EvalFn<M>, grad: GradFn<M>) -> Self {
        assert!(!times.is_empty(), "a cylindrical function needs at least one sample time");
        let nodes: Vec<usize> = times.iter().map(|&t| grid.nearest_node(t)).collect();
        for pair in nodes.windows(2) {
            assert!(pair[0] < pair[1], "sample times must stay distinct after grid snapping");
        }
        CylindricalFunction { nodes, eval, grad }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    fn gather(&self, points: &[M::Point]) -> Vec<M::Point> {
        self.nodes.iter().map(|&k| points[k]).collect()
    }

    /// Value on a full path.
    pub fn value(&self, points: &[M::Point]) -> f64 {
        (self.eval)(&self.gather(points))
    }

    /// Value on pre-gathered sample points.
    pub fn value_at(&self, samples: &[M::Point]) -> f64 {
        (self.eval)(samples)
    }

    /// Tangent gradients at every slot, in noise coordinates.
    pub fn gradient_coords(&self, points: &[M::Point]) -> Vec<Vector3<f64>> {
        let samples = self.gather(points);
        (0..self.nodes.len())
            .map(|i| {
                let g = (self.grad)(&samples, i);
                M::to_coords(&samples[i], &g)
            })
            .collect()
    }

    /// Derivative along a tangent field: the gradients at the sample slots
    /// paired with the field values there.
    pub fn h_differential(&self, points: &[M::Point], v: &BismutTangent) -> f64 {
        let grads = self.gradient_coords(points);
        self.nodes
            .iter()
            .zip(&grads)
            .map(|(&k, g)| g.dot(&v.values[k]))
            .sum()
    }

    /// Derivative along raw node values in noise coordinates (same pairing,
    /// for callers that carry values without a density).
    pub fn h_differential_values(&self, points: &[M::Point], values: &[Vector3<f64>]) -> f64 {
        let grads = self.gradient_coords(points);
        self.nodes.iter().zip(&grads).map(|(&k, g)| g.dot(&values[k])).sum()
    }
}

/// Height function of one node against a fixed ambient vector on the sphere.
pub fn sphere_linear(
    grid: &TimeGrid,
    time: f64,
    c: Vector3<f64>,
) -> CylindricalFunction<geometry::Sphere> {
    CylindricalFunction::new(
        grid,
        &[time],
        Box::new(move |xs: &[Vector3<f64>]| xs[0].dot(&c)),
        Box::new(move |xs: &[Vector3<f64>], _| c - xs[0] * xs[0].dot(&c)),
    )
}

/// Product of two height functions at distinct nodes on the sphere.
pub fn sphere_two_point_product(
    grid: &TimeGrid,
    times: (f64, f64),
    c1: Vector3<f64>,
    c2: Vector3<f64>,
) -> CylindricalFunction<geometry::Sphere> {
    CylindricalFunction::new(
        grid,
        &[times.0, times.1],
        Box::new(move |xs: &[Vector3<f64>]| xs[0].dot(&c1) * xs[1].dot(&c2)),
        Box::new(move |xs: &[Vector3<f64>], i| {
            if i == 0 {
                (c1 - xs[0] * xs[0].dot(&c1)) * xs[1].dot(&c2)
            } else {
                (c2 - xs[1] * xs[1].dot(&c2)) * xs[0].dot(&c1)
            }
        }),
    )
}

/// Exponential of a height function at one node on the sphere; smooth and
/// bounded with non-constant curvature along the path.
pub fn sphere_exp_height(
    grid: &TimeGrid,
    time: f64,
    c: Vector3<f64>,
) -> CylindricalFunction<geometry::Sphere> {
    CylindricalFunction::new(
        grid,
        &[time],
        Box::new(move |xs: &[Vector3<f64>]| xs[0].dot(&c).exp()),
        Box::new(move |xs: &[Vector3<f64>], _| (c - xs[0] * xs[0].dot(&c)) * xs[0].dot(&c).exp()),
    )
}

fn trace_gradient(g: &Matrix3<f64>, c: &Matrix3<f64>) -> Matrix3<f64> {
    // gradient of tr(C^T g) in the half-Frobenius metric, returned as an
    // ambient tangent matrix at g
    let coords = 2.0 * geometry::so3::vee(&geometry::so3::skew_part(&(g.transpose() * c)));
    g * geometry::so3::hat(&coords)
}

/// Trace form of one node against a fixed matrix on the rotation group.
pub fn group_trace(
    grid: &TimeGrid,
    time: f64,
    c: Matrix3<f64>,
) -> CylindricalFunction<geometry::RotationGroup> {
    CylindricalFunction::new(
        grid,
        &[time],
        Box::new(move |gs: &[Matrix3<f64>]| (c.transpose() * gs[0]).trace()),
        Box::new(move |gs: &[Matrix3<f64>], _| trace_gradient(&gs[0], &c)),
    )
}

/// Product of two trace forms at distinct nodes on the rotation group.
pub fn group_two_point_product(
    grid: &TimeGrid,
    times: (f64, f64),
    c1: Matrix3<f64>,
    c2: Matrix3<f64>,
) -> CylindricalFunction<geometry::RotationGroup> {
    CylindricalFunction::new(
        grid,
        &[times.0, times.1],
        Box::new(move |gs: &[Matrix3<f64>]| (c1.transpose() * gs[0]).trace() * (c2.transpose() * gs[1]).trace()),
        Box::new(move |gs: &[Matrix3<f64>], i| {
            if i == 0 {
                trace_gradient(&gs[0], &c1) * (c2.transpose() * gs[1]).trace()
            } else {
                trace_gradient(&gs[1], &c2) * (c1.transpose() * gs[0]).trace()
            }
        }),
    )
}

/// Exponential of a trace form at one node on the rotation group.
pub fn group_exp_trace(
    grid: &TimeGrid,
    time: f64,
    c: Matrix3<f64>,
) -> CylindricalFunction<geometry::RotationGroup> {
    CylindricalFunction::new(
        grid,
        &[time],
        Box::new(move |gs: &[Matrix3<f64>]| (c.transpose() * gs[0]).trace().exp()),
        Box::new(move |gs: &[Matrix3<f64>], _| trace_gradient(&gs[0], &c) * (c.transpose() * gs[0]).trace().exp()),
    )
}
