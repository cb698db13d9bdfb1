//! Calculus on flat Wiener space: discrete Itô integration, exponential
//! martingales, finite-difference directional derivatives of path
//! functionals, iterated integrals with their chaos bookkeeping, and the
//! conditional reduction of exponential martingales over a manifold path's
//! redundant noise.

use geometry::Manifold;
use nalgebra::Vector3;
use sde_engine::{
    conditional_driver, decompose_noise, sample_beta, BrownianDriver, CameronMartinVector,
    SolutionPath,
};

pub mod chaos;
pub mod remainder;

/// Discrete Itô integral of an adapted integrand: the evaluator receives the
/// step index and the driver value at the left endpoint, and is paired with
/// the increment over the step. Adaptedness is enforced by construction:
/// the closure never sees anything beyond the running prefix.
pub fn ito_integral(
    driver: &BrownianDriver,
    mut a: impl FnMut(usize, Vector3<f64>) -> Vector3<f64>,
) -> f64 {
    let mut prefix = Vector3::zeros();
    let mut acc = 0.0;
    for (k, db) in driver.increments.iter().enumerate() {
        acc += a(k, prefix).dot(db);
        prefix += db;
    }
    acc
}

/// Pairing of a flat direction with the noise, `sum <hdot_k, dB_k>`. For
/// deterministic slopes this is the same sum the Itô evaluator produces; the
/// divergence of the direction field is its negative.
pub fn cameron_martin_pairing(driver: &BrownianDriver, h: &CameronMartinVector) -> f64 {
    assert_eq!(driver.increments.len(), h.slopes.len());
    h.slopes.iter().zip(&driver.increments).map(|(s, db)| s.dot(db)).sum()
}

/// Flat inner product of two directions.
pub fn cameron_martin_dot(a: &CameronMartinVector, h: &CameronMartinVector, dt: f64) -> f64 {
    assert_eq!(a.slopes.len(), h.slopes.len());
    a.slopes.iter().zip(&h.slopes).map(|(u, v)| u.dot(v) * dt).sum::<f64>()
}

/// Exponent clamp: e^{709} is the edge of f64 range.
const EXP_CLAMP: f64 = 700.0;

#[derive(Debug, Clone, Copy)]
pub struct ExpMartingaleValue {
    pub value: f64,
    /// Set when the exponent was clamped to avoid overflow; the value is
    /// then a saturation, not the true martingale.
    pub clamped: bool,
}

/// Exponential martingale of a direction at the horizon:
/// `exp(sum <adot, dB> - 1/2 |a|_H^2)`.
pub fn exp_martingale(driver: &BrownianDriver, a: &CameronMartinVector) -> ExpMartingaleValue {
    let dt = driver.grid.dt();
    let exponent = cameron_martin_pairing(driver, a) - 0.5 * a.norm_squared(dt);
    if exponent.abs() > EXP_CLAMP {
        ExpMartingaleValue { value: exponent.clamp(-EXP_CLAMP, EXP_CLAMP).exp(), clamped: true }
    } else {
        ExpMartingaleValue { value: exponent.exp(), clamped: false }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FdDerivative {
    /// Richardson-combined estimate from the two step sizes.
    pub value: f64,
    pub coarse: f64,
    pub fine: f64,
    /// Disagreement between the two stencils; large values flag a
    /// functional that is not smooth at this scale.
    pub richardson_gap: f64,
}

/// Directional derivative of a driver functional by central differences at
/// eps and eps/2, combined by Richardson extrapolation.
pub fn malliavin_derivative_fd(
    f: &dyn Fn(&BrownianDriver) -> f64,
    driver: &BrownianDriver,
    h: &CameronMartinVector,
    eps: f64,
) -> FdDerivative {
    let stencil = |e: f64| {
        let plus = f(&driver.shifted(h, e));
        let minus = f(&driver.shifted(h, -e));
        let v = (plus - minus) / (2.0 * e);
        assert!(v.is_finite(), "functional returned a non-finite value");
        v
    };
    let coarse = stencil(eps);
    let fine = stencil(0.5 * eps);
    FdDerivative {
        value: (4.0 * fine - coarse) / 3.0,
        coarse,
        fine,
        richardson_gap: (fine - coarse).abs(),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConditionalMartingaleCheck {
    /// Closed-form conditional mean: the martingale of the tangentially
    /// projected direction, evaluated on the base driver.
    pub analytic: f64,
    pub mc_mean: f64,
    pub se: f64,
    pub z: f64,
    pub resamples: u32,
}

/// Averages the exponential martingale over redraws of the kernel noise and
/// compares with its closed-form conditional mean: projecting the direction's
/// slopes onto the moving tangent spaces both in the pairing and in the norm.
/// The discrete identity is exact in expectation, so the z-score is pure
/// Monte Carlo fluctuation.
pub fn conditional_exp_martingale_check<M: Manifold>(
    base: &SolutionPath<M>,
    a: &CameronMartinVector,
    resamples: u32,
) -> ConditionalMartingaleCheck {
    let grid = base.driver.grid;
    let dt = grid.dt();
    let mut pairing = 0.0;
    let mut norm_sq = 0.0;
    for (k, db) in base.driver.increments.iter().enumerate() {
        let projected = M::kernel_proj_perp(&base.points[k]) * a.slopes[k];
        pairing += projected.dot(db);
        norm_sq += projected.norm_squared();
    }
    let analytic = (pairing - 0.5 * norm_sq * dt).exp();

    let split = decompose_noise(base);
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
        let value = exp_martingale(&driver, a).value;
        let delta = value - mean;
        mean += delta / (r + 1) as f64;
        m2 += delta * (value - mean);
    }
    let n = resamples as f64;
    let se = if resamples > 1 { (m2 / (n - 1.0) / n).sqrt() } else { f64::NAN };
    let diff = mean - analytic;
    let z = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    ConditionalMartingaleCheck { analytic, mc_mean: mean, se, z, resamples }
}
