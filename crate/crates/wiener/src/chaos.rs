//! Iterated stochastic integrals over the first noise channel, with the
//! factorial normalisation that makes order-k integrals of the constant
//! kernel equal the degree-k Hermite polynomial of the terminal value.
//!
//! Only the coefficient shapes the identity checks need are represented:
//! arbitrary deterministic order-1 kernels, and constant order-2 / order-3
//! kernels on the simplex.

use sde_engine::BrownianDriver;

#[derive(Debug, Clone)]
pub enum ChaosCoefficient {
    /// A plain number, order zero.
    Order0(f64),
    /// Deterministic slope per step, paired with the channel increments.
    Order1(Vec<f64>),
    /// Constant kernel on the order-2 simplex {s1 < s2}.
    Order2Constant(f64),
    /// Constant kernel on the order-3 simplex {s1 < s2 < s3}.
    Order3Constant(f64),
}

impl ChaosCoefficient {
    pub fn order(&self) -> usize {
        match self {
            ChaosCoefficient::Order0(_) => 0,
            ChaosCoefficient::Order1(_) => 1,
            ChaosCoefficient::Order2Constant(_) => 2,
            ChaosCoefficient::Order3Constant(_) => 3,
        }
    }
}

/// Scalar increments of the channel the chaos machinery lives on.
pub fn channel_increments(driver: &BrownianDriver) -> Vec<f64> {
    driver.increments.iter().map(|db| db.x).collect()
}

/// Multiple stochastic integral `I_k(alpha) = k! int_{s1<...<sk} alpha dB...dB`
/// over the first channel, evaluated by strict-prefix recursion so every
/// factor is adapted. With the constant kernel this reproduces the Hermite
/// recursions exactly at the discrete level: `I_2(1) = B_T^2 - [B]_T`.
pub fn iterated_integral(driver: &BrownianDriver, coeff: &ChaosCoefficient) -> f64 {
    let db = channel_increments(driver);
    match coeff {
        ChaosCoefficient::Order0(c) => *c,
        ChaosCoefficient::Order1(a) => {
            assert_eq!(a.len(), db.len());
            a.iter().zip(&db).map(|(ak, dbk)| ak * dbk).sum()
        }
        ChaosCoefficient::Order2Constant(c) => {
            // 2c * sum_k B_k dB_k with B_k the strict prefix.
            let mut prefix = 0.0;
            let mut acc = 0.0;
            for dbk in &db {
                acc += prefix * dbk;
                prefix += dbk;
            }
            2.0 * c * acc
        }
        ChaosCoefficient::Order3Constant(c) => {
            // 6c * sum_k U_k dB_k with U the strict double prefix
            // sum_{i<j<k} dB_i dB_j.
            let mut prefix = 0.0;
            let mut double = 0.0;
            let mut acc = 0.0;
            for dbk in &db {
                acc += double * dbk;
                double += prefix * dbk;
                prefix += dbk;
            }
            6.0 * c * acc
        }
    }
}

/// Second moment of the iterated integral under the discrete measure the
/// evaluator actually uses: `(k!)^2` times the squared kernel norm over grid
/// points in the strict simplex, each cell carrying `dt^k`. Matching the
/// evaluator's own grid keeps the identity exact rather than
/// O(dt)-approximate.
pub fn second_moment(dt: f64, steps: usize, coeff: &ChaosCoefficient) -> f64 {
    let n = steps as f64;
    match coeff {
        ChaosCoefficient::Order0(c) => c * c,
        ChaosCoefficient::Order1(a) => {
            assert_eq!(a.len(), steps);
            a.iter().map(|ak| ak * ak * dt).sum()
        }
        ChaosCoefficient::Order2Constant(c) => 4.0 * c * c * dt * dt * n * (n - 1.0) / 2.0,
        ChaosCoefficient::Order3Constant(c) => {
            36.0 * c * c * dt * dt * dt * n * (n - 1.0) * (n - 2.0) / 6.0
        }
    }
}
