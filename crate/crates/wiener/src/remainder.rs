//! The remainder-energy identity: after truncating the chaos expansion of a
//! functional at order k, the derivative energy of the remainder equals
//! (k+1) times the squared norm of the order-(k+1) coefficient plus the
//! squared norm of that coefficient's own derivative.
//!
//! Checked on two functionals whose expansions are known term by term. Both
//! sides are produced by separate hand derivations so the comparison is a
//! genuine cross-check, not one formula printed twice.

use sde_engine::BrownianDriver;

use crate::chaos::channel_increments;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemainderCase {
    /// F = B_T^2 on the first channel: chaos orders 0 and 2.
    SquareBT,
    /// F = B_T^3 on the first channel: chaos orders 1 and 3.
    CubeBT,
}

impl RemainderCase {
    pub fn top_chaos_order(self) -> usize {
        match self {
            RemainderCase::SquareBT => 2,
            RemainderCase::CubeBT => 3,
        }
    }
}

/// Both sides of the identity in closed form at horizon `t_final`, for the
/// truncation order `k`. Truncating at or above the top chaos order leaves
/// no remainder and both sides vanish.
///
/// Derivations, each side on its own:
/// * SquareBT, k = 1. Remainder B_T^2 - T has derivative 2B_T at every time,
///   so the energy is E[4 B_T^2] * T = 4T^2. The remainder is the double
///   integral of the constant coefficient 2 over the ordered simplex, whose
///   squared norm is 4 * T^2/2; the coefficient is deterministic, so the
///   right side is 2 * 2T^2 + 0.
/// * CubeBT, k = 1. Remainder B_T^3 - 3T B_T has derivative 3B_T^2 - 3T,
///   energy 9 E[(B_T^2 - T)^2] * T = 9 * 2T^2 * T = 18T^3. As a double
///   integral its coefficient at (s1, s2) is 6 B_{s1}: squared norm
///   36 * int_{s1<s2} s1 = 36 T^3/6 = 6T^3, and the coefficient's own
///   derivative is the indicator 6 * 1_{r <= s1} with the same norm, so the
///   right side is 2 * 6T^3 + 6T^3.
/// * CubeBT, k = 2. Same remainder; as a triple integral the coefficient is
///   the constant 6 on the ordered 3-simplex of volume T^3/6, so the right
///   side is 3 * 36 * T^3/6 + 0 = 18T^3.
pub fn closed_form(case: RemainderCase, k: usize, t_final: f64) -> (f64, f64) {
    let t = t_final;
    if k >= case.top_chaos_order() {
        return (0.0, 0.0);
    }
    match (case, k) {
        (RemainderCase::SquareBT, 1) => {
            let lhs = 4.0 * t * t;
            let coeff_norm_sq = 4.0 * (t * t / 2.0);
            let rhs = 2.0 * coeff_norm_sq + 0.0;
            (lhs, rhs)
        }
        (RemainderCase::CubeBT, 1) => {
            let lhs = 9.0 * (2.0 * t * t) * t;
            let coeff_norm_sq = 36.0 * (t * t * t / 2.0 - t * t * t / 3.0);
            let coeff_derivative_norm_sq = 36.0 * (t * t * t / 2.0 - t * t * t / 3.0);
            let rhs = 2.0 * coeff_norm_sq + coeff_derivative_norm_sq;
            (lhs, rhs)
        }
        (RemainderCase::CubeBT, 2) => {
            let lhs = 9.0 * (2.0 * t * t) * t;
            let coeff_norm_sq = 36.0 * (t * t * t / 6.0);
            let rhs = 3.0 * coeff_norm_sq + 0.0;
            (lhs, rhs)
        }
        _ => panic!("no derivation recorded for {case:?} at truncation order {k}"),
    }
}

/// Single-path sample of the left side's integrand energy,
/// `int |D_s remainder|^2 ds`, whose expectation is the closed-form left
/// side. The terminal value of the first channel is Gaussian on any grid,
/// so the estimator carries no discretisation bias.
pub fn sample_lhs(case: RemainderCase, driver: &BrownianDriver) -> f64 {
    let t = driver.grid.horizon();
    let b_t: f64 = channel_increments(driver).iter().sum();
    match case {
        RemainderCase::SquareBT => (2.0 * b_t).powi(2) * t,
        RemainderCase::CubeBT => (3.0 * b_t * b_t - 3.0 * t).powi(2) * t,
    }
}
