//! Convergence sweeps over coupled grid refinements, and the order
//! estimate read off them. Couplings come from the driver's bridge
//! refinement, so every level sees the same underlying noise.

use crate::report::AssertionRow;

/// Errors below this are treated as roundoff: the quantity is exact on
/// this grid family and a slope would be meaningless.
pub const EXACT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct LevelError {
    pub dt: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub levels: Vec<LevelError>,
    /// Least-squares slope of log error against log dt; `None` when the
    /// levels are exact or non-monotone.
    pub order: Option<f64>,
    pub exact: bool,
    pub monotone: bool,
}

/// Fits the observed order. Levels must be listed coarse to fine. An error
/// that grows under refinement leaves the order undefined.
pub fn assess(levels: Vec<LevelError>) -> SweepResult {
    assert!(levels.len() >= 3, "need at least 3 levels for a slope");
    for pair in levels.windows(2) {
        assert!(pair[1].dt < pair[0].dt, "levels must refine monotonically");
    }
    let exact = levels.iter().all(|l| l.error.abs() < EXACT_FLOOR);
    if exact {
        return SweepResult { levels, order: None, exact: true, monotone: true };
    }
    let monotone = levels.windows(2).all(|pair| pair[1].error <= pair[0].error);
    if !monotone {
        return SweepResult { levels, order: None, exact: false, monotone: false };
    }
    let xs: Vec<f64> = levels.iter().map(|l| l.dt.ln()).collect();
    let ys: Vec<f64> = levels.iter().map(|l| l.error.max(EXACT_FLOOR).ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    SweepResult { levels, order: Some(sxy / sxx), exact: false, monotone: true }
}

impl SweepResult {
    /// One line per level, for report notes.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        for l in &self.levels {
            s.push_str(&format!("dt {:.3e}: error {:.6e}; ", l.dt, l.error));
        }
        match self.order {
            Some(o) => s.push_str(&format!("order {o:.3}")),
            None if self.exact => s.push_str("exact at roundoff"),
            None => s.push_str("non-monotone, order undefined"),
        }
        s
    }

    /// Assertion that the observed order reaches `required`. Exact levels
    /// pass outright (there is no error left to shrink); a non-monotone
    /// sweep fails with an undefined estimate.
    pub fn order_assertion(&self, name: &str, required: f64) -> AssertionRow {
        match self.order {
            Some(o) => AssertionRow::lower_bound(name, o, required),
            None if self.exact => AssertionRow {
                name: format!("{name} (exact at roundoff)"),
                target: required,
                estimate: f64::NAN,
                se: 0.0,
                z: 0.0,
                tol: required,
                pass: true,
            },
            None => AssertionRow {
                name: format!("{name} (non-monotone)"),
                target: required,
                estimate: f64::NAN,
                se: 0.0,
                z: 0.0,
                tol: required,
                pass: false,
            },
        }
    }
}
