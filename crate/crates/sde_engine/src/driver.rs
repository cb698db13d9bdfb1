//! Discrete Brownian drivers and Cameron-Martin directions.

use crate::grid::TimeGrid;
use crate::rng::{NoiseChannel, MAX_AUX, STREAM_BRIDGE, STREAM_INCREMENTS};
use nalgebra::Vector3;

/// Where a driver's randomness comes from; enough to regenerate it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub master_seed: u64,
    pub path_index: u64,
    /// Number of bridge refinements applied since sampling.
    pub level: u32,
}

/// Increments of a Brownian path on a uniform grid, one 3-vector per
/// interval, each component N(0, dt).
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianDriver {
    pub grid: TimeGrid,
    pub increments: Vec<Vector3<f64>>,
    pub provenance: Provenance,
}

impl BrownianDriver {
    /// Draws the driver for (seed, path index) at refinement level 0.
    pub fn sample(grid: TimeGrid, master_seed: u64, path_index: u64) -> Self {
        let mut ch = NoiseChannel::open(master_seed, STREAM_INCREMENTS, path_index, 0);
        let scale = grid.dt().sqrt();
        let increments = (0..grid.steps()).map(|_| ch.normal3(scale)).collect();
        BrownianDriver {
            grid,
            increments,
            provenance: Provenance { master_seed, path_index, level: 0 },
        }
    }

    pub fn from_increments(grid: TimeGrid, increments: Vec<Vector3<f64>>, provenance: Provenance) -> Self {
        assert_eq!(increments.len(), grid.steps(), "one increment per interval");
        BrownianDriver { grid, increments, provenance }
    }

    pub fn zero(grid: TimeGrid) -> Self {
        BrownianDriver {
            grid,
            increments: vec![Vector3::zeros(); grid.steps()],
            provenance: Provenance { master_seed: 0, path_index: 0, level: 0 },
        }
    }

    /// The driver shifted by a Cameron-Martin direction: increments pick up
    /// `eps * slope_k * dt`.
    pub fn shifted(&self, h: &CameronMartinVector, eps: f64) -> Self {
        assert_eq!(h.slopes.len(), self.increments.len(), "direction lives on another grid");
        let dt = self.grid.dt();
        let increments = self
            .increments
            .iter()
            .zip(&h.slopes)
            .map(|(db, s)| db + s * (eps * dt))
            .collect();
        BrownianDriver { grid: self.grid, increments, provenance: self.provenance }
    }

    /// Halves the grid with a Brownian bridge: each interval's increment is
    /// split into two conditionally correct halves. Refining is
    /// deterministic in the provenance, so coupled coarse/fine pairs for
    /// convergence sweeps are exactly reproducible.
    pub fn refine(&self) -> Self {
        let level = self.provenance.level + 1;
        assert!((level as u64) < MAX_AUX, "refinement level exceeds the aux cap");
        let mut ch = NoiseChannel::open(
            self.provenance.master_seed,
            STREAM_BRIDGE,
            self.provenance.path_index,
            level,
        );
        let fine = self.grid.refined();
        let half_sd = (fine.dt() / 2.0).sqrt();
        let mut increments = Vec::with_capacity(fine.steps());
        for db in &self.increments {
            let mid = ch.normal3(half_sd);
            increments.push(db * 0.5 + mid);
            increments.push(db * 0.5 - mid);
        }
        BrownianDriver {
            grid: fine,
            increments,
            provenance: Provenance { level, ..self.provenance },
        }
    }

    /// Path value at a node: the prefix sum of increments.
    pub fn value_at(&self, k: usize) -> Vector3<f64> {
        self.increments[..k].iter().sum()
    }
}

/// A finite-energy direction in the flat path space: piecewise-constant
/// derivative, one slope per grid interval, h(0) = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CameronMartinVector {
    pub slopes: Vec<Vector3<f64>>,
}

impl CameronMartinVector {
    pub fn from_slopes(slopes: Vec<Vector3<f64>>) -> Self {
        CameronMartinVector { slopes }
    }

    pub fn zero(steps: usize) -> Self {
        CameronMartinVector { slopes: vec![Vector3::zeros(); steps] }
    }

    /// Samples a smooth curve's derivative at interval midpoints.
    pub fn from_curve_derivative(grid: &TimeGrid, hdot: impl Fn(f64) -> Vector3<f64>) -> Self {
        let dt = grid.dt();
        let slopes = (0..grid.steps()).map(|k| hdot((k as f64 + 0.5) * dt)).collect();
        CameronMartinVector { slopes }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        CameronMartinVector { slopes: self.slopes.iter().map(|s| s * factor).collect() }
    }

    /// Value h(t_k): prefix sum of slopes times dt.
    pub fn value_at(&self, k: usize, dt: f64) -> Vector3<f64> {
        self.slopes[..k].iter().sum::<Vector3<f64>>() * dt
    }

    /// Energy norm squared: integral of |h'|^2.
    pub fn norm_squared(&self, dt: f64) -> f64 {
        self.slopes.iter().map(|s| s.norm_squared()).sum::<f64>() * dt
    }

    /// The same direction on the halved grid (slopes repeat).
    pub fn refined(&self) -> Self {
        let slopes = self.slopes.iter().flat_map(|s| [*s, *s]).collect();
        CameronMartinVector { slopes }
    }
}
