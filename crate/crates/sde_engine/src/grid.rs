//! Uniform time grids on [0, T].

/// A uniform grid: `steps` intervals of width `dt = horizon / steps`,
/// hence `steps + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Self {
        assert!(horizon > 0.0, "horizon must be positive");
        assert!(steps >= 2, "need at least 2 steps");
        assert!(steps < crate::rng::MAX_STEPS, "step count exceeds the 2^24 cap");
        TimeGrid { horizon, steps }
    }

    /// Standard grid for pathwise work: T = 1.
    pub fn unit(steps: usize) -> Self {
        TimeGrid::new(1.0, steps)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node_time(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.steps as f64
    }

    /// Index of the grid node nearest to `t`.
    pub fn nearest_node(&self, t: f64) -> usize {
        let k = (t / self.dt()).round() as isize;
        k.clamp(0, self.steps as isize) as usize
    }

    /// The grid with every interval halved.
    pub fn refined(&self) -> Self {
        TimeGrid::new(self.horizon, self.steps * 2)
    }
}
