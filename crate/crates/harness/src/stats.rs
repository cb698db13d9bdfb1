//! Streaming moments and compensated sums. Everything here is written so
//! that a fixed combination order gives bit-identical results regardless of
//! how the work was scheduled.

/// Running mean and second central moment.
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Exact pooled moments of two disjoint sample sets. Merging in a fixed
    /// order is the deterministic-reduction contract.
    pub fn merge(a: Welford, b: Welford) -> Welford {
        if a.count == 0 {
            return b;
        }
        if b.count == 0 {
            return a;
        }
        let count = a.count + b.count;
        let delta = b.mean - a.mean;
        let w = b.count as f64 / count as f64;
        Welford {
            count,
            mean: a.mean + delta * w,
            m2: a.m2 + b.m2 + delta * delta * w * a.count as f64,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.m2 / (self.count - 1) as f64
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

/// z-score that stays meaningful when the spread degenerates: zero spread
/// with zero gap is a perfect match, zero spread with a gap is a hard miss.
pub fn safe_z(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// A mean with its confidence scale, judged against a target.
#[derive(Debug, Clone, Copy)]
pub struct EstimateWithCI {
    pub mean: f64,
    pub se: f64,
    pub count: u64,
    pub z: f64,
    pub pass: bool,
}

impl EstimateWithCI {
    pub fn from_welford(w: &Welford, target: f64, z_max: f64) -> Self {
        let z = safe_z(w.mean() - target, w.se());
        EstimateWithCI { mean: w.mean(), se: w.se(), count: w.count(), z, pass: z.abs() <= z_max }
    }
}

/// Compensated sum for long accumulations whose terms vary in scale.
pub fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
