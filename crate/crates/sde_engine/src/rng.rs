//! Counter-based noise generation.
//!
//! Every random draw in the workspace is addressed by a fixed coordinate
//! system (master seed, purpose, path, aux, position) rather than by shared
//! generator state. Streams are ChaCha8 keyed by the master seed, with the
//! 64-bit stream id carrying `purpose << 40 | path`; the word position
//! starts at `aux << 27` and draws advance sequentially inside that island.
//! An island spans 2^27 of the generator's 32-bit words while a path of at
//! most 2^24 steps consumes at most 8 words per step, so islands never
//! overlap as long as the documented caps hold:
//!
//! * path index < 2^40
//! * steps per path < 2^24
//! * aux (refinement level or resample index) < 2^32
//!
//! The payoff is order independence: any path, any refinement level, and
//! any resample can be regenerated in isolation, and parallel schedules
//! cannot change the numbers.

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream purposes. Keeping them disjoint means e.g. refinement noise can
/// never collide with the base increments of another path.
pub const STREAM_INCREMENTS: u8 = 0;
pub const STREAM_BRIDGE: u8 = 1;
pub const STREAM_BETA: u8 = 2;
pub const STREAM_SCRATCH: u8 = 3;

pub const MAX_PATH_INDEX: u64 = 1 << 40;
pub const MAX_STEPS: usize = 1 << 24;
pub const MAX_AUX: u64 = u32::MAX as u64;

/// One addressed noise stream, drawn sequentially from its start position.
pub struct NoiseChannel {
    rng: ChaCha8Rng,
    pending: Option<f64>,
}

impl NoiseChannel {
    /// Opens the stream for (purpose, path) and seeks to the aux island.
    pub fn open(master_seed: u64, purpose: u8, path: u64, aux: u32) -> Self {
        assert!(path < MAX_PATH_INDEX, "path index {path} exceeds the 2^40 cap");
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(((purpose as u64) << 40) | path);
        rng.set_word_pos(((aux as u128) << 24) << 3);
        NoiseChannel { rng, pending: None }
    }

    /// Standard normal by Box-Muller; pairs are cached so consumption is
    /// two 64-bit words per draw on average and fully deterministic.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.pending.take() {
            return z;
        }
        let x = self.rng.next_u64();
        let y = self.rng.next_u64();
        // (0,1] so the log is finite; 2^-53 grid
        let u1 = ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (y >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.pending = Some(r * s);
        r * c
    }

    pub fn normal3(&mut self, scale: f64) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(self.normal(), self.normal(), self.normal()) * scale
    }
}
