//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, trajectory, channel, position)`: the
//! seed keys a ChaCha8 generator, `trajectory` and `channel` select one of its
//! 2^64 independent streams and the position is a word offset. Parallel
//! ensembles therefore see the same numbers whatever order workers run in.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Channels keep unrelated uses of one trajectory id on disjoint streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Channel {
    InitialData = 0,
    Increments = 1,
    Auxiliary = 2,
    Extra = 3,
}

const CHANNELS: u64 = 4;

/// 32-bit words consumed by one complex Gaussian draw.
pub const WORDS_PER_GAUSSIAN: u128 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub trajectory: u64,
    pub channel: Channel,
}

impl StreamKey {
    pub fn new(seed: u64, trajectory: u64, channel: Channel) -> Self {
        Self {
            seed,
            trajectory,
            channel,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(key: StreamKey) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(key.seed);
        rng.set_stream(
            key.trajectory
                .wrapping_mul(CHANNELS)
                .wrapping_add(key.channel as u64),
        );
        Self { rng }
    }

    /// Stream positioned at the first draw of block `block`, where each block
    /// holds `draws` complex Gaussians. Used to jump straight to a time step.
    pub fn at_block(key: StreamKey, block: u64, draws: usize) -> Self {
        let mut s = Self::new(key);
        s.seek_block(block, draws);
        s
    }

    pub fn seek_block(&mut self, block: u64, draws: usize) {
        self.rng
            .set_word_pos(block as u128 * draws as u128 * WORDS_PER_GAUSSIAN);
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard complex Gaussian: `E|g|² = 1`, real and imaginary parts
    /// independent with variance 1/2 each. Always consumes exactly
    /// [`WORDS_PER_GAUSSIAN`] words.
    #[inline]
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let r = (-self.uniform_open0().ln()).sqrt();
        let theta = std::f64::consts::TAU * self.uniform();
        Complex64::from_polar(r, theta)
    }

    /// Real standard normal (the real part of a scaled complex draw).
    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.complex_gaussian().re * std::f64::consts::SQRT_2
    }

    pub fn fill_gaussians(&mut self, out: &mut [Complex64], scale: f64) {
        for z in out {
            *z = self.complex_gaussian() * scale;
        }
    }
}
