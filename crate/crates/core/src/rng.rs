//! Reproducible random streams.
//!
//! Every draw is addressed by `(seed, replicate, role)`: the seed keys a
//! ChaCha8 generator and `(replicate, role)` selects one of its 2^64
//! independent streams. Results therefore do not depend on how replicates
//! are scheduled across workers.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::specfun::probit;

/// Which part of a replicate a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Disturbance = 0,
    Nulls = 1,
}

#[derive(Debug, Clone)]
pub struct Stream(ChaCha8Rng);

impl Stream {
    pub fn new(seed: u64, replicate: u64, role: StreamRole) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replicate.wrapping_mul(2).wrapping_add(role as u64));
        Stream(rng)
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal by inversion.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        probit(self.uniform())
    }

    /// Standard exponential by inversion.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -(-self.uniform()).ln_1p()
    }
}
