//! Deterministic random source.
//!
//! Every stochastic operator in the crate draws from a [`RandomSource`], so a
//! run is fully determined by its seed and configuration.
//!
//! ## Generator
//!
//! The stream is xorshift64* (Vigna, 2014):
//!
//! ```text
//! x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27;
//! output = x * 0x2545F4914F6CDD1D   (wrapping)
//! ```
//!
//! The initial state is `splitmix64(seed)`, where splitmix64 adds
//! `0x9E3779B97F4A7C15` and mixes with the multipliers `0xBF58476D1CE4E5B9`
//! and `0x94D049BB133111EB` (shifts 30, 27, 31). A zero state is replaced by
//! `0x9E3779B97F4A7C15`. Unit reals take the top 53 bits of an output;
//! bounded integers use Lemire's multiply-shift with rejection.

use thiserror::Error;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const XORSHIFT_MULTIPLIER: u64 = 0x2545_F491_4F6C_DD1D;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RngError {
    #[error("index range must be non-empty (n = 0)")]
    EmptyRange,
}

/// One step of the splitmix64 sequence starting at `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded xorshift64* stream.
///
/// Not `Copy`: duplicating a source duplicates its stream. Use
/// [`RandomSource::derive`] to obtain independent sub-streams for workers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomSource {
    seed: u64,
    state: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        let mut state = splitmix64(seed);
        if state == 0 {
            state = GOLDEN_GAMMA;
        }
        Self { seed, state }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent source for worker `index`, mixed from this source's seed.
    pub fn derive(&self, index: u64) -> Self {
        Self::new(self.seed ^ splitmix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(XORSHIFT_MULTIPLIER)
    }

    /// Uniform real in `[0, 1)`.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`.
    pub fn next_index(&mut self, n: u64) -> Result<u64, RngError> {
        if n == 0 {
            return Err(RngError::EmptyRange);
        }
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
                low = m as u64;
            }
        }
        Ok((m >> 64) as u64)
    }

    /// [`next_index`](Self::next_index) for in-memory lengths.
    ///
    /// Panics if `n == 0`; callers index into non-empty collections.
    pub fn below(&mut self, n: usize) -> usize {
        self.next_index(n as u64).expect("below() called with n = 0") as usize
    }

    /// Bernoulli draw; `p <= 0` never fires and `p >= 1` always does, but a
    /// value is consumed either way.
    #[inline]
    pub fn chance(&mut self, p: f64) -> bool {
        self.next_unit() < p
    }

    /// Uniform real in `[lo, hi]`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_unit()
    }

    /// Standard normal draw (Box–Muller, one value per two uniforms).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_unit();
        let u2 = self.next_unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
