//! Block-fading channel: exponential gain distribution, seeded sampling and
//! the equal-probability quantizer used by the limited-feedback mode.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::{cast, Real};

/// Density of the channel power gain `|h|^2` (exponential with scale `varsigma`).
#[inline]
pub fn gain_pdf<T: Real>(h2: T, varsigma: T) -> T {
    (-h2 / varsigma).exp() / varsigma
}

/// Inverse-CDF map from a uniform draw `u` in `[0, 1)` to a gain sample.
#[inline]
pub fn gain_from_uniform<T: Real>(u: T, varsigma: T) -> T {
    -varsigma * (T::one() - u).ln()
}

/// Deterministic gain sampler: ChaCha8 keyed by a 64-bit seed, top 53 bits of
/// each 64-bit word mapped to a uniform, then inverse-CDF transformed.
/// Identical seeds produce identical streams on every platform.
#[derive(Debug, Clone)]
pub struct GainSampler<T> {
    rng: ChaCha8Rng,
    varsigma: T,
}

impl<T: Real> GainSampler<T> {
    pub fn new(seed: u64, varsigma: T) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            varsigma,
        }
    }

    /// Next gain draw.
    pub fn sample(&mut self) -> T {
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0);
        gain_from_uniform(cast(u), self.varsigma)
    }
}

/// Equal-probability quantizer of the gain range `[0, inf)`.
///
/// `levels` holds `2^b + 1` boundaries: `c_1 = 0`, interior quantiles of the
/// exponential distribution, and a final `+inf`. Interval `i` is
/// `[c_i, c_{i+1})`, each carrying probability `2^-b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer<T> {
    pub b: u32,
    pub levels: Vec<T>,
    pub varsigma: T,
}

/// Build the quantizer for `b` feedback bits (1 <= b <= 16).
pub fn build_quantizer<T: Real>(b: u32, varsigma: T) -> Quantizer<T> {
    assert!(
        (1..=16).contains(&b),
        "feedback bits must be in 1..=16, got {b}"
    );
    let n = 1usize << b;
    let mut levels = Vec::with_capacity(n + 1);
    levels.push(T::zero());
    for i in 1..n {
        let q = i as f64 / n as f64;
        levels.push(-varsigma * (T::one() - cast(q)).ln());
    }
    levels.push(T::infinity());
    Quantizer {
        b,
        levels,
        varsigma,
    }
}

/// Interval index `i` (1-based) with `c_i <= h2 < c_{i+1}`.
pub fn quantize<T: Real>(h2: T, q: &Quantizer<T>) -> usize {
    debug_assert!(h2 >= T::zero());
    // levels[0] = 0 <= h2 always, so the count is at least 1; the trailing
    // +inf level caps it at 2^b.
    q.levels.partition_point(|c| *c <= h2)
}

impl<T: Real> Quantizer<T> {
    /// Lower boundary of interval `i` (1-based).
    pub fn level(&self, i: usize) -> T {
        self.levels[i - 1]
    }

    /// Number of intervals, `2^b`.
    pub fn intervals(&self) -> usize {
        self.levels.len() - 1
    }
}
