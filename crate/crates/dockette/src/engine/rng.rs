//! Stateless counter-based random numbers.
//!
//! Every draw is a pure function of an [`RngKey`] — five integers naming the
//! run, generation, logical unit (individual or kernel lane), and draw
//! counter under a global seed. There is no mutable generator state, so any
//! worker on any schedule can compute any draw, and the same key always
//! yields the same bits on every platform.
//!
//! The key is packed into a 64-bit state by multiplying each field with a
//! fixed odd constant and summing (wrapping); the state then passes through
//! two rounds of the splitmix64 finalizer. Because the finalizer is a
//! bijection on 64-bit integers, distinct states can never collide, and
//! because the draw multiplier is odd, consecutive draw counters always
//! produce distinct states.

/// Fully-qualified name of one random draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngKey {
    pub seed: u64,
    pub run: u64,
    pub generation: u64,
    pub unit: u64,
    pub draw: u64,
}

const RUN_MUL: u64 = 0x9E37_79B9_7F4A_7C15;
const GEN_MUL: u64 = 0xC2B2_AE3D_27D4_EB4F;
const UNIT_MUL: u64 = 0x1656_67B1_9E37_79F9;
const DRAW_MUL: u64 = 0x27D4_EB2F_1656_67C5;

/// splitmix64 finalizer: a bijective avalanche mix.
#[inline]
fn mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pack a key into its 64-bit counter state.
#[inline]
fn pack(key: RngKey) -> u64 {
    key.seed
        .wrapping_add(key.run.wrapping_mul(RUN_MUL))
        .wrapping_add(key.generation.wrapping_mul(GEN_MUL))
        .wrapping_add(key.unit.wrapping_mul(UNIT_MUL))
        .wrapping_add(key.draw.wrapping_mul(DRAW_MUL))
}

/// The full 64-bit output for `key`: two finalizer rounds over the packed
/// state. Exposed so collision and determinism checks can see every bit.
#[inline]
pub fn mixed_bits(key: RngKey) -> u64 {
    mix(mix(pack(key)))
}

/// Uniform value in `[0, 1)`: the top 53 bits of [`mixed_bits`] scaled by
/// 2^-53.
#[inline]
pub fn rng_uniform(key: RngKey) -> f64 {
    const SCALE: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53
    ((mixed_bits(key) >> 11) as f64) * SCALE
}

/// A key with an advancing draw counter: the ergonomic way to take several
/// draws for one logical unit.
#[derive(Debug, Clone, Copy)]
pub struct DrawStream {
    key: RngKey,
}

impl DrawStream {
    pub fn new(seed: u64, run: u64, generation: u64, unit: u64) -> Self {
        DrawStream { key: RngKey { seed, run, generation, unit, draw: 0 } }
    }

    /// Number of draws consumed so far.
    pub fn draws_used(&self) -> u64 {
        self.key.draw
    }

    /// Next uniform value in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        let v = rng_uniform(self.key);
        self.key.draw += 1;
        v
    }

    /// Next index uniform over `0..n` (`n > 0`).
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0, "next_index requires a non-empty range");
        let u = self.next_f64();
        ((u * n as f64) as usize).min(n - 1)
    }

    /// Next uniform value in `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }
}
