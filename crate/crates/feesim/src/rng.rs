//! Deterministic 64-bit generator for the simulation engine.
//!
//! SplitMix64: one u64 of state, a fixed-increment Weyl sequence with an
//! xor-shift-multiply finalizer. Output is identical on every platform and
//! has no floating-point or endianness dependence, so trajectories can be
//! replayed from a seed anywhere. Not suitable for secrets.
//!
//! Output metadata that names the generator should call it `splitmix64`.

/// Name of the generator, for run metadata.
pub const PRNG_NAME: &str = "splitmix64";

const GOLDEN_GAMMA: u64 = 0x9E3779B97F4A7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix(self.state)
    }

    /// Uniform draw in `[0, 1)` using the top 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[inline]
fn mix(v: u64) -> u64 {
    let mut z = v;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-run seed derived from a base seed and a run index: the index is
/// spread by the odd constant 0x9E3779B97F4A7C15, xored into the base seed,
/// and folded through the same xor-shift finalizer as the generator. The
/// same pair always yields the same seed, and consecutive indices yield
/// unrelated ones.
pub fn derive_run_seed(base_seed: u64, run_index: u64) -> u64 {
    mix(base_seed ^ run_index.wrapping_mul(GOLDEN_GAMMA))
}
