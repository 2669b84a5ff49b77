//! Deterministic seed derivation.
//!
//! Everything randomized in this crate (graph generation, root-cause
//! sampling, benchmark repetitions) derives its RNG seed through
//! [`derive_seed`], so runs are reproducible across platforms and across
//! serial/parallel execution.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a fixed 64-bit mixing function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent substream seed from `base` for a given `stream`
/// index, as `mix64(base + mix64(stream))`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    mix64(base.wrapping_add(mix64(stream)))
}
