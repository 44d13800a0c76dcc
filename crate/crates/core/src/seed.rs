//! Seed derivation.
//!
//! Scheme `splitmix64-v1`: a child seed is `splitmix64(parent ^ splitmix64(tag))`.
//! All random streams in the crate are `ChaCha8Rng::seed_from_u64(child)`.

/// Identifier recorded in dataset manifests.
pub const SEED_SCHEME: &str = "splitmix64-v1/chacha8";

/// The splitmix64 finaliser.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child seed from `parent` and a stream `tag`.
#[inline]
pub fn derive(parent: u64, tag: u64) -> u64 {
    splitmix64(parent ^ splitmix64(tag))
}

/// Map a 64-bit hash to a uniform value in `[0, 1)`.
#[inline]
pub fn unit_f64(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
