//! Seed derivation and thread-pool helpers.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from the
//! single user seed through [`mix`], so results depend only on the seed and
//! the logical coordinates of the work item, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed: `splitmix64(splitmix64(seed ^ splitmix64(a)) ^ b)`.
#[inline]
pub fn mix(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(a)) ^ b)
}

/// Generator for the work item `(a, b)` under `seed`.
pub fn rng_for(seed: u64, a: u64, b: u64) -> Rng {
    Rng::seed_from_u64(mix(seed, a, b))
}

/// Runs `f` inside a dedicated rayon pool of `threads` workers
/// (0 means rayon's default).
pub fn with_threads<R, F>(threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
