//! Seed derivation and the simulator's RNG type.
//!
//! Every random quantity in the simulator is drawn from a [`SimRng`] whose
//! seed is derived from the master seed with [`derive_seed`]. Streams never
//! share state, so a user's trajectory depends only on its own seed and not on
//! how many users were simulated before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Portable, reproducible generator used for all simulation draws.
pub type SimRng = ChaCha8Rng;

/// Salt for the stream that samples the model parameters.
pub const MODEL_SALT: u64 = 0x6d6f_6465_6c00_0001;
/// Salt for populations used to generate training logs.
pub const TRAIN_SALT: u64 = 0x7472_6169_6e00_0002;
/// Salt for populations used in online evaluation.
pub const EVAL_SALT: u64 = 0x6576_616c_0000_0003;
/// Salt for the logging policy's action streams.
pub const LOGGING_SALT: u64 = 0x6c6f_6767_0000_0004;

/// splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `parent` and a `salt`.
#[inline]
pub fn derive_seed(parent: u64, salt: u64) -> u64 {
    mix64(parent ^ mix64(salt))
}

/// Builds a generator from a fully derived seed.
pub fn stream(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
