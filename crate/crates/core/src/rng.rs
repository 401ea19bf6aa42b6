//! Counter-addressed random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the user seed and positioned
//! on its own stream id, so a draw depends only on its coordinates and never
//! on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; keeps noise and bootstrap draws apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Trial = 0,
    Bootstrap = 1,
}

/// Generator for `(kind, snr_index, trial_index)` under `seed`.
pub fn stream(seed: u64, kind: StreamKind, snr_index: u32, trial_index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = ((kind as u64) << 56) | ((snr_index as u64 & 0xFF_FFFF) << 32) | trial_index as u64;
    rng.set_stream(id);
    rng
}

/// Noise and delay stream of one trial.
pub fn trial_stream(seed: u64, snr_index: u32, trial_index: u32) -> ChaCha8Rng {
    stream(seed, StreamKind::Trial, snr_index, trial_index)
}
