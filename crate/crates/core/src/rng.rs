//! Seeded random streams. Every batch of work draws from its own ChaCha8
//! stream, so results do not depend on how batches are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Identifier recorded next to every seed in reports.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64/stream=(tag<<40)|batch";

pub mod tags {
    pub const LLN: u64 = 1;
    pub const SELECT_KM: u64 = 2;
    pub const CONTENT: u64 = 3;
    pub const WALK: u64 = 4;
    pub const WALK_DRIFT: u64 = 5;
    pub const TWO_SIDED: u64 = 6;
    pub const DIAMETER: u64 = 7;
    pub const PATH_MONOTONE: u64 = 8;
    pub const METRIC_MONOTONE: u64 = 9;
    pub const QS_ANCHORS: u64 = 10;
    pub const QS_TRIPLES: u64 = 11;
    pub const LIPSCHITZ: u64 = 12;
}

pub fn stream(seed: u64, tag: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag << 40 | batch);
    rng
}

/// Runs `f` on every batch index in parallel and returns the results in
/// batch order.
pub fn par_batches<T: Send>(batches: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..batches).into_par_iter().map(f).collect()
}
