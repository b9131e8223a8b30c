//! Reproducible random streams.
//!
//! A [`RandomStream`] names a ChaCha8 keystream by `(seed, substream_id)`.
//! ChaCha is counter-based, so distinct stream ids give non-overlapping,
//! independent sequences without any shared state. Monte Carlo work is cut
//! into fixed-size chunks, each drawing from its own child stream, which makes
//! results independent of how chunks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Generator handed to samplers.
pub type StreamRng = ChaCha8Rng;

/// Trials per parallel work unit. Fixed so chunk boundaries never depend on
/// the worker count.
pub const CHUNK_TRIALS: u64 = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub substream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            substream_id: 0,
        }
    }

    pub fn with_substream(seed: u64, substream_id: u64) -> Self {
        Self { seed, substream_id }
    }

    /// Deterministic child stream; children of distinct parents or indices
    /// land on distinct stream ids with overwhelming probability.
    pub fn substream(&self, index: u64) -> Self {
        let id = splitmix64(self.substream_id ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)));
        Self {
            seed: self.seed,
            substream_id: id,
        }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.substream_id);
        rng
    }
}

/// Runs `trials` Monte Carlo trials in [`CHUNK_TRIALS`]-sized chunks, chunk
/// `i` drawing from `stream.substream(i)`. Per-chunk results come back in
/// chunk order, so any merge that folds them in order is bit-reproducible.
pub fn run_chunked<A, F>(trials: u64, stream: &RandomStream, body: F) -> Vec<A>
where
    A: Send,
    F: Fn(&mut StreamRng, u64) -> A + Sync,
{
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK_TRIALS.min(trials - c * CHUNK_TRIALS);
            let mut rng = stream.substream(c).rng();
            body(&mut rng, len)
        })
        .collect()
}
