//! Reproducible random streams.
//!
//! A stream is identified by `(master_seed, stream_index)`; a stream further
//! splits into numbered channels so that independent inputs of one trial (for
//! example an operational-cost draw and a token-value draw) never share
//! generator state.
//!
//! Derivation, stable across platforms:
//!
//! 1. The 256-bit ChaCha key for `(master_seed, channel)` is four SplitMix64
//!    outputs, word `i` taken from input
//!    `master_seed + (4 * channel + i + 1) * 0x9E3779B97F4A7C15` (wrapping),
//!    stored little-endian.
//! 2. The ChaCha8 64-bit stream id is `stream_index`, word position 0.
//!
//! Distinct stream indices address disjoint ChaCha keystreams under one key.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type backing every stream.
pub type StreamRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RandomStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RandomStream {
            master_seed,
            stream_index,
        }
    }

    /// Generator for one channel of this stream.
    pub fn channel(&self, channel: u32) -> StreamRng {
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            let input = self
                .master_seed
                .wrapping_add((4 * channel as u64 + i as u64 + 1).wrapping_mul(GOLDEN_GAMMA));
            chunk.copy_from_slice(&splitmix64(input).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Generator for channel 0.
    pub fn rng(&self) -> StreamRng {
        self.channel(0)
    }
}

/// Stream used by trial `trial_index` of a run seeded with `master_seed`.
pub fn derive_stream(master_seed: u64, trial_index: u64) -> RandomStream {
    RandomStream::new(master_seed, trial_index)
}
