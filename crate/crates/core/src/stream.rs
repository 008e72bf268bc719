//! Splittable random streams.
//!
//! Every replication of every estimator draws from its own ChaCha8 stream
//! keyed by `(seed, replication index)`, so results do not depend on how
//! replications are scheduled across worker threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A deterministic generator addressed by `(seed, stream id)`.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    /// The independent stream for replication `index` of `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self {
            seed,
            stream_id: index,
            rng,
        }
    }

    /// Substream `index` of this stream's seed.
    pub fn split(&self, index: u64) -> Self {
        Self::substream(self.seed, index)
    }

    /// A new root stream whose seed mixes this seed with `salt`.
    ///
    /// Used when one run needs several unrelated families of replications.
    pub fn fork(&self, salt: u64) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(salt)))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Restart this stream from its first value.
    pub fn reset(&mut self) {
        *self = Self::substream(self.seed, self.stream_id);
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
