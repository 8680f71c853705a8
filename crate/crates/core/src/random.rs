//! Splittable random source.
//!
//! A [`RandomSource`] is a ChaCha8 stream identified by a 64-bit key. New
//! streams are derived from the key (never from the generator state), so a
//! substream for a given tag path is the same no matter how much the parent
//! has been consumed or in which order substreams are created.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomSource {
    key: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self::from_key(splitmix64(seed))
    }

    fn from_key(key: u64) -> Self {
        Self {
            key,
            rng: ChaCha8Rng::seed_from_u64(key),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Derives an independent stream for `tags`, e.g. `[stage, frame, birth_time, birth_index]`.
    pub fn substream(&self, tags: &[u64]) -> RandomSource {
        let mut key = self.key;
        for &tag in tags {
            key = splitmix64(key ^ splitmix64(tag.wrapping_add(0x632B_E59B_D9B4_E019)));
        }
        Self::from_key(key)
    }
}

impl RngCore for RandomSource {
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
