//! Counter-based splittable random streams.
//!
//! Every random draw in the crate is keyed by a path of indices below a
//! root seed: `root(seed).child(case).child(replication).child(b)`.
//! Deriving a child is a pure function of (state, index), so any worker
//! can reconstruct any stream without shared mutable state. That is what
//! makes permutation nulls and power studies reproducible independent of
//! thread count and iteration order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer: full-avalanche 64-bit mix.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A derivation point in the stream tree. Copyable, 8 bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    state: u64,
}

impl RngStream {
    pub fn root(seed: u64) -> Self {
        RngStream {
            state: mix(seed ^ GOLDEN),
        }
    }

    /// Derive the `index`-th child stream.
    pub fn child(self, index: u64) -> Self {
        RngStream {
            state: mix(self.state ^ index.wrapping_add(1).wrapping_mul(GOLDEN)),
        }
    }

    /// Instantiate a generator positioned at this stream.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.state)
    }
}
