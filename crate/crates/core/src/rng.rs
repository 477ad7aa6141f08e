//! Replica random streams.
//!
//! Every replica draws from ChaCha20 keyed by the master seed, with the
//! replica index selecting the stream. Streams for different indices (or
//! different master seeds) never overlap, so replicas can be generated in
//! any order or in parallel and still be bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Address of one replica stream: `(master_seed, replica_index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct StreamId {
    pub master: u64,
    pub replica: u64,
}

impl StreamId {
    pub fn new(master: u64, replica: u64) -> Self {
        Self { master, replica }
    }

    /// Packs the stream address into a single 64-bit tag for reporting.
    pub fn tag(&self) -> u64 {
        self.master
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .rotate_left(17)
            ^ self.replica
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master);
        rng.set_stream(self.replica);
        rng
    }

    /// A sub-stream for an auxiliary purpose (e.g. projection directions)
    /// that never collides with replica streams of the same master seed.
    pub fn auxiliary(master: u64, purpose: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(master ^ 0xA5A5_5A5A_0F0F_F0F0);
        rng.set_stream(purpose);
        rng
    }
}
