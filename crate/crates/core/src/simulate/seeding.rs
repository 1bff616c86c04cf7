//! Per-replica random streams.
//!
//! Replica `k` of master seed `s` draws its tree from ChaCha8 stream `2k`
//! and its mutations from stream `2k + 1` of the key `s`, so any replica can
//! be regenerated alone and in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct ReplicaRngs {
    pub tree: ChaCha8Rng,
    pub mutation: ChaCha8Rng,
}

impl ReplicaRngs {
    pub fn new(master: u64, replica: u64) -> Self {
        let mut tree = ChaCha8Rng::seed_from_u64(master);
        let mut mutation = tree.clone();
        tree.set_stream(2 * replica);
        mutation.set_stream(2 * replica + 1);
        Self { tree, mutation }
    }
}
