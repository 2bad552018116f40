//! Reproducible random streams.
//!
//! Every Monte Carlo path draws from its own ChaCha8 stream identified by
//! `(seed, stream_id)`, so results do not depend on how paths are scheduled
//! across threads.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Random number stream with a fixed `(seed, stream_id)` identity.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { rng, seed, stream_id }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
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

/// Evaluates `f` once per stream id in `first..first + count`, in parallel,
/// returning results in stream order.
pub fn par_map_streams<T, F>(seed: u64, first: u64, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RngStream) -> T + Sync,
{
    (0..count as u64).into_par_iter().map(|i| f(&mut RngStream::new(seed, first + i))).collect()
}
