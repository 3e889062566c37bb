//! Reproducible random streams.
//!
//! A stream is identified by `(master_seed, stream_id)`; Monte Carlo loops
//! further split a stream into numbered blocks. Each block gets its own
//! ChaCha8 key built from the three words, so blocks never overlap and the
//! draws of block `b` do not depend on how blocks are scheduled.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

/// Replications per Monte Carlo block. Fixed so that results do not depend
/// on the worker count.
pub const BLOCK_SIZE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStreamSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStreamSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// Generator for block 0 of this stream.
    pub fn rng(&self) -> StreamRng {
        self.block_rng(0)
    }

    pub fn block_rng(&self, block: u64) -> StreamRng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream_id.to_le_bytes());
        key[16..24].copy_from_slice(&block.to_le_bytes());
        key[24..].copy_from_slice(b"lecamstr");
        ChaCha8Rng::from_seed(key)
    }

    /// A child stream. Children of distinct parents or distinct indices are
    /// distinct streams.
    pub fn child(&self, index: u64) -> RngStreamSpec {
        RngStreamSpec {
            master_seed: self.master_seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0x9e37))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A uniform variate on the open interval (0, 1).
#[inline]
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// `n` i.i.d. uniform(0, 1) variates, deterministic given `spec`.
pub fn uniform_sample(spec: RngStreamSpec, n: usize) -> Vec<f64> {
    let mut rng = spec.rng();
    (0..n).map(|_| open_uniform(&mut rng)).collect()
}

/// Runs replication blocks in parallel and hands back per-block results in
/// block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Executor {
    workers: usize,
}

impl Default for Executor {
    fn default() -> Self {
        Self { workers: 1 }
    }
}

impl Executor {
    pub fn new(workers: usize) -> Self {
        Self {
            workers: workers.max(1),
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Split `reps` replications into blocks of [`BLOCK_SIZE`] and evaluate
    /// `f(rng, block_len)` for each block.
    pub fn run_blocks<T, F>(&self, spec: RngStreamSpec, reps: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut StreamRng, usize) -> T + Sync,
    {
        self.run_indexed_blocks(spec, reps, |rng, _start, len| f(rng, len))
    }

    /// As [`Executor::run_blocks`]; `f` also receives the index of the
    /// block's first replication.
    pub fn run_indexed_blocks<T, F>(&self, spec: RngStreamSpec, reps: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut StreamRng, usize, usize) -> T + Sync,
    {
        let blocks = reps.div_ceil(BLOCK_SIZE);
        let job = |b: usize| {
            let start = b * BLOCK_SIZE;
            let len = BLOCK_SIZE.min(reps - start);
            let mut rng = spec.block_rng(b as u64);
            f(&mut rng, start, len)
        };
        if self.workers == 1 || blocks <= 1 {
            return (0..blocks).map(job).collect();
        }
        match rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
        {
            Ok(pool) => pool.install(|| (0..blocks).into_par_iter().map(job).collect()),
            Err(_) => (0..blocks).map(job).collect(),
        }
    }

    /// One value per replication, in replication order.
    pub fn collect<T, F>(&self, spec: RngStreamSpec, reps: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut StreamRng) -> T + Sync,
    {
        self.run_blocks(spec, reps, |rng, len| {
            (0..len).map(|_| f(rng)).collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }

    /// As [`Executor::collect`], stopping at the first error in replication order.
    pub fn try_collect<T, E, F>(&self, spec: RngStreamSpec, reps: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(&mut StreamRng) -> Result<T, E> + Sync,
    {
        self.run_blocks(spec, reps, |rng, len| {
            (0..len).map(|_| f(rng)).collect::<Result<Vec<_>, E>>()
        })
        .into_iter()
        .try_fold(Vec::with_capacity(reps), |mut acc, block| {
            acc.extend(block?);
            Ok(acc)
        })
    }
}
