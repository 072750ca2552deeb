//! Reproducible trajectory ensembles.
//!
//! Trajectory `i` of an ensemble with master seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `i`. Streams are
//! independent, so the result of each trajectory depends only on `(s, i)`
//! and never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type StreamRng = ChaCha8Rng;

/// RNG for trajectory `index` of the ensemble seeded with `master`.
pub fn stream_rng(master: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Runs `n` trajectories in parallel, returning results ordered by index.
///
/// `threads = None` uses the global rayon pool.
pub fn run_ensemble<T, F>(n: usize, master: u64, threads: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut StreamRng) -> T + Sync + Send,
{
    let job = || {
        (0..n)
            .into_par_iter()
            .map(|i| f(i, &mut stream_rng(master, i as u64)))
            .collect()
    };
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .expect("thread pool")
            .install(job),
        None => job(),
    }
}
