//! Data-parallel dispatch for the numerical inner loops.
//!
//! Every reduction is performed over fixed-size chunks whose partial sums are
//! combined in chunk order, so results are bit-identical whether the chunks
//! run on one thread or many. With the `parallel` feature disabled (or after
//! [`set_parallel`]`(false)`) the same chunking runs sequentially.

use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;

/// Elements per reduction chunk.
pub const CHUNK: usize = 256;

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Enables or disables the rayon path at runtime. Has no effect when the
/// crate is built without the `parallel` feature.
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled, Ordering::Relaxed);
}

pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::Relaxed)
}

/// `(0..len).map(f).collect()`, possibly in parallel. Order is preserved.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    (0..len).map(f).collect()
}

/// Deterministic chunked sum of `f(i)` for `i in 0..len`.
pub fn sum_complex<F>(len: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    let partial = map_indexed(chunks, |c| {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(len);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in start..end {
            acc += f(i);
        }
        acc
    });
    partial.into_iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b)
}

/// Deterministic chunked sum of real values.
pub fn sum_real<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    let partial = map_indexed(chunks, |c| {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(len);
        (start..end).map(&f).sum::<f64>()
    });
    partial.into_iter().sum()
}
