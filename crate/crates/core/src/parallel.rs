//! Row-parallel helpers. With the `parallel` feature the work is spread over
//! rayon's pool, otherwise everything runs on the calling thread. Each output
//! chunk is produced by exactly one closure call, so results are identical in
//! both modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many output elements the rayon overhead dominates.
const MIN_PARALLEL_LEN: usize = 4096;

/// Fill `out` one row (`row_len` elements) at a time.
pub fn for_each_row<F>(out: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if row_len == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    {
        if out.len() >= MIN_PARALLEL_LEN {
            out.par_chunks_mut(row_len)
                .enumerate()
                .for_each(|(i, row)| f(i, row));
            return;
        }
    }
    for_each_row_sequential(out, row_len, f);
}

pub fn for_each_row_sequential<F>(out: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]),
{
    if row_len == 0 {
        return;
    }
    out.chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

/// Map `0..n` to a vector, in parallel when enabled. Output order is by index.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Like [`map_indices`] but runs at most `jobs` closures at once.
pub fn map_indices_bounded<T, F>(n: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if jobs > 1 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                return pool.install(|| (0..n).into_par_iter().map(&f).collect());
            }
        }
    }
    let _ = jobs;
    (0..n).map(f).collect()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
