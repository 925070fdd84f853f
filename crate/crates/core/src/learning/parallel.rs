//! Row-chunked map/reduce whose result does not depend on the thread count:
//! rows are cut into fixed-size chunks, each chunk is folded sequentially and
//! the chunk results are combined by a fixed pairwise tree.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Result, SpnError};

pub(crate) const CHUNK_ROWS: usize = 64;

pub(crate) fn map_reduce<T, M, R>(n_rows: usize, threads: usize, map: M, reduce: R) -> Result<Option<T>>
where
    T: Send,
    M: Fn(Range<usize>) -> Result<T> + Sync,
    R: Fn(T, T) -> T,
{
    let chunks: Vec<Range<usize>> =
        (0..n_rows).step_by(CHUNK_ROWS).map(|s| s..(s + CHUNK_ROWS).min(n_rows)).collect();
    let parts: Vec<Result<T>> = if threads == 1 || chunks.len() < 2 {
        chunks.into_iter().map(&map).collect()
    } else if threads == 0 {
        chunks.into_par_iter().map(&map).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| SpnError::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| chunks.into_par_iter().map(&map).collect())
    };
    let mut level = parts.into_iter().collect::<Result<Vec<T>>>()?;
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => reduce(a, b),
                None => a,
            });
        }
        level = next;
    }
    Ok(level.pop())
}

pub(crate) fn add_into(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}
