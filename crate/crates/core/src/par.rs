//! Indexed map over `0..n` that runs on rayon when the `parallel` feature is
//! on and sequentially otherwise. Output order is the index order in both
//! cases; each contiguous chunk of indices shares one worker state.

use crate::error::Result;

/// Worker count: `None` lets the pool decide, `Some(1)` forces sequential.
pub type Workers = Option<usize>;

pub fn map_indexed<S, T, I, F>(n: usize, workers: Workers, init: I, f: F) -> Result<Vec<T>>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
    T: Send,
{
    if n == 0 {
        return Ok(Vec::new());
    }
    if workers == Some(1) {
        return Ok(sequential(n, &init, &f));
    }
    parallel(n, workers, &init, &f)
}

fn sequential<S, T>(n: usize, init: &impl Fn() -> S, f: &impl Fn(&mut S, usize) -> T) -> Vec<T> {
    let mut state = init();
    (0..n).map(|i| f(&mut state, i)).collect()
}

#[cfg(feature = "parallel")]
fn parallel<S, T, I, F>(n: usize, workers: Workers, init: &I, f: &F) -> Result<Vec<T>>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
    T: Send,
{
    use rayon::prelude::*;

    let run = || {
        let threads = rayon::current_num_threads().max(1);
        let chunk = n.div_ceil(threads * 4).max(1);
        let chunks: Vec<Vec<T>> = (0..n.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                let mut state = init();
                (c * chunk..((c + 1) * chunk).min(n))
                    .map(|i| f(&mut state, i))
                    .collect()
            })
            .collect();
        chunks.into_iter().flatten().collect()
    };
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map(|pool| pool.install(run))
            .map_err(|e| crate::error::Error::Pool(e.to_string())),
        None => Ok(run()),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel<S, T, I, F>(n: usize, _workers: Workers, init: &I, f: &F) -> Result<Vec<T>>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
    T: Send,
{
    Ok(sequential(n, init, f))
}
