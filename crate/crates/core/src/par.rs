//! Order-preserving data parallelism that degrades to plain iteration when the
//! `parallel` feature is off (e.g. on wasm).

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Maps each item to a small batch and concatenates the batches in input order.
#[cfg(feature = "parallel")]
pub fn flat_map<T, U, I, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    I: IntoIterator<Item = U>,
    F: Fn(&T) -> I + Sync + Send,
{
    items.par_iter().flat_map_iter(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn flat_map<T, U, I, F>(items: &[T], f: F) -> Vec<U>
where
    I: IntoIterator<Item = U>,
    F: Fn(&T) -> I,
{
    items.iter().flat_map(f).collect()
}
