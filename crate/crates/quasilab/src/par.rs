//! Indexed map over work items, parallel when the `parallel` feature is
//! enabled. Results come back in index order regardless of scheduling, which
//! keeps every aggregate deterministic. `map_indexed_seq` is always
//! sequential so benchmarks can compare the two drivers in one binary.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to 0..n, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Apply `f` to 0..n, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential reference driver with the same contract as `map_indexed`.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let f = |i: usize| i * i + 1;
        assert_eq!(map_indexed(100, f), map_indexed_seq(100, f));
    }
}
