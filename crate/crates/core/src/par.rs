//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over the rayon pool;
//! without it every helper runs on the calling thread. Both paths produce
//! identical results: work items are indexed and collected in index order.

/// Execution strategy for the data-parallel kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled, otherwise
    /// falls back to [`Parallelism::Sequential`].
    Parallel,
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        }
    }
}

/// Evaluates `f(0..len)` and returns the results in index order.
pub(crate) fn map_indexed<T, F>(len: usize, mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel => {
            use rayon::prelude::*;
            (0..len).into_par_iter().map(f).collect()
        }
        _ => (0..len).map(f).collect(),
    }
}

/// Fixed-shape pairwise reduction; the tree depends only on `items.len()`.
pub(crate) fn pairwise_reduce<T, F>(mut items: Vec<T>, combine: &F) -> Option<T>
where
    F: Fn(T, T) -> T,
{
    if items.len() <= 1 {
        return items.pop();
    }
    let right = items.split_off(items.len() / 2);
    let l = pairwise_reduce(items, combine)?;
    let r = pairwise_reduce(right, combine)?;
    Some(combine(l, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_in_both_modes() {
        let a = map_indexed(100, Parallelism::Sequential, |i| i * i);
        let b = map_indexed(100, Parallelism::Parallel, |i| i * i);
        assert_eq!(a, b);
        assert_eq!(a[7], 49);
    }

    #[test]
    fn pairwise_reduce_sums() {
        let v: Vec<u64> = (1..=10).collect();
        assert_eq!(pairwise_reduce(v, &|a, b| a + b), Some(55));
        assert_eq!(pairwise_reduce(Vec::<u64>::new(), &|a, b| a + b), None);
    }
}
