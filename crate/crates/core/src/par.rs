//! Batch mapping that is data-parallel when the `parallel` feature is on
//! and plain sequential otherwise. All batch-shaped work in the crate
//! (multi-point integration, grid evaluation, seed sweeps) funnels through
//! [`batch_map`] so the feature flag flips one code path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving order.
pub fn batch_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sequential mapping regardless of features; exists so benchmarks can
/// compare the parallel path against a fixed baseline.
pub fn batch_map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_map_preserves_order() {
        let items: Vec<u64> = (0..100).collect();
        let out = batch_map(&items, |x| x * 2);
        let expected: Vec<u64> = (0..100).map(|x| x * 2).collect();
        assert_eq!(out, expected);
        assert_eq!(batch_map_seq(&items, |x| x * 2), expected);
    }
}
