//! Data-parallel driving loops with a sequential fallback.
//!
//! With the `parallel` feature (default) these fan out over rayon; without
//! it they degrade to plain loops. Reductions are order-insensitive or
//! first-in-index-order, so results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Smallest index in `0..count` satisfying `check`, or the first error.
pub fn find_min_index<E: Send>(
    count: u64,
    check: impl Fn(u64) -> Result<bool, E> + Sync + Send,
) -> Result<Option<u64>, E> {
    #[cfg(feature = "parallel")]
    {
        (0..count)
            .into_par_iter()
            .map(|i| check(i).map(|hit| if hit { Some(i) } else { None }))
            .find_map_first(|r| r.transpose())
            .transpose()
    }
    #[cfg(not(feature = "parallel"))]
    {
        find_min_index_seq(count, check)
    }
}

/// Sequential reference implementation of [`find_min_index`].
pub fn find_min_index_seq<E>(
    count: u64,
    check: impl Fn(u64) -> Result<bool, E>,
) -> Result<Option<u64>, E> {
    for i in 0..count {
        if check(i)? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Maps `0..count` collecting results, failing on the first error.
pub fn try_map_range<T: Send, E: Send>(
    count: u64,
    f: impl Fn(u64) -> Result<T, E> + Sync + Send,
) -> Result<Vec<T>, E> {
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Sequential reference implementation of [`try_map_range`].
pub fn try_map_range_seq<T, E>(
    count: u64,
    f: impl Fn(u64) -> Result<T, E>,
) -> Result<Vec<T>, E> {
    (0..count).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_index_agrees_with_seq() {
        let check = |i: u64| -> Result<bool, ()> { Ok(i >= 17 && i % 3 == 0) };
        assert_eq!(find_min_index(100, check), Ok(Some(18)));
        assert_eq!(find_min_index_seq(100, check), Ok(Some(18)));
        assert_eq!(find_min_index(10, check), Ok(None));
    }

    #[test]
    fn errors_propagate() {
        let check = |i: u64| -> Result<bool, u64> {
            if i == 5 {
                Err(5)
            } else {
                Ok(false)
            }
        };
        assert_eq!(find_min_index(10, check), Err(5));
    }
}
