//! Index-ordered maps over independent work units.
//!
//! Results always come back in index order, so any downstream reduction is
//! independent of scheduling. Without the `parallel` feature every map runs
//! sequentially.

use std::ops::Range;

use crate::error::Result;

/// How independent units are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this build can actually run units concurrently.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `f(i)` for every `i` in `range`, in index order.
pub fn map_indices<T, F>(exec: Execution, range: Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return range.into_par_iter().map(f).collect();
    }
    let _ = exec;
    range.map(f).collect()
}

/// Like [`map_indices`], failing with the error of the lowest failing index.
pub fn try_map_indices<T, F>(exec: Execution, range: Range<u64>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    map_indices(exec, range, f).into_iter().collect()
}

/// Runs `f` with at most `workers` threads for nested parallel maps.
/// `None` keeps the global pool.
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match workers {
        #[cfg(feature = "parallel")]
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| crate::error::Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn order_is_preserved() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let v = map_indices(exec, 0..1000, |i| i * i);
            assert!(v.iter().enumerate().all(|(i, &x)| x == (i * i) as u64));
        }
    }

    #[test]
    fn lowest_error_wins() {
        let r: Result<Vec<u64>> = try_map_indices(Execution::Parallel, 0..100, |i| {
            if i % 7 == 3 {
                Err(Error::Contract(format!("{i}")))
            } else {
                Ok(i)
            }
        });
        match r {
            Err(Error::Contract(m)) => assert_eq!(m, "3"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pools_of_any_size_agree() {
        let a = with_workers(Some(1), || map_indices(Execution::Parallel, 0..64, |i| i ^ 5)).unwrap();
        let b = with_workers(Some(3), || map_indices(Execution::Parallel, 0..64, |i| i ^ 5)).unwrap();
        assert_eq!(a, b);
    }
}
