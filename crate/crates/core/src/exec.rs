//! Data-parallel fan-out with a sequential fallback.
//!
//! Every sweep in the crate is written as "evaluate task `k` for `k` in `0..n`,
//! then reduce in index order". Each task derives its randomness from its own
//! index, so the output is identical for [`Execution::Sequential`],
//! [`Execution::Parallel`] and any rayon pool size.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing over task indices. Without the `parallel` feature
    /// this behaves exactly like `Sequential`.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Like [`map`](Self::map) but short-circuits on the first error in index order.
    pub fn try_map<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }

    /// Sums `f(0..n)`. Integer sums are order independent, so this is exact.
    pub fn sum_u64<F>(self, n: usize, f: F) -> u64
    where
        F: Fn(usize) -> u64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (0..n).into_par_iter().map(f).sum();
        }
        (0..n).map(f).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_in_order() {
        let f = |k: usize| (k as f64).sqrt();
        assert_eq!(
            Execution::Sequential.map(1000, f),
            Execution::Parallel.map(1000, f)
        );
        assert_eq!(
            Execution::Sequential.sum_u64(500, |k| k as u64),
            Execution::Parallel.sum_u64(500, |k| k as u64)
        );
    }

    #[test]
    fn try_map_reports_first_error() {
        let r: Result<Vec<usize>, usize> =
            Execution::Parallel.try_map(100, |k| if k % 7 == 3 { Err(k) } else { Ok(k) });
        assert_eq!(r, Err(3));
    }
}
