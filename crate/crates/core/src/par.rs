//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper returns results in input order, so serial and parallel runs
//! are interchangeable. Without the `parallel` feature both modes run on the
//! calling thread.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Parallelism {
    Serial,
    #[default]
    Parallel,
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }

    /// Parallel and not already on a worker thread. Nested regions run
    /// serially so lazily initialised caches never wait on themselves.
    fn fan_out(self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self.is_parallel() && rayon::current_thread_index().is_none()
        }
        #[cfg(not(feature = "parallel"))]
        {
            false
        }
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<R, F>(par: Parallelism, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.fan_out() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = par;
    (0..n).map(f).collect()
}

/// `items.iter().map(f).collect()`, possibly in parallel.
pub fn map_slice<T, R, F>(par: Parallelism, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.fan_out() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = par;
    items.iter().map(f).collect()
}

/// Smallest `k < n` with `pred(k)`, scanning in chunks so the parallel mode
/// stops soon after the first hit.
pub fn find_first<F>(par: Parallelism, n: usize, chunk: usize, pred: F) -> Option<usize>
where
    F: Fn(usize) -> bool + Sync + Send,
{
    let chunk = chunk.max(1);
    if !par.fan_out() {
        return (0..n).find(|&k| pred(k));
    }
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let hits = map_range(par, end - start, |k| pred(start + k));
        if let Some(k) = hits.iter().position(|&h| h) {
            return Some(start + k);
        }
        start = end;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        for par in [Parallelism::Serial, Parallelism::Parallel] {
            assert_eq!(map_range(par, 5, |k| k * k), vec![0, 1, 4, 9, 16]);
            assert_eq!(map_slice(par, &[3, 4], |x| x + 1), vec![4, 5]);
            assert_eq!(find_first(par, 100, 7, |k| k > 40 && k % 3 == 0), Some(42));
            assert_eq!(find_first(par, 10, 3, |_| false), None);
        }
    }
}
