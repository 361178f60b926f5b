//! Execution policy for the data-parallel loops.
//!
//! Every parallel map in the crate goes through [`Exec::map`], which keeps
//! output order identical to input order. Reductions are then performed
//! sequentially over the ordered results, so numerical output does not
//! depend on the number of worker threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Exec {
    Sequential,
    /// Uses the rayon global pool; identical to `Sequential` when the
    /// `parallel` feature is disabled.
    #[default]
    Parallel,
}

impl Exec {
    /// `true` when this policy actually fans out to worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    pub fn map_indexed<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}
