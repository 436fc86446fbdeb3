//! Execution mode for the data-parallel loops in the engine.
//!
//! Every hot loop (exact cosine scans, batch embedding, per-document
//! chunking, per-item evaluation) goes through [`map_slice`]. With the
//! `parallel` feature the work is spread across the rayon pool; without it,
//! or with [`Exec::Sequential`], it runs on the calling thread. Both paths
//! produce identical output: the mapping is element-wise and results are
//! collected in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Exec {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

/// Below this many items the rayon split overhead dominates.
#[cfg(feature = "parallel")]
const PAR_THRESHOLD: usize = 64;

/// Maps `f` over `items`, preserving order.
pub fn map_slice<T, U, F>(exec: Exec, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        Exec::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            if items.len() < PAR_THRESHOLD {
                items.iter().map(f).collect()
            } else {
                items.par_iter().map(f).collect()
            }
        }
    }
}
