//! Instance-level data parallelism with a sequential fallback.
//!
//! Every helper returns results in input order, so output never depends on
//! the mode or on thread scheduling. Without the `parallel` feature,
//! [`ExecMode::Parallel`] runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    /// The mode that will actually run, given compiled features.
    pub fn effective(self) -> ExecMode {
        if cfg!(feature = "parallel") {
            self
        } else {
            ExecMode::Sequential
        }
    }
}

impl std::str::FromStr for ExecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sequential" | "seq" => Ok(ExecMode::Sequential),
            "parallel" | "par" => Ok(ExecMode::Parallel),
            other => Err(format!("unknown exec mode `{other}`")),
        }
    }
}

/// `items.iter().map(f)` collected in order, possibly across threads.
pub fn map_ordered<T, R, F>(mode: ExecMode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match mode.effective() {
        ExecMode::Sequential => items.iter().map(f).collect(),
        ExecMode::Parallel => parallel_map(items, f),
    }
}

/// Like [`map_ordered`] but capped at `max_concurrency` workers; a cap of 1
/// always runs on the calling thread.
pub fn map_bounded<T, R, F>(mode: ExecMode, max_concurrency: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if max_concurrency <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match mode.effective() {
        ExecMode::Sequential => items.iter().map(f).collect(),
        ExecMode::Parallel => bounded_map(max_concurrency, items, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(items: &[T], f: F) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(items: &[T], f: F) -> Vec<R> {
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
fn bounded_map<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(cap: usize, items: &[T], f: F) -> Vec<R> {
    use rayon::prelude::*;
    let chunk = items.len().div_ceil(cap);
    items.par_chunks(chunk).flat_map_iter(|c| c.iter().map(&f).collect::<Vec<_>>()).collect()
}

#[cfg(not(feature = "parallel"))]
fn bounded_map<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(_cap: usize, items: &[T], f: F) -> Vec<R> {
    items.iter().map(f).collect()
}
