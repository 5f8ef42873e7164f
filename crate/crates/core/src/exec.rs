//! Parallel execution policy.
//!
//! Per-vertex and per-face maps always run on the rayon pool and collect in
//! index order, so they are deterministic. Only reductions change behaviour:
//! in deterministic mode (the default) they are plain left-to-right sums.

use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

static DETERMINISTIC: AtomicBool = AtomicBool::new(true);

/// Below this many elements, maps run sequentially.
const PAR_THRESHOLD: usize = 4096;

pub fn set_deterministic(on: bool) {
    DETERMINISTIC.store(on, Ordering::Relaxed);
}

pub fn is_deterministic() -> bool {
    DETERMINISTIC.load(Ordering::Relaxed)
}

/// Applies `SAPFLOW_THREADS` (global pool size) and `SAPFLOW_DETERMINISTIC`
/// (`1` forces ordered reductions, `0` allows parallel ones). Unset
/// variables leave the current policy alone.
pub fn configure_from_env() -> Result<(), String> {
    if let Ok(v) = std::env::var("SAPFLOW_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| format!("SAPFLOW_THREADS must be a positive integer, got {v:?}"))?;
        // A second initialisation in the same process is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Ok(v) = std::env::var("SAPFLOW_DETERMINISTIC") {
        set_deterministic(v.trim() == "1");
    }
    Ok(())
}

/// Sum with the active reduction policy.
pub fn sum(values: &[f64]) -> f64 {
    if is_deterministic() || values.len() < PAR_THRESHOLD {
        values.iter().sum()
    } else {
        values.par_iter().sum()
    }
}

/// `(0..n).map(f).collect()`, in parallel for large `n`.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if n < PAR_THRESHOLD {
        (0..n).map(f).collect()
    } else {
        (0..n).into_par_iter().map(f).collect()
    }
}
