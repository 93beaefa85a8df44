//! Point-parallel execution. Rayon backs the `parallel` feature; without it, and whenever
//! the sequential mode is selected at runtime, maps run on the calling thread.
//! Results are always returned in input order, so reports do not depend on scheduling.

use std::sync::atomic::{AtomicU8, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Parallel,
    Sequential,
}

static MODE: AtomicU8 = AtomicU8::new(0);

/// Selects the execution mode used by all point suites in this process.
pub fn set_mode(mode: ExecMode) {
    MODE.store(if mode == ExecMode::Sequential { 1 } else { 0 }, Ordering::Relaxed);
}

pub fn mode() -> ExecMode {
    if cfg!(feature = "parallel") && MODE.load(Ordering::Relaxed) == 0 {
        ExecMode::Parallel
    } else {
        ExecMode::Sequential
    }
}

/// Order-preserving map over a slice.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode() == ExecMode::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
    }
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_in_both_modes() {
        let xs: Vec<u64> = (0..1000).collect();
        let par = map(&xs, |x| x * x);
        set_mode(ExecMode::Sequential);
        let seq = map(&xs, |x| x * x);
        set_mode(ExecMode::Parallel);
        assert_eq!(par, seq);
        assert_eq!(par[999], 998001);
    }
}
