//! Bounded worker pool. `RICCI_LAB_THREADS` caps its size.

use std::sync::OnceLock;

use rayon::{ThreadPool, ThreadPoolBuilder};

pub const THREADS_VAR: &str = "RICCI_LAB_THREADS";

/// Cap read from the environment; unset, empty or unparsable values mean no cap.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_VAR).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0)
}

fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let available = std::thread::available_parallelism().map_or(1, |n| n.get());
        let threads = thread_cap().map_or(available, |cap| cap.min(available.max(1)));
        ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("ricci-lab-{i}"))
            .build()
            .expect("worker pool starts")
    })
}

/// Runs `f` inside the pool so that nested parallel iterators share it.
pub fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    pool().install(f)
}

pub fn pool_size() -> usize {
    pool().current_num_threads()
}
