//! Thread-count control. Every parallel section in the crate produces results
//! that do not depend on the number of worker threads; capping the count only
//! changes speed.

/// Environment variable read when no explicit thread count is given.
pub const THREADS_ENV: &str = "CORRNET_THREADS";

/// Thread cap from `CORRNET_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `f` on a dedicated pool of `threads` workers, falling back to
/// `CORRNET_THREADS` and then to the global rayon pool.
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match threads.or_else(threads_from_env) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
