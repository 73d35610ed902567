// SPDX-License-Identifier: Apache-2.0
//! Thread setup. Parallel sections only map and collect, so results do not
//! depend on the thread count; dense factorizations run sequentially for the
//! same reason.

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "ANDERSONLAB_THREADS";

/// Reads `ANDERSONLAB_THREADS`; unset or empty means "let rayon decide".
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// Configures the global pool once. Returns the thread count in effect.
pub fn init(threads: Option<usize>) -> usize {
    faer::set_global_parallelism(faer::Par::Seq);
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    // A second call keeps the first pool.
    let _ = b.build_global();
    rayon::current_num_threads()
}
