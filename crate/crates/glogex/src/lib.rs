//! File formats, parallel pipeline stages and the command-line front end
//! around [`glogex_core`].

pub mod config;
mod error;
pub mod formats;
pub mod fsio;
pub mod pipeline;
pub mod plot;
pub mod report;
pub mod stages;

pub use config::{MetricOptions, RunConfig};
pub use error::{Error, Result};
pub use stages::{Runner, StageName};

/// `glogex <version>`, recorded in every output directory.
pub fn version_string() -> String {
    format!("glogex {}", env!("CARGO_PKG_VERSION"))
}

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "GLOGEX_THREADS";

/// Worker cap from [`THREADS_ENV`]; `None` when unset.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Runs `f` on a pool sized by [`thread_cap`] (all cores when unset).
pub fn with_pool<T: Send>(f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(f)
}
