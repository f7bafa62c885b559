//! Order-preserving data-parallel map.
//!
//! With the `parallel` feature, work is spread over rayon; without it every
//! call runs sequentially. Either way the output order matches the input.

/// How many workers a batch computation may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    /// Run on the calling thread.
    Sequential,
    /// Use rayon's global pool.
    #[default]
    Auto,
    /// Use a dedicated pool with this many threads. `Threads(1)` is sequential.
    Threads(usize),
}

impl Parallelism {
    pub fn from_threads(threads: usize) -> Self {
        match threads {
            0 => Parallelism::Auto,
            1 => Parallelism::Sequential,
            n => Parallelism::Threads(n),
        }
    }
}

/// Map `f` over `items`, returning results in input order.
pub fn map_ordered<T, R, F>(items: &[T], par: Parallelism, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match par {
            Parallelism::Sequential | Parallelism::Threads(1) | Parallelism::Threads(0) => {
                items.iter().map(f).collect()
            }
            Parallelism::Auto => items.par_iter().map(f).collect(),
            Parallelism::Threads(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                Err(e) => {
                    log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                    items.par_iter().map(f).collect()
                }
            },
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = par;
        items.iter().map(f).collect()
    }
}
