//! Block-level data parallelism.
//!
//! Work that maps independently over blocks or experiment cells goes through
//! [`Execution::map`]. With the `parallel` feature the rayon pool is used;
//! without it every request runs sequentially. Results always come back in
//! input order, so the choice never changes output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect(),
            _ => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = Execution::Sequential.map(&items, |i, &x| x * x + i as u64);
        let par = Execution::Parallel.map(&items, |i, &x| x * x + i as u64);
        assert_eq!(seq, par);
        assert_eq!(seq[10], 110);
    }
}
