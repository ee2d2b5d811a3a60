//! Data-parallel execution switch.
//!
//! Every bulk loop in the crate (gradient chunks, grid scans, tail-moment
//! sweeps) goes through [`Parallelism`]. Work is always cut into the same
//! chunks and partial results are combined in chunk order, so output is
//! bit-identical whichever mode runs it. Without the `parallel` feature the
//! `Rayon` mode silently runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Sequential,
    Rayon,
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Rayon
        } else {
            Parallelism::Sequential
        }
    }
}

impl Parallelism {
    /// Whether this mode actually fans out to a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Rayon
    }

    /// `f` applied to each item, results in input order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// `f` applied to consecutive chunks of `chunk` items, results in chunk order.
    pub fn map_chunks<T, R, F>(self, items: &[T], chunk: usize, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &[T]) -> R + Sync + Send,
    {
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_chunks(chunk).enumerate().map(|(i, c)| f(i * chunk, c)).collect();
        }
        items.chunks(chunk).enumerate().map(|(i, c)| f(i * chunk, c)).collect()
    }

    /// `f(i)` for i in 0..n, results in index order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_bitwise() {
        let xs: Vec<f64> = (0..10_007).map(|i| (i as f64 * 0.37).sin()).collect();
        let sum = |mode: Parallelism| -> f64 {
            mode.map_chunks(&xs, 512, |_, c| c.iter().sum::<f64>()).into_iter().sum()
        };
        assert_eq!(sum(Parallelism::Sequential).to_bits(), sum(Parallelism::Rayon).to_bits());
        assert_eq!(
            Parallelism::Sequential.map_range(100, |i| i * i),
            Parallelism::Rayon.map_range(100, |i| i * i)
        );
    }

    #[test]
    fn chunk_offsets() {
        let xs = [1u8; 10];
        let offs = Parallelism::Sequential.map_chunks(&xs, 4, |o, c| (o, c.len()));
        assert_eq!(offs, vec![(0, 4), (4, 4), (8, 2)]);
    }
}
