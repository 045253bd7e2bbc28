//! Reproducible Monte Carlo plumbing shared by the diffusion models.
//!
//! Each path draws from its own ChaCha stream keyed by `(seed, path index)`.
//! Paths are grouped in fixed-size chunks, each chunk is reduced
//! sequentially and chunk results are combined in index order, so results do
//! not depend on the number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Paths per reduction chunk.
pub const CHUNK: usize = 1024;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "RECOVERY_LAB_THREADS";

pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sum {
    sum: f64,
    comp: f64,
}

impl Sum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Sum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Running first and second moments of one scalar.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: usize,
    s1: Sum,
    s2: Sum,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.s1.add(x);
        self.s2.add(x * x);
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.s1.merge(&other.s1);
        self.s2.merge(&other.s2);
    }

    pub fn mean(&self) -> f64 {
        self.s1.value() / self.count as f64
    }

    /// Sample variance with the `n − 1` divisor.
    pub fn variance(&self) -> f64 {
        let n = self.count as f64;
        let m = self.mean();
        ((self.s2.value() - n * m * m) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Sum of cross products, for covariances.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CrossMoment {
    s: Sum,
}

impl CrossMoment {
    pub fn push(&mut self, x: f64, y: f64) {
        self.s.add(x * y);
    }

    pub fn merge(&mut self, other: &CrossMoment) {
        self.s.merge(&other.s);
    }

    pub fn value(&self) -> f64 {
        self.s.value()
    }
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `chunk_fn(start, end)` over `[0, n_paths)` in chunks of [`CHUNK`] and
/// returns the chunk results in order.
pub fn run_chunks<T, F>(n_paths: usize, chunk_fn: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync + Send,
{
    let ranges: Vec<(usize, usize)> = (0..n_paths)
        .step_by(CHUNK)
        .map(|s| (s, (s + CHUNK).min(n_paths)))
        .collect();
    let work = || {
        ranges
            .par_iter()
            .map(|&(s, e)| chunk_fn(s, e))
            .collect::<Vec<T>>()
    };
    match thread_cap() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        },
        None => work(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn compensated_sum_keeps_small_terms() {
        let mut s = Sum::default();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: f64 = path_rng(7, 0).random();
        let b: f64 = path_rng(7, 1).random();
        let c: f64 = path_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn moments_of_small_sample() {
        let mut m = Moments::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert_eq!(m.mean(), 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn chunk_order_is_preserved() {
        let out = run_chunks(3000, |s, e| (s, e));
        assert_eq!(out, vec![(0, 1024), (1024, 2048), (2048, 3000)]);
    }
}
