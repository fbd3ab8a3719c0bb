//! Ordered parallel evaluation of independent tasks.
//!
//! Results are collected by task index, so any reduction done afterwards in
//! index order gives the same bits for every worker count.

use rayon::prelude::*;

/// Evaluates `task(0..count)` in parallel and returns results in index order.
/// `workers = None` uses the global pool.
pub fn run_indexed<T, F>(count: usize, workers: Option<usize>, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let go = || (0..count).into_par_iter().map(&task).collect::<Vec<T>>();
    match workers {
        None => go(),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build() {
            Ok(pool) => pool.install(go),
            Err(_) => go(),
        },
    }
}

/// Running per-coordinate mean and variance, merged in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    pub count: usize,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            sum: vec![0.0; dim],
            sum_sq: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, xs: &[f64]) {
        debug_assert_eq!(xs.len(), self.sum.len());
        self.count += 1;
        for ((s, q), x) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(xs) {
            *s += x;
            *q += x * x;
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.count as f64).collect()
    }

    /// Standard error of each coordinate mean.
    pub fn std_error(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(s, q)| {
                let m = s / n;
                let var = ((q / n - m * m) * n / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            })
            .collect()
    }
}
