//! Wall-clock harness for sequential and parallel GE.

use std::sync::Arc;
use std::time::Instant;

use anyhow::ensure;

use dmmgen_core::ge::{run_sequential, Evaluator, GeParams};

use crate::executor::run_parallel_ge;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchRow {
    /// `None` for the sequential baseline.
    pub workers: Option<usize>,
    pub units: usize,
    pub reps: usize,
    pub mean_s: f64,
    pub stddev_s: f64,
    /// Sequential mean over this row's mean.
    pub speedup: f64,
}

/// Sample mean and standard deviation.
pub fn mean_stddev(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Times `reps` sequential runs, then `reps` parallel runs per `(workers,
/// units)` pair. Parallel runs must reproduce the sequential log.
pub fn bench(
    evaluator: Arc<Evaluator>,
    params: &GeParams,
    configs: &[(usize, usize)],
    reps: usize,
) -> anyhow::Result<Vec<BenchRow>> {
    ensure!(reps >= 1, "at least one repetition");
    let mut seq_times = Vec::with_capacity(reps);
    let mut reference = None;
    for _ in 0..reps {
        let start = Instant::now();
        let run = run_sequential(&evaluator, params);
        seq_times.push(start.elapsed().as_secs_f64());
        reference.get_or_insert(run);
    }
    let reference = reference.expect("reps >= 1");
    let (seq_mean, seq_sd) = mean_stddev(&seq_times);
    let mut rows = vec![BenchRow { workers: None, units: 1, reps, mean_s: seq_mean, stddev_s: seq_sd, speedup: 1.0 }];
    for &(workers, units) in configs {
        let mut times = Vec::with_capacity(reps);
        for _ in 0..reps {
            let start = Instant::now();
            let run = run_parallel_ge(evaluator.clone(), params, workers, units)?;
            times.push(start.elapsed().as_secs_f64());
            ensure!(run == reference, "parallel run (W={workers}, units={units}) diverged from the sequential run");
        }
        let (mean, sd) = mean_stddev(&times);
        rows.push(BenchRow { workers: Some(workers), units, reps, mean_s: mean, stddev_s: sd, speedup: seq_mean / mean });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_statistics() {
        let (m, s) = mean_stddev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_stddev(&[3.0]), (3.0, 0.0));
    }
}
