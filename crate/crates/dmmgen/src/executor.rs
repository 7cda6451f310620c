//! Thread-pool executor for the DEVS coordinator.

use std::sync::Arc;

use dmmgen_core::devs::{Executor, Task};
use dmmgen_core::ge::{Evaluator, GeParams, GeRun};
use dmmgen_core::pgea::{self, TopologyError};

/// Runs each batch of transitions on a dedicated rayon pool of `units`
/// threads.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    pub fn new(units: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(units.max(1))
            .thread_name(|i| format!("dmmgen-unit-{i}"))
            .build()?;
        Ok(Self { pool })
    }

    pub fn units(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn run_all<'a>(&self, tasks: Vec<Task<'a>>) {
        if tasks.len() <= 1 || self.units() == 1 {
            tasks.into_iter().for_each(|t| t());
            return;
        }
        self.pool.scope(|s| {
            for task in tasks {
                s.spawn(move |_| task());
            }
        });
    }
}

/// Master-worker GE with `workers` worker models whose transitions run on
/// `units` threads.
pub fn run_parallel_ge(
    evaluator: Arc<Evaluator>,
    params: &GeParams,
    workers: usize,
    units: usize,
) -> anyhow::Result<GeRun> {
    let executor = RayonExecutor::new(units)?;
    let run = pgea::run_parallel_ge(evaluator, params, workers, &executor).map_err(|e: TopologyError| anyhow::anyhow!(e))?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn runs_every_task() {
        let exec = RayonExecutor::new(3).unwrap();
        let hits = AtomicUsize::new(0);
        let tasks: Vec<Task<'_>> = (0..10).map(|_| Box::new(|| { hits.fetch_add(1, Ordering::SeqCst); }) as Task<'_>).collect();
        exec.run_all(tasks);
        assert_eq!(hits.load(Ordering::SeqCst), 10);
    }
}
