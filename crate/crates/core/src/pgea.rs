//! Synchronous master-worker GE on the DEVS kernel.
//!
//! The master owns the [`GeState`]. When active it sorts the individuals that
//! still need a simulation by load estimate and deals them round-robin to
//! the workers, then waits until every batch has come back before it breeds
//! the next generation. Selection and variation only happen on the master,
//! so for a given seed the search is the sequential one whatever the number
//! of workers.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::devs::{coordinate, AtomicModel, Coupling, DevsError, EventLog, Executor, Time};
use crate::ge::{Evaluator, GeParams, GeRun, GeState, Individual};

/// Individuals tagged with their population index.
pub type Batch = Vec<(usize, Individual)>;

/// Sorts by `sim_estimate` descending (stable) and deals item `i` to batch
/// `i mod w`.
pub fn balance<T>(items: Vec<T>, w: usize, estimate: impl Fn(&T) -> usize) -> Vec<Vec<T>> {
    assert!(w >= 1, "at least one worker");
    let mut items = items;
    items.sort_by_key(|x| core::cmp::Reverse(estimate(x)));
    let mut batches: Vec<Vec<T>> = (0..w).map(|_| Vec::new()).collect();
    for (i, x) in items.into_iter().enumerate() {
        batches[i % w].push(x);
    }
    batches
}

const ACTIVE: &str = "active";
const PASSIVE: &str = "passive";

pub struct Master {
    pub state: GeState,
    evaluator: Arc<Evaluator>,
    workers: usize,
    outstanding: usize,
    sigma: Time,
}

impl Master {
    fn new(params: GeParams, evaluator: Arc<Evaluator>, workers: usize) -> Self {
        let mut state = GeState::new(params);
        state.prepare(&evaluator);
        Self { state, evaluator, workers, outstanding: 0, sigma: 0.0 }
    }

    fn batches(&self) -> Vec<Batch> {
        let pending: Batch = self
            .state
            .population
            .iter()
            .enumerate()
            .filter(|(_, ind)| ind.needs_simulation())
            .map(|(i, ind)| (i, ind.clone()))
            .collect();
        balance(pending, self.workers, |(_, ind)| ind.sim_estimate)
    }

    /// All results are in: log, breed, and go active again if not done.
    fn complete(&mut self) {
        if self.state.finish_generation() {
            self.state.prepare(&self.evaluator);
            self.sigma = 0.0;
        } else {
            self.sigma = Time::INFINITY;
        }
    }
}

pub struct Worker {
    evaluator: Arc<Evaluator>,
    dmms: Batch,
    sigma: Time,
}

impl Worker {
    fn evaluate(&mut self) {
        for (_, ind) in &mut self.dmms {
            self.evaluator.evaluate(ind);
        }
    }
}

pub enum PgeaNode {
    Master(Box<Master>),
    Worker(Worker),
}

impl AtomicModel for PgeaNode {
    type Message = Batch;

    fn name(&self) -> String {
        match self {
            PgeaNode::Master(_) => String::from("master"),
            PgeaNode::Worker(_) => String::from("worker"),
        }
    }

    fn phase(&self) -> &str {
        if self.sigma() == 0.0 {
            ACTIVE
        } else {
            PASSIVE
        }
    }

    fn sigma(&self) -> Time {
        match self {
            PgeaNode::Master(m) => m.sigma,
            PgeaNode::Worker(w) => w.sigma,
        }
    }

    /// The master has `oW_j` outputs and `iW_j` inputs per worker; a worker
    /// has one `in` and one `out`.
    fn input_ports(&self) -> usize {
        match self {
            PgeaNode::Master(m) => m.workers,
            PgeaNode::Worker(_) => 1,
        }
    }

    fn output_ports(&self) -> usize {
        self.input_ports()
    }

    fn output(&self) -> Vec<(usize, Batch)> {
        match self {
            PgeaNode::Master(m) => m
                .batches()
                .into_iter()
                .enumerate()
                .filter(|(_, b)| !b.is_empty())
                .collect(),
            PgeaNode::Worker(w) => alloc::vec![(0, w.dmms.clone())],
        }
    }

    fn delta_int(&mut self) {
        match self {
            PgeaNode::Master(m) => {
                m.outstanding = m.batches().iter().filter(|b| !b.is_empty()).count();
                m.sigma = Time::INFINITY;
                if m.outstanding == 0 {
                    m.complete();
                }
            }
            PgeaNode::Worker(w) => {
                w.dmms.clear();
                w.sigma = Time::INFINITY;
            }
        }
    }

    fn delta_ext(&mut self, _elapsed: Time, inputs: Vec<(usize, Batch)>) {
        match self {
            PgeaNode::Master(m) => {
                for (_, batch) in inputs {
                    for (i, ind) in batch {
                        m.state.population[i] = ind;
                    }
                    m.outstanding = m.outstanding.saturating_sub(1);
                }
                if m.outstanding == 0 {
                    m.complete();
                }
            }
            PgeaNode::Worker(w) => {
                let batch: Batch = inputs.into_iter().flat_map(|(_, b)| b).collect();
                if batch.is_empty() {
                    return;
                }
                w.dmms = batch;
                w.evaluate();
                w.sigma = 0.0;
            }
        }
    }
}

/// Port names as written in topology files.
pub fn port_name(node: &PgeaNode, output: bool, port: usize) -> String {
    match (node, output) {
        (PgeaNode::Master(_), true) => format!("oW_{}", port + 1),
        (PgeaNode::Master(_), false) => format!("iW_{}", port + 1),
        (PgeaNode::Worker(_), true) => String::from("out"),
        (PgeaNode::Worker(_), false) => String::from("in"),
    }
}

/// One master (model 0) and `w` workers (models 1..=w), wired
/// `oW_j -> in_j` and `out_j -> iW_j`.
pub fn build_topology(
    w: usize,
    params: GeParams,
    evaluator: Arc<Evaluator>,
) -> Result<(Vec<PgeaNode>, Coupling), TopologyError> {
    if w < 1 {
        return Err(TopologyError::NoWorkers);
    }
    if params.population_size < w {
        return Err(TopologyError::TooManyWorkers { workers: w, population: params.population_size });
    }
    let mut models = Vec::with_capacity(w + 1);
    models.push(PgeaNode::Master(Box::new(Master::new(params, evaluator.clone(), w))));
    let mut coupling = Coupling::default();
    for j in 0..w {
        models.push(PgeaNode::Worker(Worker {
            evaluator: evaluator.clone(),
            dmms: Vec::new(),
            sigma: Time::INFINITY,
        }));
        coupling.connections.push(((0, j), (j + 1, 0)));
        coupling.connections.push(((j + 1, 0), (0, j)));
    }
    Ok((models, coupling))
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("at least one worker is needed")]
    NoWorkers,
    #[error("{workers} workers for a population of {population}")]
    TooManyWorkers { workers: usize, population: usize },
    #[error("model 0 must be the only master")]
    MasterFirst,
    #[error(transparent)]
    Devs(#[from] DevsError),
}

/// Runs the master-worker model to completion; returns the run and the
/// DEVS event log.
pub fn run_parallel_ge_logged(
    evaluator: Arc<Evaluator>,
    params: &GeParams,
    workers: usize,
    executor: &dyn Executor,
) -> Result<(GeRun, EventLog), TopologyError> {
    let (models, coupling) = build_topology(workers, *params, evaluator)?;
    run_models(models, &coupling, executor)
}

/// Runs models from [`build_topology`] under a possibly rewired coupling.
/// Every worker output must reach a master input for the run to finish.
pub fn run_models(
    mut models: Vec<PgeaNode>,
    coupling: &Coupling,
    executor: &dyn Executor,
) -> Result<(GeRun, EventLog), TopologyError> {
    let generations = match models.first() {
        Some(PgeaNode::Master(m)) => m.state.params.generations,
        _ => return Err(TopologyError::MasterFirst),
    };
    if models[1..].iter().any(|m| matches!(m, PgeaNode::Master(_))) {
        return Err(TopologyError::MasterFirst);
    }
    // each generation takes at most three steps
    let max_steps = 3 * (generations + 1) + 1;
    let log = coordinate(&mut models, coupling, executor, max_steps)?;
    let PgeaNode::Master(master) = models.swap_remove(0) else {
        unreachable!("model 0 is the master")
    };
    Ok((master.state.into_run(), log))
}

pub fn run_parallel_ge(
    evaluator: Arc<Evaluator>,
    params: &GeParams,
    workers: usize,
    executor: &dyn Executor,
) -> Result<GeRun, TopologyError> {
    run_parallel_ge_logged(evaluator, params, workers, executor).map(|(run, _)| run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devs::{EventKind, Sequential};
    use crate::dmm_space::HwParams;
    use crate::ge::run_sequential;
    use crate::grammar::Grammar;
    use crate::trace::{synth_workload, WorkloadSpec};
    use alloc::vec;

    fn evaluator() -> Arc<Evaluator> {
        let trace = synth_workload(&WorkloadSpec::discrete(vec![24, 40, 256, 1000], 400, 20), 8).unwrap();
        Arc::new(
            Evaluator::new(Arc::new(Grammar::default_dmm()), Arc::new(trace), HwParams::default(), [1.0 / 3.0; 3], 3)
                .unwrap(),
        )
    }

    #[test]
    fn round_robin_example() {
        let batches = balance(vec![5, 4, 3, 2, 2, 1], 2, |x| *x);
        assert_eq!(batches, vec![vec![5, 3, 2], vec![4, 2, 1]]);
        let loads: Vec<usize> = batches.iter().map(|b| b.iter().sum()).collect();
        assert_eq!(loads, vec![10, 7]);
    }

    #[test]
    fn round_robin_spread_is_minimal_among_dealings() {
        // every rotation of the dealing order over the sorted list
        let items = [5usize, 4, 3, 2, 2, 1];
        let best = balance(items.to_vec(), 2, |x| *x);
        let spread = |b: &[Vec<usize>]| b[0].iter().sum::<usize>().abs_diff(b[1].iter().sum());
        for start in 0..2 {
            let mut b = vec![Vec::new(), Vec::new()];
            for (i, x) in items.iter().enumerate() {
                b[(i + start) % 2].push(*x);
            }
            assert!(spread(&best) <= spread(&b));
        }
    }

    #[test]
    fn balance_partitions() {
        let batches = balance((0..60).collect::<Vec<usize>>(), 4, |x| x % 7);
        assert!(batches.iter().all(|b| b.len() == 15));
        let mut all: Vec<usize> = batches.into_iter().flatten().collect();
        all.sort();
        assert_eq!(all, (0..60).collect::<Vec<_>>());
        assert_eq!(balance(vec![3, 1, 2], 1, |x| *x), vec![vec![3, 2, 1]]);
    }

    #[test]
    fn topology_shape() {
        let ev = evaluator();
        let params = GeParams { population_size: 8, generations: 0, ..GeParams::default() };
        for (w, models, couplings) in [(4, 5, 8), (1, 2, 2)] {
            let (m, c) = build_topology(w, params, ev.clone()).unwrap();
            assert_eq!((m.len(), c.connections.len()), (models, couplings));
            c.validate(&m).unwrap();
            assert_eq!(port_name(&m[0], true, 0), "oW_1");
        }
        assert!(matches!(build_topology(0, params, ev.clone()), Err(TopologyError::NoWorkers)));
        assert!(matches!(build_topology(9, params, ev), Err(TopologyError::TooManyWorkers { .. })));
    }

    #[test]
    fn matches_sequential() {
        let ev = evaluator();
        let params = GeParams { population_size: 10, generations: 4, rng_seed: 11, ..GeParams::default() };
        let seq = run_sequential(&ev, &params);
        for w in [1, 2, 3] {
            let par = run_parallel_ge(ev.clone(), &params, w, &Sequential).unwrap();
            assert_eq!(par, seq, "W = {w}");
        }
    }

    #[test]
    fn one_generation_event_order() {
        let ev = evaluator();
        let params = GeParams { population_size: 10, generations: 0, rng_seed: 1, ..GeParams::default() };
        let (_, log) = run_parallel_ge_logged(ev, &params, 1, &Sequential).unwrap();
        let seq: Vec<(usize, EventKind)> = log.entries.iter().map(|e| (e.model, e.kind)).collect();
        use EventKind::*;
        assert_eq!(seq, vec![(0, Output), (0, Internal), (1, External), (1, Output), (1, Internal), (0, External)]);
    }

    #[test]
    fn worker_ignores_empty_input() {
        let ev = evaluator();
        let mut w = PgeaNode::Worker(Worker { evaluator: ev, dmms: Vec::new(), sigma: Time::INFINITY });
        w.delta_ext(0.0, vec![(0, Vec::new())]);
        assert_eq!(w.phase(), "passive");
    }
}
