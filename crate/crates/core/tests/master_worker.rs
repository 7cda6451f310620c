use std::sync::Arc;

use dmmgen_core::devs::Sequential;
use dmmgen_core::ge::{run_sequential, Evaluator, GeParams};
use dmmgen_core::grammar::{generate_grammar, Grammar};
use dmmgen_core::pgea::run_parallel_ge;
use dmmgen_core::trace::{synth_workload, WorkloadSpec};
use dmmgen_core::HwParams;

fn evaluator(seed: u64) -> Arc<Evaluator> {
    let trace = synth_workload(&WorkloadSpec::uniform(8, 3000, 600, 40), seed).unwrap();
    let hw = HwParams::default();
    let grammar = Grammar::parse(&generate_grammar(trace.stats(), &hw)).unwrap();
    Arc::new(Evaluator::new(Arc::new(grammar), Arc::new(trace), hw, [0.2, 0.6, 0.2], 3).unwrap())
}

#[test]
fn any_worker_count_follows_the_sequential_search() {
    let ev = evaluator(11);
    for seed in [5, 6] {
        let params = GeParams { population_size: 20, generations: 8, rng_seed: seed, ..GeParams::default() };
        let seq = run_sequential(&ev, &params);
        for w in [1, 3, 7, 20] {
            let par = run_parallel_ge(ev.clone(), &params, w, &Sequential).unwrap();
            assert_eq!(par, seq, "seed {seed}, {w} workers");
        }
    }
}

#[test]
fn more_workers_than_individuals_is_rejected() {
    let params = GeParams { population_size: 4, generations: 1, ..GeParams::default() };
    assert!(run_parallel_ge(evaluator(1), &params, 5, &Sequential).is_err());
}
