#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dmmgen_core::dmm_space::*;
use dmmgen_core::ge::{decode, Genotype};
use dmmgen_core::grammar::{generate_grammar, Grammar};
use dmmgen_core::simulator::{simulate, Heap, Owner};
use dmmgen_core::trace::{synth_workload, EventKind, Trace, WorkloadSpec};

pub fn small_trace(rng: &mut ChaCha8Rng) -> Trace {
    let events = 2 * rng.gen_range(1..=40);
    let live_cap = rng.gen_range(1..=12);
    let spec = if rng.gen_bool(0.5) {
        let n = rng.gen_range(1..=5);
        WorkloadSpec::discrete((0..n).map(|_| rng.gen_range(1..=600)).collect(), events, live_cap)
    } else {
        WorkloadSpec::uniform(1, rng.gen_range(1..=2000), events, live_cap)
    };
    synth_workload(&spec, rng.gen()).unwrap()
}

fn sizes(rng: &mut ChaCha8Rng) -> BlockSizes {
    match rng.gen_range(0..3) {
        0 => BlockSizes::One(rng.gen_range(1..=1024)),
        1 => {
            let min = rng.gen_range(0..512);
            BlockSizes::Range { min, max: min + rng.gen_range(1..=2048) }
        }
        _ => BlockSizes::ANY,
    }
}

fn random_adm(rng: &mut ChaCha8Rng) -> AdmConfig {
    let ds = if rng.gen_bool(0.5) { DataStructure::SinglyLinkedList } else { DataStructure::DoublyLinkedList };
    let policy = [AllocationPolicy::FirstFit, AllocationPolicy::BestFit, AllocationPolicy::ExactFit][rng.gen_range(0..3)];
    let tags = [BlockTags::None, BlockTags::HeaderSize, BlockTags::HeaderSizeStatus][rng.gen_range(0..3)];
    let selector = sizes(rng);
    let mut adm = AdmConfig::fixed(ds, policy, tags, selector);
    if rng.gen_bool(0.5) {
        let manager = [FlexibleManager::SplitOnly, FlexibleManager::CoalesceOnly, FlexibleManager::SplitAndCoalesce]
            [rng.gen_range(0..3)];
        let min_split = rng.gen_range(13..=128);
        adm = adm.with_flexible(manager, min_split, min_split + rng.gen_range(0..=4096));
    } else if rng.gen_bool(0.3) {
        adm.migration = sizes(rng);
    }
    adm
}

/// A valid DMM drawn from the baselines, hand-assembled chains, and decoded
/// random genotypes.
pub fn random_dmm(rng: &mut ChaCha8Rng, trace: &Trace) -> DmmConfig {
    loop {
        let dmm = match rng.gen_range(0..5) {
            0 => kingsley_config(rng.gen_range(3..=14)),
            1 => lea_config(),
            2 | 3 => DmmConfig {
                adms: (0..rng.gen_range(1..=4)).map(|_| random_adm(rng)).collect(),
                backstop: OsBackstop { heap_limit: u64::MAX, chunk_granularity: [1, 8, 16][rng.gen_range(0..3)] },
            },
            _ => {
                let g = Grammar::parse(&generate_grammar(trace.stats(), &HwParams::default())).unwrap();
                let codons = (0..rng.gen_range(6..60)).map(|_| rng.gen()).collect();
                match decode(&Genotype::new(codons).unwrap(), &g, 3).dmm() {
                    Some(d) => d.clone(),
                    None => continue,
                }
            }
        };
        if validate(&dmm).is_empty() {
            return dmm;
        }
    }
}

/// Replays `trace` step by step and checks every heap invariant after each
/// event against an independent live-byte counter.
pub fn check_heap(dmm: &DmmConfig, trace: &Trace, hw: &HwParams) -> Result<(), String> {
    let mut heap = Heap::new(dmm, hw);
    let mut brute: BTreeMap<u64, u64> = BTreeMap::new();
    let mut frontier = 0;
    let mut peak = 0;
    for (i, e) in trace.events().iter().enumerate() {
        let ctx = |what: &str| format!("event {i} ({e:?}) on {dmm}: {what}");
        match e.kind {
            EventKind::Alloc => {
                let reuse = match dmm.route(e.size) {
                    Route::Adm(a) => matches!(dmm.adms[a].block_sizes, BlockSizes::One(_)) && !heap.free_list(a).is_empty(),
                    Route::Backstop => false,
                };
                if heap.malloc(e.object_id, e.size).is_err() {
                    return Err(ctx("unexpected exhaustion"));
                }
                if reuse && heap.frontier() != frontier {
                    return Err(ctx("fixed-size reuse advanced the frontier"));
                }
                brute.insert(e.object_id, e.size);
            }
            EventKind::Free => {
                heap.free(e.object_id);
                brute.remove(&e.object_id);
            }
        }

        let live: u64 = heap.live().map(|(_, b)| b.requested).sum();
        if live != brute.values().sum::<u64>() {
            return Err(ctx("live bytes differ from the replay counter"));
        }
        if heap.frontier() < frontier {
            return Err(ctx("frontier went down"));
        }
        frontier = heap.frontier();
        if heap.peak_mem_used() < peak || heap.peak_mem_used() < heap.mem_used() {
            return Err(ctx("peak is not a running maximum"));
        }
        peak = heap.peak_mem_used();

        let mut extents: Vec<(u64, u64)> = heap.live().map(|(_, b)| (b.block.addr, b.block.end())).collect();
        for a in 0..dmm.adms.len() {
            extents.extend(heap.free_list(a).iter().map(|b| (b.addr, b.end())));
        }
        let held: u64 = extents.iter().map(|(s, e)| e - s).sum();
        if held != heap.mem_used() {
            return Err(ctx("mem_used is not live plus free bytes"));
        }
        extents.sort();
        if extents.windows(2).any(|w| w[0].1 > w[1].0) || extents.last().is_some_and(|l| l.1 > frontier) {
            return Err(ctx("blocks overlap or exceed the frontier"));
        }

        for (a, adm) in dmm.adms.iter().enumerate() {
            if adm.coalesces() {
                let mut free: Vec<_> = heap.free_list(a).iter().collect();
                free.sort();
                let max = adm.coalescing.max_result_size;
                if free.windows(2).any(|w| w[0].end() == w[1].addr && w[0].size + w[1].size <= max) {
                    return Err(ctx("adjacent free blocks left uncoalesced"));
                }
            }
        }
        for (_, b) in heap.live() {
            let Owner::Adm(a) = b.owner else { continue };
            let adm = &dmm.adms[a];
            if adm.splits() && matches!(adm.block_sizes, BlockSizes::Range { .. }) {
                let need = dmm.backstop.round(b.requested + adm.header());
                if b.block.size - need >= adm.splitting.min_result_size {
                    return Err(ctx("unsplit slack"));
                }
            }
        }
    }
    let m = simulate(dmm, trace, hw);
    if m.energy != m.mem_acc as f64 * hw.energy_per_access {
        return Err(format!("energy not proportional on {dmm}"));
    }
    if m.peak_mem_used != peak {
        return Err(format!("simulate and the stepped heap disagree on {dmm}"));
    }
    Ok(())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
