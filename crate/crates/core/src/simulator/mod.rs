//! Trace replay in simulation mode.
//!
//! No real memory is touched: the [`Heap`] tracks simulated addresses, the
//! free lists of every ADM and the live objects, and charges the unit costs
//! of [`cost`] for every list operation it models.
//!
//! Memory held by the manager counts as used until it is handed back to the
//! operating system, so `mem_used` is the sum of live and free blocks.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::dmm_space::{AdmConfig, BlockSizes, DmmConfig, HwParams, BACKSTOP_HEADER};
use crate::trace::{EventKind, Trace};

pub mod cost;
mod free_list;

pub use cost::Counters;
pub use free_list::{Block, Fit, FreeList};

/// Who handed out a live block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Owner {
    Adm(usize),
    Backstop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LiveBlock {
    pub block: Block,
    pub requested: u64,
    pub owner: Owner,
}

/// The backstop refused a grant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("heap exhausted: {requested} bytes requested with {in_use} of {limit} in use")]
pub struct Exhausted {
    pub requested: u64,
    pub in_use: u64,
    pub limit: u64,
}

/// Mutable simulated heap for one DMM.
#[derive(Clone, Debug)]
pub struct Heap<'a> {
    dmm: &'a DmmConfig,
    limit: u64,
    lists: Vec<FreeList>,
    live: BTreeMap<u64, LiveBlock>,
    frontier: u64,
    mem_used: u64,
    peak_mem_used: u64,
    counters: Counters,
}

impl<'a> Heap<'a> {
    pub fn new(dmm: &'a DmmConfig, hw: &HwParams) -> Self {
        Self {
            dmm,
            limit: dmm.backstop.heap_limit.min(hw.memory_size),
            lists: dmm.adms.iter().map(|a| FreeList::new(a.data_structure)).collect(),
            live: BTreeMap::new(),
            frontier: 0,
            mem_used: 0,
            peak_mem_used: 0,
            counters: Counters::default(),
        }
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn mem_used(&self) -> u64 {
        self.mem_used
    }

    pub fn peak_mem_used(&self) -> u64 {
        self.peak_mem_used
    }

    /// High-water mark of the simulated address space.
    pub fn frontier(&self) -> u64 {
        self.frontier
    }

    pub fn live(&self) -> impl Iterator<Item = (u64, &LiveBlock)> + '_ {
        self.live.iter().map(|(id, b)| (*id, b))
    }

    pub fn free_list(&self, adm: usize) -> &FreeList {
        &self.lists[adm]
    }

    fn round(&self, bytes: u64) -> u64 {
        self.dmm.backstop.round(bytes)
    }

    fn grant(&mut self, bytes: u64) -> Result<Block, Exhausted> {
        if bytes > self.limit - self.mem_used.min(self.limit) {
            return Err(Exhausted { requested: bytes, in_use: self.mem_used, limit: self.limit });
        }
        self.counters.charge(cost::OS_GRANT);
        let block = Block { addr: self.frontier, size: bytes };
        self.frontier += bytes;
        self.mem_used += bytes;
        self.peak_mem_used = self.peak_mem_used.max(self.mem_used);
        Ok(block)
    }

    /// Serves an allocation of `size` bytes for `object_id`.
    pub fn malloc(&mut self, object_id: u64, size: u64) -> Result<(), Exhausted> {
        let dmm = self.dmm;
        for (i, adm) in dmm.adms.iter().enumerate() {
            if !adm.block_sizes.covers(size) {
                self.counters.charge(cost::FORWARD);
                continue;
            }
            let served = match adm.block_sizes {
                BlockSizes::One(class) => Some(self.take_fixed(i, adm, class)?),
                BlockSizes::Range { .. } => self.take_variable(i, adm, size),
            };
            if let Some(block) = served {
                self.live.insert(object_id, LiveBlock { block, requested: size, owner: Owner::Adm(i) });
                return Ok(());
            }
        }
        let block = self.grant(self.round(size + BACKSTOP_HEADER))?;
        self.live.insert(object_id, LiveBlock { block, requested: size, owner: Owner::Backstop });
        Ok(())
    }

    fn take_fixed(&mut self, i: usize, adm: &AdmConfig, class: u64) -> Result<Block, Exhausted> {
        match self.lists[i].take(adm.allocation_policy, Fit::Class, &mut self.counters) {
            Some(block) => Ok(block),
            None => self.grant(self.round(class + adm.header())),
        }
    }

    fn take_variable(&mut self, i: usize, adm: &AdmConfig, size: u64) -> Option<Block> {
        let need = self.round(size + adm.header());
        let mut block = self.lists[i].take(adm.allocation_policy, Fit::AtLeast(need), &mut self.counters)?;
        let slack = block.size - need;
        if adm.splits() && slack >= adm.splitting.min_result_size {
            self.counters.charge(cost::SPLIT);
            let rest = Block { addr: block.addr + need, size: slack };
            block.size = need;
            let idx = self.lists[i].link(rest);
            if adm.coalesces() {
                self.coalesce(i, adm, idx, false);
            }
        }
        Some(block)
    }

    /// Whether ADM `adm` takes back a freed `block`.
    fn accepts(&self, adm: &AdmConfig, block: Block) -> bool {
        let header = adm.header();
        if block.size <= header {
            return false;
        }
        match adm.block_sizes {
            BlockSizes::One(class) => {
                block.size == self.round(class + header) && adm.migration.covers(class)
            }
            BlockSizes::Range { .. } => adm.migration.covers(block.size - header),
        }
    }

    /// Releases `object_id`. Unknown ids are ignored (a validated trace has none).
    pub fn free(&mut self, object_id: u64) {
        let Some(live) = self.live.remove(&object_id) else {
            return;
        };
        let dmm = self.dmm;
        for (j, adm) in dmm.adms.iter().enumerate() {
            if !self.accepts(adm, live.block) {
                self.counters.charge(cost::FORWARD);
                continue;
            }
            let idx = self.lists[j].push(live.block, &mut self.counters);
            if adm.coalesces() {
                self.coalesce(j, adm, idx, true);
            }
            return;
        }
        self.counters.charge(cost::OS_RELEASE);
        self.mem_used -= live.block.size;
    }

    /// Merges the linked block `idx` with its free address neighbours in the
    /// same list while the result stays within the ADM's coalescing bound.
    fn coalesce(&mut self, j: usize, adm: &AdmConfig, idx: usize, check_left: bool) {
        let max = adm.coalescing.max_result_size;
        let list = &mut self.lists[j];
        let mut block = list.block(idx);
        if check_left {
            self.counters.charge(cost::COALESCE_CHECK);
            if let Some(left) = list.left_of(block.addr) {
                let l = list.block(left);
                if l.size + block.size <= max {
                    self.counters.charge(cost::COALESCE_MERGE);
                    list.unlink(left);
                    block = Block { addr: l.addr, size: l.size + block.size };
                    list.resize(idx, block);
                }
            }
        }
        self.counters.charge(cost::COALESCE_CHECK);
        if let Some(right) = list.right_of(block.end()) {
            let r = list.block(right);
            if r.size + block.size <= max {
                self.counters.charge(cost::COALESCE_MERGE);
                list.unlink(right);
                block.size += r.size;
                list.resize(idx, block);
            }
        }
    }

    pub fn metrics(&self, hw: &HwParams, exhausted: bool) -> SimMetrics {
        SimMetrics {
            ex_time: self.counters.ex_time,
            mem_acc: self.counters.mem_acc,
            peak_mem_used: self.peak_mem_used,
            energy: self.counters.mem_acc as f64 * hw.energy_per_access,
            exhausted,
        }
    }
}

/// Final counters of one simulation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SimMetrics {
    pub ex_time: u64,
    pub mem_acc: u64,
    pub peak_mem_used: u64,
    /// `mem_acc * energy_per_access`, in joules.
    pub energy: f64,
    /// The backstop ran out; counters cover the trace prefix served so far.
    pub exhausted: bool,
}

/// Replays `trace` through `dmm`.
pub fn simulate(dmm: &DmmConfig, trace: &Trace, hw: &HwParams) -> SimMetrics {
    let mut heap = Heap::new(dmm, hw);
    for event in trace.events() {
        match event.kind {
            EventKind::Alloc => {
                if heap.malloc(event.object_id, event.size).is_err() {
                    return heap.metrics(hw, true);
                }
            }
            EventKind::Free => heap.free(event.object_id),
        }
    }
    heap.metrics(hw, false)
}

/// Per-component divisors that make the weighted sum dimensionless.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalizers {
    pub ex_time: f64,
    pub mem: f64,
    pub energy: f64,
}

impl Normalizers {
    /// Uses a baseline's metrics; zero components become 1 so the divisors
    /// stay positive.
    pub fn from_baseline(m: &SimMetrics) -> Self {
        let pos = |x: f64| if x > 0.0 && x.is_finite() { x } else { 1.0 };
        Self {
            ex_time: pos(m.ex_time as f64),
            mem: pos(m.peak_mem_used as f64),
            energy: pos(m.energy),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitnessWeights {
    pub w_time: f64,
    pub w_mem: f64,
    pub w_energy: f64,
    pub normalizers: Normalizers,
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum WeightsError {
    #[error("weights must be finite and non-negative")]
    Negative,
    #[error("weights sum to {0}, expected 1")]
    Sum(f64),
    #[error("normalizers must be positive")]
    Normalizer,
}

impl FitnessWeights {
    pub fn new(w: [f64; 3], normalizers: Normalizers) -> Result<Self, WeightsError> {
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(WeightsError::Negative);
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(WeightsError::Sum(sum));
        }
        let n = normalizers;
        if !(n.ex_time > 0.0 && n.mem > 0.0 && n.energy > 0.0) {
            return Err(WeightsError::Normalizer);
        }
        Ok(Self { w_time: w[0], w_mem: w[1], w_energy: w[2], normalizers })
    }

    /// Equal thirds.
    pub fn balanced(normalizers: Normalizers) -> Self {
        let third = 1.0 / 3.0;
        Self { w_time: third, w_mem: third, w_energy: third, normalizers }
    }
}

/// Weighted, normalized sum; lower is better. Exhausted runs score
/// [`crate::WORST_FITNESS`].
pub fn fitness(m: &SimMetrics, w: &FitnessWeights) -> f64 {
    if m.exhausted {
        return crate::ge::WORST_FITNESS;
    }
    let n = &w.normalizers;
    w.w_time * (m.ex_time as f64 / n.ex_time)
        + w.w_mem * (m.peak_mem_used as f64 / n.mem)
        + w.w_energy * (m.energy / n.energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmm_space::*;
    use crate::trace::TraceEvent;
    use alloc::vec;

    fn trace(events: &[(u64, bool, u64)]) -> Trace {
        Trace::from_events(events.iter().map(|&(object_id, alloc, size)| TraceEvent {
            object_id,
            kind: if alloc { EventKind::Alloc } else { EventKind::Free },
            size,
            address: 0,
        }))
        .unwrap()
    }

    fn one(class: u64, tags: BlockTags, policy: AllocationPolicy) -> AdmConfig {
        AdmConfig::fixed(DataStructure::SinglyLinkedList, policy, tags, BlockSizes::One(class))
    }

    fn chain(adms: Vec<AdmConfig>) -> DmmConfig {
        DmmConfig { adms, backstop: OsBackstop::default() }
    }

    #[test]
    fn head_hit_through_malloc() {
        let dmm = chain(vec![one(32, BlockTags::HeaderSize, AllocationPolicy::FirstFit)]);
        let hw = HwParams::default();
        let mut heap = Heap::new(&dmm, &hw);
        for id in 0..3 {
            heap.malloc(id, 32).unwrap();
        }
        for id in 0..3 {
            heap.free(id);
        }
        assert_eq!(heap.free_list(0).len(), 3);

        let before = heap.counters();
        heap.malloc(10, 20).unwrap();
        let after = heap.counters();
        assert_eq!((after.ex_time - before.ex_time, after.mem_acc - before.mem_acc), (5, 7));

        heap.malloc(11, 32).unwrap();
        let before = heap.counters();
        heap.malloc(12, 32).unwrap();
        let after = heap.counters();
        assert_eq!((after.ex_time - before.ex_time, after.mem_acc - before.mem_acc), (6, 9));
    }

    #[test]
    fn empty_trace_is_free() {
        let m = simulate(&kingsley_config(32), &Trace::default(), &HwParams::default());
        assert_eq!(m, SimMetrics::default());
    }

    #[test]
    fn kingsley_rounding_vs_exact_fit() {
        let t = trace(&[(1, true, 40), (1, false, 0)]);
        let hw = HwParams::default();
        let k = simulate(&kingsley_config(32), &t, &hw);
        assert!(k.peak_mem_used >= 64 + 8);
        assert_eq!(k.peak_mem_used, 72);
        let exact = chain(vec![one(40, BlockTags::HeaderSize, AllocationPolicy::ExactFit)]);
        let e = simulate(&exact, &t, &hw);
        assert_eq!(e.peak_mem_used, 48);
    }

    #[test]
    fn one_class_reuse_keeps_frontier() {
        let dmm = chain(vec![one(64, BlockTags::HeaderSize, AllocationPolicy::FirstFit)]);
        let hw = HwParams::default();
        let mut heap = Heap::new(&dmm, &hw);
        heap.malloc(1, 64).unwrap();
        heap.free(1);
        let frontier = heap.frontier();
        heap.malloc(2, 64).unwrap();
        assert_eq!(heap.frontier(), frontier);
        assert_eq!(heap.mem_used(), 72);
    }

    #[test]
    fn unaccepted_blocks_return_to_os() {
        let mut adm = one(64, BlockTags::HeaderSize, AllocationPolicy::FirstFit);
        adm.migration = BlockSizes::One(32);
        let dmm = chain(vec![adm]);
        let hw = HwParams::default();
        let mut heap = Heap::new(&dmm, &hw);
        heap.malloc(1, 64).unwrap();
        heap.free(1);
        assert_eq!(heap.mem_used(), 0);
        assert_eq!(heap.peak_mem_used(), 72);
        assert!(heap.free_list(0).is_empty());
    }

    #[test]
    fn lea_large_objects_use_the_os() {
        let lea = lea_config();
        let hw = HwParams::default();
        let mut heap = Heap::new(&lea, &hw);
        heap.malloc(1, 256 * 1024).unwrap();
        assert_eq!(heap.live().next().unwrap().1.owner, Owner::Backstop);
        heap.free(1);
        assert_eq!(heap.mem_used(), 0);

        // medium blocks come from the OS, then live in the range ADM
        heap.malloc(2, 1000).unwrap();
        heap.free(2);
        assert_eq!(heap.free_list(8).len(), 1);
        heap.malloc(3, 500).unwrap();
        assert_eq!(heap.live().next().unwrap().1.owner, Owner::Adm(8));
        // 1000+8 rounded is 1008; 500+12 rounds to 512, remainder 496 is split off
        assert_eq!(heap.live().next().unwrap().1.block.size, 512);
        assert_eq!(heap.free_list(8).iter().next().unwrap().size, 496);
        heap.free(3);
        // freed block coalesces back with its remainder
        assert_eq!(heap.free_list(8).len(), 1);
        assert_eq!(heap.free_list(8).iter().next().unwrap().size, 1008);
    }

    #[test]
    fn exhaustion_is_flagged() {
        let hw = HwParams { memory_size: 100, ..HwParams::default() };
        let t = trace(&[(1, true, 40), (2, true, 40), (1, false, 0), (2, false, 0)]);
        let m = simulate(&kingsley_config(32), &t, &hw);
        assert!(m.exhausted);
        assert_eq!(m.peak_mem_used, 72);
        let w = FitnessWeights::balanced(Normalizers::from_baseline(&m));
        assert_eq!(fitness(&m, &w), crate::ge::WORST_FITNESS);
    }

    #[test]
    fn fitness_scaling() {
        let m = SimMetrics { ex_time: 10, mem_acc: 20, peak_mem_used: 30, energy: 2e-8, exhausted: false };
        let w = FitnessWeights::balanced(Normalizers::from_baseline(&m));
        assert!((fitness(&m, &w) - 1.0).abs() < 1e-12);
        assert_eq!(fitness(&SimMetrics::default(), &w), 0.0);

        let worse = SimMetrics { ex_time: 11, mem_acc: 21, peak_mem_used: 31, energy: 2.1e-8, exhausted: false };
        for weights in [[1.0, 0.0, 0.0], [0.2, 0.3, 0.5], [0.0, 0.0, 1.0]] {
            let w = FitnessWeights::new(weights, Normalizers::from_baseline(&m)).unwrap();
            assert!(fitness(&m, &w) < fitness(&worse, &w));
        }
        assert!(FitnessWeights::new([0.5, 0.5, 0.5], w.normalizers).is_err());
        assert!(FitnessWeights::new([-0.5, 1.0, 0.5], w.normalizers).is_err());
    }

    #[test]
    fn energy_is_proportional() {
        let t = trace(&[(1, true, 100), (2, true, 7), (1, false, 0), (3, true, 99), (2, false, 0), (3, false, 0)]);
        let hw = HwParams { energy_per_access: 3.5e-9, ..HwParams::default() };
        for dmm in [kingsley_config(20), lea_config()] {
            let m = simulate(&dmm, &t, &hw);
            assert_eq!(m.energy, m.mem_acc as f64 * 3.5e-9);
        }
    }
}
