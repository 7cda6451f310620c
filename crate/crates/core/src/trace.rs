//! Allocation traces: the profiling report every DMM candidate is replayed against.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Whether an event allocates or releases an object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    Alloc,
    Free,
}

/// One allocation or deallocation record.
///
/// On a `Free` the size is resolved from the matching `Alloc`. The address is
/// the one observed in the profiled program; the simulator ignores it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    pub object_id: u64,
    pub kind: EventKind,
    pub size: u64,
    pub address: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("event {index}: allocation of object {object_id} has size 0")]
    ZeroSize { index: usize, object_id: u64 },
    #[error("event {index}: free of object {object_id} without matching allocation")]
    FreeWithoutAlloc { index: usize, object_id: u64 },
    #[error("event {index}: object {object_id} allocated while still live")]
    DuplicateLive { index: usize, object_id: u64 },
}

/// Summary figures derived from a trace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceStats {
    /// Distinct allocation sizes, ascending.
    pub distinct_sizes: Vec<u64>,
    /// Peak of the sum of simultaneously live requested bytes.
    pub max_live_bytes: u64,
    pub event_count: usize,
    pub alloc_count: usize,
}

/// A validated, immutable sequence of trace events.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    events: Vec<TraceEvent>,
    stats: TraceStats,
}

/// Incremental validator used by the text reader and by [`Trace::from_events`].
#[derive(Debug, Default)]
pub struct TraceBuilder {
    events: Vec<TraceEvent>,
    live: BTreeMap<u64, u64>,
}

impl TraceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc(&mut self, object_id: u64, size: u64, address: u64) -> Result<(), TraceError> {
        let index = self.events.len();
        if size == 0 {
            return Err(TraceError::ZeroSize { index, object_id });
        }
        if self.live.insert(object_id, size).is_some() {
            return Err(TraceError::DuplicateLive { index, object_id });
        }
        self.events.push(TraceEvent { object_id, kind: EventKind::Alloc, size, address });
        Ok(())
    }

    /// Records a free; the event's size is taken from the live allocation.
    pub fn free(&mut self, object_id: u64, address: u64) -> Result<(), TraceError> {
        let index = self.events.len();
        let size = self
            .live
            .remove(&object_id)
            .ok_or(TraceError::FreeWithoutAlloc { index, object_id })?;
        self.events.push(TraceEvent { object_id, kind: EventKind::Free, size, address });
        Ok(())
    }

    pub fn push(&mut self, event: TraceEvent) -> Result<(), TraceError> {
        match event.kind {
            EventKind::Alloc => self.alloc(event.object_id, event.size, event.address),
            EventKind::Free => self.free(event.object_id, event.address),
        }
    }

    pub fn finish(self) -> Trace {
        let stats = compute_stats(&self.events);
        Trace { events: self.events, stats }
    }
}

impl Trace {
    /// Validates `events`. Sizes carried by `Free` events are ignored and
    /// re-resolved from the matching allocation.
    pub fn from_events<I>(events: I) -> Result<Self, TraceError>
    where
        I: IntoIterator<Item = TraceEvent>,
    {
        let mut builder = TraceBuilder::new();
        for event in events {
            builder.push(event)?;
        }
        Ok(builder.finish())
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn stats(&self) -> &TraceStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Recomputes the summary of a trace by a linear scan.
pub fn trace_stats(trace: &Trace) -> TraceStats {
    compute_stats(trace.events())
}

fn compute_stats(events: &[TraceEvent]) -> TraceStats {
    let mut sizes = BTreeSet::new();
    let mut live = 0u64;
    let mut max_live = 0u64;
    let mut allocs = 0;
    for event in events {
        match event.kind {
            EventKind::Alloc => {
                allocs += 1;
                sizes.insert(event.size);
                live += event.size;
                max_live = max_live.max(live);
            }
            EventKind::Free => live -= event.size,
        }
    }
    TraceStats {
        distinct_sizes: sizes.into_iter().collect(),
        max_live_bytes: max_live,
        event_count: events.len(),
        alloc_count: allocs,
    }
}

/// How allocation sizes are drawn by [`synth_workload`].
#[derive(Clone, Debug, PartialEq)]
pub enum SizeDistribution {
    /// Sizes picked with relative weights (equal weights when `weights` is empty).
    Discrete { sizes: Vec<u64>, weights: Vec<f64> },
    /// Sizes uniform in `min..=max`.
    Uniform { min: u64, max: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub sizes: SizeDistribution,
    /// Total number of events; half are allocations, half frees.
    pub events: usize,
    /// Maximum number of simultaneously live objects.
    pub live_cap: usize,
    /// Probability of allocating when both an allocation and a free are possible.
    pub alloc_ratio: f64,
}

impl WorkloadSpec {
    pub fn discrete(sizes: Vec<u64>, events: usize, live_cap: usize) -> Self {
        Self {
            sizes: SizeDistribution::Discrete { sizes, weights: Vec::new() },
            events,
            live_cap,
            alloc_ratio: 0.5,
        }
    }

    pub fn uniform(min: u64, max: u64, events: usize, live_cap: usize) -> Self {
        Self { sizes: SizeDistribution::Uniform { min, max }, events, live_cap, alloc_ratio: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum WorkloadError {
    #[error("event count {0} is odd; every allocation needs a matching free")]
    OddEventCount(usize),
    #[error("live-set cap is 0 but allocations were requested")]
    ZeroLiveCap,
    #[error("size distribution is empty")]
    EmptySizes,
    #[error("size 0 is not a valid allocation size")]
    ZeroSize,
    #[error("weights do not match sizes or are not positive and finite")]
    BadWeights,
    #[error("uniform size range {min}..={max} is empty")]
    EmptyRange { min: u64, max: u64 },
    #[error("alloc ratio {0} is outside (0, 1]")]
    BadAllocRatio(f64),
}

enum Sampler {
    Weighted(Vec<u64>, WeightedIndex<f64>),
    Uniform(u64, u64),
}

impl Sampler {
    fn new(dist: &SizeDistribution) -> Result<Self, WorkloadError> {
        match dist {
            SizeDistribution::Discrete { sizes, weights } => {
                if sizes.is_empty() {
                    return Err(WorkloadError::EmptySizes);
                }
                if sizes.contains(&0) {
                    return Err(WorkloadError::ZeroSize);
                }
                let weights = if weights.is_empty() {
                    alloc::vec![1.0; sizes.len()]
                } else if weights.len() == sizes.len()
                    && weights.iter().all(|w| w.is_finite() && *w >= 0.0)
                {
                    weights.clone()
                } else {
                    return Err(WorkloadError::BadWeights);
                };
                let index = WeightedIndex::new(weights).map_err(|_| WorkloadError::BadWeights)?;
                Ok(Sampler::Weighted(sizes.clone(), index))
            }
            SizeDistribution::Uniform { min, max } => {
                if *min == 0 {
                    return Err(WorkloadError::ZeroSize);
                }
                if min > max {
                    return Err(WorkloadError::EmptyRange { min: *min, max: *max });
                }
                Ok(Sampler::Uniform(*min, *max))
            }
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        match self {
            Sampler::Weighted(sizes, index) => sizes[index.sample(rng)],
            Sampler::Uniform(min, max) => rng.gen_range(*min..=*max),
        }
    }
}

/// Generates a well-formed trace that frees every object by its end.
///
/// The output is a pure function of `(spec, seed)`.
pub fn synth_workload(spec: &WorkloadSpec, seed: u64) -> Result<Trace, WorkloadError> {
    if !spec.events.is_multiple_of(2) {
        return Err(WorkloadError::OddEventCount(spec.events));
    }
    if spec.events > 0 && spec.live_cap == 0 {
        return Err(WorkloadError::ZeroLiveCap);
    }
    if !(spec.alloc_ratio > 0.0 && spec.alloc_ratio <= 1.0) {
        return Err(WorkloadError::BadAllocRatio(spec.alloc_ratio));
    }
    let sampler = Sampler::new(&spec.sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut builder = TraceBuilder::new();
    let mut live: Vec<(u64, u64)> = Vec::with_capacity(spec.live_cap.min(spec.events / 2));
    let mut allocs_left = spec.events / 2;
    let mut next_id = 1u64;
    let mut next_addr = 0x1000u64;

    while allocs_left > 0 || !live.is_empty() {
        let can_alloc = allocs_left > 0 && live.len() < spec.live_cap;
        let do_alloc = can_alloc && (live.is_empty() || rng.gen_bool(spec.alloc_ratio));
        if do_alloc {
            let size = sampler.sample(&mut rng);
            let id = next_id;
            next_id += 1;
            builder.alloc(id, size, next_addr).expect("fresh ids are never live");
            live.push((id, next_addr));
            next_addr += size.next_multiple_of(16);
            allocs_left -= 1;
        } else {
            let pick = rng.gen_range(0..live.len());
            let (id, addr) = live.swap_remove(pick);
            builder.free(id, addr).expect("picked from the live set");
        }
    }
    Ok(builder.finish())
}
