//! The DMM design space.
//!
//! A DMM is an ordered chain of atomic managers (ADMs) ending at an operating
//! system backstop. Each ADM fixes one decision per design category:
//! free-block data structure, block sizes it serves, per-block tags,
//! allocation policy, the flexible block size manager, and the coalescing and
//! splitting rules. [`validate`] enforces the interdependencies between them.

use alloc::vec::Vec;
use core::fmt;

mod expr;

pub use expr::{parse_dmm, ExprError, DEFAULT_COALESCE_MAX, DEFAULT_SPLIT_MIN};

/// Bytes of header charged per block by the backstop's own blocks.
pub const BACKSTOP_HEADER: u64 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DataStructure {
    SinglyLinkedList,
    DoublyLinkedList,
}

/// Which sizes an ADM serves (its selector) or accepts back on free (its
/// migration rule).
///
/// `One(s)` covers every size `<= s`: with first-match dispatch a chain of
/// `One` selectors rounds each request up to the next class. `Range` is the
/// half-open interval `min..max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockSizes {
    One(u64),
    Range { min: u64, max: u64 },
}

impl BlockSizes {
    /// The catch-all selector.
    pub const ANY: BlockSizes = BlockSizes::Range { min: 0, max: u64::MAX };

    pub fn covers(&self, size: u64) -> bool {
        match *self {
            BlockSizes::One(s) => size <= s,
            BlockSizes::Range { min, max } => min <= size && size < max,
        }
    }

    pub fn is_any(&self) -> bool {
        *self == Self::ANY
    }
}

/// Extra per-block fields. Header size and status are recorded together
/// because the legal combinations of tags and recorded info are coupled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockTags {
    None,
    HeaderSize,
    HeaderSizeStatus,
}

impl BlockTags {
    /// Bytes charged per block for the header.
    pub const fn overhead(self) -> u64 {
        match self {
            BlockTags::None => 0,
            BlockTags::HeaderSize => 8,
            BlockTags::HeaderSizeStatus => 12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AllocationPolicy {
    FirstFit,
    BestFit,
    ExactFit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FlexibleManager {
    Fixed,
    SplitOnly,
    CoalesceOnly,
    SplitAndCoalesce,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum When {
    Never,
    Immediate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Coalescing {
    pub when: When,
    /// Largest block (header included) a merge may produce.
    pub max_result_size: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Splitting {
    pub when: When,
    /// Smallest remainder block (header included) a split may leave.
    pub min_result_size: u64,
}

impl Coalescing {
    pub const NEVER: Coalescing = Coalescing { when: When::Never, max_result_size: 0 };
}

impl Splitting {
    pub const NEVER: Splitting = Splitting { when: When::Never, min_result_size: 0 };
}

/// One atomic manager.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AdmConfig {
    pub data_structure: DataStructure,
    pub block_sizes: BlockSizes,
    pub block_tags: BlockTags,
    pub allocation_policy: AllocationPolicy,
    pub flexible_manager: FlexibleManager,
    pub coalescing: Coalescing,
    pub splitting: Splitting,
    /// Sizes of freed blocks this ADM takes back.
    pub migration: BlockSizes,
}

impl AdmConfig {
    /// A fixed manager that migrates on its own selector.
    pub fn fixed(
        data_structure: DataStructure,
        allocation_policy: AllocationPolicy,
        block_tags: BlockTags,
        block_sizes: BlockSizes,
    ) -> Self {
        Self {
            data_structure,
            block_sizes,
            block_tags,
            allocation_policy,
            flexible_manager: FlexibleManager::Fixed,
            coalescing: Coalescing::NEVER,
            splitting: Splitting::NEVER,
            migration: block_sizes,
        }
    }

    /// Switches on the flexible manager with immediate splitting and/or
    /// coalescing. The ADM then migrates on its own selector.
    pub fn with_flexible(mut self, manager: FlexibleManager, min_split: u64, max_coalesce: u64) -> Self {
        let (split, coalesce) = match manager {
            FlexibleManager::Fixed => (false, false),
            FlexibleManager::SplitOnly => (true, false),
            FlexibleManager::CoalesceOnly => (false, true),
            FlexibleManager::SplitAndCoalesce => (true, true),
        };
        self.flexible_manager = manager;
        self.splitting = if split {
            Splitting { when: When::Immediate, min_result_size: min_split }
        } else {
            Splitting::NEVER
        };
        self.coalescing = if coalesce {
            Coalescing { when: When::Immediate, max_result_size: max_coalesce }
        } else {
            Coalescing::NEVER
        };
        self.migration = self.block_sizes;
        self
    }

    pub fn header(&self) -> u64 {
        self.block_tags.overhead()
    }

    pub fn coalesces(&self) -> bool {
        self.coalescing.when == When::Immediate
    }

    pub fn splits(&self) -> bool {
        self.splitting.when == When::Immediate
    }
}

/// The memory granted by the operating system at the end of the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OsBackstop {
    /// Maximum outstanding bytes; `u64::MAX` defers to [`HwParams::memory_size`].
    pub heap_limit: u64,
    /// Every grant is rounded up to a multiple of this.
    pub chunk_granularity: u64,
}

impl Default for OsBackstop {
    fn default() -> Self {
        Self { heap_limit: u64::MAX, chunk_granularity: 8 }
    }
}

impl OsBackstop {
    pub fn with_limit(heap_limit: u64) -> Self {
        Self { heap_limit, ..Self::default() }
    }

    pub fn round(&self, bytes: u64) -> u64 {
        bytes.div_ceil(self.chunk_granularity) * self.chunk_granularity
    }
}

/// Target platform parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HwParams {
    /// Joules per memory access.
    pub energy_per_access: f64,
    /// Bytes of memory available to the heap.
    pub memory_size: u64,
}

impl Default for HwParams {
    fn default() -> Self {
        Self { energy_per_access: 1e-9, memory_size: 256 << 20 }
    }
}

impl HwParams {
    pub fn is_valid(&self) -> bool {
        self.energy_per_access > 0.0 && self.energy_per_access.is_finite() && self.memory_size > 0
    }
}

/// A whole manager: the ADM chain in dispatch order plus the backstop.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DmmConfig {
    pub adms: Vec<AdmConfig>,
    pub backstop: OsBackstop,
}

/// Where a request is sent when no availability is taken into account.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Adm(usize),
    Backstop,
}

impl DmmConfig {
    /// First ADM whose selector covers `size`.
    pub fn route(&self, size: u64) -> Route {
        self.adms
            .iter()
            .position(|adm| adm.block_sizes.covers(size))
            .map_or(Route::Backstop, Route::Adm)
    }

    /// Number of ADMs; the load-balancing estimate of simulation time.
    pub fn estimate_cost(&self) -> usize {
        self.adms.len()
    }
}

/// Free-function form of [`DmmConfig::estimate_cost`].
pub fn estimate_cost(dmm: &DmmConfig) -> usize {
    dmm.estimate_cost()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    OneExcludesFlexibleManager,
    NoTagsNeedsFixedSize,
    NoTagsExcludesFlexibleManager,
    CoalescingNeedsStatus,
    SplitRemainderTooSmall,
    SplitAboveCoalesce,
    FlexibleMismatch,
    FlexibleMigration,
    EmptySelector,
    EmptyMigration,
    BadBackstop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Offending ADM, or `None` for the backstop.
    pub adm: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::OneExcludesFlexibleManager => "One excludes flexible manager",
            ViolationKind::NoTagsNeedsFixedSize => "blocks without tags need a single block size",
            ViolationKind::NoTagsExcludesFlexibleManager => {
                "blocks without tags cannot be split or coalesced"
            }
            ViolationKind::CoalescingNeedsStatus => "coalescing needs size and status tags",
            ViolationKind::SplitRemainderTooSmall => "split remainder must exceed the header",
            ViolationKind::SplitAboveCoalesce => "min split size exceeds max coalesce size",
            ViolationKind::FlexibleMismatch => {
                "flexible manager disagrees with the coalesce/split settings"
            }
            ViolationKind::FlexibleMigration => "a flexible manager migrates on its own selector",
            ViolationKind::EmptySelector => "selector covers no size",
            ViolationKind::EmptyMigration => "migration rule covers no size",
            ViolationKind::BadBackstop => "backstop needs a positive limit and granularity",
        })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.adm {
            Some(i) => write!(f, "ADM {i}: {}", self.kind),
            None => write!(f, "backstop: {}", self.kind),
        }
    }
}

fn selector_empty(sizes: BlockSizes) -> bool {
    match sizes {
        BlockSizes::One(s) => s == 0,
        BlockSizes::Range { min, max } => min >= max,
    }
}

fn validate_adm(adm: &AdmConfig, mut push: impl FnMut(ViolationKind)) {
    use ViolationKind::*;

    if selector_empty(adm.block_sizes) {
        push(EmptySelector);
    }
    if selector_empty(adm.migration) {
        push(EmptyMigration);
    }
    let fixed = adm.flexible_manager == FlexibleManager::Fixed;
    if matches!(adm.block_sizes, BlockSizes::One(_)) && !fixed {
        push(OneExcludesFlexibleManager);
    }
    if adm.block_tags == BlockTags::None {
        if !matches!(adm.block_sizes, BlockSizes::One(_)) {
            push(NoTagsNeedsFixedSize);
        }
        if !fixed || adm.coalesces() || adm.splits() {
            push(NoTagsExcludesFlexibleManager);
        }
    }
    let expected = match adm.flexible_manager {
        FlexibleManager::Fixed => (false, false),
        FlexibleManager::SplitOnly => (true, false),
        FlexibleManager::CoalesceOnly => (false, true),
        FlexibleManager::SplitAndCoalesce => (true, true),
    };
    if (adm.splits(), adm.coalesces()) != expected {
        push(FlexibleMismatch);
    }
    if adm.coalesces() && adm.block_tags != BlockTags::HeaderSizeStatus {
        push(CoalescingNeedsStatus);
    }
    if adm.splits() && adm.splitting.min_result_size <= adm.header() {
        push(SplitRemainderTooSmall);
    }
    if adm.splits()
        && adm.coalesces()
        && adm.splitting.min_result_size > adm.coalescing.max_result_size
    {
        push(SplitAboveCoalesce);
    }
    if !fixed && adm.migration != adm.block_sizes {
        push(FlexibleMigration);
    }
}

/// Lists every constraint the configuration breaks; empty means legal.
pub fn validate(dmm: &DmmConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, adm) in dmm.adms.iter().enumerate() {
        validate_adm(adm, |kind| out.push(Violation { adm: Some(i), kind }));
    }
    if dmm.backstop.heap_limit == 0 || dmm.backstop.chunk_granularity == 0 {
        out.push(Violation { adm: None, kind: ViolationKind::BadBackstop });
    }
    out
}

/// Kingsley: one singly-linked first-fit list per power of two from 2^3 to
/// `2^max_pow`, size headers, no splitting or coalescing.
///
/// # Panics
/// If `max_pow` is outside `3..=62`.
pub fn kingsley_config(max_pow: u32) -> DmmConfig {
    assert!((3..=62).contains(&max_pow), "max_pow must be in 3..=62");
    let adms = (3..=max_pow)
        .map(|k| {
            AdmConfig::fixed(
                DataStructure::SinglyLinkedList,
                AllocationPolicy::FirstFit,
                BlockTags::HeaderSize,
                BlockSizes::One(1 << k),
            )
        })
        .collect();
    DmmConfig { adms, backstop: OsBackstop::default() }
}

/// Upper bound of the Lea-like medium range; larger requests go to the OS.
pub const LEA_LARGE: u64 = 128 * 1024;

/// Lea-like manager: exact-fit lists per multiple of 8 up to 64 bytes, then a
/// best-fit range with immediate splitting and coalescing up to 128K; larger
/// requests fall through to the OS.
pub fn lea_config() -> DmmConfig {
    let mut adms: Vec<AdmConfig> = (1..=8)
        .map(|k| {
            AdmConfig::fixed(
                DataStructure::SinglyLinkedList,
                AllocationPolicy::ExactFit,
                BlockTags::HeaderSizeStatus,
                BlockSizes::One(8 * k),
            )
        })
        .collect();
    adms.push(
        AdmConfig::fixed(
            DataStructure::DoublyLinkedList,
            AllocationPolicy::BestFit,
            BlockTags::HeaderSizeStatus,
            BlockSizes::Range { min: 64, max: LEA_LARGE },
        )
        .with_flexible(FlexibleManager::SplitAndCoalesce, 16, LEA_LARGE),
    );
    DmmConfig { adms, backstop: OsBackstop::default() }
}
