//! Unit-cost table of the simulator.
//!
//! One time unit per pointer assignment or comparison, one memory access per
//! read or write of a block header or link field. The list-search entries
//! reproduce the instrumented singly-linked fast path exactly; the rest apply
//! the same units to the other operations.

/// `(time units, memory accesses)`.
pub type Cost = (u64, u64);

/// Load the head pointer and test for an empty list.
pub const SEARCH_ENTRY: Cost = (2, 2);
/// Unlink the chosen block from a singly-linked list.
pub const UNLINK: Cost = (2, 5);
/// The unlink left the list empty; reset the sentinel.
pub const EMPTIED: Cost = (1, 2);
/// Return from the search, hit or miss.
pub const RETURN: Cost = (1, 0);
/// Advance past one node while searching.
pub const VISIT: Cost = (2, 2);
/// Push a freed block at the head of a singly-linked list.
pub const PUSH: Cost = (2, 3);
/// Maintaining the back link of a doubly-linked list on insert or remove.
pub const DLL_EXTRA: Cost = (2, 3);
/// Check one address-adjacent neighbour for coalescing.
pub const COALESCE_CHECK: Cost = (3, 4);
/// Merge with a free neighbour.
pub const COALESCE_MERGE: Cost = (2, 3);
/// Split a block and relink the remainder.
pub const SPLIT: Cost = (4, 5);
/// Memory granted by the operating system.
pub const OS_GRANT: Cost = (5, 2);
/// Memory handed back to the operating system.
pub const OS_RELEASE: Cost = (5, 2);
/// Forward a request (or a freed block) past an ADM whose selector (or
/// migration rule) does not match.
pub const FORWARD: Cost = (1, 0);

/// Running execution-time and memory-access counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub ex_time: u64,
    pub mem_acc: u64,
}

impl Counters {
    #[inline]
    pub fn charge(&mut self, (time, acc): Cost) {
        self.ex_time += time;
        self.mem_acc += acc;
    }

    #[inline]
    pub fn charge_n(&mut self, (time, acc): Cost, n: u64) {
        self.ex_time += time * n;
        self.mem_acc += acc * n;
    }
}
