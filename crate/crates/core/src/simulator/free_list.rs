//! Free-block lists with instrumented costs.
//!
//! Blocks are kept in LIFO order (new blocks at the head) in a slab-backed
//! linked list. Two side indexes answer address-adjacency and size queries
//! without walking the list; the cost counters still charge the walk the
//! modelled data structure would perform.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::cost::{self, Counters};
use crate::dmm_space::{AllocationPolicy, DataStructure};

/// A contiguous piece of simulated memory, header included.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block {
    pub addr: u64,
    pub size: u64,
}

impl Block {
    pub fn end(&self) -> u64 {
        self.addr + self.size
    }
}

/// What a request needs from a list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fit {
    /// Fixed-size list: every block serves the request.
    Class,
    /// Variable-size list: a block must be at least this many bytes (header
    /// included, already rounded to the backstop granularity).
    AtLeast(u64),
}

const NIL: usize = usize::MAX;

#[derive(Clone, Copy, Debug)]
struct Node {
    block: Block,
    prev: usize,
    next: usize,
}

#[derive(Clone, Debug)]
pub struct FreeList {
    structure: DataStructure,
    nodes: Vec<Node>,
    vacant: Vec<usize>,
    head: usize,
    len: usize,
    by_addr: BTreeMap<u64, usize>,
    by_size: BTreeSet<(u64, u64)>,
}

impl FreeList {
    pub fn new(structure: DataStructure) -> Self {
        Self {
            structure,
            nodes: Vec::new(),
            vacant: Vec::new(),
            head: NIL,
            len: 0,
            by_addr: BTreeMap::new(),
            by_size: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn is_dll(&self) -> bool {
        self.structure == DataStructure::DoublyLinkedList
    }

    /// Blocks from head to tail.
    pub fn iter(&self) -> impl Iterator<Item = Block> + '_ {
        let mut at = self.head;
        core::iter::from_fn(move || {
            if at == NIL {
                return None;
            }
            let node = self.nodes[at];
            at = node.next;
            Some(node.block)
        })
    }

    /// Links `block` at the head without charging anything.
    pub(crate) fn link(&mut self, block: Block) -> usize {
        let node = Node { block, prev: NIL, next: self.head };
        let idx = match self.vacant.pop() {
            Some(i) => {
                self.nodes[i] = node;
                i
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() - 1
            }
        };
        if self.head != NIL {
            self.nodes[self.head].prev = idx;
        }
        self.head = idx;
        self.len += 1;
        self.by_addr.insert(block.addr, idx);
        self.by_size.insert((block.size, block.addr));
        idx
    }

    pub(crate) fn unlink(&mut self, idx: usize) -> Block {
        let node = self.nodes[idx];
        if node.prev != NIL {
            self.nodes[node.prev].next = node.next;
        } else {
            self.head = node.next;
        }
        if node.next != NIL {
            self.nodes[node.next].prev = node.prev;
        }
        self.len -= 1;
        self.by_addr.remove(&node.block.addr);
        self.by_size.remove(&(node.block.size, node.block.addr));
        self.vacant.push(idx);
        node.block
    }

    /// Returns a freed block to the head of the list.
    pub fn push(&mut self, block: Block, c: &mut Counters) -> usize {
        c.charge(cost::PUSH);
        if self.is_dll() {
            c.charge(cost::DLL_EXTRA);
        }
        self.link(block)
    }

    /// Searches the list per `policy` and removes the chosen block.
    ///
    /// A head hit on a singly-linked first-fit list costs 5 time units and 7
    /// accesses, plus 1 and 2 more when it empties the list.
    pub fn take(&mut self, policy: AllocationPolicy, fit: Fit, c: &mut Counters) -> Option<Block> {
        c.charge(cost::SEARCH_ENTRY);
        if self.is_empty() {
            c.charge(cost::RETURN);
            return None;
        }
        let chosen = match (policy, fit) {
            (AllocationPolicy::FirstFit, _) | (AllocationPolicy::ExactFit, Fit::Class) => {
                self.first_fit(fit, c)
            }
            (AllocationPolicy::BestFit, _) => {
                c.charge_n(cost::VISIT, self.len as u64);
                self.best_fit(fit)
            }
            (AllocationPolicy::ExactFit, Fit::AtLeast(need)) => self.exact(need),
        };
        let Some(idx) = chosen else {
            c.charge(cost::RETURN);
            return None;
        };
        let block = self.unlink(idx);
        c.charge(cost::UNLINK);
        if self.is_dll() {
            c.charge(cost::DLL_EXTRA);
        }
        if self.is_empty() {
            c.charge(cost::EMPTIED);
        }
        c.charge(cost::RETURN);
        Some(block)
    }

    fn first_fit(&self, fit: Fit, c: &mut Counters) -> Option<usize> {
        let mut at = self.head;
        while at != NIL {
            let node = &self.nodes[at];
            let fits = match fit {
                Fit::Class => true,
                Fit::AtLeast(need) => node.block.size >= need,
            };
            if fits {
                return Some(at);
            }
            c.charge(cost::VISIT);
            at = node.next;
        }
        None
    }

    fn best_fit(&self, fit: Fit) -> Option<usize> {
        let need = match fit {
            Fit::Class => 0,
            Fit::AtLeast(need) => need,
        };
        let &(_, addr) = self.by_size.range((need, 0)..).next()?;
        Some(self.by_addr[&addr])
    }

    fn exact(&self, need: u64) -> Option<usize> {
        let &(_, addr) = self.by_size.range((need, 0)..=(need, u64::MAX)).next()?;
        Some(self.by_addr[&addr])
    }

    /// Free block ending exactly at `addr`.
    pub(crate) fn left_of(&self, addr: u64) -> Option<usize> {
        let (_, &idx) = self.by_addr.range(..addr).next_back()?;
        (self.nodes[idx].block.end() == addr).then_some(idx)
    }

    /// Free block starting exactly at `end`.
    pub(crate) fn right_of(&self, end: u64) -> Option<usize> {
        self.by_addr.get(&end).copied()
    }

    pub(crate) fn block(&self, idx: usize) -> Block {
        self.nodes[idx].block
    }

    /// Changes the extent of a linked block in place, keeping its list position.
    pub(crate) fn resize(&mut self, idx: usize, block: Block) {
        let old = self.nodes[idx].block;
        self.by_addr.remove(&old.addr);
        self.by_size.remove(&(old.size, old.addr));
        self.nodes[idx].block = block;
        self.by_addr.insert(block.addr, idx);
        self.by_size.insert((block.size, block.addr));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn list_of(structure: DataStructure, sizes: &[u64]) -> FreeList {
        let mut list = FreeList::new(structure);
        let mut addr = 0;
        for &size in sizes {
            list.link(Block { addr, size });
            addr += size;
        }
        list
    }

    #[test]
    fn sll_first_fit_head_hit_costs() {
        let mut list = list_of(DataStructure::SinglyLinkedList, &[16, 16]);
        let mut c = Counters::default();
        assert!(list.take(AllocationPolicy::FirstFit, Fit::Class, &mut c).is_some());
        assert_eq!((c.ex_time, c.mem_acc), (5, 7));

        let mut c = Counters::default();
        assert!(list.take(AllocationPolicy::FirstFit, Fit::Class, &mut c).is_some());
        assert_eq!((c.ex_time, c.mem_acc), (6, 9));

        let mut c = Counters::default();
        assert!(list.take(AllocationPolicy::FirstFit, Fit::Class, &mut c).is_none());
        assert_eq!((c.ex_time, c.mem_acc), (3, 2));
    }

    #[test]
    fn first_fit_charges_skipped_nodes() {
        // head is the last linked block (size 8)
        let mut list = list_of(DataStructure::SinglyLinkedList, &[64, 32, 8]);
        let mut c = Counters::default();
        let b = list.take(AllocationPolicy::FirstFit, Fit::AtLeast(24), &mut c).unwrap();
        assert_eq!(b.size, 32);
        assert_eq!((c.ex_time, c.mem_acc), (5 + 2, 7 + 2));
    }

    #[test]
    fn best_fit_walks_everything() {
        let mut list = list_of(DataStructure::DoublyLinkedList, &[64, 32, 40, 8]);
        let mut c = Counters::default();
        let b = list.take(AllocationPolicy::BestFit, Fit::AtLeast(33), &mut c).unwrap();
        assert_eq!(b.size, 40);
        // 4 visited nodes, DLL unlink surcharge
        assert_eq!((c.ex_time, c.mem_acc), (5 + 8 + 2, 7 + 8 + 3));
        assert_eq!(list.iter().map(|b| b.size).collect::<Vec<_>>(), vec![8, 32, 64]);
    }

    #[test]
    fn exact_fit_is_constant_time() {
        let mut list = list_of(DataStructure::SinglyLinkedList, &[64, 48, 40, 8, 8, 8]);
        let mut c = Counters::default();
        let b = list.take(AllocationPolicy::ExactFit, Fit::AtLeast(48), &mut c).unwrap();
        assert_eq!(b.size, 48);
        assert_eq!((c.ex_time, c.mem_acc), (5, 7));
        assert!(list.take(AllocationPolicy::ExactFit, Fit::AtLeast(56), &mut c).is_none());
    }

    #[test]
    fn neighbours_and_resize() {
        let mut list = FreeList::new(DataStructure::SinglyLinkedList);
        let a = list.link(Block { addr: 0, size: 16 });
        list.link(Block { addr: 32, size: 16 });
        assert_eq!(list.left_of(16), Some(a));
        assert_eq!(list.left_of(20), None);
        assert_eq!(list.right_of(32).map(|i| list.block(i).size), Some(16));
        list.resize(a, Block { addr: 0, size: 32 });
        assert_eq!(list.left_of(32), Some(a));
        assert_eq!(list.len(), 2);
    }
}
