//! Trace-driven design of custom dynamic memory managers (DMMs).
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithmic piece
//! of the pipeline:
//!
//! * [`trace`]: the allocation-trace data model and synthetic workloads.
//! * [`dmm_space`]: the atomic-manager design space, its constraints, the
//!   Kingsley and Lea-like baselines and the nested `AtomicDMM(...)` text form.
//! * [`simulator`]: replays a trace through a DMM in simulation mode and
//!   accumulates execution time, memory accesses and memory usage.
//! * [`grammar`]: BNF production tables and trace-customized grammar generation.
//! * [`ge`]: grammatical evolution (modulus decoding, operators, generational loop).
//! * [`devs`]: a small DEVS kernel with a pluggable executor for parallel transitions.
//! * [`pgea`]: the synchronous master-worker parallel GE built on [`devs`].
//!
//! File IO, the thread-pool executor and the command-line tool live in the
//! `dmmgen` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod devs;
pub mod dmm_space;
pub mod ge;
pub mod grammar;
pub mod pgea;
pub mod simulator;
pub mod trace;

pub use dmm_space::{AdmConfig, DmmConfig, HwParams, OsBackstop};
pub use ge::{GeParams, Genotype, Individual, WORST_FITNESS};
pub use grammar::Grammar;
pub use simulator::{FitnessWeights, SimMetrics};
pub use trace::{Trace, TraceEvent};
