//! File formats, the thread-pool executor and report writers around
//! [`dmmgen_core`]. The `dmmgen` binary drives them from the command line.

pub mod bench;
pub mod compare;
pub mod dmm_io;
pub mod executor;
pub mod report;
pub mod topology;
pub mod trace_io;
pub mod workload;

pub use dmmgen_core;
pub use executor::{run_parallel_ge, RayonExecutor};
