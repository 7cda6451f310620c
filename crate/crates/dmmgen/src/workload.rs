//! Synthetic workload descriptions in TOML.
//!
//! ```toml
//! sizes = [32, 40, 1024]   # or: size_range = [16, 4096]
//! weights = [1.0, 4.0, 0.5] # optional, discrete sizes only
//! events = 10000
//! live_cap = 100
//! seed = 7                  # optional, default 0
//! alloc_ratio = 0.5         # optional
//! ```

use std::path::Path;

use serde::Deserialize;

use dmmgen_core::trace::{SizeDistribution, WorkloadSpec};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkloadFile {
    sizes: Option<Vec<u64>>,
    weights: Option<Vec<f64>>,
    size_range: Option<[u64; 2]>,
    events: usize,
    live_cap: usize,
    seed: Option<u64>,
    alloc_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadConfig {
    pub spec: WorkloadSpec,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum WorkloadConfigError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error("give exactly one of `sizes` and `size_range`")]
    SizeSource,
    #[error("`weights` only applies to `sizes`")]
    StrayWeights,
}

pub fn parse_workload(text: &str) -> Result<WorkloadConfig, WorkloadConfigError> {
    let f: WorkloadFile = toml::from_str(text)?;
    let sizes = match (f.sizes, f.size_range) {
        (Some(sizes), None) => SizeDistribution::Discrete { sizes, weights: f.weights.unwrap_or_default() },
        (None, Some([min, max])) => {
            if f.weights.is_some() {
                return Err(WorkloadConfigError::StrayWeights);
            }
            SizeDistribution::Uniform { min, max }
        }
        _ => return Err(WorkloadConfigError::SizeSource),
    };
    let spec = WorkloadSpec {
        sizes,
        events: f.events,
        live_cap: f.live_cap,
        alloc_ratio: f.alloc_ratio.unwrap_or(0.5),
    };
    Ok(WorkloadConfig { spec, seed: f.seed.unwrap_or(0) })
}

pub fn load_workload(path: &Path) -> Result<WorkloadConfig, WorkloadConfigError> {
    parse_workload(&std::fs::read_to_string(path)?)
}
