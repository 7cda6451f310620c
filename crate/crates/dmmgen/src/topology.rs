//! Master-worker topology files (TOML).
//!
//! ```toml
//! workers = 2
//! colocate = ["master", "worker1"]   # optional placement advice
//!
//! [[connect]]
//! from = "master.oW_1"
//! to = "worker1.in"
//!
//! [[connect]]
//! from = "worker1.out"
//! to = "master.iW_1"
//! # ...
//! ```
//!
//! Models are `master` and `worker1` to `workerW`. The master has output
//! ports `oW_j` and input ports `iW_j`; workers have `in` and `out`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use dmmgen_core::devs::{Coupling, DevsError, Endpoint};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connection {
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub workers: usize,
    /// Models meant to share one processing unit; advice only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub colocate: Vec<String>,
    #[serde(default)]
    pub connect: Vec<Connection>,
}

#[derive(Debug, thiserror::Error)]
pub enum TopologyFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error("at least one worker is needed")]
    NoWorkers,
    #[error("unknown endpoint `{0}`")]
    Endpoint(String),
    #[error("`{0}` is not an output port")]
    NotOutput(String),
    #[error("`{0}` is not an input port")]
    NotInput(String),
    #[error("unknown model `{0}` in colocate")]
    Colocate(String),
    #[error(transparent)]
    Devs(#[from] DevsError),
}

impl Topology {
    /// One master, `w` workers, the standard wiring, and the master placed
    /// with the first worker.
    pub fn standard(w: usize) -> Self {
        let connect = (1..=w)
            .flat_map(|j| {
                [
                    Connection { from: format!("master.oW_{j}"), to: format!("worker{j}.in") },
                    Connection { from: format!("worker{j}.out"), to: format!("master.iW_{j}") },
                ]
            })
            .collect();
        Self { workers: w, colocate: vec!["master".into(), "worker1".into()], connect }
    }

    pub fn parse(text: &str) -> Result<Self, TopologyFileError> {
        let t: Topology = toml::from_str(text)?;
        if t.workers == 0 {
            return Err(TopologyFileError::NoWorkers);
        }
        for m in &t.colocate {
            if t.model(m).is_none() {
                return Err(TopologyFileError::Colocate(m.clone()));
            }
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, TopologyFileError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("topology serializes")
    }

    fn model(&self, name: &str) -> Option<usize> {
        if name == "master" {
            return Some(0);
        }
        let j: usize = name.strip_prefix("worker")?.parse().ok()?;
        (1..=self.workers).contains(&j).then_some(j)
    }

    /// Resolves `model.port` to an endpoint and whether the port is an output.
    fn endpoint(&self, text: &str) -> Result<(Endpoint, bool), TopologyFileError> {
        let bad = || TopologyFileError::Endpoint(text.to_string());
        let (model, port) = text.split_once('.').ok_or_else(bad)?;
        let m = self.model(model).ok_or_else(bad)?;
        if m == 0 {
            let (output, j) = if let Some(j) = port.strip_prefix("oW_") {
                (true, j)
            } else if let Some(j) = port.strip_prefix("iW_") {
                (false, j)
            } else {
                return Err(bad());
            };
            let j: usize = j.parse().map_err(|_| bad())?;
            if !(1..=self.workers).contains(&j) {
                return Err(bad());
            }
            Ok(((0, j - 1), output))
        } else {
            match port {
                "out" => Ok(((m, 0), true)),
                "in" => Ok(((m, 0), false)),
                _ => Err(bad()),
            }
        }
    }

    /// The coupling the file describes, with port directions checked.
    pub fn coupling(&self) -> Result<Coupling, TopologyFileError> {
        let mut coupling = Coupling::default();
        for c in &self.connect {
            let (from, out) = self.endpoint(&c.from)?;
            if !out {
                return Err(TopologyFileError::NotOutput(c.from.clone()));
            }
            let (to, out) = self.endpoint(&c.to)?;
            if out {
                return Err(TopologyFileError::NotInput(c.to.clone()));
            }
            coupling.connections.push((from, to));
        }
        Ok(coupling)
    }
}
