//! DMM files: the nested `AtomicDMM(...)` text, possibly over several lines,
//! with `#` comments.

use std::path::Path;

use dmmgen_core::dmm_space::{parse_dmm, validate, DmmConfig, ExprError, Violation};

#[derive(Debug, thiserror::Error)]
pub enum DmmFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Parse(#[from] ExprError),
    #[error("invalid DMM: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

pub fn parse_dmm_file(text: &str) -> Result<DmmConfig, DmmFileError> {
    let body: String = text.lines().map(|l| l.split('#').next().unwrap_or("")).collect::<Vec<_>>().join(" ");
    let dmm = parse_dmm(&body)?;
    let violations = validate(&dmm);
    if violations.is_empty() {
        Ok(dmm)
    } else {
        Err(DmmFileError::Invalid(violations))
    }
}

pub fn load_dmm(path: &Path) -> Result<DmmConfig, DmmFileError> {
    parse_dmm_file(&std::fs::read_to_string(path)?)
}
