//! Plain-text traces, one event per line:
//!
//! ```text
//! # id kind size address
//! 1 A 40 0x1000
//! 1 F 40 0x1000
//! ```
//!
//! `kind` is `A` or `F`. The size on a free line is informational; the
//! reader takes it from the matching allocation. Addresses may be decimal or
//! `0x` hexadecimal. `#` starts a comment.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use dmmgen_core::trace::{EventKind, Trace, TraceBuilder, TraceError};

#[derive(Debug, thiserror::Error)]
pub enum TraceIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: TraceError },
}

fn number(field: &str) -> Option<u64> {
    match field.strip_prefix("0x").or_else(|| field.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => field.parse().ok(),
    }
}

pub fn read_trace<R: BufRead>(reader: R) -> Result<Trace, TraceIoError> {
    let mut builder = TraceBuilder::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let syntax = |message: &str| TraceIoError::Syntax { line: line_no, message: message.to_string() };
        let fields: Vec<&str> = body.split_whitespace().collect();
        let [id, kind, size, address] = fields[..] else {
            return Err(syntax("expected `id kind size address`"));
        };
        let id = number(id).ok_or_else(|| syntax("bad object id"))?;
        let size = number(size).ok_or_else(|| syntax("bad size"))?;
        let address = number(address).ok_or_else(|| syntax("bad address"))?;
        let result = match kind {
            "A" | "a" => builder.alloc(id, size, address),
            "F" | "f" => builder.free(id, address),
            _ => return Err(syntax("kind must be A or F")),
        };
        result.map_err(|source| TraceIoError::Invalid { line: line_no, source })?;
    }
    Ok(builder.finish())
}

pub fn load_trace(path: &Path) -> Result<Trace, TraceIoError> {
    read_trace(BufReader::new(File::open(path)?))
}

pub fn write_trace<W: Write>(mut w: W, trace: &Trace) -> io::Result<()> {
    writeln!(w, "# id kind size address")?;
    for e in trace.events() {
        let kind = match e.kind {
            EventKind::Alloc => 'A',
            EventKind::Free => 'F',
        };
        writeln!(w, "{} {kind} {} {:#x}", e.object_id, e.size, e.address)?;
    }
    w.flush()
}

pub fn save_trace(path: &Path, trace: &Trace) -> io::Result<()> {
    write_trace(BufWriter::new(File::create(path)?), trace)
}
