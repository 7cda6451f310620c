//! Nested `AtomicDMM(...)` text form of a [`DmmConfig`].
//!
//! ```text
//! dmm       := "AtomicDMM(" structure "," selector "," migration "," dmm ")"
//!            | "OperatingSystem" [ "(" size [ "," size ] ")" ]
//! structure := ("FirstFit" | "BestFit" | "ExactFit") ("SLL" | "DLL") "(" header ")"
//! header    := "EmptyHeader" | "SizeHeader" | "SizeStatusHeader"
//! selector  := "SizeSelector" [ "(" size ")" ]
//!            | "RangeSelector" [ "(" size "," size ")" ]
//!            | "TrueSelector"
//! migration := selector | "Fixed"
//!            | "SplitOnly" [ "(" size ")" ] | "CoalesceOnly" [ "(" size ")" ]
//!            | "SplitAndCoalesce" [ "(" size "," size ")" ]
//! size      := digits [ "K" | "KB" | "M" | "MB" ]
//! ```
//!
//! Selectors written without arguments take the power-of-two class of their
//! position in the chain: the ADM at depth `i` gets `SizeSelector(2^(i+3))`
//! and `RangeSelector(2^(i+3), 2^(i+4))`. A chain of bare size selectors is
//! therefore the Kingsley ladder. A bare `OperatingSystem` is unbounded up to
//! the platform memory size.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::*;

/// Minimum split remainder of a bare `SplitAndCoalesce`/`SplitOnly`.
pub const DEFAULT_SPLIT_MIN: u64 = 16;
/// Maximum coalesced block of a bare `SplitAndCoalesce`/`CoalesceOnly`.
pub const DEFAULT_COALESCE_MAX: u64 = 1 << 30;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("at byte {pos}: expected {expected}")]
    Expected { pos: usize, expected: &'static str },
    #[error("at byte {pos}: unknown name `{name}`")]
    UnknownName { pos: usize, name: String },
    #[error("at byte {pos}: bad size literal")]
    BadSize { pos: usize },
    #[error("trailing input at byte {pos}")]
    Trailing { pos: usize },
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8, expected: &'static str) -> Result<(), ExprError> {
        match self.peek() {
            None => Err(ExprError::UnexpectedEnd),
            Some(_) if self.eat(c) => Ok(()),
            Some(_) => Err(ExprError::Expected { pos: self.pos, expected }),
        }
    }

    fn ident(&mut self) -> Result<(usize, &'a str), ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        if start == self.pos {
            return if start == self.src.len() {
                Err(ExprError::UnexpectedEnd)
            } else {
                Err(ExprError::Expected { pos: start, expected: "a name" })
            };
        }
        // identifiers are ASCII alphanumerics
        Ok((start, core::str::from_utf8(&self.src[start..self.pos]).unwrap()))
    }

    fn size(&mut self) -> Result<u64, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ExprError::BadSize { pos: start });
        }
        let digits = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: u64 = digits.parse().map_err(|_| ExprError::BadSize { pos: start })?;
        let rest = &self.src[self.pos..];
        let (shift, len) = if rest.starts_with(b"KB") {
            (10, 2)
        } else if rest.starts_with(b"MB") {
            (20, 2)
        } else if rest.starts_with(b"K") {
            (10, 1)
        } else if rest.starts_with(b"M") {
            (20, 1)
        } else {
            (0, 0)
        };
        self.pos += len;
        value.checked_shl(shift).filter(|v| v >> shift == value).ok_or(ExprError::BadSize { pos: start })
    }

    fn args(&mut self, n: usize) -> Result<Option<Vec<u64>>, ExprError> {
        if !self.eat(b'(') {
            return Ok(None);
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                self.expect(b',', "`,`")?;
            }
            out.push(self.size()?);
        }
        self.expect(b')', "`)`")?;
        Ok(Some(out))
    }

    /// `OperatingSystem` takes one or two arguments.
    fn os_args(&mut self) -> Result<OsBackstop, ExprError> {
        let mut os = OsBackstop::default();
        if self.eat(b'(') {
            os.heap_limit = self.size()?;
            if self.eat(b',') {
                os.chunk_granularity = self.size()?;
            }
            self.expect(b')', "`)`")?;
        }
        Ok(os)
    }

    fn selector(&mut self, depth: usize) -> Result<Option<BlockSizes>, ExprError> {
        let save = self.pos;
        let (_, name) = self.ident()?;
        let class = class_of(depth);
        let sel = match name {
            "SizeSelector" => match self.args(1)? {
                Some(a) => BlockSizes::One(a[0]),
                None => BlockSizes::One(class),
            },
            "RangeSelector" => match self.args(2)? {
                Some(a) => BlockSizes::Range { min: a[0], max: a[1] },
                None => BlockSizes::Range { min: class, max: class.saturating_mul(2) },
            },
            "TrueSelector" => BlockSizes::ANY,
            _ => {
                self.pos = save;
                return Ok(None);
            }
        };
        Ok(Some(sel))
    }

    fn dmm(&mut self, depth: usize, adms: &mut Vec<AdmConfig>) -> Result<OsBackstop, ExprError> {
        let (pos, name) = self.ident()?;
        match name {
            "OperatingSystem" => self.os_args(),
            "AtomicDMM" => {
                self.expect(b'(', "`(`")?;
                let adm = self.adm(depth)?;
                adms.push(adm);
                self.expect(b',', "`,`")?;
                let os = self.dmm(depth + 1, adms)?;
                self.expect(b')', "`)`")?;
                Ok(os)
            }
            _ => Err(ExprError::UnknownName { pos, name: name.into() }),
        }
    }

    fn adm(&mut self, depth: usize) -> Result<AdmConfig, ExprError> {
        let (pos, name) = self.ident()?;
        let (policy, list) = name.split_at(name.len().saturating_sub(3));
        let allocation_policy = match policy {
            "FirstFit" => AllocationPolicy::FirstFit,
            "BestFit" => AllocationPolicy::BestFit,
            "ExactFit" => AllocationPolicy::ExactFit,
            _ => return Err(ExprError::UnknownName { pos, name: name.into() }),
        };
        let data_structure = match list {
            "SLL" => DataStructure::SinglyLinkedList,
            "DLL" => DataStructure::DoublyLinkedList,
            _ => return Err(ExprError::UnknownName { pos, name: name.into() }),
        };
        self.expect(b'(', "`(`")?;
        let (pos, header) = self.ident()?;
        let block_tags = match header {
            "EmptyHeader" => BlockTags::None,
            "SizeHeader" => BlockTags::HeaderSize,
            "SizeStatusHeader" => BlockTags::HeaderSizeStatus,
            _ => return Err(ExprError::UnknownName { pos, name: header.into() }),
        };
        self.expect(b')', "`)`")?;
        self.expect(b',', "`,`")?;
        let pos = self.pos;
        let block_sizes = self
            .selector(depth)?
            .ok_or(ExprError::Expected { pos, expected: "a selector" })?;
        self.expect(b',', "`,`")?;

        let base = AdmConfig::fixed(data_structure, allocation_policy, block_tags, block_sizes);
        if let Some(migration) = self.selector(depth)? {
            return Ok(AdmConfig { migration, ..base });
        }
        let (pos, name) = self.ident()?;
        let adm = match name {
            "Fixed" => base,
            "SplitOnly" => {
                let min = self.args(1)?.map_or(DEFAULT_SPLIT_MIN, |a| a[0]);
                base.with_flexible(FlexibleManager::SplitOnly, min, 0)
            }
            "CoalesceOnly" => {
                let max = self.args(1)?.map_or(DEFAULT_COALESCE_MAX, |a| a[0]);
                base.with_flexible(FlexibleManager::CoalesceOnly, 0, max)
            }
            "SplitAndCoalesce" => {
                let (min, max) = self
                    .args(2)?
                    .map_or((DEFAULT_SPLIT_MIN, DEFAULT_COALESCE_MAX), |a| (a[0], a[1]));
                base.with_flexible(FlexibleManager::SplitAndCoalesce, min, max)
            }
            _ => return Err(ExprError::UnknownName { pos, name: name.into() }),
        };
        Ok(adm)
    }
}

fn class_of(depth: usize) -> u64 {
    1u64.checked_shl(depth as u32 + 3).unwrap_or(1 << 63)
}

/// Parses the nested text form.
pub fn parse_dmm(text: &str) -> Result<DmmConfig, ExprError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let mut adms = Vec::new();
    let backstop = p.dmm(0, &mut adms)?;
    if p.peek().is_some() {
        return Err(ExprError::Trailing { pos: p.pos });
    }
    Ok(DmmConfig { adms, backstop })
}

impl fmt::Display for BlockSizes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            _ if self.is_any() => f.write_str("TrueSelector"),
            BlockSizes::One(s) => write!(f, "SizeSelector({s})"),
            BlockSizes::Range { min, max } => write!(f, "RangeSelector({min}, {max})"),
        }
    }
}

impl fmt::Display for AdmConfig {
    /// Everything but the trailing `NextADM` slot and closing parenthesis.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let policy = match self.allocation_policy {
            AllocationPolicy::FirstFit => "FirstFit",
            AllocationPolicy::BestFit => "BestFit",
            AllocationPolicy::ExactFit => "ExactFit",
        };
        let list = match self.data_structure {
            DataStructure::SinglyLinkedList => "SLL",
            DataStructure::DoublyLinkedList => "DLL",
        };
        let header = match self.block_tags {
            BlockTags::None => "EmptyHeader",
            BlockTags::HeaderSize => "SizeHeader",
            BlockTags::HeaderSizeStatus => "SizeStatusHeader",
        };
        write!(f, "AtomicDMM({policy}{list}({header}), {}, ", self.block_sizes)?;
        match self.flexible_manager {
            FlexibleManager::Fixed => write!(f, "{}", self.migration),
            FlexibleManager::SplitOnly => write!(f, "SplitOnly({})", self.splitting.min_result_size),
            FlexibleManager::CoalesceOnly => {
                write!(f, "CoalesceOnly({})", self.coalescing.max_result_size)
            }
            FlexibleManager::SplitAndCoalesce => write!(
                f,
                "SplitAndCoalesce({}, {})",
                self.splitting.min_result_size, self.coalescing.max_result_size
            ),
        }
    }
}

impl fmt::Display for OsBackstop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let default = OsBackstop::default();
        if *self == default {
            f.write_str("OperatingSystem")
        } else if self.chunk_granularity == default.chunk_granularity {
            write!(f, "OperatingSystem({})", self.heap_limit)
        } else {
            write!(f, "OperatingSystem({}, {})", self.heap_limit, self.chunk_granularity)
        }
    }
}

impl fmt::Display for DmmConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for adm in &self.adms {
            write!(f, "{adm}, ")?;
        }
        write!(f, "{}", self.backstop)?;
        for _ in &self.adms {
            f.write_str(")")?;
        }
        Ok(())
    }
}
