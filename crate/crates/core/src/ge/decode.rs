//! Genotype-to-phenotype mapping by modulus decoding.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dmm_space::{parse_dmm, validate, DmmConfig, ExprError, Violation};
use crate::grammar::{Grammar, Symbol};

use super::Genotype;

/// Why a genotype has no usable phenotype.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InvalidReason {
    #[error("nonterminals left after the wrap budget")]
    WrapBudget,
    #[error("derived text is not a DMM: {0}")]
    Parse(ExprError),
    #[error("derived DMM breaks {} constraint(s), first: {}", .0.len(), .0[0])]
    Constraints(Vec<Violation>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Phenotype {
    Valid(DmmConfig),
    Invalid(InvalidReason),
}

impl Phenotype {
    pub fn dmm(&self) -> Option<&DmmConfig> {
        match self {
            Phenotype::Valid(d) => Some(d),
            Phenotype::Invalid(_) => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, Phenotype::Valid(_))
    }

    /// ADM count, or 0 when invalid.
    pub fn adm_count(&self) -> usize {
        self.dmm().map_or(0, DmmConfig::estimate_cost)
    }
}

/// One production choice of a derivation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub nonterminal: String,
    pub codon: u8,
    pub choice: usize,
    /// Sentential form after the choice, nonterminals written `<Name>`.
    pub form: String,
}

/// Result of mapping a genotype to a terminal string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    /// `None` when the wrap budget ran out.
    pub text: Option<String>,
    pub codons_used: usize,
    pub wraps: usize,
}

struct Mapper<'g, 'c> {
    grammar: &'g Grammar,
    codons: &'c [u8],
    max_wraps: usize,
    next: usize,
    wraps: usize,
    used: usize,
}

impl Mapper<'_, '_> {
    fn codon(&mut self) -> Option<u8> {
        if self.codons.is_empty() {
            return None;
        }
        if self.next == self.codons.len() {
            if self.wraps == self.max_wraps {
                return None;
            }
            self.wraps += 1;
            self.next = 0;
        }
        let c = self.codons[self.next];
        self.next += 1;
        self.used += 1;
        Some(c)
    }
}

/// Leftmost derivation of `codons` under `grammar`, recording each choice
/// in `steps` when given.
fn derive(grammar: &Grammar, codons: &[u8], max_wraps: usize, mut steps: Option<&mut Vec<Step>>) -> Derivation {
    let mut m = Mapper { grammar, codons, max_wraps, next: 0, wraps: 0, used: 0 };
    let mut out = String::new();
    // symbols still to expand, rightmost first
    let mut stack: Vec<&Symbol> = Vec::new();
    let start = Symbol::NonTerminal(grammar.start());
    stack.push(&start);
    while let Some(sym) = stack.pop() {
        let rule_idx = match sym {
            Symbol::Terminal(t) => {
                out.push_str(t);
                continue;
            }
            Symbol::NonTerminal(r) => *r,
        };
        let Some(codon) = m.codon() else {
            return Derivation { text: None, codons_used: m.used, wraps: m.wraps };
        };
        let rule = m.grammar.rule(rule_idx);
        let choice = codon as usize % rule.alternatives.len();
        stack.extend(rule.alternatives[choice].iter().rev());
        if let Some(steps) = steps.as_deref_mut() {
            let mut form = out.clone();
            for s in stack.iter().rev() {
                match s {
                    Symbol::Terminal(t) => form.push_str(t),
                    Symbol::NonTerminal(j) => {
                        form.push('<');
                        form.push_str(&m.grammar.rule(*j).name);
                        form.push('>');
                    }
                }
            }
            steps.push(Step { nonterminal: rule.name.clone(), codon, choice, form });
        }
    }
    Derivation { text: Some(out), codons_used: m.used, wraps: m.wraps }
}

/// Maps codons to a terminal string; reading restarts at codon 0 at most
/// `max_wraps` times.
pub fn derive_text(grammar: &Grammar, codons: &[u8], max_wraps: usize) -> Derivation {
    derive(grammar, codons, max_wraps, None)
}

/// Like [`derive_text`] and also returns every production choice.
pub fn derivation_steps(grammar: &Grammar, codons: &[u8], max_wraps: usize) -> (Derivation, Vec<Step>) {
    let mut steps = vec![];
    let d = derive(grammar, codons, max_wraps, Some(&mut steps));
    (d, steps)
}

/// Decodes a genotype into a DMM. Text that does not parse, or a DMM that
/// breaks a design constraint, is invalid.
pub fn decode(g: &Genotype, grammar: &Grammar, max_wraps: usize) -> Phenotype {
    let Some(text) = derive_text(grammar, g.codons(), max_wraps).text else {
        return Phenotype::Invalid(InvalidReason::WrapBudget);
    };
    let dmm = match parse_dmm(&text) {
        Ok(d) => d,
        Err(e) => return Phenotype::Invalid(InvalidReason::Parse(e)),
    };
    let violations = validate(&dmm);
    if violations.is_empty() {
        Phenotype::Valid(dmm)
    } else {
        Phenotype::Invalid(InvalidReason::Constraints(violations))
    }
}
