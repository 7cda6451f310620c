//! BNF production tables and trace-customized grammar generation.
//!
//! Rules have the form `<Name> ::= alt | alt ...`. A line starting with `|`
//! continues the previous rule and `#` starts a comment. Inside an
//! alternative, `<Name>` references a nonterminal and every other run of text
//! is a terminal kept verbatim (alternatives are trimmed at both ends). The
//! first rule is the start symbol. Alternatives are indexed in source order;
//! the indices are what codons select.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write;

use crate::dmm_space::HwParams;
use crate::trace::TraceStats;

/// The grammar shipped with the library.
pub const DEFAULT_GRAMMAR: &str = include_str!("../grammars/default.bnf");

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Symbol {
    Terminal(String),
    /// Index into [`Grammar::rules`].
    NonTerminal(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub alternatives: Vec<Vec<Symbol>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    rules: Vec<Rule>,
    start: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("line {line}: undefined nonterminal <{name}>")]
    Undefined { line: usize, name: String },
    #[error("line {line}: empty alternative in <{name}>")]
    EmptyAlternative { line: usize, name: String },
    #[error("grammar has no rules")]
    NoRules,
    #[error("line {line}: rule <{name}> defined twice")]
    Duplicate { line: usize, name: String },
    #[error("line {line}: expected `<Name> ::=` or a `|` continuation")]
    Syntax { line: usize },
}

struct RawRule {
    name: String,
    line: usize,
    body: String,
}

fn nonterminal_at(s: &str) -> Option<(&str, usize)> {
    let rest = s.strip_prefix('<')?;
    let end = rest.find('>')?;
    let name = &rest[..end];
    let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    ok.then_some((name, end + 2))
}

impl Grammar {
    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        let mut raw: Vec<RawRule> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('|') {
                let last = raw.last_mut().ok_or(GrammarError::Syntax { line: line_no })?;
                last.body.push(' ');
                last.body.push_str(line);
                continue;
            }
            let (name, used) = nonterminal_at(line).ok_or(GrammarError::Syntax { line: line_no })?;
            let body = line[used..]
                .trim_start()
                .strip_prefix("::=")
                .ok_or(GrammarError::Syntax { line: line_no })?;
            if raw.iter().any(|r| r.name == name) {
                return Err(GrammarError::Duplicate { line: line_no, name: name.to_string() });
            }
            raw.push(RawRule { name: name.to_string(), line: line_no, body: body.to_string() });
        }
        if raw.is_empty() {
            return Err(GrammarError::NoRules);
        }

        let mut rules = Vec::with_capacity(raw.len());
        for r in &raw {
            let mut alternatives = Vec::new();
            for alt in r.body.split('|') {
                let alt = alt.trim();
                if alt.is_empty() {
                    return Err(GrammarError::EmptyAlternative { line: r.line, name: r.name.clone() });
                }
                alternatives.push(Self::symbols(alt, &raw, r.line)?);
            }
            rules.push(Rule { name: r.name.clone(), alternatives });
        }
        Ok(Self { rules, start: 0 })
    }

    fn symbols(alt: &str, raw: &[RawRule], line: usize) -> Result<Vec<Symbol>, GrammarError> {
        let mut out = Vec::new();
        let mut text = String::new();
        let mut rest = alt;
        while let Some(c) = rest.chars().next() {
            if let Some((name, used)) = nonterminal_at(rest) {
                let idx = raw
                    .iter()
                    .position(|r| r.name == name)
                    .ok_or_else(|| GrammarError::Undefined { line, name: name.to_string() })?;
                if !text.is_empty() {
                    out.push(Symbol::Terminal(core::mem::take(&mut text)));
                }
                out.push(Symbol::NonTerminal(idx));
                rest = &rest[used..];
            } else {
                text.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
        if !text.is_empty() {
            out.push(Symbol::Terminal(text));
        }
        Ok(out)
    }

    /// The grammar in [`DEFAULT_GRAMMAR`].
    pub fn default_dmm() -> Self {
        Self::parse(DEFAULT_GRAMMAR).expect("shipped grammar parses")
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn rule(&self, idx: usize) -> &Rule {
        &self.rules[idx]
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.name == name)
    }

    /// Distinct terminal strings.
    pub fn terminals(&self) -> BTreeSet<&str> {
        self.rules
            .iter()
            .flat_map(|r| r.alternatives.iter().flatten())
            .filter_map(|s| match s {
                Symbol::Terminal(t) => Some(t.as_str()),
                Symbol::NonTerminal(_) => None,
            })
            .collect()
    }

    /// Rules that can derive a string of terminals only.
    pub fn productive(&self) -> Vec<bool> {
        let mut done = alloc::vec![false; self.rules.len()];
        loop {
            let mut changed = false;
            for (i, rule) in self.rules.iter().enumerate() {
                if done[i] {
                    continue;
                }
                let ok = rule.alternatives.iter().any(|alt| {
                    alt.iter().all(|s| match s {
                        Symbol::Terminal(_) => true,
                        Symbol::NonTerminal(j) => done[*j],
                    })
                });
                if ok {
                    done[i] = true;
                    changed = true;
                }
            }
            if !changed {
                return done;
            }
        }
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            write!(f, "<{}> ::=", rule.name)?;
            for (i, alt) in rule.alternatives.iter().enumerate() {
                f.write_str(if i == 0 { " " } else { "\n    | " })?;
                for s in alt {
                    match s {
                        Symbol::Terminal(t) => f.write_str(t)?,
                        Symbol::NonTerminal(j) => write!(f, "<{}>", self.rules[*j].name)?,
                    }
                }
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

/// Free-function form of [`Grammar::parse`].
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    Grammar::parse(text)
}

const MAX_BANDS: usize = 16;

/// Groups sorted distinct sizes into bands, breaking where a size more than
/// doubles its predecessor; the closest bands are merged down to
/// [`MAX_BANDS`].
pub fn size_bands(sizes: &[u64]) -> Vec<(u64, u64)> {
    let mut bands: Vec<(u64, u64)> = Vec::new();
    for &s in sizes {
        match bands.last_mut() {
            Some((_, hi)) if s <= hi.saturating_mul(2) => *hi = s,
            _ => bands.push((s, s)),
        }
    }
    while bands.len() > MAX_BANDS {
        let i = (0..bands.len() - 1)
            .min_by(|&a, &b| {
                let ga = bands[a + 1].0 as f64 / bands[a].1 as f64;
                let gb = bands[b + 1].0 as f64 / bands[b].1 as f64;
                ga.total_cmp(&gb)
            })
            .unwrap();
        bands[i].1 = bands[i + 1].1;
        bands.remove(i + 1);
    }
    bands
}

/// Emits the default grammar specialised to a trace: selectors for every
/// size band and the power-of-two classes spanning the observed sizes, and a
/// backstop bounded by the platform memory.
pub fn generate_grammar(stats: &TraceStats, hw: &HwParams) -> String {
    let mut selectors: Vec<String> = Vec::new();
    let mut push = |s: String| {
        if !selectors.contains(&s) {
            selectors.push(s);
        }
    };
    let sizes = &stats.distinct_sizes;
    let mut cover_max = crate::dmm_space::DEFAULT_COALESCE_MAX;
    if let (Some(&min), Some(&max)) = (sizes.first(), sizes.last()) {
        for (lo, hi) in size_bands(sizes) {
            if lo == hi {
                push(format!("SizeSelector({lo})"));
            } else {
                push(format!("RangeSelector({lo}, {})", hi + 1));
            }
        }
        if sizes.len() > 1 {
            push(format!("RangeSelector({min}, {})", max + 1));
        }
        let lo = min.next_power_of_two().trailing_zeros();
        let hi = max.next_power_of_two().trailing_zeros();
        for k in lo..=hi {
            push(format!("SizeSelector({})", 1u64 << k));
        }
        cover_max = max.next_power_of_two();
    } else {
        push("SizeSelector".to_string());
        push("RangeSelector".to_string());
    }
    push("TrueSelector".to_string());

    let mut text = String::new();
    text.push_str("# Grammar generated from trace statistics.\n");
    let _ = writeln!(
        text,
        "# {} events, {} distinct sizes, max live {} bytes\n",
        stats.event_count,
        sizes.len(),
        stats.max_live_bytes
    );
    text.push_str("<CustomDMM> ::= AtomicDMM(<DataStructure>, <Selector>, <Migration>, <NextADM>)\n\n");
    text.push_str("<DataStructure> ::= FirstFitSLL(<Header>) | <OtherDataStructure>\n\n");
    text.push_str("<OtherDataStructure> ::= BestFitSLL(<Header>) | FirstFitDLL(<Header>)\n");
    text.push_str("    | BestFitDLL(<Header>) | ExactFitSLL(<Header>)\n\n");
    text.push_str("<Header> ::= EmptyHeader | SizeHeader | SizeStatusHeader\n\n");
    text.push_str("<Selector> ::= ");
    text.push_str(&selectors.join("\n    | "));
    text.push_str("\n\n<Migration> ::= ");
    text.push_str(&selectors.join("\n    | "));
    let _ = write!(text, "\n    | SplitAndCoalesce(16, {cover_max})");
    let _ = writeln!(text, "\n    | SplitAndCoalesce(64, {cover_max})\n");
    let _ = writeln!(text, "<NextADM> ::= OperatingSystem({}) | <CustomDMM>", hw.memory_size);
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn stats(sizes: &[u64]) -> TraceStats {
        TraceStats { distinct_sizes: sizes.to_vec(), ..TraceStats::default() }
    }

    fn alternatives(g: &Grammar, name: &str) -> Vec<String> {
        let rule = g.rule(g.find(name).unwrap());
        rule.alternatives
            .iter()
            .map(|alt| {
                alt.iter()
                    .map(|s| match s {
                        Symbol::Terminal(t) => t.clone(),
                        Symbol::NonTerminal(j) => format!("<{}>", g.rule(*j).name),
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn header_group_indices() {
        let g = Grammar::parse("<H> ::= EmptyHeader | SizeHeader").unwrap();
        assert_eq!(alternatives(&g, "H"), vec!["EmptyHeader", "SizeHeader"]);
    }

    #[test]
    fn undefined_nonterminal() {
        assert_eq!(
            Grammar::parse("<S> ::= <T>"),
            Err(GrammarError::Undefined { line: 1, name: "T".into() })
        );
    }

    #[test]
    fn structural_errors() {
        assert_eq!(Grammar::parse("# nothing\n\n"), Err(GrammarError::NoRules));
        assert!(matches!(Grammar::parse("<S> ::= a | | b"), Err(GrammarError::EmptyAlternative { .. })));
        assert!(matches!(Grammar::parse("<S> ::= a\n<S> ::= b"), Err(GrammarError::Duplicate { line: 2, .. })));
        assert!(matches!(Grammar::parse("S ::= a"), Err(GrammarError::Syntax { line: 1 })));
        assert!(matches!(Grammar::parse("| a"), Err(GrammarError::Syntax { line: 1 })));
    }

    #[test]
    fn default_grammar_shape() {
        let g = Grammar::default_dmm();
        assert_eq!(g.rule(g.start()).name, "CustomDMM");
        assert_eq!(g.rule(g.start()).alternatives.len(), 1);
        assert_eq!(alternatives(&g, "DataStructure"), vec!["FirstFitSLL(<Header>)", "<OtherDataStructure>"]);
        assert_eq!(alternatives(&g, "Header")[1], "SizeHeader");
        assert_eq!(g.rule(g.find("OtherDataStructure").unwrap()).alternatives.len(), 4);
        assert!(g.productive().iter().all(|&p| p));
    }

    #[test]
    fn whitespace_and_comments_keep_indices() {
        let a = Grammar::parse("<S> ::= x | y | z").unwrap();
        let b = Grammar::parse("# c\n<S> ::=   x   # first\n  | y\n\n  |   z  \n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn display_round_trips() {
        let g = Grammar::default_dmm();
        assert_eq!(Grammar::parse(&g.to_string()).unwrap(), g);
    }

    #[test]
    fn single_size_grammar() {
        let text = generate_grammar(&stats(&[32]), &HwParams::default());
        let g = Grammar::parse(&text).unwrap();
        let sel = alternatives(&g, "Selector");
        assert!(sel.contains(&"SizeSelector(32)".to_string()));
        assert!(sel.contains(&"TrueSelector".to_string()));
        assert_eq!(alternatives(&g, "NextADM")[0], format!("OperatingSystem({})", 256u64 << 20));
    }

    #[test]
    fn four_band_grammar() {
        let sizes = [32, 756, 800, 1000, 1024, 8192, 151 * 1024];
        assert_eq!(
            size_bands(&sizes),
            vec![(32, 32), (756, 1024), (8192, 8192), (151 * 1024, 151 * 1024)]
        );
        let g = Grammar::parse(&generate_grammar(&stats(&sizes), &HwParams::default())).unwrap();
        let sel = alternatives(&g, "Selector");
        for s in ["SizeSelector(32)", "RangeSelector(756, 1025)", "SizeSelector(8192)", "SizeSelector(154624)"] {
            assert!(sel.contains(&s.to_string()), "{s} missing from {sel:?}");
        }
        assert!(g.productive().iter().all(|&p| p));
    }

    #[test]
    fn bands_are_capped() {
        let sizes: Vec<u64> = (0..20).map(|k| 1u64 << (3 * k)).collect();
        let bands = size_bands(&sizes);
        assert_eq!(bands.len(), MAX_BANDS);
        assert_eq!(bands.first().unwrap().0, 1);
        assert_eq!(bands.last().unwrap().1, 1 << 57);
    }

    #[test]
    fn empty_stats_grammar_parses() {
        let g = Grammar::parse(&generate_grammar(&TraceStats::default(), &HwParams::default())).unwrap();
        assert!(g.productive().iter().all(|&p| p));
    }
}
