//! Truth tables over pooled concept bits and the DNF formulas read from
//! them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Distinct `(bits, predicted class)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TruthTable {
    pub concepts: usize,
    pub rows: BTreeSet<(Vec<bool>, u8)>,
}

impl TruthTable {
    pub fn new(concepts: usize) -> Self {
        Self {
            concepts,
            rows: BTreeSet::new(),
        }
    }

    pub fn insert(&mut self, bits: Vec<bool>, class: u8) -> Result<()> {
        if bits.len() != self.concepts {
            return Err(Error::LengthMismatch {
                left: bits.len(),
                right: self.concepts,
            });
        }
        self.rows.insert((bits, class));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// A conjunction: concept index → required value.
pub type Clause = BTreeMap<usize, bool>;

/// Disjunction of clauses over concepts `P0 … P{m−1}` describing one class.
/// No clauses is `False`; an empty clause is `True`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicFormula {
    pub class: u8,
    pub concepts: usize,
    pub clauses: Vec<Clause>,
}

/// Positive-literal rendering plus the reading it depends on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositiveDisplay {
    pub text: String,
    pub note: String,
}

pub const IMPLICIT_NEGATION_NOTE: &str = "concepts missing from a clause are implicitly negated";

/// One full minterm per table row predicting `class`.
pub fn table_to_dnf(table: &TruthTable, class: u8) -> LogicFormula {
    let clauses = table
        .rows
        .iter()
        .filter(|(_, c)| *c == class)
        .map(|(bits, _)| bits.iter().copied().enumerate().collect())
        .collect();
    LogicFormula {
        class,
        concepts: table.concepts,
        clauses,
    }
}

impl LogicFormula {
    pub fn constant_false(class: u8, concepts: usize) -> Self {
        Self {
            class,
            concepts,
            clauses: Vec::new(),
        }
    }

    pub fn evaluate(&self, bits: &[bool]) -> bool {
        self.clauses
            .iter()
            .any(|c| c.iter().all(|(&k, &v)| bits.get(k).copied().unwrap_or(false) == v))
    }

    fn normalize(&mut self) {
        self.clauses.sort();
        self.clauses.dedup();
    }

    /// Repeats duplicate removal, absorption and merging of clauses that
    /// differ only in one literal's polarity until nothing changes.
    pub fn simplify(&self) -> LogicFormula {
        let mut f = self.clone();
        f.normalize();
        loop {
            let before = f.clauses.clone();
            f.absorb();
            f.merge_complements();
            f.normalize();
            if f.clauses == before {
                return f;
            }
        }
    }

    fn absorb(&mut self) {
        let clauses = core::mem::take(&mut self.clauses);
        let subsumed = |c: &Clause, d: &Clause| d.len() < c.len() && d.iter().all(|(k, v)| c.get(k) == Some(v));
        self.clauses = clauses
            .iter()
            .filter(|c| !clauses.iter().any(|d| subsumed(c, d)))
            .cloned()
            .collect();
    }

    fn merge_complements(&mut self) {
        let n = self.clauses.len();
        let mut used = alloc::vec![false; n];
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            for j in i + 1..n {
                if used[i] || used[j] {
                    continue;
                }
                if let Some(k) = complement_literal(&self.clauses[i], &self.clauses[j]) {
                    let mut merged = self.clauses[i].clone();
                    merged.remove(&k);
                    out.push(merged);
                    used[i] = true;
                    used[j] = true;
                }
            }
        }
        out.extend(self.clauses.iter().zip(&used).filter(|(_, u)| !**u).map(|(c, _)| c.clone()));
        self.clauses = out;
    }

    /// All literals, e.g. `(P0 ∧ ¬P1) ∨ (¬P0 ∧ P1)`.
    pub fn display_raw(&self) -> String {
        let mut f = self.clone();
        f.normalize();
        match f.clauses.as_slice() {
            [] => String::from("False"),
            [only] => clause_text(only, true),
            many => join_clauses(many.iter().map(|c| clause_text(c, true)).collect()),
        }
    }

    /// Only the positive literals of each clause.
    pub fn display_positive(&self) -> PositiveDisplay {
        let mut texts: Vec<String> = self.clauses.iter().map(|c| clause_text(c, false)).collect();
        texts.sort();
        texts.dedup();
        let text = match texts.len() {
            0 => String::from("False"),
            1 => texts.pop().unwrap_or_default(),
            _ => join_clauses(texts),
        };
        PositiveDisplay {
            text,
            note: String::from(IMPLICIT_NEGATION_NOTE),
        }
    }

    /// Parses the raw rendering. Accepts `∧`/`&`, `∨`/`|`, `¬`/`!`/`~`,
    /// `P<k>` literals, parenthesized clauses and the constants
    /// `True`/`False`.
    pub fn parse(text: &str, class: u8, concepts: usize) -> Result<LogicFormula> {
        Parser::new(text, concepts).formula(class)
    }
}

fn complement_literal(a: &Clause, b: &Clause) -> Option<usize> {
    if a.len() != b.len() || !a.keys().eq(b.keys()) {
        return None;
    }
    let mut diff = a.iter().filter(|(k, v)| b.get(*k) != Some(*v)).map(|(k, _)| *k);
    match (diff.next(), diff.next()) {
        (Some(k), None) => Some(k),
        _ => None,
    }
}

fn clause_text(c: &Clause, with_negations: bool) -> String {
    let mut parts = Vec::new();
    for (&k, &v) in c {
        if v {
            parts.push(alloc::format!("P{k}"));
        } else if with_negations {
            parts.push(alloc::format!("¬P{k}"));
        }
    }
    if parts.is_empty() {
        return String::from(if with_negations || c.is_empty() { "True" } else { "(none)" });
    }
    parts.join(" ∧ ")
}

fn join_clauses(texts: Vec<String>) -> String {
    let mut out = String::new();
    for (i, t) in texts.iter().enumerate() {
        if i > 0 {
            out.push_str(" ∨ ");
        }
        if t.contains(" ∧ ") {
            let _ = write!(out, "({t})");
        } else {
            out.push_str(t);
        }
    }
    out
}

struct Parser {
    chars: Vec<(usize, char)>,
    pos: usize,
    concepts: usize,
}

impl Parser {
    fn new(src: &str, concepts: usize) -> Self {
        Self {
            chars: src.char_indices().filter(|(_, c)| !c.is_whitespace()).collect(),
            pos: 0,
            concepts,
        }
    }

    fn err(&self, msg: &str) -> Error {
        let pos = self.chars.get(self.pos).map_or(usize::MAX, |(i, _)| *i);
        Error::Parse {
            pos,
            msg: String::from(msg),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|(_, c)| *c)
    }

    fn eat(&mut self, options: &[char]) -> bool {
        if self.peek().is_some_and(|c| options.contains(&c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, word: &str) -> bool {
        let n = word.chars().count();
        let matches = self.chars.len() >= self.pos + n
            && self.chars[self.pos..self.pos + n].iter().map(|(_, c)| *c).eq(word.chars());
        if matches {
            self.pos += n;
        }
        matches
    }

    fn formula(mut self, class: u8) -> Result<LogicFormula> {
        let mut clauses = Vec::new();
        if self.keyword("False") {
            if self.peek().is_some() {
                return Err(self.err("unexpected text after False"));
            }
        } else {
            loop {
                if let Some(c) = self.clause()? {
                    clauses.push(c);
                }
                if self.peek().is_none() {
                    break;
                }
                if !self.eat(&['∨', '|']) {
                    return Err(self.err("expected ∨"));
                }
            }
        }
        let mut f = LogicFormula {
            class,
            concepts: self.concepts,
            clauses,
        };
        f.normalize();
        Ok(f)
    }

    /// `None` for a clause that is `False`.
    fn clause(&mut self) -> Result<Option<Clause>> {
        let wrapped = self.eat(&['(']);
        let mut clause = Clause::new();
        let mut is_false = false;
        loop {
            if self.keyword("True") {
            } else if self.keyword("False") {
                is_false = true;
            } else {
                let negated = self.eat(&['¬', '!', '~']);
                if !self.eat(&['P']) {
                    return Err(self.err("expected a literal"));
                }
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                if start == self.pos {
                    return Err(self.err("expected a concept index"));
                }
                let digits: String = self.chars[start..self.pos].iter().map(|(_, c)| *c).collect();
                let k: usize = digits.parse().map_err(|_| self.err("concept index overflow"))?;
                if k >= self.concepts {
                    self.pos = start;
                    return Err(self.err("concept index out of range"));
                }
                match clause.insert(k, !negated) {
                    Some(prev) if prev == negated => is_false = true,
                    _ => {}
                }
            }
            if !self.eat(&['∧', '&']) {
                break;
            }
        }
        if wrapped && !self.eat(&[')']) {
            return Err(self.err("expected )"));
        }
        Ok(if is_false { None } else { Some(clause) })
    }
}
