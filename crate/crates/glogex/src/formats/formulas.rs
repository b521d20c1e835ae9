//! `formulas.json`: one DNF per class over concept literals.
//!
//! ```json
//! {"format_version":1,"kind":"formulas","concepts":6,"table_rows":9,"accuracy":0.97,
//!  "formulas":[{"class":1,"clauses":[[{"concept":0,"polarity":true},{"concept":2,"polarity":false}]],
//!               "display_raw":"(P0 ∧ ¬P2)","display_positive_only":"P0","display_note":"...","accuracy":0.98}]}
//! ```
//!
//! `clauses` holds the full (simplified) DNF with negative literals;
//! `display_positive_only` drops them for reading. A formula's
//! `accuracy` scores it as a detector of its class on the test split;
//! the top-level `accuracy` is the test formula accuracy of the pair.

use std::path::Path;

use glogex_core::glg::{Clause, LogicFormula};
use serde::{Deserialize, Serialize};

use super::FORMAT_VERSION;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Literal {
    pub concept: usize,
    pub polarity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulaRecord {
    pub class: u8,
    pub clauses: Vec<Vec<Literal>>,
    pub display_raw: String,
    pub display_positive_only: String,
    pub display_note: String,
    pub accuracy: f64,
}

impl FormulaRecord {
    pub fn new(f: &LogicFormula, accuracy: f64) -> Self {
        let positive = f.display_positive();
        Self {
            class: f.class,
            clauses: f
                .clauses
                .iter()
                .map(|c| c.iter().map(|(&concept, &polarity)| Literal { concept, polarity }).collect())
                .collect(),
            display_raw: f.display_raw(),
            display_positive_only: positive.text,
            display_note: positive.note,
            accuracy,
        }
    }

    pub fn formula(&self, concepts: usize) -> LogicFormula {
        LogicFormula {
            class: self.class,
            concepts,
            clauses: self
                .clauses
                .iter()
                .map(|c| c.iter().map(|l| (l.concept, l.polarity)).collect::<Clause>())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulasFile {
    pub format_version: u32,
    pub kind: String,
    pub concepts: usize,
    pub table_rows: usize,
    pub accuracy: f64,
    pub formulas: Vec<FormulaRecord>,
}

impl FormulasFile {
    pub const KIND: &'static str = "formulas";

    pub fn new(concepts: usize, table_rows: usize, accuracy: f64, formulas: Vec<FormulaRecord>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind: Self::KIND.into(),
            concepts,
            table_rows,
            accuracy,
            formulas,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        super::checkpoint::read_versioned(path, Self::KIND)
    }

    /// Formulas indexed by class.
    pub fn logic(&self) -> Vec<LogicFormula> {
        self.formulas.iter().map(|f| f.formula(self.concepts)).collect()
    }
}
