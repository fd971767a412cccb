//! Line-oriented text dump of a sparse state.
//!
//! One line per stored amplitude:
//!
//! ```text
//! <re> <im> | <ancilla or -> | <register 1 cycles> | <register 2 cycles> ...
//! ```
//!
//! Registers are printed in cycle notation, identity as `()`.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::{RegisterLayout, SparseState};
use crate::error::{Error, Result};
use crate::permgroup::Permutation;

impl SparseState {
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (ancilla, regs, amp) in self.terms() {
            let ancilla = if self.layout.has_ancilla {
                ancilla.to_string()
            } else {
                "-".to_string()
            };
            let _ = write!(out, "{} {} | {}", amp.re, amp.im, ancilla);
            for r in regs {
                let _ = write!(out, " | {r}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`SparseState::dump`] output. The result is normalized.
    pub fn parse_dump(layout: RegisterLayout, text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let bad = |reason: &str| Error::Parse {
                input: line.to_string(),
                reason: reason.to_string(),
            };
            let fields: Vec<&str> = line.split('|').map(str::trim).collect();
            if fields.len() != 2 + layout.perm_registers {
                return Err(bad("wrong number of fields"));
            }
            let mut amp = fields[0].split_whitespace();
            let mut next = || -> Result<f64> {
                amp.next()
                    .ok_or_else(|| bad("missing amplitude component"))?
                    .parse()
                    .map_err(|_| bad("bad amplitude"))
            };
            let amp = Complex64::new(next()?, next()?);
            let ancilla = match (layout.has_ancilla, fields[1]) {
                (false, "-") => 0,
                (true, "0") => 0,
                (true, "1") => 1,
                _ => return Err(bad("bad ancilla field")),
            };
            let regs = fields[2..]
                .iter()
                .map(|f| Permutation::parse_cycles(layout.n, f))
                .collect::<Result<Vec<_>>>()?;
            terms.push((ancilla, regs, amp));
        }
        Self::from_terms(layout, terms)
    }
}
