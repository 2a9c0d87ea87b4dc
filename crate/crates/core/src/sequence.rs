//! Compiled gate sequences and their line-oriented text format.
//!
//! ```text
//! compsim-sequence 1
//! dim 4
//! order 2
//! time 1
//! gates 4
//! 0 0.5
//! 1 0.5
//! 1 0.5
//! 0 0.5
//! ```
//!
//! Term indices are zero-based. Durations use the shortest representation
//! that round-trips exactly. `order` is an integer for Trotter sequences,
//! `qdrift`, or `composite-<n>`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::linalg::{identity, CMat};
use crate::order::Order;

const MAGIC: &str = "compsim-sequence 1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gate {
    pub term: usize,
    /// The gate is `e^{i h_j H_j τ}` with `τ = duration`.
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SequenceKind {
    Trotter(Order),
    QDrift,
    Composite(Order),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateSequence {
    pub dim: usize,
    pub kind: SequenceKind,
    pub total_time: f64,
    pub gates: Vec<Gate>,
}

impl GateSequence {
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Sum of signed durations per term index.
    pub fn durations_by_term(&self, n_terms: usize) -> Vec<f64> {
        let mut acc = vec![0.0; n_terms];
        for g in &self.gates {
            acc[g.term] += g.duration;
        }
        acc
    }

    pub fn to_text(&self) -> String {
        let kind = match self.kind {
            SequenceKind::Trotter(o) => o.to_string(),
            SequenceKind::QDrift => "qdrift".to_string(),
            SequenceKind::Composite(o) => format!("composite-{o}"),
        };
        let mut s = String::with_capacity(16 * self.gates.len() + 64);
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "dim {}", self.dim);
        let _ = writeln!(s, "order {kind}");
        let _ = writeln!(s, "time {:?}", self.total_time);
        let _ = writeln!(s, "gates {}", self.gates.len());
        for g in &self.gates {
            let _ = writeln!(s, "{} {:?}", g.term, g.duration);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let bad = |msg: &str| Error::Parse(format!("gate sequence: {msg}"));
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(bad("missing header line"));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| bad(&format!("missing {name}")))?;
            let (key, value) = line
                .trim()
                .split_once(' ')
                .ok_or_else(|| bad(&format!("malformed {name} line")))?;
            if key != name {
                return Err(bad(&format!("expected {name}, found {key}")));
            }
            Ok(value.trim().to_string())
        };
        let dim: usize = field("dim")?.parse().map_err(|_| bad("invalid dim"))?;
        let kind_text = field("order")?;
        let total_time: f64 = field("time")?.parse().map_err(|_| bad("invalid time"))?;
        let count: usize = field("gates")?
            .parse()
            .map_err(|_| bad("invalid gate count"))?;
        let parse_order =
            |s: &str| -> Result<Order> { Order::new(s.parse().map_err(|_| bad("invalid order"))?) };
        let kind = if kind_text == "qdrift" {
            SequenceKind::QDrift
        } else if let Some(rest) = kind_text.strip_prefix("composite-") {
            SequenceKind::Composite(parse_order(rest)?)
        } else {
            SequenceKind::Trotter(parse_order(&kind_text)?)
        };
        let gates = lines
            .map(|line| {
                let mut it = line.split_whitespace();
                let term = it.next().and_then(|v| v.parse().ok());
                let duration = it.next().and_then(|v| v.parse().ok());
                match (term, duration, it.next()) {
                    (Some(term), Some(duration), None) => Ok(Gate { term, duration }),
                    _ => Err(bad(&format!("malformed gate line {line:?}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if gates.len() != count {
            return Err(bad(&format!(
                "expected {count} gates, found {}",
                gates.len()
            )));
        }
        Ok(GateSequence {
            dim,
            kind,
            total_time,
            gates,
        })
    }
}

/// Product of `exp(i h_j H_j τ)` over the sequence; the first gate is applied
/// first (rightmost factor).
pub fn sequence_unitary(seq: &GateSequence, h: &Hamiltonian) -> Result<CMat> {
    h.check_channel_dim()?;
    if seq.dim != h.dim() {
        return Err(Error::DimensionMismatch {
            term: 0,
            expected: h.dim(),
            found: seq.dim,
        });
    }
    let mut u = identity(h.dim());
    for g in &seq.gates {
        if g.term >= h.len() {
            return Err(Error::IndexOutOfRange {
                index: g.term,
                len: h.len(),
            });
        }
        let term = h.term(g.term);
        u = term.exp_i(term.weight * g.duration) * u;
    }
    Ok(u)
}
