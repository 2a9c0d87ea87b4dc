//! JSON input format.
//!
//! ```json
//! {
//!   "dim": 4,
//!   "terms": [
//!     { "pauli_string": "XZ", "coeff": 0.5, "label": "xz" },
//!     { "matrix": [[1,0],[0,0],[0,0],[0,0], ...], "coeff": 2.0 }
//!   ]
//! }
//! ```
//!
//! `matrix` is row-major with `[re, im]` pairs. Unknown fields are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HamTerm, Hamiltonian};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianFile {
    pub dim: usize,
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli_string: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl HamiltonianFile {
    pub fn build(&self) -> Result<Hamiltonian> {
        if self.dim == 0 {
            return Err(Error::Parse("dim must be positive".into()));
        }
        if self.terms.is_empty() {
            return Err(Error::EmptyHamiltonian);
        }
        let terms = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, spec)| spec.build(i, self.dim))
            .collect::<Result<Vec<_>>>()?;
        Hamiltonian::new(terms)
    }
}

impl TermSpec {
    fn build(&self, index: usize, dim: usize) -> Result<HamTerm> {
        let matrix = match (&self.pauli_string, &self.matrix) {
            (Some(s), None) => {
                if self.coeff.is_none() {
                    return Err(Error::Parse(format!(
                        "term {index}: pauli_string requires coeff"
                    )));
                }
                super::pauli_matrix(s).map_err(|e| Error::Parse(format!("term {index}: {e}")))?
            }
            (None, Some(entries)) => {
                let n = (entries.len() as f64).sqrt().round() as usize;
                if n * n != entries.len() {
                    return Err(Error::Parse(format!(
                        "term {index}: matrix has {} entries, not a square",
                        entries.len()
                    )));
                }
                let data: Vec<C64> = entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                CMat::from_row_slice(n, n, &data)
            }
            _ => {
                return Err(Error::Parse(format!(
                    "term {index}: exactly one of pauli_string or matrix is required"
                )))
            }
        };
        if matrix.nrows() != dim {
            return Err(Error::DimensionMismatch {
                term: index,
                expected: dim,
                found: matrix.nrows(),
            });
        }
        HamTerm::from_matrix(index, matrix, self.coeff.unwrap_or(1.0), self.label.clone())
    }
}

pub fn parse_hamiltonian(text: &str) -> Result<Hamiltonian> {
    let file: HamiltonianFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.build()
}

pub fn load_hamiltonian(path: impl AsRef<Path>) -> Result<Hamiltonian> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_hamiltonian(&text)
}
