//! Hamiltonian data model: weighted unit-norm Hermitian terms and partitions.
//!
//! Term order is the order of the input file and is preserved everywhere;
//! Trotter sequences depend on it.

mod format;
mod pauli;

pub use format::{load_hamiltonian, parse_hamiltonian, HamiltonianFile, TermSpec};
pub use pauli::pauli_matrix;

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_deviation, spectral_norm, CMat, HermitianEigen};

/// Weights below this are rejected as zero terms.
pub const ZERO_WEIGHT: f64 = 1e-14;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const NORM_TOL: f64 = 1e-10;
/// Largest dimension for superoperator work.
pub const MAX_CHANNEL_DIM: usize = 64;

#[derive(Debug)]
pub struct HamTerm {
    pub weight: f64,
    pub op: CMat,
    pub label: Option<String>,
    eigen: OnceLock<HermitianEigen>,
}

impl Clone for HamTerm {
    fn clone(&self) -> Self {
        HamTerm {
            weight: self.weight,
            op: self.op.clone(),
            label: self.label.clone(),
            eigen: self.eigen.clone(),
        }
    }
}

impl HamTerm {
    /// Builds a term from `coeff * matrix`, moving the spectral norm and sign
    /// into the weight. `index` is only used for diagnostics.
    pub fn from_matrix(
        index: usize,
        matrix: CMat,
        coeff: f64,
        label: Option<String>,
    ) -> Result<Self> {
        let norm = spectral_norm(&matrix);
        let weight = coeff.abs() * norm;
        if !weight.is_finite() || weight < ZERO_WEIGHT {
            return Err(Error::ZeroTerm {
                term: index,
                weight,
            });
        }
        let scale = if (norm - 1.0).abs() <= NORM_TOL {
            1.0
        } else {
            norm
        };
        let op = matrix.unscale(scale * coeff.signum());
        let deviation = hermitian_deviation(&op);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NonHermitian {
                term: index,
                deviation,
            });
        }
        let weight = if scale == 1.0 { coeff.abs() } else { weight };
        Ok(HamTerm {
            weight,
            op,
            label,
            eigen: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.op.nrows()
    }

    /// `exp(i * theta * op)`; the eigendecomposition is cached.
    pub fn exp_i(&self, theta: f64) -> CMat {
        self.eigen
            .get_or_init(|| HermitianEigen::new(&self.op))
            .exp_i(theta)
    }
}

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    terms: Vec<HamTerm>,
    dim: usize,
    lambda: f64,
}

impl Hamiltonian {
    pub fn new(terms: Vec<HamTerm>) -> Result<Self> {
        let first = terms.first().ok_or(Error::EmptyHamiltonian)?;
        let dim = first.dim();
        for (i, term) in terms.iter().enumerate() {
            if term.op.nrows() != dim || term.op.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    term: i,
                    expected: dim,
                    found: term.op.nrows(),
                });
            }
        }
        let lambda = terms.iter().map(|t| t.weight).sum();
        Ok(Hamiltonian { terms, dim, lambda })
    }

    /// Convenience constructor from `(weight, op)` pairs; ops are normalized.
    pub fn from_weighted(pairs: Vec<(f64, CMat)>) -> Result<Self> {
        let terms = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (w, m))| HamTerm::from_matrix(i, m, w, None))
            .collect::<Result<Vec<_>>>()?;
        Hamiltonian::new(terms)
    }

    /// Builds from Pauli strings with coefficients.
    pub fn from_paulis(terms: &[(&str, f64)]) -> Result<Self> {
        let pairs = terms
            .iter()
            .map(|(s, c)| Ok((*c, pauli_matrix(s)?)))
            .collect::<Result<Vec<_>>>()?;
        Hamiltonian::from_weighted(pairs)
    }

    pub fn terms(&self) -> &[HamTerm] {
        &self.terms
    }

    pub fn term(&self, i: usize) -> &HamTerm {
        &self.terms[i]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.weight).collect()
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    pub fn check_indices(&self, subset: &[usize]) -> Result<()> {
        match subset.iter().find(|&&i| i >= self.len()) {
            Some(&index) => Err(Error::IndexOutOfRange {
                index,
                len: self.len(),
            }),
            None => Ok(()),
        }
    }

    pub fn check_channel_dim(&self) -> Result<()> {
        if self.dim > MAX_CHANNEL_DIM {
            return Err(Error::DimensionOverflow {
                dim: self.dim,
                max: MAX_CHANNEL_DIM,
            });
        }
        Ok(())
    }

    /// Sub-Hamiltonian on the given indices, in the given order.
    pub fn restrict(&self, subset: &[usize]) -> Result<Hamiltonian> {
        self.check_indices(subset)?;
        Hamiltonian::new(subset.iter().map(|&i| self.terms[i].clone()).collect())
    }

    /// Serializable description using explicit matrices and weights.
    pub fn to_file(&self) -> HamiltonianFile {
        HamiltonianFile {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| TermSpec {
                    pauli_string: None,
                    matrix: Some(
                        (0..self.dim)
                            .flat_map(|r| (0..self.dim).map(move |c| (r, c)))
                            .map(|(r, c)| [t.op[(r, c)].re, t.op[(r, c)].im])
                            .collect(),
                    ),
                    coeff: Some(t.weight),
                    label: t.label.clone(),
                })
                .collect(),
        }
    }
}

/// `Σ_{i∈subset} h_i`.
pub fn lambda_of(h: &Hamiltonian, subset: &[usize]) -> Result<f64> {
    h.check_indices(subset)?;
    Ok(subset.iter().map(|&i| h.terms[i].weight).sum())
}

/// `Σ_{i∈subset} h_i H_i` as a dense matrix.
pub fn dense_sum(h: &Hamiltonian, subset: &[usize]) -> Result<CMat> {
    h.check_indices(subset)?;
    let mut acc = CMat::zeros(h.dim, h.dim);
    for &i in subset {
        acc += h.terms[i].op.scale(h.terms[i].weight);
    }
    Ok(acc)
}

/// Disjoint split of the term indices into a Trotter set A and a QDrift set B.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Partition {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl Partition {
    pub fn new(len: usize, a: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; len];
        for &i in a.iter().chain(b.iter()) {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, len });
            }
            if seen[i] {
                return Err(Error::InvalidPartition(format!("index {i} assigned twice")));
            }
            seen[i] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!(
                "index {missing} unassigned"
            )));
        }
        let (mut a, mut b) = (a, b);
        a.sort_unstable();
        b.sort_unstable();
        Ok(Partition { a, b })
    }

    /// A = the listed indices, B = everything else.
    pub fn from_a(len: usize, a: &[usize]) -> Result<Self> {
        let b = (0..len).filter(|i| !a.contains(i)).collect();
        Partition::new(len, a.to_vec(), b)
    }

    pub fn from_mask(in_a: &[bool]) -> Self {
        let a = (0..in_a.len()).filter(|&i| in_a[i]).collect();
        let b = (0..in_a.len()).filter(|&i| !in_a[i]).collect();
        Partition { a, b }
    }

    pub fn all_trotter(len: usize) -> Self {
        Partition {
            a: (0..len).collect(),
            b: Vec::new(),
        }
    }

    pub fn all_qdrift(len: usize) -> Self {
        Partition {
            a: Vec::new(),
            b: (0..len).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.a.len() + self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-term Trotter weights `w_i ∈ [0,1]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WeightedPartition {
    pub weights: Vec<f64>,
}

impl WeightedPartition {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidArgument(format!("weight {w} outside [0,1]")));
        }
        Ok(WeightedPartition { weights })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn xz() -> Hamiltonian {
        Hamiltonian::from_paulis(&[("X", 1.0), ("Z", 1.0)]).unwrap()
    }

    #[test]
    fn lambda_of_subsets() {
        let h = Hamiltonian::from_paulis(&[("X", 1.0), ("Y", 2.0), ("Z", 3.0)]).unwrap();
        assert_eq!(h.lambda(), 6.0);
        assert_eq!(lambda_of(&h, &[0, 1]).unwrap(), 3.0);
        assert_eq!(lambda_of(&h, &[]).unwrap(), 0.0);
        assert!(matches!(
            lambda_of(&h, &[3]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn exponential_weights_sum() {
        let l = 20;
        let terms: Vec<(f64, CMat)> = (1..=l)
            .map(|i| (2f64.powi(-i), pauli_matrix("Z").unwrap()))
            .collect();
        let h = Hamiltonian::from_weighted(terms).unwrap();
        assert!((h.lambda() - (1.0 - 2f64.powi(-l))).abs() < 1e-15);
    }

    #[test]
    fn dense_sum_of_x_plus_z() {
        let h = xz();
        let m = dense_sum(&h, &[0, 1]).unwrap();
        assert!((spectral_norm(&m) - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(max_abs(&dense_sum(&h, &[]).unwrap()), 0.0);
    }

    #[test]
    fn normalizes_scaled_and_negative_terms() {
        let z = pauli_matrix("Z").unwrap();
        let t = HamTerm::from_matrix(0, z.scale(2.0), 1.0, None).unwrap();
        assert!((t.weight - 2.0).abs() < 1e-14);
        assert!(max_abs(&(&t.op - &z)) < 1e-14);
        let t = HamTerm::from_matrix(0, z.clone(), -0.5, None).unwrap();
        assert_eq!(t.weight, 0.5);
        assert!(max_abs(&(&t.op + &z)) < 1e-14);
    }

    #[test]
    fn rejects_bad_terms() {
        let z = pauli_matrix("Z").unwrap();
        assert!(matches!(
            HamTerm::from_matrix(0, z.scale(0.0), 1.0, None),
            Err(Error::ZeroTerm { .. })
        ));
        let mut m = pauli_matrix("X").unwrap();
        m[(0, 1)].im = 0.5;
        assert!(matches!(
            HamTerm::from_matrix(0, m, 1.0, None),
            Err(Error::NonHermitian { .. })
        ));
        let x2 = pauli_matrix("XX").unwrap();
        let err = Hamiltonian::from_weighted(vec![(1.0, z), (1.0, x2)]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(3, vec![0], vec![1, 2]).is_ok());
        assert!(Partition::new(3, vec![0, 1], vec![1, 2]).is_err());
        assert!(Partition::new(3, vec![0], vec![2]).is_err());
        assert_eq!(Partition::from_a(3, &[2]).unwrap().b, vec![0, 1]);
    }
}
