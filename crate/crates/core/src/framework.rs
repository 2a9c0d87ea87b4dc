//! Prepare/select/unprepare template for composite channels.
//!
//! Each instance prepares `W|0⟩ = Σ_j a_j|j⟩` on a fresh ancilla, applies
//! `Σ_j |j⟩⟨j| ⊗ U_j`, then the ancilla unitary `V`, and finally traces the
//! ancilla out or keeps one outcome. The induced map has Kraus operators
//! `K_m = Σ_j V_{mj} a_j U_j`. Gates follow the crate-wide `e^{+iHt}` sign.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::lambda_of;
use crate::hamiltonian::{Hamiltonian, MAX_CHANNEL_DIM};
use crate::linalg::{matrix_power, spectral_norm, unitary_deviation, CMat};
use crate::metrics::{fit_scaling_exponent, Superoperator, UNITARY_TOL};
use crate::order::Order;
use crate::qdrift::qdrift_probabilities;
use crate::trotter::trotter_unitary;

pub const MAX_JOINT_DIM: usize = 4096;
pub const MAX_PERMUTED_TERMS: usize = 6;
const AMPLITUDE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Unprepare {
    Identity,
    /// `V = W†` for the real reflection `W` with `W|0⟩ = a`.
    PrepInverse,
}

#[derive(Debug, Clone)]
pub struct SelectInstance {
    pub amplitudes: Vec<f64>,
    pub ops: Vec<CMat>,
    pub unprep: Unprepare,
    pub post_select: Option<usize>,
}

impl SelectInstance {
    pub fn new(
        amplitudes: Vec<f64>,
        ops: Vec<CMat>,
        unprep: Unprepare,
        post_select: Option<usize>,
    ) -> Result<Self> {
        if amplitudes.is_empty() || amplitudes.len() != ops.len() {
            return Err(Error::InvalidArgument(
                "need one controlled operator per amplitude".into(),
            ));
        }
        if amplitudes.iter().any(|&a| !(a >= 0.0)) {
            return Err(Error::InvalidArgument(
                "amplitudes must be nonnegative".into(),
            ));
        }
        let norm: f64 = amplitudes.iter().map(|a| a * a).sum();
        if (norm - 1.0).abs() > AMPLITUDE_TOL {
            return Err(Error::InvalidArgument(format!(
                "squared amplitudes sum to {norm}"
            )));
        }
        let d = ops[0].nrows();
        for u in &ops {
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::InvalidArgument(
                    "controlled operators differ in shape".into(),
                ));
            }
            let dev = unitary_deviation(u);
            if dev > UNITARY_TOL {
                return Err(Error::NonUnitary(dev));
            }
        }
        if let Some(m) = post_select {
            if m >= amplitudes.len() {
                return Err(Error::IndexOutOfRange {
                    index: m,
                    len: amplitudes.len(),
                });
            }
        }
        Ok(SelectInstance {
            amplitudes,
            ops,
            unprep,
            post_select,
        })
    }

    pub fn ancilla_dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn system_dim(&self) -> usize {
        self.ops[0].nrows()
    }

    /// The ancilla unitary `V`.
    pub fn unprep_matrix(&self) -> DMatrix<f64> {
        let m = self.ancilla_dim();
        match self.unprep {
            Unprepare::Identity => DMatrix::identity(m, m),
            Unprepare::PrepInverse => reflection_to(&self.amplitudes).transpose(),
        }
    }

    pub fn kraus(&self) -> Vec<CMat> {
        let v = self.unprep_matrix();
        let rows: Vec<usize> = match self.post_select {
            Some(m) => vec![m],
            None => (0..self.ancilla_dim()).collect(),
        };
        let d = self.system_dim();
        rows.into_iter()
            .map(|m| {
                let mut k = CMat::zeros(d, d);
                for (j, u) in self.ops.iter().enumerate() {
                    let c = v[(m, j)] * self.amplitudes[j];
                    if c != 0.0 {
                        k += u.scale(c);
                    }
                }
                k
            })
            .collect()
    }
}

/// Real orthogonal `W` with first column `a` (a Householder reflection).
pub fn reflection_to(a: &[f64]) -> DMatrix<f64> {
    let m = a.len();
    let mut v = DVector::from_column_slice(a);
    v[0] -= 1.0;
    let vv = v.dot(&v);
    if vv < 1e-30 {
        return DMatrix::identity(m, m);
    }
    DMatrix::identity(m, m) - (&v * v.transpose()) * (2.0 / vv)
}

/// Superoperator of the instances applied left to right on dimension `dim`.
pub fn template_channel(instances: &[SelectInstance], dim: usize) -> Result<Superoperator> {
    if dim > MAX_CHANNEL_DIM {
        return Err(Error::DimensionOverflow {
            dim,
            max: MAX_CHANNEL_DIM,
        });
    }
    let mut total = Superoperator::identity(dim);
    for inst in instances {
        if inst.system_dim() != dim {
            return Err(Error::DimensionMismatch {
                term: 0,
                expected: dim,
                found: inst.system_dim(),
            });
        }
        let joint = dim * inst.ancilla_dim();
        if joint > MAX_JOINT_DIM {
            return Err(Error::DimensionOverflow {
                dim: joint,
                max: MAX_JOINT_DIM,
            });
        }
        let kraus = inst.kraus();
        if inst.post_select.is_some() && spectral_norm(&kraus[0]) < 1e-14 {
            return Err(Error::PostSelectionFailed);
        }
        let mut mat = CMat::zeros(dim * dim, dim * dim);
        for k in &kraus {
            mat += k.conjugate().kronecker(k);
        }
        total = total.then(&Superoperator { mat, dim });
    }
    Ok(total)
}

/// Single QDrift step at time `t` as a template instance.
pub fn qdrift_instance(h: &Hamiltonian, subset: &[usize], t: f64) -> Result<SelectInstance> {
    let probs = qdrift_probabilities(h, subset)?;
    let lambda = lambda_of(h, subset)?;
    SelectInstance::new(
        probs.iter().map(|p| p.sqrt()).collect(),
        subset
            .iter()
            .map(|&i| h.term(i).exp_i(lambda * t))
            .collect(),
        Unprepare::Identity,
        None,
    )
}

/// All orderings of `items` in lexicographic order of positions.
pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut out = vec![idx.iter().map(|&i| items[i]).collect::<Vec<_>>()];
    loop {
        let Some(p) = (1..n).rev().find(|&i| idx[i - 1] < idx[i]) else {
            return out;
        };
        let q = (p..n).rev().find(|&j| idx[j] > idx[p - 1]).unwrap();
        idx.swap(p - 1, q);
        idx[p..].reverse();
        out.push(idx.iter().map(|&i| items[i]).collect());
    }
}

fn permuted_trotter_unitaries(h: &Hamiltonian, subset: &[usize], t: f64) -> Result<Vec<CMat>> {
    h.check_indices(subset)?;
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    if subset.len() > MAX_PERMUTED_TERMS {
        return Err(Error::BudgetExceeded {
            required: (1..=subset.len()).product::<usize>() as f64,
            budget: 720.0,
        });
    }
    permutations(subset)
        .par_iter()
        .map(|p| trotter_unitary(h, p, Order::FIRST, t, 1))
        .collect()
}

pub fn randomized_trotter_template(
    h: &Hamiltonian,
    subset: &[usize],
    t: f64,
) -> Result<SelectInstance> {
    let ops = permuted_trotter_unitaries(h, subset, t)?;
    let a = (1.0 / ops.len() as f64).sqrt();
    SelectInstance::new(vec![a; ops.len()], ops, Unprepare::PrepInverse, None)
}

/// Uniform average over orderings of the first-order formula, summed directly.
pub fn randomized_trotter_direct(
    h: &Hamiltonian,
    subset: &[usize],
    t: f64,
) -> Result<Superoperator> {
    h.check_channel_dim()?;
    let ops = permuted_trotter_unitaries(h, subset, t)?;
    let d = h.dim();
    let mut mat = CMat::zeros(d * d, d * d);
    for u in &ops {
        mat += u.conjugate().kronecker(u);
    }
    Ok(Superoperator {
        mat: mat.unscale(ops.len() as f64),
        dim: d,
    })
}

/// Randomized first-order channel, cross-checked against the template
/// construction.
pub fn randomized_trotter_channel(
    h: &Hamiltonian,
    subset: &[usize],
    t: f64,
) -> Result<Superoperator> {
    let direct = randomized_trotter_direct(h, subset, t)?;
    let via = template_channel(&[randomized_trotter_template(h, subset, t)?], h.dim())?;
    let dev = crate::linalg::max_abs(&(&direct.mat - &via.mat));
    if dev > 1e-10 {
        return Err(Error::Degenerate(format!(
            "template and direct constructions differ by {dev}"
        )));
    }
    Ok(direct)
}

/// Solves `Σ_j c_j k_j^{−(m−1)} = δ_{m1}` for `m = 1..N`.
pub fn multiproduct_coeffs(ks: &[u32]) -> Result<Vec<f64>> {
    let n = ks.len();
    if n == 0 || ks.contains(&0) {
        return Err(Error::InvalidArgument(
            "step counts must be positive".into(),
        ));
    }
    let a = DMatrix::from_fn(n, n, |m, j| (ks[j] as f64).powi(-(m as i32)));
    let mut rhs = DVector::zeros(n);
    rhs[0] = 1.0;
    let c = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular(format!("step counts {ks:?} are not distinct")))?;
    let residual = (&a * &c - &rhs).amax();
    if !(residual <= 1e-10) || c.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular(format!(
            "residual {residual} for step counts {ks:?}"
        )));
    }
    Ok(c.iter().copied().collect())
}

/// `Σ_j c_j S₁(t/k_j)^{k_j}` over the full Hamiltonian.
pub fn multiproduct_unitary(h: &Hamiltonian, ks: &[u32], t: f64) -> Result<CMat> {
    let c = multiproduct_coeffs(ks)?;
    let all = h.all_indices();
    let mut m = CMat::zeros(h.dim(), h.dim());
    for (&k, &cj) in ks.iter().zip(&c) {
        let s = trotter_unitary(h, &all, Order::FIRST, t / k as f64, 1)?;
        m += matrix_power(&s, k as u64).scale(cj);
    }
    Ok(m)
}

/// Linear map `ρ ↦ MρM†`; not trace preserving in general.
pub fn multiproduct_channel(h: &Hamiltonian, ks: &[u32], t: f64) -> Result<Superoperator> {
    h.check_channel_dim()?;
    let m = multiproduct_unitary(h, ks, t)?;
    Ok(Superoperator {
        mat: m.conjugate().kronecker(&m),
        dim: h.dim(),
    })
}

/// Post-selected LCU instance with amplitudes `√(|c_j|/κ)`; signs ride on the
/// controlled operators. The induced map is `ρ ↦ MρM†/κ²`.
pub fn multiproduct_instance(h: &Hamiltonian, ks: &[u32], t: f64) -> Result<(SelectInstance, f64)> {
    let c = multiproduct_coeffs(ks)?;
    let kappa: f64 = c.iter().map(|x| x.abs()).sum();
    let all = h.all_indices();
    let ops = ks
        .iter()
        .zip(&c)
        .map(|(&k, &cj)| {
            let s = trotter_unitary(h, &all, Order::FIRST, t / k as f64, 1)?;
            Ok(matrix_power(&s, k as u64).scale(cj.signum()))
        })
        .collect::<Result<Vec<_>>>()?;
    let inst = SelectInstance::new(
        c.iter().map(|x| (x.abs() / kappa).sqrt()).collect(),
        ops,
        Unprepare::PrepInverse,
        Some(0),
    )?;
    Ok((inst, kappa))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiproductCheck {
    pub points: Vec<(f64, f64)>,
    /// `None` when every error is at rounding level.
    pub slope: Option<f64>,
}

/// Spectral distance of the multiproduct formula to `e^{iHt}` over `t_grid`
/// and the fitted log-log slope.
pub fn multiproduct_error_check(
    h: &Hamiltonian,
    ks: &[u32],
    t_grid: &[f64],
) -> Result<MultiproductCheck> {
    if h.dim() > 16 {
        return Err(Error::DimensionOverflow {
            dim: h.dim(),
            max: 16,
        });
    }
    if t_grid.len() < 2 || t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Degenerate("need at least two positive times".into()));
    }
    let full = crate::hamiltonian::dense_sum(h, &h.all_indices())?;
    let points = t_grid
        .iter()
        .map(|&t| {
            let m = multiproduct_unitary(h, ks, t)?;
            let exact = crate::linalg::expm_i_hermitian(&full, t);
            Ok((t, spectral_norm(&(m - exact))))
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = if points.iter().all(|&(_, e)| e <= 1e-14) {
        None
    } else {
        Some(fit_scaling_exponent(&points)?)
    };
    Ok(MultiproductCheck { points, slope })
}

/// `ρ ↦ MρM†` for an arbitrary operator.
pub fn conjugation_map(m: &CMat) -> Superoperator {
    Superoperator {
        mat: m.conjugate().kronecker(m),
        dim: m.nrows(),
    }
}
