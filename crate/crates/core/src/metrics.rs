//! Channel superoperators and distance oracles.
//!
//! Vectorization is column-stacking: `vec(ρ)[i + j·d] = ρ[i, j]`, so the
//! channel `ρ ↦ UρU†` is `conj(U) ⊗ U` and composition is matrix product.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, MAX_CHANNEL_DIM};
use crate::linalg::{
    hermitian_eigenvalues, hermitian_trace_norm, identity, matrix_power, spectral_norm,
    unitary_deviation, CMat,
};
use crate::order::Order;
use crate::trotter::{trotter_alpha, trotter_relaxed_r};

pub const UNITARY_TOL: f64 = 1e-10;
pub const CPTP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub mat: CMat,
    pub dim: usize,
}

impl Superoperator {
    pub fn identity(dim: usize) -> Self {
        Superoperator {
            mat: identity(dim * dim),
            dim,
        }
    }

    pub fn from_matrix(mat: CMat, dim: usize) -> Result<Self> {
        if mat.nrows() != dim * dim || mat.ncols() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "superoperator must be {0}x{0}, got {1}x{2}",
                dim * dim,
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Superoperator { mat, dim })
    }

    /// Apply `self` first, then `after`.
    pub fn then(&self, after: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, after.dim, "superoperator dimension mismatch");
        Superoperator {
            mat: &after.mat * &self.mat,
            dim: self.dim,
        }
    }

    /// `n`-fold composition.
    pub fn power(&self, n: u64) -> Superoperator {
        Superoperator {
            mat: matrix_power(&self.mat, n),
            dim: self.dim,
        }
    }

    pub fn scale(&self, s: f64) -> Superoperator {
        Superoperator {
            mat: self.mat.scale(s),
            dim: self.dim,
        }
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let d = self.dim;
        let v = CMat::from_column_slice(d * d, 1, rho.as_slice());
        let out = &self.mat * v;
        CMat::from_column_slice(d, d, out.as_slice())
    }

    /// Normalized Choi matrix `(1/d) Σ_{ij} |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`.
    pub fn choi(&self) -> CMat {
        let d = self.dim;
        let inv = 1.0 / d as f64;
        CMat::from_fn(d * d, d * d, |row, col| {
            let (i, a) = (row / d, row % d);
            let (j, b) = (col / d, col % d);
            self.mat[(a + b * d, i + j * d)] * inv
        })
    }

    pub fn cptp_check(&self) -> CptpCheck {
        let d = self.dim;
        let j = self.choi();
        let min_eigenvalue = hermitian_eigenvalues(&j).min();
        let hermitian_deviation = crate::linalg::hermitian_deviation(&j);
        let mut partial = CMat::zeros(d, d);
        for i in 0..d {
            for jj in 0..d {
                for a in 0..d {
                    partial[(i, jj)] += j[(i * d + a, jj * d + a)];
                }
            }
        }
        let trace_deviation = crate::linalg::max_abs(&(partial - identity(d).unscale(d as f64)));
        CptpCheck {
            min_eigenvalue,
            trace_deviation,
            hermitian_deviation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CptpCheck {
    pub min_eigenvalue: f64,
    pub trace_deviation: f64,
    pub hermitian_deviation: f64,
}

impl CptpCheck {
    pub fn passes(&self) -> bool {
        self.min_eigenvalue >= -CPTP_TOL
            && self.trace_deviation <= CPTP_TOL
            && self.hermitian_deviation <= CPTP_TOL
    }
}

/// Superoperator of `ρ ↦ UρU†`.
pub fn unitary_channel(u: &CMat) -> Result<Superoperator> {
    let d = u.nrows();
    if d > MAX_CHANNEL_DIM {
        return Err(Error::DimensionOverflow {
            dim: d,
            max: MAX_CHANNEL_DIM,
        });
    }
    let dev = unitary_deviation(u);
    if dev > UNITARY_TOL {
        return Err(Error::NonUnitary(dev));
    }
    Ok(Superoperator {
        mat: u.conjugate().kronecker(u),
        dim: d,
    })
}

/// Ideal channel `ρ ↦ e^{iHt} ρ e^{-iHt}` of the full Hamiltonian.
pub fn ideal_channel(h: &Hamiltonian, t: f64) -> Result<Superoperator> {
    h.check_channel_dim()?;
    let hm = crate::hamiltonian::dense_sum(h, &h.all_indices())?;
    unitary_channel(&crate::linalg::expm_i_hermitian(&hm, t))
}

fn check_dims(a: &Superoperator, b: &Superoperator) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            term: 0,
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

/// Trace norm of the normalized Choi difference: the distance of the two
/// channels on half of a maximally entangled state. Never exceeds the
/// diamond distance.
pub fn diamond_lower_bound(phi: &Superoperator, psi: &Superoperator) -> Result<f64> {
    check_dims(phi, psi)?;
    let diff = Superoperator {
        mat: &phi.mat - &psi.mat,
        dim: phi.dim,
    };
    Ok(hermitian_trace_norm(&diff.choi()))
}

/// `d` times the Choi trace-norm distance, which never falls below the
/// diamond distance.
pub fn diamond_upper_bound(phi: &Superoperator, psi: &Superoperator) -> Result<f64> {
    Ok(phi.dim as f64 * diamond_lower_bound(phi, psi)?)
}

/// `2‖U − V‖` in spectral norm.
pub fn unitary_spectral_distance(u: &CMat, v: &CMat) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(Error::DimensionMismatch {
            term: 0,
            expected: u.nrows(),
            found: v.nrows(),
        });
    }
    Ok(2.0 * spectral_norm(&(u - v)))
}

/// Least-squares slope of `ln error` against `ln x`.
pub fn fit_scaling_exponent(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 4 {
        return Err(Error::Degenerate(format!(
            "need at least 4 points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points
        .iter()
        .find(|p| !(p.0 > 0.0 && p.1 > 0.0) || !p.0.is_finite() || !p.1.is_finite())
    {
        return Err(Error::Degenerate(format!(
            "nonpositive point ({}, {})",
            p.0, p.1
        )));
    }
    let (lo, hi) = points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| {
        (lo.min(p.0), hi.max(p.0))
    });
    if hi / lo < 4.0 * (1.0 - 1e-12) {
        return Err(Error::Degenerate(
            "abscissae span less than two octaves".into(),
        ));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Relaxed QDrift cost `4λ²t²/ε`.
pub fn qdrift_relaxed_cost(lambda: f64, t: f64, epsilon: f64) -> f64 {
    4.0 * lambda * lambda * t * t / epsilon
}

/// Relaxed Trotter cost `ΥL·r(t)` before ceiling.
pub fn trotter_relaxed_cost(len: usize, alpha: f64, order: Order, t: f64, epsilon: f64) -> f64 {
    order.upsilon() as f64 * len as f64 * trotter_relaxed_r(alpha, order, t, epsilon)
}

/// Time where the relaxed Trotter and QDrift costs coincide, from a
/// precomputed α.
pub fn crossover_time_from_alpha(
    lambda: f64,
    len: usize,
    alpha: f64,
    order: Order,
    epsilon: f64,
) -> Result<f64> {
    let f = |ln_t: f64| {
        let t = ln_t.exp();
        qdrift_relaxed_cost(lambda, t, epsilon).ln()
            - trotter_relaxed_cost(len, alpha, order, t, epsilon).ln()
    };
    let scale = if lambda > 0.0 { 1.0 / lambda } else { 1.0 };
    let (mut lo, mut hi) = ((1e-12 * scale).ln(), (1e12 * scale).ln());
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::Bracket {
            lo: lo.exp(),
            hi: hi.exp(),
        });
    }
    let increasing = fhi > flo;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= 1e-9 {
            return Ok(mid.exp());
        }
        if (fm > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::Degenerate(
        "crossover bisection did not converge".into(),
    ))
}

/// Time `t*` at which relaxed QDrift and Trotter costs agree.
pub fn crossover_time(h: &Hamiltonian, epsilon: f64, order: Order) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let (alpha, _) = trotter_alpha(h, &h.all_indices(), order)?;
    crossover_time_from_alpha(h.lambda(), h.len(), alpha, order, epsilon)
}
