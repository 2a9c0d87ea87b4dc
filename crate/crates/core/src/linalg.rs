//! Dense complex matrix helpers shared by every module.

pub use nalgebra::Complex;
use nalgebra::{DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = Complex { re: 0.0, im: 0.0 };
pub const ONE: C64 = Complex { re: 1.0, im: 0.0 };
pub const I: C64 = Complex { re: 0.0, im: 1.0 };

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Largest absolute entry of `m`.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_deviation(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &CMat) -> DVector<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    h.symmetric_eigenvalues()
}

/// Spectral norm of a matrix known to be Hermitian (or anti-Hermitian when
/// `anti` is set), via its eigenvalues.
pub fn normal_norm(m: &CMat, anti: bool) -> f64 {
    let ev = if anti {
        hermitian_eigenvalues(&(m * I))
    } else {
        hermitian_eigenvalues(m)
    };
    ev.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn hermitian_trace_norm(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}

pub fn unitary_deviation(u: &CMat) -> f64 {
    max_abs(&(u.adjoint() * u - identity(u.nrows())))
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(m: &CMat) -> Self {
        let h = (m + m.adjoint()).scale(0.5);
        let eig = h.symmetric_eigen();
        HermitianEigen {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    /// `exp(i * theta * M)`.
    pub fn exp_i(&self, theta: f64) -> CMat {
        let v = &self.vectors;
        let mut scaled = v.clone();
        for (j, lam) in self.values.iter().enumerate() {
            let phase = C64::from_polar(1.0, theta * lam);
            for r in 0..scaled.nrows() {
                scaled[(r, j)] *= phase;
            }
        }
        scaled * v.adjoint()
    }
}

/// `exp(i * t * H)` for a Hermitian `H`.
pub fn expm_i_hermitian(h: &CMat, t: f64) -> CMat {
    HermitianEigen::new(h).exp_i(t)
}

/// Integer matrix power by repeated squaring.
pub fn matrix_power(m: &CMat, mut n: u64) -> CMat {
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}
