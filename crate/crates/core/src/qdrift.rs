//! QDrift: exact mixture channels, seeded gate sampling, error and cost bounds.
//!
//! A single sample at time `τ` applies `e^{i H_j λ τ}` with probability
//! `h_j/λ`, where λ is the weight sum of the sampled subset.

use rand::distributions::{Distribution, WeightedIndex};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{lambda_of, Hamiltonian};
use crate::linalg::CMat;
use crate::metrics::Superoperator;
use crate::rng::stream_rng;
use crate::sequence::{Gate, GateSequence, SequenceKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QDriftParams {
    pub samples: u64,
    pub t: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl QDriftParams {
    pub fn new(samples: u64, t: f64, epsilon: f64, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidArgument(
                "QDrift needs at least one sample".into(),
            ));
        }
        Ok(QDriftParams {
            samples,
            t,
            epsilon,
            seed,
        })
    }
}

/// `p_i = h_i/λ_subset` in subset order.
pub fn qdrift_probabilities(h: &Hamiltonian, subset: &[usize]) -> Result<Vec<f64>> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let lambda = lambda_of(h, subset)?;
    if !(lambda > 0.0) {
        return Err(Error::Degenerate("subset has zero weight".into()));
    }
    Ok(subset.iter().map(|&i| h.term(i).weight / lambda).collect())
}

/// Single-sample QDrift channel at time `tau`.
pub fn qdrift_single_channel(h: &Hamiltonian, subset: &[usize], tau: f64) -> Result<Superoperator> {
    h.check_channel_dim()?;
    let probs = qdrift_probabilities(h, subset)?;
    let lambda = lambda_of(h, subset)?;
    let d = h.dim();
    let mut mat = CMat::zeros(d * d, d * d);
    for (&i, p) in subset.iter().zip(&probs) {
        let v = h.term(i).exp_i(lambda * tau);
        mat += v.conjugate().kronecker(&v).scale(*p);
    }
    Ok(Superoperator { mat, dim: d })
}

/// `N`-sample QDrift channel: the single-sample channel at `t/N` composed `N`
/// times.
pub fn qdrift_exact_channel(
    h: &Hamiltonian,
    subset: &[usize],
    t: f64,
    n: u64,
) -> Result<Superoperator> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "QDrift needs at least one sample".into(),
        ));
    }
    Ok(qdrift_single_channel(h, subset, t / n as f64)?.power(n))
}

/// Draws `n` gates `e^{iλH_jτ}`, stored as durations `λτ/h_j`; sample `s` uses
/// the random stream `(seed, first_stream + s)`.
pub fn qdrift_gates(
    h: &Hamiltonian,
    subset: &[usize],
    t: f64,
    n: u64,
    seed: u64,
    first_stream: u64,
) -> Result<Vec<Gate>> {
    let probs = qdrift_probabilities(h, subset)?;
    let lambda = lambda_of(h, subset)?;
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::Degenerate(e.to_string()))?;
    let tau = lambda * t / n as f64;
    Ok((0..n)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, first_stream + s);
            let term = subset[dist.sample(&mut rng)];
            Gate {
                term,
                duration: tau / h.term(term).weight,
            }
        })
        .collect())
}

pub fn qdrift_sample(
    h: &Hamiltonian,
    subset: &[usize],
    t: f64,
    n: u64,
    seed: u64,
) -> Result<GateSequence> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "QDrift needs at least one sample".into(),
        ));
    }
    Ok(GateSequence {
        dim: h.dim(),
        kind: SequenceKind::QDrift,
        total_time: t,
        gates: qdrift_gates(h, subset, t, n, seed, 0)?,
    })
}

/// `(2λ²t²/N)·e^{2λt/N}`.
pub fn qdrift_error_bound(lambda: f64, t: f64, n: u64) -> f64 {
    let n = n as f64;
    2.0 * lambda * lambda * t * t / n * (2.0 * lambda * t / n).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QDriftCost {
    pub samples: u64,
    pub cost: u64,
    pub relaxed_cost: f64,
}

/// Largest ε for which the QDrift cost formula is justified: `λt·ln2/2`.
pub fn qdrift_eps_limit(lambda: f64, t: f64) -> f64 {
    lambda * t.abs() * std::f64::consts::LN_2 / 2.0
}

/// `N = ⌈4λ²t²/ε⌉` without the range check.
pub fn qdrift_cost_unchecked(lambda: f64, t: f64, epsilon: f64) -> QDriftCost {
    let relaxed = 4.0 * lambda * lambda * t * t / epsilon;
    let samples = relaxed.ceil() as u64;
    QDriftCost {
        samples,
        cost: samples,
        relaxed_cost: relaxed,
    }
}

pub fn qdrift_cost(h: &Hamiltonian, subset: &[usize], t: f64, epsilon: f64) -> Result<QDriftCost> {
    let lambda = lambda_of(h, subset)?;
    let max = qdrift_eps_limit(lambda, t);
    if !(epsilon > 0.0 && epsilon < max) {
        return Err(Error::EpsilonOutOfRange { eps: epsilon, max });
    }
    Ok(qdrift_cost_unchecked(lambda, t, epsilon))
}
