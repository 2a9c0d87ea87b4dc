//! Partition construction: the first-order weight gradient scheme, the
//! probabilistic scheme with its moment bounds, and improvement diagnostics.
//!
//! Monte-Carlo moments use `Q = 4λ_B²t²/N_B` and the higher-order `P(t)` of the
//! composite cost; trial `i` samples its partition from stream `(seed, i)`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::commutators::{pair_norms, CommutatorTable, DEFAULT_BUDGET};
use crate::composite::CompositeInputs;
use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, Partition, WeightedPartition};
use crate::order::Order;
use crate::rng::stream_rng;

/// Relaxed first-order cost of a weighted split, with precomputed commutator
/// norms. `L_A` counts the terms with nonzero weight.
#[derive(Debug, Clone)]
pub struct WeightProblem {
    h: Vec<f64>,
    norms: DMatrix<f64>,
    t: f64,
    epsilon: f64,
    n_b: f64,
}

impl WeightProblem {
    pub fn new(ham: &Hamiltonian, t: f64, epsilon: f64, n_b: f64) -> Result<Self> {
        if !(epsilon > 0.0 && n_b > 0.0) {
            return Err(Error::InvalidArgument(
                "epsilon and N_B must be positive".into(),
            ));
        }
        Ok(WeightProblem {
            h: ham.weights(),
            norms: pair_norms(ham),
            t,
            epsilon,
            n_b,
        })
    }

    fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.h.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} weights, got {}",
                self.h.len(),
                w.len()
            )));
        }
        WeightedPartition::new(w.to_vec()).map(|_| ())
    }

    fn prefactor(&self, w: &[f64]) -> f64 {
        let l_a = w.iter().filter(|&&x| x > 0.0).count() as f64;
        (l_a + self.n_b) * self.t * self.t / self.epsilon
    }

    /// `(L_A+N_B)(t²/ε)(Σ w_i w_j h_i h_j n_ij + Σ w_i(1−w_j) h_i h_j n_ij + 4λ_B²/N_B)`.
    pub fn cost(&self, w: &[f64]) -> f64 {
        let n = self.h.len();
        let (mut aa, mut ab) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let c = self.h[i] * self.h[j] * self.norms[(i, j)];
                aa += w[i] * w[j] * c;
                ab += w[i] * (1.0 - w[j]) * c;
            }
        }
        let lambda_b: f64 = (0..n).map(|i| (1.0 - w[i]) * self.h[i]).sum();
        self.prefactor(w) * (aa + ab + 4.0 * lambda_b * lambda_b / self.n_b)
    }

    /// `∂C/∂w_m = (L_A+N_B)(t²/ε)(h_m Σ_j h_j‖[H_j,H_m]‖ − 8 h_m λ_B/N_B)`, with
    /// `L_A` held fixed.
    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let n = self.h.len();
        let k = self.prefactor(w);
        let lambda_b: f64 = (0..n).map(|i| (1.0 - w[i]) * self.h[i]).sum();
        (0..n)
            .map(|m| {
                let comm: f64 = (0..n).map(|j| self.h[j] * self.norms[(j, m)]).sum();
                k * (self.h[m] * comm - 8.0 * self.h[m] * lambda_b / self.n_b)
            })
            .collect()
    }
}

pub fn weight_gradient(
    h: &Hamiltonian,
    weights: &[f64],
    t: f64,
    epsilon: f64,
    n_b: f64,
) -> Result<Vec<f64>> {
    let p = WeightProblem::new(h, t, epsilon, n_b)?;
    p.check(weights)?;
    Ok(p.gradient(weights))
}

pub fn weighted_relaxed_cost(
    h: &Hamiltonian,
    weights: &[f64],
    t: f64,
    epsilon: f64,
    n_b: f64,
) -> Result<f64> {
    let p = WeightProblem::new(h, t, epsilon, n_b)?;
    p.check(weights)?;
    Ok(p.cost(weights))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
}

/// `w_m = 1 − Σ_{i≠m} (h_i/h_m)(‖[H_i,H_m]‖/8 − (1−w_i))`, clamped to `[0,1]`.
/// This zeroes the gradient when `N_B = 1`.
pub fn fixed_point_weight(h: &Hamiltonian, weights: &[f64], m: usize) -> Result<FixedPoint> {
    h.check_indices(&[m])?;
    if weights.len() != h.len() {
        return Err(Error::InvalidArgument("weights length mismatch".into()));
    }
    let hm = h.term(m).weight;
    let raw = 1.0
        - (0..h.len())
            .filter(|&i| i != m)
            .map(|i| {
                let n = crate::linalg::normal_norm(
                    &crate::linalg::commutator(&h.term(i).op, &h.term(m).op),
                    true,
                );
                h.term(i).weight / hm * (n / 8.0 - (1.0 - weights[i]))
            })
            .sum::<f64>();
    let value = raw.clamp(0.0, 1.0);
    Ok(FixedPoint {
        value,
        raw,
        clamped: value != raw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentOptions {
    /// Initial step; defaults to `0.1/(L·max|∇C(init)|)`.
    pub step: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            step: None,
            tol: 1e-8,
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentResult {
    pub partition: WeightedPartition,
    pub iterations: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub converged: bool,
    /// Cost after every iteration, starting with the initial cost.
    pub history: Vec<f64>,
}

fn projected(w: &[f64], g: &[f64]) -> f64 {
    w.iter()
        .zip(g)
        .map(|(&w, &g)| {
            if (w <= 0.0 && g > 0.0) || (w >= 1.0 && g < 0.0) {
                0.0
            } else {
                g.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Projected gradient descent on the relaxed first-order cost. A step that
/// would raise the cost is halved until it does not.
pub fn descend_weights(
    h: &Hamiltonian,
    t: f64,
    epsilon: f64,
    n_b: f64,
    init: &[f64],
    opts: DescentOptions,
) -> Result<DescentResult> {
    let p = WeightProblem::new(h, t, epsilon, n_b)?;
    p.check(init)?;
    let mut w = init.to_vec();
    let initial_cost = p.cost(&w);
    let mut cost = initial_cost;
    let g0 = p.gradient(&w);
    let gmax = g0.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let mut step = opts.step.unwrap_or(if gmax > 0.0 {
        0.1 / (h.len() as f64 * gmax)
    } else {
        0.0
    });
    let mut iterations = 0;
    let mut converged = false;
    let mut history = vec![initial_cost];
    while iterations < opts.max_iters {
        let g = p.gradient(&w);
        if projected(&w, &g) <= opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = w
                .iter()
                .zip(&g)
                .map(|(x, g)| (x - step * g).clamp(0.0, 1.0))
                .collect();
            let c = p.cost(&trial);
            if c <= cost {
                accepted = trial != w;
                w = trial;
                cost = c;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        history.push(cost);
    }
    Ok(DescentResult {
        partition: WeightedPartition::new(w)?,
        iterations,
        initial_cost,
        final_cost: cost,
        converged,
        history,
    })
}

/// Smallest `N_B` for which the probabilistic scheme is defined:
/// `(λt/ε)^{1−1/2k} ((2k+1)/(2k+Υ))^{1/2k} 2^{1−1/k} / Υ^{1/2k}`.
pub fn nb_lower_bound_from(lambda: f64, t: f64, epsilon: f64, order: Order) -> f64 {
    let two_k = order.value() as f64;
    let ups = order.upsilon() as f64;
    let inv = 1.0 / two_k;
    (lambda * t / epsilon).powf(1.0 - inv)
        * ((two_k + 1.0) / (two_k + ups)).powf(inv)
        * 2f64.powf(1.0 - 2.0 * inv)
        / ups.powf(inv)
}

fn require_even(order: Order) -> Result<()> {
    if order.is_first() {
        Err(Error::InvalidOrder(1))
    } else {
        Ok(())
    }
}

pub fn nb_lower_bound(h: &Hamiltonian, t: f64, epsilon: f64, order: Order) -> Result<f64> {
    require_even(order)?;
    if !(t > 0.0 && epsilon > 0.0) {
        return Err(Error::InvalidArgument(
            "t and epsilon must be positive".into(),
        ));
    }
    Ok(nb_lower_bound_from(h.lambda(), t, epsilon, order))
}

/// Real-valued `(1+2^{−c})²·N_B^{lower}`.
pub fn nb_parametrized_relaxed(
    h: &Hamiltonian,
    t: f64,
    epsilon: f64,
    order: Order,
    c: f64,
) -> Result<f64> {
    Ok((1.0 + 2f64.powf(-c)).powi(2) * nb_lower_bound(h, t, epsilon, order)?)
}

pub fn nb_parametrized(h: &Hamiltonian, t: f64, epsilon: f64, order: Order, c: f64) -> Result<u64> {
    Ok(nb_parametrized_relaxed(h, t, epsilon, order, c)?.ceil() as u64)
}

/// The square-root factor of χ as written in the scheme's definition.
pub fn chi_root_definition(n_b: f64, lambda: f64, t: f64, epsilon: f64, order: Order) -> f64 {
    let two_k = order.value() as f64;
    let ups = order.upsilon() as f64;
    let inv = 1.0 / two_k;
    (n_b * (epsilon / (lambda * t)).powf(1.0 - inv)
        * ((two_k + ups) / (two_k + 1.0)).powf(inv)
        * ups.powf(inv)
        / 2f64.powf(1.0 - 2.0 * inv))
    .sqrt()
}

/// The same factor in the form used by the consistency derivation:
/// `½((4k+2Υ)/(2k+1))^{1/4k} √(N_B 2^{1+1/2k} Υ^{1/2k} (ε/λt)^{1−1/2k})`.
pub fn chi_root_consistency(n_b: f64, lambda: f64, t: f64, epsilon: f64, order: Order) -> f64 {
    let two_k = order.value() as f64;
    let ups = order.upsilon() as f64;
    let inv = 1.0 / two_k;
    0.5 * ((2.0 * two_k + 2.0 * ups) / (two_k + 1.0)).powf(0.5 * inv)
        * (n_b * 2f64.powf(1.0 + inv) * ups.powf(inv) * (epsilon / (lambda * t)).powf(1.0 - inv))
            .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbPartition {
    /// Probability that term `i` is placed in the Trotter partition.
    pub probs: Vec<f64>,
    pub chi: f64,
    /// Terms with nonzero Trotter probability.
    pub sampling_set: Vec<usize>,
}

impl ProbPartition {
    /// `1 − p_i = min(χ/h_i, 1)`.
    pub fn from_chi(h: &Hamiltonian, chi: f64) -> Self {
        Self::from_weights(&h.weights(), chi)
    }

    pub fn from_weights(weights: &[f64], chi: f64) -> Self {
        let chi = chi.max(0.0);
        let probs: Vec<f64> = weights.iter().map(|&w| 1.0 - (chi / w).min(1.0)).collect();
        let sampling_set = (0..weights.len())
            .filter(|&i| chi / weights[i] < 1.0)
            .collect();
        ProbPartition {
            probs,
            chi,
            sampling_set,
        }
    }

    /// Arbitrary probabilities; χ is undefined (NaN) and `𝒮 = {i : p_i > 0}`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!(
                "probability {p} outside [0,1]"
            )));
        }
        let sampling_set = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();
        Ok(ProbPartition {
            probs,
            chi: f64::NAN,
            sampling_set,
        })
    }

    pub fn expected_la(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `Σ (1−p_i) h_i`.
    pub fn expected_lambda_b(&self, weights: &[f64]) -> f64 {
        self.probs
            .iter()
            .zip(weights)
            .map(|(p, w)| (1.0 - p) * w)
            .sum()
    }

    /// `(P(|B| = 0), P(|B| = 1))`.
    pub fn small_b_probabilities(&self) -> (f64, f64) {
        self.probs
            .iter()
            .fold((1.0, 0.0), |(z0, z1), &p| (z0 * p, z1 * p + z0 * (1.0 - p)))
    }
}

pub fn prob_partition(
    h: &Hamiltonian,
    t: f64,
    epsilon: f64,
    order: Order,
    n_b: f64,
) -> Result<ProbPartition> {
    let bound = nb_lower_bound(h, t, epsilon, order)?;
    if !(n_b >= bound * (1.0 - 1e-12)) {
        return Err(Error::BelowLowerBound { nb: n_b, bound });
    }
    let root = chi_root_definition(n_b, h.lambda(), t, epsilon, order);
    let chi = h.lambda() / h.len() as f64 * (root - 1.0);
    let pp = ProbPartition::from_chi(h, chi);
    let limit = h.lambda() * root;
    let lambda_b = pp.expected_lambda_b(&h.weights());
    if lambda_b > limit * (1.0 + 1e-12) {
        return Err(Error::Degenerate(format!(
            "expected QDrift weight {lambda_b} exceeds the scheme's bound {limit}"
        )));
    }
    Ok(pp)
}

/// Right-hand side of the scheme's second guarantee, as a bound on `E[λ_B]/λ`.
pub fn lambda_b_guarantee(lambda: f64, t: f64, epsilon: f64, order: Order, n_b: f64) -> f64 {
    (order.upsilon() as f64).sqrt() * chi_root_definition(n_b, lambda, t, epsilon, order)
}

pub fn sample_partition_stream(pp: &ProbPartition, seed: u64, stream: u64) -> Partition {
    let mut rng = stream_rng(seed, stream);
    let mask: Vec<bool> = pp.probs.iter().map(|&p| rng.gen::<f64>() < p).collect();
    Partition::from_mask(&mask)
}

pub fn sample_partition(pp: &ProbPartition, seed: u64) -> Partition {
    sample_partition_stream(pp, seed, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Estimate {
            mean,
            se: (var / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimates {
    pub la: Estimate,
    pub la2: Estimate,
    pub lambda_b: Estimate,
    pub q: Estimate,
    pub q2: Estimate,
    /// `None` when exact α enumeration exceeds the budget.
    pub p: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub e_la: f64,
    pub e_la2_bound: f64,
    pub e_lambda_b: f64,
    pub e_q_bound: f64,
    pub e_q2_bound: f64,
    pub e_p_bound: f64,
    pub mc: MomentEstimates,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceCheck {
    pub quantity: &'static str,
    pub mc_mean: f64,
    pub se: f64,
    pub bound: f64,
    pub holds: bool,
}

impl MomentReport {
    /// MC mean ≤ analytic value + 3·SE for every moment; `E[λ_B]` is exact so
    /// it is checked two-sided.
    pub fn dominance(&self) -> Vec<DominanceCheck> {
        let mut rows = vec![
            ("L_A^2", self.mc.la2, self.e_la2_bound),
            ("lambda_B", self.mc.lambda_b, self.e_lambda_b),
            ("Q", self.mc.q, self.e_q_bound),
            ("Q^2", self.mc.q2, self.e_q2_bound),
        ];
        if let Some(p) = self.mc.p {
            rows.push(("P", p, self.e_p_bound));
        }
        rows.into_iter()
            .map(|(quantity, e, bound)| {
                let slack = 3.0 * e.se + 1e-12 * bound.abs().max(e.mean.abs());
                let holds = if quantity == "lambda_B" {
                    (e.mean - bound).abs() <= slack
                } else {
                    e.mean <= bound + slack
                };
                DominanceCheck {
                    quantity,
                    mc_mean: e.mean,
                    se: e.se,
                    bound,
                    holds,
                }
            })
            .collect()
    }
}

/// Analytic moment values of the scheme with threshold χ.
pub struct AnalyticMoments {
    pub s_size: f64,
    pub lambda_s: f64,
    pub lambda_sc: f64,
    pub sum_chi_over_h: f64,
}

impl AnalyticMoments {
    pub fn new(weights: &[f64], pp: &ProbPartition) -> Self {
        let chi = if pp.chi.is_nan() { 0.0 } else { pp.chi };
        let mut in_s = vec![false; weights.len()];
        for &i in &pp.sampling_set {
            in_s[i] = true;
        }
        let lambda_s: f64 = pp.sampling_set.iter().map(|&i| weights[i]).sum();
        let lambda_sc: f64 = (0..weights.len())
            .filter(|&i| !in_s[i])
            .map(|i| weights[i])
            .sum();
        AnalyticMoments {
            s_size: pp.sampling_set.len() as f64,
            lambda_s,
            lambda_sc,
            sum_chi_over_h: pp
                .sampling_set
                .iter()
                .map(|&i| (chi / weights[i]).min(1.0))
                .sum(),
        }
    }
}

pub fn moment_report(
    h: &Hamiltonian,
    pp: &ProbPartition,
    t: f64,
    order: Order,
    n_b: f64,
    n_trials: usize,
    seed: u64,
) -> Result<MomentReport> {
    require_even(order)?;
    if n_trials < 100 {
        return Err(Error::InvalidArgument(
            "moment_report needs at least 100 trials".into(),
        ));
    }
    if pp.chi.is_nan() {
        return Err(Error::InvalidArgument(
            "moment bounds need a threshold-defined partition".into(),
        ));
    }
    let chi = pp.chi;
    let m = AnalyticMoments::new(&h.weights(), pp);
    let lambda = h.lambda();
    let two_k = order.value() as i32;
    let ups = order.upsilon() as f64;
    let inner = chi * m.lambda_s + (chi * m.s_size + m.lambda_sc).powi(2);
    let e_lambda_b = chi * m.s_size + m.lambda_sc;
    let e_p_bound = (2.0 * ups).powi(2 + two_k) / (two_k as f64 + 1.0)
        * t.powi(two_k + 1)
        * lambda.powi(two_k)
        * (m.lambda_s - chi * m.s_size);

    let table = CommutatorTable::build(h, order, DEFAULT_BUDGET).ok();
    let p_prefactor = t.powi(two_k + 1) * 4.0 * ups.powi(two_k + 1) / (two_k as f64 + 1.0);
    let samples: Vec<[f64; 5]> = (0..n_trials as u64)
        .into_par_iter()
        .map(|i| {
            let part = sample_partition_stream(pp, seed, i);
            let la = part.a.len() as f64;
            let lb: f64 = part.b.iter().map(|&j| h.term(j).weight).sum();
            let q = 4.0 * t * t * lb * lb / n_b;
            let p = table.as_ref().map_or(f64::NAN, |tb| {
                let (aa, _, cross) = tb.split(&part.a);
                p_prefactor * (ups * aa + cross)
            });
            [la, lb, q, p, 0.0]
        })
        .collect();
    let column = |f: &dyn Fn(&[f64; 5]) -> f64| -> Vec<f64> { samples.iter().map(f).collect() };
    let mc = MomentEstimates {
        la: Estimate::of(&column(&|s| s[0])),
        la2: Estimate::of(&column(&|s| s[0] * s[0])),
        lambda_b: Estimate::of(&column(&|s| s[1])),
        q: Estimate::of(&column(&|s| s[2])),
        q2: Estimate::of(&column(&|s| s[2] * s[2])),
        p: table.as_ref().map(|_| Estimate::of(&column(&|s| s[3]))),
    };
    Ok(MomentReport {
        e_la: pp.expected_la(),
        e_la2_bound: m.s_size * m.s_size - m.s_size * m.sum_chi_over_h,
        e_lambda_b,
        e_q_bound: 4.0 * t * t / n_b * inner,
        e_q2_bound: 16.0 * t.powi(4) * lambda * lambda / (n_b * n_b) * inner,
        e_p_bound,
        mc,
        n_trials,
    })
}

/// One point of the expected-cost bound as a function of the scheme
/// parameter `c`, with `N_B = (1+c)²·N_B^{lower}` (so `χ = cλ/L`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaturationPoint {
    pub c: f64,
    pub n_b: f64,
    pub chi: f64,
    pub s_size: usize,
    pub expected_cost_bound: f64,
    pub c_qd: f64,
    pub c_trott_1norm: f64,
    pub ratio_qd: f64,
    pub ratio_trott: f64,
}

/// Trotter cost with α replaced by its 1-norm bound:
/// `L(λt)^{1+1/2k} Υ^{1+1/2k} 2^{2+1/2k} / ((2k+1)^{1/2k} ε^{1/2k})`.
pub fn trotter_cost_1norm(len: usize, lambda: f64, t: f64, epsilon: f64, order: Order) -> f64 {
    let two_k = order.value() as f64;
    let inv = 1.0 / two_k;
    let ups = order.upsilon() as f64;
    len as f64 * (lambda * t).powf(1.0 + inv) * ups.powf(1.0 + inv) * 2f64.powf(2.0 + inv)
        / ((two_k + 1.0).powf(inv) * epsilon.powf(inv))
}

/// Limit ratio of the expected-cost bound to the 1-norm Trotter cost as
/// `c → 0`: `Υ^{1/2k}/2^{1−1/2k}`.
pub fn trotter_saturation_ratio(order: Order) -> f64 {
    let inv = 1.0 / order.value() as f64;
    (order.upsilon() as f64).powf(inv) / 2f64.powf(1.0 - inv)
}

/// `(√E[L_A²] + √E[N_B²])(E[P]^{1/2k}/ε^{1/2k} + √E[Q²]/ε)` using the analytic
/// moment bounds and the exact `E[N_B²]`.
pub fn expected_cost_bound(
    h: &Hamiltonian,
    t: f64,
    epsilon: f64,
    order: Order,
    c: f64,
) -> Result<SaturationPoint> {
    require_even(order)?;
    let weights = h.weights();
    let lambda = h.lambda();
    let pp = ProbPartition::from_weights(&weights, c * lambda / h.len() as f64);
    let n_b = (1.0 + c).powi(2) * nb_lower_bound(h, t, epsilon, order)?;
    Ok(saturation_point(
        &weights, lambda, &pp, t, epsilon, order, c, n_b,
    ))
}

#[allow(clippy::too_many_arguments)]
pub fn saturation_point(
    weights: &[f64],
    lambda: f64,
    pp: &ProbPartition,
    t: f64,
    epsilon: f64,
    order: Order,
    c: f64,
    n_b: f64,
) -> SaturationPoint {
    let chi = pp.chi;
    let m = AnalyticMoments::new(weights, pp);
    let two_k = order.value() as i32;
    let ups = order.upsilon() as f64;
    let inner = chi * m.lambda_s + (chi * m.s_size + m.lambda_sc).powi(2);
    let e_la2 = (m.s_size * m.s_size - m.s_size * m.sum_chi_over_h).max(0.0);
    let e_q2 = 16.0 * t.powi(4) * lambda * lambda / (n_b * n_b) * inner;
    let e_p = ((2.0 * ups).powi(2 + two_k) / (two_k as f64 + 1.0)
        * t.powi(two_k + 1)
        * lambda.powi(two_k)
        * (m.lambda_s - chi * m.s_size))
        .max(0.0);
    let (p0, p1) = pp.small_b_probabilities();
    let e_nb2 = p1 + (1.0 - p0 - p1).max(0.0) * n_b * n_b;
    let inv = 1.0 / two_k as f64;
    let bound = (e_la2.sqrt() + e_nb2.sqrt()) * ((e_p / epsilon).powf(inv) + e_q2.sqrt() / epsilon);
    let c_qd = 4.0 * lambda * lambda * t * t / epsilon;
    let c_trott = trotter_cost_1norm(weights.len(), lambda, t, epsilon, order);
    SaturationPoint {
        c,
        n_b,
        chi,
        s_size: pp.sampling_set.len(),
        expected_cost_bound: bound,
        c_qd,
        c_trott_1norm: c_trott,
        ratio_qd: bound / c_qd,
        ratio_trott: bound / c_trott,
    }
}

/// Terms `h_i = 2^{−i}`, `i = 1..L`, with `χ = 2^{−c}λ/L`. Memberships and
/// probabilities are evaluated in the log domain so that `λ = 1 − 2^{−L}` is
/// never rounded to 1.
#[derive(Debug, Clone)]
pub struct ExpDecayFamily {
    pub len: usize,
    pub c: f64,
}

impl ExpDecayFamily {
    pub fn new(len: usize, c: f64) -> Result<Self> {
        if !(1..=1000).contains(&len) {
            return Err(Error::InvalidArgument(format!(
                "family size {len} outside 1..=1000"
            )));
        }
        Ok(ExpDecayFamily { len, c })
    }

    pub fn weights(&self) -> Vec<f64> {
        (1..=self.len).map(|i| 2f64.powi(-(i as i32))).collect()
    }

    pub fn lambda(&self) -> f64 {
        1.0 - 2f64.powi(-(self.len as i32))
    }

    /// `log₂ λ`, accurate even when `λ` rounds to 1.
    pub fn log2_lambda(&self) -> f64 {
        (-(2f64.powi(-(self.len as i32)))).ln_1p() / std::f64::consts::LN_2
    }

    pub fn chi(&self) -> f64 {
        2f64.powf(-self.c) * self.lambda() / self.len as f64
    }

    /// `floor(c + log₂L − log₂λ)`.
    pub fn s_size_formula(&self) -> usize {
        (self.c + (self.len as f64).log2() - self.log2_lambda())
            .floor()
            .max(0.0) as usize
    }

    pub fn prob_partition(&self) -> ProbPartition {
        let shift = self.c + (self.len as f64).log2();
        let ln_lambda = (-(2f64.powi(-(self.len as i32)))).ln_1p();
        let mut probs = Vec::with_capacity(self.len);
        let mut sampling_set = Vec::new();
        for i in 1..=self.len {
            let ln_ratio = (i as f64 - shift) * std::f64::consts::LN_2 + ln_lambda;
            if ln_ratio < 0.0 {
                probs.push(-ln_ratio.exp_m1());
                sampling_set.push(i - 1);
            } else {
                probs.push(0.0);
            }
        }
        ProbPartition {
            probs,
            chi: self.chi(),
            sampling_set,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub l: usize,
    pub l_a: usize,
    pub n_b: u64,
    pub q_b: f64,
    pub beta: Option<f64>,
    /// `L_A (1−q_B)^{1/2k} / L`.
    pub la_ratio: f64,
    /// `λ_B / λ`.
    pub lambda_b_ratio: f64,
    /// `λ_B / (λ^{1/β} (√ε/t)^{1−1/β})`.
    pub lambda_b_beta_ratio: Option<f64>,
    pub nb_over_la: Option<f64>,
    /// `N_B (1−q_B)^{1/2k} / L`.
    pub nb_ratio: f64,
    pub cost_ratio: f64,
    pub first_order: Option<FirstOrderChecks>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstOrderChecks {
    /// Unordered pairs in A with a nonzero commutator.
    pub n_nz: usize,
    pub n_nz_sq_below_la: bool,
    pub lambda_b_sq: f64,
    /// `a_max² N_nz⁴ / L_A²`.
    pub lambda_b_sq_threshold: f64,
    pub lambda_b_sq_below_threshold: bool,
}

pub fn improvement_diagnostics(
    h: &Hamiltonian,
    partition: &Partition,
    t: f64,
    epsilon: f64,
    order: Order,
    n_b: u64,
) -> Result<Diagnostics> {
    let inputs = CompositeInputs::new(h, partition, order)?;
    let rep = inputs.report(t, epsilon, n_b);
    let inv = 1.0 / order.value() as f64;
    let l = h.len() as f64;
    let la = partition.a.len() as f64;
    let root = (1.0 - rep.q_b).max(0.0).powf(inv);
    let lambda_b_beta_ratio = rep.beta.map(|b| {
        inputs.lambda_b / (h.lambda().powf(1.0 / b) * (epsilon.sqrt() / t).powf(1.0 - 1.0 / b))
    });
    let first_order = if order.is_first() {
        let norms = pair_norms(h);
        let a = &partition.a;
        let mut n_nz = 0;
        for (x, &i) in a.iter().enumerate() {
            for &j in &a[x + 1..] {
                if norms[(i, j)] > 1e-12 {
                    n_nz += 1;
                }
            }
        }
        let a_max = a.iter().map(|&i| h.term(i).weight).fold(0.0, f64::max);
        let threshold = if la > 0.0 {
            a_max * a_max * (n_nz as f64).powi(4) / (la * la)
        } else {
            f64::INFINITY
        };
        let lb2 = inputs.lambda_b * inputs.lambda_b;
        Some(FirstOrderChecks {
            n_nz,
            n_nz_sq_below_la: ((n_nz * n_nz) as f64) < la,
            lambda_b_sq: lb2,
            lambda_b_sq_threshold: threshold,
            lambda_b_sq_below_threshold: lb2 < threshold,
        })
    } else {
        None
    };
    Ok(Diagnostics {
        l: h.len(),
        l_a: partition.a.len(),
        n_b,
        q_b: rep.q_b,
        beta: rep.beta,
        la_ratio: la * root / l,
        lambda_b_ratio: inputs.lambda_b / h.lambda(),
        lambda_b_beta_ratio,
        nb_over_la: (la > 0.0).then(|| n_b as f64 / la),
        nb_ratio: n_b as f64 * root / l,
        cost_ratio: rep.c_comp / rep.c_trott.min(rep.c_qd),
        first_order,
    })
}
