//! Trotter-Suzuki compiler, error bounds and gate-cost model.
//!
//! First order is `S_1(t) = e^{i h_L H_L t} ⋯ e^{i h_1 H_1 t}`: the first term of
//! the subset is applied first. Order 2 is the palindrome of two first-order
//! sweeps at `t/2`, and order 2k follows the Suzuki recursion with `u_k`.

use serde::Serialize;

use crate::commutators::{alpha_or_bound, first_order_comm_sum, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::linalg::{matrix_power, CMat};
use crate::metrics::{unitary_channel, Superoperator};
use crate::order::{second_order_stage_times, Order};
pub use crate::sequence::{sequence_unitary, Gate, GateSequence, SequenceKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrotterParams {
    pub order: Order,
    pub r: u64,
    pub t: f64,
    pub epsilon: f64,
}

impl TrotterParams {
    pub fn new(order: Order, r: u64, t: f64, epsilon: f64) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidArgument("r must be at least 1".into()));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        Ok(TrotterParams {
            order,
            r,
            t,
            epsilon,
        })
    }
}

fn push_sweep(gates: &mut Vec<Gate>, subset: &[usize], tau: f64, reverse: bool) {
    let mut push = |&term: &usize| {
        gates.push(Gate {
            term,
            duration: tau,
        })
    };
    if reverse {
        subset.iter().rev().for_each(&mut push);
    } else {
        subset.iter().for_each(&mut push);
    }
}

/// Gates of one segment of the order-`order` formula at time `t`, in
/// application order.
pub fn trotter_gates(subset: &[usize], order: Order, t: f64) -> Vec<Gate> {
    let mut gates = Vec::with_capacity(order.upsilon() * subset.len());
    if order.is_first() {
        push_sweep(&mut gates, subset, t, false);
    } else {
        for s in second_order_stage_times(order, t) {
            push_sweep(&mut gates, subset, s / 2.0, false);
            push_sweep(&mut gates, subset, s / 2.0, true);
        }
    }
    gates
}

pub fn trotter_sequence(
    h: &Hamiltonian,
    subset: &[usize],
    order: Order,
    t: f64,
) -> Result<GateSequence> {
    h.check_indices(subset)?;
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    Ok(GateSequence {
        dim: h.dim(),
        kind: SequenceKind::Trotter(order),
        total_time: t,
        gates: trotter_gates(subset, order, t),
    })
}

/// `S(t/r)^r` as a unitary. An empty subset gives the identity.
pub fn trotter_unitary(
    h: &Hamiltonian,
    subset: &[usize],
    order: Order,
    t: f64,
    r: u64,
) -> Result<CMat> {
    h.check_indices(subset)?;
    let seq = GateSequence {
        dim: h.dim(),
        kind: SequenceKind::Trotter(order),
        total_time: t / r as f64,
        gates: trotter_gates(subset, order, t / r as f64),
    };
    Ok(matrix_power(&sequence_unitary(&seq, h)?, r))
}

pub fn trotter_channel(
    h: &Hamiltonian,
    subset: &[usize],
    order: Order,
    t: f64,
    r: u64,
) -> Result<Superoperator> {
    unitary_channel(&trotter_unitary(h, subset, order, t, r)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrotterBound {
    /// Bound on `‖e^{iHt/r} − S(t/r)‖` for one segment.
    pub spectral_per_segment: f64,
    /// Bound on the diamond distance of the full `r`-segment channel.
    pub channel: f64,
    /// α_comm for even orders, the ordered pair sum for first order.
    pub alpha: f64,
    pub exact_alpha: bool,
}

/// Bounds from a precomputed α (or pair sum for first order).
pub fn trotter_bound_from_alpha(alpha: f64, order: Order, t: f64, r: u64) -> (f64, f64) {
    let r = r as f64;
    if order.is_first() {
        let seg = t * t / (2.0 * r * r) * alpha;
        (seg, 2.0 * r * seg)
    } else {
        let e = order.error_exponent();
        let base = (order.upsilon() as f64 * t / r).powi(e);
        let two_k1 = e as f64;
        (2.0 * alpha / two_k1 * base, 4.0 * r * alpha / two_k1 * base)
    }
}

pub fn trotter_error_bound(
    h: &Hamiltonian,
    subset: &[usize],
    order: Order,
    t: f64,
    r: u64,
) -> Result<TrotterBound> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be at least 1".into()));
    }
    let (alpha, exact) = trotter_alpha(h, subset, order)?;
    let (seg, channel) = trotter_bound_from_alpha(alpha, order, t, r);
    Ok(TrotterBound {
        spectral_per_segment: seg,
        channel,
        alpha,
        exact_alpha: exact,
    })
}

/// α_comm (even orders) or the ordered pair sum (first order) of a subset.
pub fn trotter_alpha(h: &Hamiltonian, subset: &[usize], order: Order) -> Result<(f64, bool)> {
    if order.is_first() {
        Ok((first_order_comm_sum(h, subset, subset)?, true))
    } else {
        alpha_or_bound(h, subset, order, DEFAULT_BUDGET)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrotterCost {
    pub r: u64,
    pub cost: u64,
    /// `ΥL` times the real-valued segment count, before ceiling and clamp.
    pub relaxed_cost: f64,
    pub alpha: f64,
    pub exact_alpha: bool,
}

/// Real-valued segment count before ceiling.
pub fn trotter_relaxed_r(alpha: f64, order: Order, t: f64, epsilon: f64) -> f64 {
    if order.is_first() {
        t * t / (2.0 * epsilon) * alpha
    } else {
        let inv = 1.0 / order.value() as f64;
        let ups_t = order.upsilon() as f64 * t;
        ups_t.powf(1.0 + inv) / epsilon.powf(inv)
            * (4.0 * alpha / order.error_exponent() as f64).powf(inv)
    }
}

pub fn trotter_cost_from_alpha(
    len: usize,
    order: Order,
    t: f64,
    epsilon: f64,
    alpha: f64,
    exact: bool,
) -> TrotterCost {
    let x = trotter_relaxed_r(alpha, order, t, epsilon);
    let r = (x.ceil() as u64).max(1);
    let stages = order.upsilon() as u64 * len as u64;
    TrotterCost {
        r,
        cost: stages * r,
        relaxed_cost: stages as f64 * x,
        alpha,
        exact_alpha: exact,
    }
}

pub fn trotter_cost(h: &Hamiltonian, order: Order, t: f64, epsilon: f64) -> Result<TrotterCost> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let (alpha, exact) = trotter_alpha(h, &h.all_indices(), order)?;
    Ok(trotter_cost_from_alpha(
        h.len(),
        order,
        t,
        epsilon,
        alpha,
        exact,
    ))
}
