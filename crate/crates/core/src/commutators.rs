//! Nested-commutator norm sums α_comm.
//!
//! α_comm(S, 2k) sums `(Π h_γ)·‖[H_{γ_{2k+1}}, …, [H_{γ_2}, H_{γ_1}]…]‖` over all
//! (2k+1)-tuples drawn from S, repeated indices included. Enumeration is a
//! depth-first walk that reuses every inner nest for all of its extensions and
//! skips subtrees whose inner nest already vanishes.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{lambda_of, Hamiltonian, Partition};
use crate::linalg::{commutator, max_abs, normal_norm, CMat};
use crate::order::Order;

/// Default number of (2k+1)-tuples an exact enumeration may visit.
pub const DEFAULT_BUDGET: f64 = 1e7;
/// Inner nests with all entries below this are treated as zero.
const NEST_ZERO: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaReport {
    pub alpha_h: f64,
    pub alpha_a: f64,
    pub alpha_b: f64,
    pub alpha_cross: f64,
    pub order: u32,
    pub exact: bool,
}

impl AlphaReport {
    /// `q_B = α(B)/α(H)`, zero when α(H) vanishes.
    pub fn q_b(&self) -> f64 {
        if self.alpha_h > 0.0 {
            self.alpha_b / self.alpha_h
        } else {
            0.0
        }
    }
}

fn tuple_count(n: usize, order: Order) -> f64 {
    (n as f64).powi(order.value() as i32 + 1)
}

fn require_even(order: Order) -> Result<()> {
    if order.is_first() {
        Err(Error::InvalidOrder(1))
    } else {
        Ok(())
    }
}

struct Walk<'a> {
    ops: Vec<(f64, &'a CMat)>,
    depth: usize,
}

impl Walk<'_> {
    fn descend(
        &self,
        nest: &CMat,
        level: usize,
        weight: f64,
        mask: u128,
        leaf: &mut dyn FnMut(u128, f64),
    ) {
        for (pos, (w, op)) in self.ops.iter().enumerate() {
            let next = commutator(op, nest);
            if max_abs(&next) <= NEST_ZERO {
                continue;
            }
            let weight = weight * w;
            let mask = mask | bit(pos);
            if level + 1 == self.depth {
                leaf(mask, weight * normal_norm(&next, false));
            } else {
                self.descend(&next, level + 1, weight, mask, leaf);
            }
        }
    }

    /// Runs the walk for each innermost index in parallel; results come back
    /// in index order.
    fn run<T: Send>(
        &self,
        init: impl Fn() -> T + Sync,
        fold: impl Fn(&mut T, u128, f64) + Sync,
    ) -> Vec<T> {
        (0..self.ops.len())
            .into_par_iter()
            .map(|pos| {
                let mut acc = init();
                let (w, op) = self.ops[pos];
                self.descend(op, 1, w, bit(pos), &mut |m, v| fold(&mut acc, m, v));
                acc
            })
            .collect()
    }
}

fn bit(pos: usize) -> u128 {
    1u128.checked_shl(pos as u32).unwrap_or(0)
}

/// Exact α_comm over `subset` with the default budget.
pub fn alpha_exact(h: &Hamiltonian, subset: &[usize], order: Order) -> Result<f64> {
    alpha_exact_with_budget(h, subset, order, DEFAULT_BUDGET)
}

pub fn alpha_exact_with_budget(
    h: &Hamiltonian,
    subset: &[usize],
    order: Order,
    budget: f64,
) -> Result<f64> {
    require_even(order)?;
    h.check_indices(subset)?;
    h.check_channel_dim()?;
    let required = tuple_count(subset.len(), order);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    if subset.len() < 2 {
        return Ok(0.0);
    }
    let walk = Walk {
        ops: subset
            .iter()
            .map(|&i| (h.term(i).weight, &h.term(i).op))
            .collect(),
        depth: order.value() as usize + 1,
    };
    let parts = walk.run(|| 0.0, |acc, _, v| *acc += v);
    Ok(parts.iter().sum())
}

/// 1-norm bound `2^{2k} λ^{2k+1}` on α_comm of a set with weight sum `lambda`.
pub fn alpha_single_bound(lambda: f64, order: Order) -> f64 {
    let two_k = order.value() as i32;
    2f64.powi(two_k) * lambda.powi(two_k + 1)
}

/// 1-norm bound on the cross term, summed over every tuple that mixes A and
/// B: `2^{2k}((λ_A+λ_B)^{2k+1} − λ_A^{2k+1} − λ_B^{2k+1})`.
///
/// The narrower `2^{2k} Σ_{l=1}^{2k} λ_A^l λ_B^{2k+1-l}` only covers tuples
/// ordered A before B and is exceeded by `X + Z`.
pub fn alpha_cross_bound(lambda_a: f64, lambda_b: f64, order: Order) -> f64 {
    let e = order.value() as i32 + 1;
    let mixed = (lambda_a + lambda_b).powi(e) - lambda_a.powi(e) - lambda_b.powi(e);
    2f64.powi(e - 1) * mixed.max(0.0)
}

/// `2^{2k} Σ_{l=1}^{2k} λ_A^l λ_B^{2k+1-l}`, the A-before-B ordering sum.
pub fn alpha_cross_ordered_sum(lambda_a: f64, lambda_b: f64, order: Order) -> f64 {
    let two_k = order.value() as i32;
    let sum: f64 = (1..=two_k)
        .map(|l| lambda_a.powi(l) * lambda_b.powi(two_k + 1 - l))
        .sum();
    2f64.powi(two_k) * sum
}

/// The 1-norm bounds for every field of the report; `exact = false`.
pub fn alpha_bound(h: &Hamiltonian, partition: &Partition, order: Order) -> Result<AlphaReport> {
    require_even(order)?;
    let la = lambda_of(h, &partition.a)?;
    let lb = lambda_of(h, &partition.b)?;
    Ok(AlphaReport {
        alpha_h: alpha_single_bound(h.lambda(), order),
        alpha_a: alpha_single_bound(la, order),
        alpha_b: alpha_single_bound(lb, order),
        alpha_cross: alpha_cross_bound(la, lb, order),
        order: order.value(),
        exact: false,
    })
}

/// Exact report when the full enumeration fits in `budget`, otherwise the
/// 1-norm bounds.
pub fn alpha_report(
    h: &Hamiltonian,
    partition: &Partition,
    order: Order,
    budget: f64,
) -> Result<AlphaReport> {
    require_even(order)?;
    h.check_indices(&partition.a)?;
    h.check_indices(&partition.b)?;
    if tuple_count(h.len(), order) > budget
        || h.dim() > crate::hamiltonian::MAX_CHANNEL_DIM
        || h.len() > 128
    {
        return alpha_bound(h, partition, order);
    }
    let table = CommutatorTable::build(h, order, budget)?;
    Ok(table.report(partition))
}

/// α_comm of `subset`, exact within budget, else the 1-norm bound. The flag
/// reports which one was used.
pub fn alpha_or_bound(
    h: &Hamiltonian,
    subset: &[usize],
    order: Order,
    budget: f64,
) -> Result<(f64, bool)> {
    match alpha_exact_with_budget(h, subset, order, budget) {
        Ok(a) => Ok((a, true)),
        Err(Error::BudgetExceeded { .. }) | Err(Error::DimensionOverflow { .. }) => {
            Ok((alpha_single_bound(lambda_of(h, subset)?, order), false))
        }
        Err(e) => Err(e),
    }
}

/// `Σ_{i∈left, j∈right} h_i h_j ‖[H_i, H_j]‖` over ordered pairs.
pub fn first_order_comm_sum(h: &Hamiltonian, left: &[usize], right: &[usize]) -> Result<f64> {
    h.check_indices(left)?;
    h.check_indices(right)?;
    let rows: Vec<f64> = left
        .par_iter()
        .map(|&i| {
            right
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| {
                    let (a, b) = (h.term(i), h.term(j));
                    a.weight * b.weight * normal_norm(&commutator(&a.op, &b.op), true)
                })
                .sum::<f64>()
        })
        .collect();
    Ok(rows.iter().sum())
}

/// Matrix of `‖[H_i, H_j]‖` (unweighted) for all term pairs.
pub fn pair_norms(h: &Hamiltonian) -> DMatrix<f64> {
    let n = h.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j <= i {
                        0.0
                    } else {
                        normal_norm(&commutator(&h.term(i).op, &h.term(j).op), true)
                    }
                })
                .collect()
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            m[(i, j)] = rows[i][j];
            m[(j, i)] = rows[i][j];
        }
    }
    m
}

/// Every nonzero weighted tuple norm of a Hamiltonian, tagged with the set of
/// term indices it uses. α_comm of any subset or partition then reduces to a
/// classification of tuples, which makes repeated partition sampling cheap.
#[derive(Debug, Clone)]
pub struct CommutatorTable {
    order: Order,
    len: usize,
    entries: Vec<(u128, f64)>,
}

impl CommutatorTable {
    pub fn build(h: &Hamiltonian, order: Order, budget: f64) -> Result<Self> {
        require_even(order)?;
        h.check_channel_dim()?;
        let required = tuple_count(h.len(), order);
        if required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }
        if h.len() > 128 {
            return Err(Error::InvalidArgument(
                "commutator table supports at most 128 terms".into(),
            ));
        }
        let walk = Walk {
            ops: h.terms().iter().map(|t| (t.weight, &t.op)).collect(),
            depth: order.value() as usize + 1,
        };
        let parts = walk.run(Vec::new, |acc: &mut Vec<(u128, f64)>, m, v| {
            acc.push((m, v))
        });
        Ok(CommutatorTable {
            order,
            len: h.len(),
            entries: parts.into_iter().flatten().collect(),
        })
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn alpha_total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    fn mask_of(&self, subset: &[usize]) -> u128 {
        subset.iter().fold(0, |m, &i| m | bit(i))
    }

    pub fn alpha_subset(&self, subset: &[usize]) -> f64 {
        let mask = self.mask_of(subset);
        self.entries
            .iter()
            .filter(|(m, _)| m & !mask == 0)
            .map(|e| e.1)
            .sum()
    }

    /// `(α(A), α(B), α_cross)` for the partition given by A's indices.
    pub fn split(&self, a: &[usize]) -> (f64, f64, f64) {
        let mask_a = self.mask_of(a);
        let (mut aa, mut bb, mut cross) = (0.0, 0.0, 0.0);
        for &(m, v) in &self.entries {
            if m & !mask_a == 0 {
                aa += v;
            } else if m & mask_a == 0 {
                bb += v;
            } else {
                cross += v;
            }
        }
        (aa, bb, cross)
    }

    pub fn report(&self, partition: &Partition) -> AlphaReport {
        debug_assert_eq!(partition.len(), self.len);
        let (aa, bb, cross) = self.split(&partition.a);
        AlphaReport {
            alpha_h: self.alpha_total(),
            alpha_a: aa,
            alpha_b: bb,
            alpha_cross: cross,
            order: self.order.value(),
            exact: true,
        }
    }
}
