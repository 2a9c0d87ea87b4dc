//! Composite channels: Trotter on partition A, QDrift on partition B,
//! interleaved by an outer-loop product formula of matching order.
//!
//! First order applies the A block then the B block. Order 2 is the
//! palindrome `A(t/2) B(t/2) B(t/2) A(t/2)` and higher orders follow the
//! Suzuki recursion, so one segment holds Υ A-blocks and Υ B-blocks.
//! Sub-times may be negative from order 4 on.

use std::collections::HashMap;

use serde::Serialize;

use crate::commutators::{alpha_report, first_order_comm_sum, AlphaReport, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::hamiltonian::{dense_sum, lambda_of, Hamiltonian, Partition};
use crate::linalg::{expm_i_hermitian, identity, CMat};
use crate::metrics::{
    diamond_lower_bound, qdrift_relaxed_cost, unitary_channel, unitary_spectral_distance,
    Superoperator,
};
use crate::order::{second_order_stage_times, Order};
use crate::qdrift::{qdrift_eps_limit, qdrift_exact_channel, qdrift_gates};
use crate::sequence::{GateSequence, SequenceKind};
use crate::trotter::{trotter_cost_from_alpha, trotter_gates, trotter_unitary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Block {
    A,
    B,
}

/// Outer-loop schedule for one segment of length `t`, in application order.
pub fn outer_loop_sequence(order: Order, t: f64) -> Vec<(Block, f64)> {
    if order.is_first() {
        return vec![(Block::A, t), (Block::B, t)];
    }
    second_order_stage_times(order, t)
        .into_iter()
        .flat_map(|s| {
            let h = s / 2.0;
            [(Block::A, h), (Block::B, h), (Block::B, h), (Block::A, h)]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeParams {
    pub partition: Partition,
    pub order: Order,
    pub t: f64,
    pub epsilon: f64,
    pub n_b: u64,
    pub r: u64,
}

impl CompositeParams {
    pub fn new(
        partition: Partition,
        order: Order,
        t: f64,
        epsilon: f64,
        n_b: u64,
        r: u64,
    ) -> Result<Self> {
        if n_b == 0 || r == 0 {
            return Err(Error::InvalidArgument(
                "N_B and r must be at least 1".into(),
            ));
        }
        Ok(CompositeParams {
            partition,
            order,
            t,
            epsilon,
            n_b,
            r,
        })
    }
}

fn check_partition(h: &Hamiltonian, p: &Partition) -> Result<()> {
    Partition::new(h.len(), p.a.clone(), p.b.clone()).map(|_| ())
}

/// Superoperator of one outer-loop segment of length `tau`.
pub fn composite_segment_channel(
    h: &Hamiltonian,
    partition: &Partition,
    order: Order,
    tau: f64,
    n_b: u64,
) -> Result<Superoperator> {
    h.check_channel_dim()?;
    check_partition(h, partition)?;
    let mut cache: HashMap<(Block, u64), Superoperator> = HashMap::new();
    let mut seg = Superoperator::identity(h.dim());
    for (block, s) in outer_loop_sequence(order, tau) {
        let key = (block, s.to_bits());
        if !cache.contains_key(&key) {
            let ch = match block {
                Block::A if partition.a.is_empty() => Superoperator::identity(h.dim()),
                Block::B if partition.b.is_empty() => Superoperator::identity(h.dim()),
                Block::A => unitary_channel(&trotter_unitary(h, &partition.a, order, s, 1)?)?,
                Block::B => qdrift_exact_channel(h, &partition.b, s, n_b)?,
            };
            cache.insert(key, ch);
        }
        seg = seg.then(&cache[&key]);
    }
    Ok(seg)
}

/// Full composite channel: `r` segments of length `t/r`.
pub fn composite_exact_channel(h: &Hamiltonian, params: &CompositeParams) -> Result<Superoperator> {
    let tau = params.t / params.r as f64;
    Ok(
        composite_segment_channel(h, &params.partition, params.order, tau, params.n_b)?
            .power(params.r),
    )
}

/// One random compilation of the composite channel. QDrift sample `s` of the
/// whole sequence uses the random stream `(seed, s)`.
pub fn composite_sample(
    h: &Hamiltonian,
    params: &CompositeParams,
    seed: u64,
) -> Result<GateSequence> {
    check_partition(h, &params.partition)?;
    let tau = params.t / params.r as f64;
    let schedule = outer_loop_sequence(params.order, tau);
    let mut gates = Vec::new();
    let mut stream = 0u64;
    for _ in 0..params.r {
        for &(block, s) in &schedule {
            match block {
                Block::A if !params.partition.a.is_empty() => {
                    gates.extend(trotter_gates(&params.partition.a, params.order, s));
                }
                Block::B if !params.partition.b.is_empty() => {
                    gates.extend(qdrift_gates(
                        h,
                        &params.partition.b,
                        s,
                        params.n_b,
                        seed,
                        stream,
                    )?);
                    stream += params.n_b;
                }
                _ => {}
            }
        }
    }
    Ok(GateSequence {
        dim: h.dim(),
        kind: SequenceKind::Composite(params.order),
        total_time: params.t,
        gates,
    })
}

/// Partition-level quantities every cost formula needs, computed once.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeInputs {
    pub order: Order,
    pub len: usize,
    pub len_a: usize,
    pub lambda: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    /// Even orders: α_comm report of the partition.
    pub alpha: Option<AlphaReport>,
    /// First order: ordered pair sums over A×A, A×B, B×B and H×H.
    pub pair_sums: Option<PairSums>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairSums {
    pub aa: f64,
    pub ab: f64,
    pub bb: f64,
    pub hh: f64,
}

impl CompositeInputs {
    pub fn new(h: &Hamiltonian, partition: &Partition, order: Order) -> Result<Self> {
        check_partition(h, partition)?;
        let (alpha, pair_sums) = if order.is_first() {
            let all = h.all_indices();
            let sums = PairSums {
                aa: first_order_comm_sum(h, &partition.a, &partition.a)?,
                ab: first_order_comm_sum(h, &partition.a, &partition.b)?,
                bb: first_order_comm_sum(h, &partition.b, &partition.b)?,
                hh: first_order_comm_sum(h, &all, &all)?,
            };
            (None, Some(sums))
        } else {
            (
                Some(alpha_report(h, partition, order, DEFAULT_BUDGET)?),
                None,
            )
        };
        Ok(CompositeInputs {
            order,
            len: h.len(),
            len_a: partition.a.len(),
            lambda: h.lambda(),
            lambda_a: lambda_of(h, &partition.a)?,
            lambda_b: lambda_of(h, &partition.b)?,
            alpha,
            pair_sums,
        })
    }

    /// Commutator weight of the A-side error: `S_AA + S_AB` at first order,
    /// `Υα(A) + α_cross` otherwise.
    pub fn a_side(&self) -> f64 {
        match (&self.pair_sums, &self.alpha) {
            (Some(s), _) => s.aa + s.ab,
            (None, Some(a)) => self.order.upsilon() as f64 * a.alpha_a + a.alpha_cross,
            _ => unreachable!("inputs always carry sums or alpha"),
        }
    }

    /// `P(t)`.
    pub fn p_of(&self, t: f64) -> f64 {
        if self.order.is_first() {
            t * t * self.a_side()
        } else {
            let e = self.order.error_exponent();
            let ups = self.order.upsilon() as f64;
            t.powi(e) * 4.0 * ups.powi(e) / e as f64 * self.a_side()
        }
    }

    /// `Q(t)` for `n_b` samples per B block.
    pub fn q_of(&self, t: f64, n_b: f64) -> f64 {
        let ups = if self.order.is_first() {
            1.0
        } else {
            self.order.upsilon() as f64
        };
        4.0 * ups * self.lambda_b * self.lambda_b * t * t / n_b
    }

    /// Real-valued segment count before ceiling and clamp.
    pub fn relaxed_r(&self, t: f64, epsilon: f64, n_b: f64) -> f64 {
        if self.order.is_first() {
            (self.p_of(t) + self.q_of(t, n_b)) / epsilon
        } else {
            let inv = 1.0 / self.order.value() as f64;
            (self.p_of(t) / epsilon).powf(inv) + self.q_of(t, n_b) / epsilon
        }
    }

    /// Gates per segment. An empty B partition contributes no QDrift gates.
    pub fn gates_per_segment(&self, n_b: f64) -> f64 {
        let n_b = if self.len_a == self.len { 0.0 } else { n_b };
        if self.order.is_first() {
            self.len_a as f64 + n_b
        } else {
            let ups = self.order.upsilon() as f64;
            ups * (ups * self.len_a as f64 + n_b)
        }
    }

    pub fn relaxed_cost(&self, t: f64, epsilon: f64, n_b: f64) -> f64 {
        self.gates_per_segment(n_b) * self.relaxed_r(t, epsilon, n_b)
    }

    /// Pure-Trotter reference on the full Hamiltonian.
    fn trotter_reference(&self, t: f64, epsilon: f64) -> (u64, f64, bool) {
        let (alpha, exact) = match (&self.pair_sums, &self.alpha) {
            (Some(s), _) => (s.hh, true),
            (None, Some(a)) => (a.alpha_h, a.exact),
            _ => unreachable!(),
        };
        let c = trotter_cost_from_alpha(self.len, self.order, t, epsilon, alpha, exact);
        (c.cost, c.relaxed_cost, exact)
    }

    pub fn q_b(&self) -> f64 {
        match (&self.pair_sums, &self.alpha) {
            (Some(s), _) if s.hh > 0.0 => s.bb / s.hh,
            (None, Some(a)) => a.q_b(),
            _ => 0.0,
        }
    }

    pub fn report(&self, t: f64, epsilon: f64, n_b: u64) -> CostReport {
        let nb = n_b as f64;
        let x = self.relaxed_r(t, epsilon, nb);
        let r = (x.ceil() as u64).max(1);
        let c_comp = self.gates_per_segment(nb) * r as f64;
        let (c_trott, c_trott_relaxed, exact_trott) = self.trotter_reference(t, epsilon);
        let c_qd_relaxed = qdrift_relaxed_cost(self.lambda, t, epsilon);
        let c_qd = c_qd_relaxed.ceil();
        let beta = (c_trott > 1).then(|| c_qd.ln() / (c_trott as f64).ln());
        let (p_max, reexpressed) = if self.order.is_first() {
            (None, None)
        } else {
            let two_k = self.order.value() as f64;
            let ups = self.order.upsilon() as f64;
            let p_max = 2.0 * (two_k + ups) / (two_k + 1.0)
                * (2.0 * ups * self.lambda * t).powi(self.order.error_exponent());
            let inner = c_trott_relaxed * (1.0 - self.q_b()).max(0.0).powf(1.0 / two_k)
                / (ups.powf(1.0 - 1.0 / two_k) * self.len as f64)
                + c_qd_relaxed * ups * self.lambda_b * self.lambda_b
                    / (nb * self.lambda * self.lambda);
            (
                Some(p_max),
                Some(self.gates_per_segment(nb) * inner.ceil().max(1.0)),
            )
        };
        CostReport {
            order: self.order.value(),
            t,
            epsilon,
            n_b,
            r,
            l_a: self.len_a,
            lambda_b: self.lambda_b,
            p_t: self.p_of(t),
            q_t: self.q_of(t, nb),
            p_max,
            q_b: self.q_b(),
            c_trott: c_trott as f64,
            c_qd,
            c_comp,
            c_comp_relaxed: self.gates_per_segment(nb) * x,
            c_comp_reexpressed: reexpressed,
            beta,
            chi: None,
            qdrift_eps_in_range: epsilon < qdrift_eps_limit(self.lambda, t),
            exact_alpha: match &self.alpha {
                Some(a) => a.exact && exact_trott,
                None => true,
            },
        }
    }
}

/// Every bound quantity for one composite configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub order: u32,
    pub t: f64,
    pub epsilon: f64,
    pub n_b: u64,
    pub r: u64,
    pub l_a: usize,
    pub lambda_b: f64,
    pub p_t: f64,
    pub q_t: f64,
    pub p_max: Option<f64>,
    pub q_b: f64,
    pub c_trott: f64,
    pub c_qd: f64,
    pub c_comp: f64,
    pub c_comp_relaxed: f64,
    /// The cost bound rewritten in terms of the Trotter and QDrift costs.
    pub c_comp_reexpressed: Option<f64>,
    pub beta: Option<f64>,
    pub chi: Option<f64>,
    pub qdrift_eps_in_range: bool,
    pub exact_alpha: bool,
}

fn check_eps(epsilon: f64, n_b: u64) -> Result<()> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    if n_b == 0 {
        return Err(Error::InvalidArgument("N_B must be at least 1".into()));
    }
    Ok(())
}

pub fn first_order_cost(
    h: &Hamiltonian,
    partition: &Partition,
    t: f64,
    epsilon: f64,
    n_b: u64,
) -> Result<CostReport> {
    check_eps(epsilon, n_b)?;
    Ok(CompositeInputs::new(h, partition, Order::FIRST)?.report(t, epsilon, n_b))
}

pub fn higher_order_cost(
    h: &Hamiltonian,
    partition: &Partition,
    order: Order,
    t: f64,
    epsilon: f64,
    n_b: u64,
) -> Result<CostReport> {
    check_eps(epsilon, n_b)?;
    if order.is_first() {
        return Err(Error::InvalidOrder(1));
    }
    Ok(CompositeInputs::new(h, partition, order)?.report(t, epsilon, n_b))
}

/// Dispatches on the order.
pub fn composite_cost(
    h: &Hamiltonian,
    partition: &Partition,
    order: Order,
    t: f64,
    epsilon: f64,
    n_b: u64,
) -> Result<CostReport> {
    if order.is_first() {
        first_order_cost(h, partition, t, epsilon, n_b)
    } else {
        higher_order_cost(h, partition, order, t, epsilon, n_b)
    }
}

/// Stationary point `√(4λ_B²L_A/(S_AA + S_AB))` of the relaxed first-order cost.
pub fn optimal_nb_first(h: &Hamiltonian, partition: &Partition) -> Result<f64> {
    let inputs = CompositeInputs::new(h, partition, Order::FIRST)?;
    optimal_nb_first_from(&inputs)
}

pub fn optimal_nb_first_from(inputs: &CompositeInputs) -> Result<f64> {
    if inputs.lambda_b == 0.0 {
        return Ok(0.0);
    }
    let s = inputs.a_side();
    if !(s > 0.0) {
        return Err(Error::Degenerate(
            "A and cross commutators all vanish".into(),
        ));
    }
    Ok((4.0 * inputs.lambda_b * inputs.lambda_b * inputs.len_a as f64 / s).sqrt())
}

/// Stationary point of the relaxed higher-order cost
/// `Υ(ΥL_A + N)((P/ε)^{1/2k} + Q(N)/ε)`, which is
/// `2λ_B Υ √(L_A t² / (ε^{1−1/2k} P^{1/2k}))`.
pub fn optimal_nb_higher(
    h: &Hamiltonian,
    partition: &Partition,
    order: Order,
    t: f64,
    epsilon: f64,
) -> Result<f64> {
    if order.is_first() {
        return Err(Error::InvalidOrder(1));
    }
    let inputs = CompositeInputs::new(h, partition, order)?;
    optimal_nb_higher_from(&inputs, t, epsilon)
}

pub fn optimal_nb_higher_from(inputs: &CompositeInputs, t: f64, epsilon: f64) -> Result<f64> {
    if inputs.lambda_b == 0.0 {
        return Ok(0.0);
    }
    let p = inputs.p_of(t);
    if !(p > 0.0) {
        return Err(Error::Degenerate("P(t) = 0 for this partition".into()));
    }
    let inv = 1.0 / inputs.order.value() as f64;
    let ups = inputs.order.upsilon() as f64;
    Ok(2.0
        * inputs.lambda_b
        * ups
        * (inputs.len_a as f64 * t * t / (epsilon.powf(1.0 - inv) * p.powf(inv))).sqrt())
}

/// Terms of the per-segment error decomposition, all as diamond-distance
/// upper bounds except `measured`, which is the entangled-state lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentDecomposition {
    pub measured: f64,
    /// Largest A-block error, `2‖e^{iAs} − S_A(s)‖`.
    pub a_error: f64,
    /// Largest B-block error, `d` times the Choi distance to `e^{iBs}`.
    pub b_error: f64,
    /// `2‖e^{iHτ} − Π e^{iX s}‖` with every block exact.
    pub outer_error: f64,
    pub bound: f64,
}

pub fn segment_error_decomposition(
    h: &Hamiltonian,
    partition: &Partition,
    order: Order,
    tau: f64,
    n_b: u64,
) -> Result<SegmentDecomposition> {
    let seg = composite_segment_channel(h, partition, order, tau, n_b)?;
    let full = dense_sum(h, &h.all_indices())?;
    let ideal_u = expm_i_hermitian(&full, tau);
    let measured = diamond_lower_bound(&seg, &unitary_channel(&ideal_u)?)?;
    let ham_a = dense_sum(h, &partition.a)?;
    let ham_b = dense_sum(h, &partition.b)?;
    let (mut a_error, mut b_error) = (0.0f64, 0.0f64);
    let mut outer = identity(h.dim());
    for (block, s) in outer_loop_sequence(order, tau) {
        match block {
            Block::A => {
                let exact = expm_i_hermitian(&ham_a, s);
                if !partition.a.is_empty() {
                    let approx = trotter_unitary(h, &partition.a, order, s, 1)?;
                    a_error = a_error.max(unitary_spectral_distance(&exact, &approx)?);
                }
                outer = exact * outer;
            }
            Block::B => {
                let exact = expm_i_hermitian(&ham_b, s);
                if !partition.b.is_empty() {
                    let qd = qdrift_exact_channel(h, &partition.b, s, n_b)?;
                    let d = h.dim() as f64 * diamond_lower_bound(&qd, &unitary_channel(&exact)?)?;
                    b_error = b_error.max(d);
                }
                outer = exact * outer;
            }
        }
    }
    let outer_error = unitary_spectral_distance(&ideal_u, &outer)?;
    let ups = order.upsilon() as f64;
    Ok(SegmentDecomposition {
        measured,
        a_error,
        b_error,
        outer_error,
        bound: ups * a_error + ups * b_error + outer_error,
    })
}

/// Unitary of a fully deterministic (B = ∅) composite compilation.
pub fn collapsed_unitary(
    h: &Hamiltonian,
    partition: &Partition,
    order: Order,
    t: f64,
    r: u64,
) -> Result<CMat> {
    if !partition.b.is_empty() {
        return Err(Error::InvalidPartition("B must be empty".into()));
    }
    let params = CompositeParams::new(partition.clone(), order, t, 1.0, 1, 1)?;
    let params = CompositeParams {
        t: t / r as f64,
        ..params
    };
    let seq = composite_sample(h, &params, 0)?;
    Ok(crate::linalg::matrix_power(
        &crate::sequence::sequence_unitary(&seq, h)?,
        r,
    ))
}
