//! Invariant suite over the bundled Hamiltonians. Random instances come from
//! the seeded streams `(seed, k)`, one `k` per check family and Hamiltonian.

use rand::Rng;
use serde::Serialize;

use super::{data, output, Failure, Outcome, RunConfig};
use crate::commutators::{
    alpha_cross_bound, alpha_exact, alpha_single_bound, CommutatorTable, DEFAULT_BUDGET,
};
use crate::composite::{
    collapsed_unitary, composite_exact_channel, segment_error_decomposition, CompositeInputs,
    CompositeParams,
};
use crate::error::Result;
use crate::framework::{
    multiproduct_coeffs, qdrift_instance, randomized_trotter_direct, randomized_trotter_template,
    template_channel, MAX_PERMUTED_TERMS,
};
use crate::hamiltonian::{dense_sum, lambda_of, parse_hamiltonian, Hamiltonian, Partition};
use crate::linalg::{expm_i_hermitian, max_abs};
use crate::metrics::{
    crossover_time, diamond_lower_bound, diamond_upper_bound, ideal_channel, qdrift_relaxed_cost,
    trotter_relaxed_cost, unitary_channel, unitary_spectral_distance,
};
use crate::order::Order;
use crate::partition::{
    chi_root_consistency, chi_root_definition, descend_weights, expected_cost_bound,
    lambda_b_guarantee, moment_report, nb_lower_bound, prob_partition, trotter_saturation_ratio,
    DescentOptions, WeightProblem,
};
use crate::qdrift::{qdrift_error_bound, qdrift_exact_channel};
use crate::rng::{stream_rng, StreamRng};
use crate::trotter::{trotter_alpha, trotter_channel, trotter_error_bound, trotter_unitary};

pub const DEFAULT_VERIFY_TRIALS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub module: &'static str,
    pub check: &'static str,
    pub instance: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

struct Suite {
    rows: Vec<CheckRow>,
    seed: u64,
    stream: u64,
}

impl Suite {
    fn rng(&mut self) -> StreamRng {
        self.stream += 1;
        stream_rng(self.seed, self.stream)
    }

    fn push(
        &mut self,
        module: &'static str,
        check: &'static str,
        instance: &str,
        value: f64,
        bound: f64,
        pass: bool,
    ) {
        self.rows.push(CheckRow {
            module,
            check,
            instance: instance.to_string(),
            value,
            bound,
            pass,
        });
    }

    /// `value ≤ bound` up to rounding.
    fn le(
        &mut self,
        module: &'static str,
        check: &'static str,
        instance: &str,
        value: f64,
        bound: f64,
    ) {
        let pass = value <= bound * (1.0 + 1e-9) + 1e-12;
        self.push(module, check, instance, value, bound, pass);
    }

    fn close(
        &mut self,
        module: &'static str,
        check: &'static str,
        instance: &str,
        value: f64,
        target: f64,
        tol: f64,
    ) {
        let dev = (value - target).abs();
        self.push(module, check, instance, dev, tol, dev <= tol);
    }

    fn flag(&mut self, module: &'static str, check: &'static str, instance: &str, ok: bool) {
        self.push(module, check, instance, ok as u8 as f64, 1.0, ok);
    }
}

/// Random partition with both sides nonempty when `L ≥ 2`.
fn random_partition(rng: &mut StreamRng, len: usize) -> Partition {
    loop {
        let mask: Vec<bool> = (0..len).map(|_| rng.gen_bool(0.5)).collect();
        let n = mask.iter().filter(|&&b| b).count();
        if len < 2 || (n > 0 && n < len) {
            return Partition::from_mask(&mask);
        }
    }
}

fn hamiltonian_checks(s: &mut Suite, name: &str, h: &Hamiltonian) -> Result<()> {
    let lam = h.lambda();
    let sum: f64 = h.weights().iter().sum();
    s.close(
        "hamiltonian",
        "lambda_is_weight_sum",
        name,
        lam,
        sum,
        1e-12 * lam,
    );
    let mut rng = s.rng();
    let p = random_partition(&mut rng, h.len());
    let split = lambda_of(h, &p.a)? + lambda_of(h, &p.b)?;
    s.close(
        "hamiltonian",
        "lambda_partition_split",
        name,
        split,
        lam,
        1e-12 * lam,
    );
    let dev =
        max_abs(&(dense_sum(h, &p.a)? + dense_sum(h, &p.b)? - dense_sum(h, &h.all_indices())?));
    s.le("hamiltonian", "dense_sum_partition_split", name, dev, 1e-12);
    let text = serde_json::to_string(&h.to_file()).expect("Hamiltonian files serialize");
    let again = parse_hamiltonian(&text)?;
    let diff = h
        .weights()
        .iter()
        .zip(again.weights())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    s.le("hamiltonian", "normalization_idempotent", name, diff, 0.0);
    Ok(())
}

fn commutator_checks(s: &mut Suite, name: &str, h: &Hamiltonian) -> Result<()> {
    let mut rng = s.rng();
    let p = random_partition(&mut rng, h.len());
    for order in [Order::SECOND, Order::FOURTH] {
        let table = CommutatorTable::build(h, order, DEFAULT_BUDGET)?;
        let exact = alpha_exact(h, &h.all_indices(), order)?;
        let total = table.alpha_total();
        s.close(
            "commutators",
            "table_matches_enumeration",
            name,
            total,
            exact,
            1e-10 * exact.max(1.0),
        );
        s.le(
            "commutators",
            "alpha_within_norm_bound",
            name,
            exact,
            alpha_single_bound(h.lambda(), order),
        );
        let rep = table.report(&p);
        let parts = rep.alpha_a + rep.alpha_b + rep.alpha_cross;
        s.close(
            "commutators",
            "partition_sums_to_total",
            name,
            parts,
            total,
            1e-10 * total.max(1.0),
        );
        let cross = alpha_cross_bound(lambda_of(h, &p.a)?, lambda_of(h, &p.b)?, order);
        s.le(
            "commutators",
            "cross_within_norm_bound",
            name,
            rep.alpha_cross,
            cross,
        );
    }
    Ok(())
}

fn trotter_checks(s: &mut Suite, name: &str, h: &Hamiltonian) -> Result<()> {
    let all = h.all_indices();
    let t = 0.9 / h.lambda();
    let exact = expm_i_hermitian(&dense_sum(h, &all)?, t);
    for order in [Order::FIRST, Order::SECOND, Order::FOURTH] {
        for r in [1, 2, 4] {
            let d = unitary_spectral_distance(&exact, &trotter_unitary(h, &all, order, t, r)?)?;
            let b = trotter_error_bound(h, &all, order, t, r)?.channel;
            s.le(
                "trotter",
                "channel_bound_holds",
                &format!("{name} order={order} r={r}"),
                d,
                b,
            );
        }
    }
    Ok(())
}

fn qdrift_checks(s: &mut Suite, name: &str, h: &Hamiltonian) -> Result<()> {
    let all = h.all_indices();
    let t = 0.8 / h.lambda();
    let ideal = ideal_channel(h, t)?;
    for n in [1, 4, 16] {
        let ch = qdrift_exact_channel(h, &all, t, n)?;
        let inst = format!("{name} N={n}");
        s.le(
            "qdrift",
            "error_bound_holds",
            &inst,
            diamond_lower_bound(&ch, &ideal)?,
            qdrift_error_bound(h.lambda(), t, n),
        );
        s.flag("qdrift", "channel_is_cptp", &inst, ch.cptp_check().passes());
    }
    Ok(())
}

fn composite_checks(s: &mut Suite, name: &str, h: &Hamiltonian) -> Result<()> {
    let mut rng = s.rng();
    let all = h.all_indices();
    let len = h.len();
    let eps = 0.05;
    let t = 0.5 / h.lambda();
    let ideal = ideal_channel(h, t)?;
    for order in [Order::FIRST, Order::SECOND] {
        let p = random_partition(&mut rng, len);
        let nb = [1u64, 4, 16][rng.gen_range(0..3)];
        let rep = CompositeInputs::new(h, &p, order)?.report(t, eps, nb);
        let ch = composite_exact_channel(h, &CompositeParams::new(p, order, t, eps, nb, rep.r)?)?;
        let inst = format!("{name} order={order} N_B={nb} r={}", rep.r);
        s.le(
            "composite",
            "epsilon_compliance",
            &inst,
            diamond_lower_bound(&ch, &ideal)?,
            eps,
        );
        s.flag(
            "composite",
            "channel_is_cptp",
            &inst,
            ch.cptp_check().passes(),
        );
    }

    let trotter_all = Partition::all_trotter(len);
    let r = 3;
    let params = |order| CompositeParams::new(trotter_all.clone(), order, t, eps, 1, r);
    let first = composite_exact_channel(h, &params(Order::FIRST)?)?;
    let reference = trotter_channel(h, &all, Order::FIRST, t, r)?;
    s.le(
        "composite",
        "collapse_b_empty",
        &format!("{name} order=1"),
        diamond_lower_bound(&first, &reference)?,
        1e-10,
    );
    let second = composite_exact_channel(h, &params(Order::SECOND)?)?;
    let reference = trotter_channel(h, &all, Order::SECOND, t, 2 * r)?;
    s.le(
        "composite",
        "collapse_b_empty",
        &format!("{name} order=2"),
        diamond_lower_bound(&second, &reference)?,
        1e-10,
    );
    let fourth = composite_exact_channel(h, &params(Order::FOURTH)?)?;
    let reference = unitary_channel(&collapsed_unitary(h, &trotter_all, Order::FOURTH, t, r)?)?;
    s.le(
        "composite",
        "collapse_b_empty",
        &format!("{name} order=4"),
        diamond_lower_bound(&fourth, &reference)?,
        1e-10,
    );
    let qd = composite_exact_channel(
        h,
        &CompositeParams::new(Partition::all_qdrift(len), Order::FIRST, t, eps, 3, 2)?,
    )?;
    let reference = qdrift_exact_channel(h, &all, t, 6)?;
    s.le(
        "composite",
        "collapse_a_empty",
        &format!("{name} order=1"),
        diamond_lower_bound(&qd, &reference)?,
        1e-10,
    );

    let p = random_partition(&mut rng, len);
    for order in [Order::FIRST, Order::SECOND, Order::FOURTH] {
        let d = segment_error_decomposition(h, &p, order, 0.3 / h.lambda(), 4)?;
        s.le(
            "composite",
            "segment_decomposition",
            &format!("{name} order={order}"),
            d.measured,
            d.bound,
        );
    }
    for order in [Order::FIRST, Order::SECOND] {
        let inputs = CompositeInputs::new(h, &p, order)?;
        let inst = format!("{name} order={order}");
        let base = inputs.relaxed_cost(t, eps, 4.0);
        s.le(
            "composite",
            "cost_nondecreasing_in_t",
            &inst,
            base,
            inputs.relaxed_cost(1.5 * t, eps, 4.0),
        );
        s.le(
            "composite",
            "cost_nonincreasing_in_eps",
            &inst,
            base,
            inputs.relaxed_cost(t, eps / 2.0, 4.0),
        );
    }
    Ok(())
}

fn partition_checks(s: &mut Suite, name: &str, h: &Hamiltonian, trials: usize) -> Result<()> {
    let mut rng = s.rng();
    let lam = h.lambda();
    let t = 1.0 / lam;
    let prob = WeightProblem::new(h, t, 0.1, 3.0)?;
    let w: Vec<f64> = (0..h.len()).map(|_| rng.gen_range(0.05..0.95)).collect();
    let g = prob.gradient(&w);
    let mut worst = 0.0f64;
    for m in 0..h.len() {
        let step = 1e-6;
        let (mut up, mut dn) = (w.clone(), w.clone());
        up[m] += step;
        dn[m] -= step;
        let fd = (prob.cost(&up) - prob.cost(&dn)) / (2.0 * step);
        worst = worst.max((fd - g[m]).abs() / g[m].abs().max(1e-12));
    }
    s.le(
        "partition",
        "gradient_matches_finite_differences",
        name,
        worst,
        1e-6,
    );
    let res = descend_weights(h, t, 0.1, 3.0, &w, DescentOptions::default())?;
    s.le(
        "partition",
        "descent_never_increases_cost",
        name,
        res.final_cost,
        res.initial_cost,
    );

    for order in [Order::SECOND, Order::FOURTH] {
        let inst = format!("{name} order={order}");
        let eps = 10f64.powf(rng.gen_range(-4.0..-1.0));
        let t = rng.gen_range(0.1..3.0) / lam;
        let lb = nb_lower_bound(h, t, eps, order)?;
        let nb = lb * (1.0 + rng.gen_range(0.0..3.0f64)).powi(2);
        let pp = prob_partition(h, t, eps, order, nb)?;
        s.flag(
            "partition",
            "probabilities_in_unit_interval",
            &inst,
            pp.probs.iter().all(|p| (0.0..=1.0).contains(p)),
        );
        let ratio = pp.expected_lambda_b(&h.weights()) / lam;
        s.le(
            "partition",
            "qdrift_weight_guarantee",
            &inst,
            ratio,
            lambda_b_guarantee(lam, t, eps, order, nb),
        );
        let a = chi_root_definition(nb, lam, t, eps, order);
        s.close(
            "partition",
            "chi_forms_agree",
            &inst,
            chi_root_consistency(nb, lam, t, eps, order),
            a,
            1e-12 * a,
        );
    }

    let order = Order::SECOND;
    let (t, eps) = (1.0 / lam, 1e-3);
    let c = rng.gen_range(0.2..2.0);
    let nb = nb_lower_bound(h, t, eps, order)? * (1.0 + c) * (1.0 + c);
    let pp = prob_partition(h, t, eps, order, nb)?;
    let rep = moment_report(h, &pp, t, order, nb, trials, s.seed ^ s.stream)?;
    for d in rep.dominance() {
        let check = match d.quantity {
            "L_A^2" => "moment_l_a_squared",
            "lambda_B" => "moment_lambda_b_exact",
            "Q" => "moment_q",
            "Q^2" => "moment_q_squared",
            _ => "moment_p",
        };
        s.push("partition", check, name, d.mc_mean, d.bound, d.holds);
    }

    for order in [Order::SECOND, Order::FOURTH] {
        let inst = format!("{name} order={order}");
        let lo = expected_cost_bound(h, 1.0, 1e-3, order, 1e-9)?;
        s.close(
            "partition",
            "saturation_trotter_limit",
            &inst,
            lo.ratio_trott,
            trotter_saturation_ratio(order),
            0.01,
        );
        let hi = expected_cost_bound(h, 1.0, 1e-3, order, 1e6)?;
        s.close(
            "partition",
            "saturation_qdrift_limit",
            &inst,
            hi.ratio_qd,
            1.0,
            0.02,
        );
    }
    Ok(())
}

fn metric_checks(s: &mut Suite, name: &str, h: &Hamiltonian) -> Result<()> {
    let all = h.all_indices();
    let t = 0.7 / h.lambda();
    let ideal = ideal_channel(h, t)?;
    let approx = trotter_channel(h, &all, Order::FIRST, t, 1)?;
    let lo = diamond_lower_bound(&approx, &ideal)?;
    s.le(
        "metrics",
        "lower_bound_below_upper_bound",
        name,
        lo,
        diamond_upper_bound(&approx, &ideal)?,
    );
    let order = Order::SECOND;
    let (alpha, _) = trotter_alpha(h, &all, order)?;
    if alpha > 0.0 {
        let eps = 1e-3;
        let ts = crossover_time(h, eps, order)?;
        let beta = qdrift_relaxed_cost(h.lambda(), ts, eps).ln()
            / trotter_relaxed_cost(h.len(), alpha, order, ts, eps).ln();
        s.close("metrics", "crossover_beta_is_one", name, beta, 1.0, 1e-6);
    }
    Ok(())
}

fn framework_checks(s: &mut Suite, name: &str, h: &Hamiltonian) -> Result<()> {
    let all = h.all_indices();
    let t = 0.5 / h.lambda();
    let via = template_channel(&[qdrift_instance(h, &all, t)?], h.dim())?;
    let direct = qdrift_exact_channel(h, &all, t, 1)?;
    s.le(
        "framework",
        "template_qdrift_matches_direct",
        name,
        max_abs(&(via.mat - direct.mat)),
        1e-10,
    );
    if h.len() <= MAX_PERMUTED_TERMS {
        let direct = randomized_trotter_direct(h, &all, t)?;
        let via = template_channel(&[randomized_trotter_template(h, &all, t)?], h.dim())?;
        s.le(
            "framework",
            "template_randomized_trotter_matches_direct",
            name,
            max_abs(&(&via.mat - &direct.mat)),
            1e-10,
        );
        let reversed: Vec<usize> = all.iter().rev().copied().collect();
        let relabeled = randomized_trotter_direct(h, &reversed, t)?;
        s.le(
            "framework",
            "randomized_trotter_relabeling_invariant",
            name,
            max_abs(&(relabeled.mat - direct.mat)),
            1e-12,
        );
    }
    Ok(())
}

fn multiproduct_checks(s: &mut Suite) -> Result<()> {
    for n in 1..=4u32 {
        let ks: Vec<u32> = (1..=n).collect();
        let c = multiproduct_coeffs(&ks)?;
        let inst = format!("k=1..{n}");
        s.close(
            "framework",
            "multiproduct_coefficients_sum_to_one",
            &inst,
            c.iter().sum(),
            1.0,
            1e-10,
        );
        let residual = (0..n as i32)
            .map(|m| {
                let row: f64 = ks
                    .iter()
                    .zip(&c)
                    .map(|(&k, cj)| cj * (k as f64).powi(-m))
                    .sum();
                (row - if m == 0 { 1.0 } else { 0.0 }).abs()
            })
            .fold(0.0, f64::max);
        s.le("framework", "multiproduct_residual", &inst, residual, 1e-10);
    }
    Ok(())
}

pub fn verify_suite(seed: u64, trials: usize) -> Result<Vec<CheckRow>> {
    let mut s = Suite {
        rows: Vec::new(),
        seed,
        stream: 0,
    };
    for (name, h) in data::bundled_set() {
        hamiltonian_checks(&mut s, name, &h)?;
        commutator_checks(&mut s, name, &h)?;
        trotter_checks(&mut s, name, &h)?;
        qdrift_checks(&mut s, name, &h)?;
        composite_checks(&mut s, name, &h)?;
        partition_checks(&mut s, name, &h, trials)?;
        metric_checks(&mut s, name, &h)?;
        framework_checks(&mut s, name, &h)?;
    }
    multiproduct_checks(&mut s)?;
    Ok(s.rows)
}

pub(super) fn command(config: &RunConfig) -> Result<Outcome> {
    let rows = verify_suite(config.seed, config.trials.unwrap_or(DEFAULT_VERIFY_TRIALS))?;
    let failures = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| Failure {
            check: format!("{}/{}", r.module, r.check),
            instance: r.instance.clone(),
            value: r.value,
            bound: r.bound,
        })
        .collect();
    Ok(Outcome {
        output: output::rows(&rows, config.format)?,
        failures,
    })
}
