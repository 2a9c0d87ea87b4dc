//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use compsim::cli::data::bundled;
use compsim::cli::experiments::exp_decay;
use compsim::composite::{
    collapsed_unitary, composite_cost, composite_exact_channel, optimal_nb_first,
    optimal_nb_higher, CompositeInputs, CompositeParams,
};
use compsim::framework::{
    multiproduct_coeffs, multiproduct_error_check, qdrift_instance, randomized_trotter_direct,
    randomized_trotter_template, template_channel, SelectInstance, Unprepare,
};
use compsim::hamiltonian::{dense_sum, pauli_matrix};
use compsim::linalg::{expm_i_hermitian, identity, CMat, C64};
use compsim::metrics::{
    diamond_lower_bound, fit_scaling_exponent, ideal_channel, unitary_channel,
    unitary_spectral_distance, Superoperator,
};
use compsim::partition::{
    descend_weights, expected_cost_bound, moment_report, nb_lower_bound, prob_partition,
    weight_gradient, weighted_relaxed_cost, DescentOptions,
};
use compsim::qdrift::{qdrift_error_bound, qdrift_exact_channel};
use compsim::rng::{stream_rng, StreamRng};
use compsim::trotter::{trotter_channel, trotter_error_bound, trotter_unitary};
use compsim::{Hamiltonian, Order, Partition};
use nalgebra::DMatrix;
use rand::Rng;

const SEED: u64 = 0xACCE_97;
const ROUNDOFF: f64 = 1e-12;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

fn random_weight(rng: &mut StreamRng) -> f64 {
    rng.gen_range(0.05..1.0)
}

fn random_pauli(rng: &mut StreamRng, qubits: usize) -> String {
    loop {
        let s: String = (0..qubits)
            .map(|_| ['I', 'X', 'Y', 'Z'][rng.gen_range(0..4)])
            .collect();
        if s.chars().any(|c| c != 'I') {
            return s;
        }
    }
}

fn random_hermitian(rng: &mut StreamRng, d: usize) -> CMat {
    let a = CMat::from_fn(d, d, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    (&a + a.adjoint()).scale(0.5)
}

/// Mix of Pauli strings and dense Hermitian terms on up to `max_qubits`.
fn random_ham(
    rng: &mut StreamRng,
    max_qubits: usize,
    min_terms: usize,
    max_terms: usize,
) -> Hamiltonian {
    let qubits = rng.gen_range(1..=max_qubits);
    let len = rng.gen_range(min_terms..=max_terms);
    let pairs = (0..len)
        .map(|_| {
            let w = random_weight(rng);
            let op = if rng.gen_bool(0.7) {
                pauli_matrix(&random_pauli(rng, qubits)).unwrap()
            } else {
                random_hermitian(rng, 1 << qubits)
            };
            (w, op)
        })
        .collect();
    Hamiltonian::from_weighted(pairs).unwrap()
}

fn random_pauli_ham(
    rng: &mut StreamRng,
    qubits: usize,
    min_terms: usize,
    max_terms: usize,
) -> Hamiltonian {
    let len = rng.gen_range(min_terms..=max_terms);
    let pairs = (0..len)
        .map(|_| {
            (
                random_weight(rng),
                pauli_matrix(&random_pauli(rng, qubits)).unwrap(),
            )
        })
        .collect();
    Hamiltonian::from_weighted(pairs).unwrap()
}

fn random_partition(rng: &mut StreamRng, len: usize) -> Partition {
    let mask: Vec<bool> = (0..len).map(|_| rng.gen_bool(0.5)).collect();
    Partition::from_mask(&mask)
}

fn exact_unitary(h: &Hamiltonian, t: f64) -> CMat {
    expm_i_hermitian(&dense_sum(h, &h.all_indices()).unwrap(), t)
}

fn choi_distance(a: &Superoperator, b: &Superoperator) -> f64 {
    diamond_lower_bound(a, b).unwrap()
}

fn trotter_bound_validity() -> Verdict {
    let start = Instant::now();
    let (mut checks, mut violations, mut worst) = (0, 0, 0.0f64);
    let instances = 240;
    for i in 0..instances {
        let mut rng = stream_rng(SEED, 100_000 + i);
        let order = Order::new([1, 2, 4][i as usize % 3]).unwrap();
        let h = random_ham(&mut rng, 3, 1, 4);
        let t = rng.gen_range(0.05..1.0) / h.lambda();
        let exact = exact_unitary(&h, t);
        for r in [1, 2, 4] {
            let approx = trotter_unitary(&h, &h.all_indices(), order, t, r).unwrap();
            let lhs = unitary_spectral_distance(&exact, &approx).unwrap();
            let bound = trotter_error_bound(&h, &h.all_indices(), order, t, r)
                .unwrap()
                .channel;
            checks += 1;
            if lhs > bound + ROUNDOFF {
                violations += 1;
            }
            if bound > 0.0 {
                worst = worst.max(lhs / bound);
            }
        }
    }
    let elapsed = start.elapsed();
    Verdict::new(
        violations == 0 && elapsed <= Duration::from_secs(120),
        format!(
            "{instances} instances, {checks} checks, {violations} violations, max distance/bound {worst:.3}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn qdrift_bound_validity() -> Verdict {
    let start = Instant::now();
    let (mut violations, mut worst) = (0, 0.0f64);
    let instances = 120;
    for i in 0..instances {
        let mut rng = stream_rng(SEED, 200_000 + i);
        let h = random_ham(&mut rng, 3, 1, 5);
        let t = rng.gen_range(0.05..1.0) / h.lambda();
        let n = rng.gen_range(1..=32u64);
        let ch = qdrift_exact_channel(&h, &h.all_indices(), t, n).unwrap();
        let lhs = choi_distance(&ch, &ideal_channel(&h, t).unwrap());
        let bound = qdrift_error_bound(h.lambda(), t, n);
        if lhs > bound + ROUNDOFF {
            violations += 1;
        }
        worst = worst.max(lhs / bound);
    }
    let elapsed = start.elapsed();
    Verdict::new(
        violations == 0 && elapsed <= Duration::from_secs(120),
        format!(
            "{instances} instances, {violations} violations, max distance/bound {worst:.3}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn composite_eps_compliance() -> Verdict {
    let (mut violations, mut worst) = (0, 0.0f64);
    let instances = 120;
    for i in 0..instances {
        let mut rng = stream_rng(SEED, 300_000 + i);
        let h = random_ham(&mut rng, 2, 2, 5);
        let order = Order::new([1, 2, 4][i as usize % 3]).unwrap();
        let partition = random_partition(&mut rng, h.len());
        let eps = 10f64.powf(rng.gen_range(-2.0..-1.0));
        let t = rng.gen_range(0.1..1.0) / h.lambda();
        let n_b = rng.gen_range(1..=8u64);
        let r = composite_cost(&h, &partition, order, t, eps, n_b)
            .unwrap()
            .r;
        let params = CompositeParams::new(partition, order, t, eps, n_b, r).unwrap();
        let ch = composite_exact_channel(&h, &params).unwrap();
        let d = choi_distance(&ch, &ideal_channel(&h, t).unwrap());
        if d > eps {
            violations += 1;
        }
        worst = worst.max(d / eps);
    }
    Verdict::new(
        violations == 0,
        format!("{instances} instances, {violations} violations, max distance/eps {worst:.3}"),
    )
}

fn collapse_exactness() -> Verdict {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for i in 0..30 {
        let mut rng = stream_rng(SEED, 400_000 + i);
        let h = random_ham(&mut rng, 2, 1, 4);
        let t = rng.gen_range(0.1..1.5);
        let r = rng.gen_range(1..=3u64);
        let all = h.all_indices();
        for n in [1, 2, 4] {
            let order = Order::new(n).unwrap();
            let params =
                CompositeParams::new(Partition::all_trotter(h.len()), order, t, 0.1, 1, r).unwrap();
            let comp = composite_exact_channel(&h, &params).unwrap();
            let pure = match n {
                1 => trotter_channel(&h, &all, order, t, r).unwrap(),
                2 => trotter_channel(&h, &all, order, t, 2 * r).unwrap(),
                _ => unitary_channel(
                    &collapsed_unitary(&h, &Partition::all_trotter(h.len()), order, t, r).unwrap(),
                )
                .unwrap(),
            };
            worst = worst.max(choi_distance(&comp, &pure));
            cases += 1;
        }
        let n_b = rng.gen_range(1..=5u64);
        let params =
            CompositeParams::new(Partition::all_qdrift(h.len()), Order::FIRST, t, 0.1, n_b, r)
                .unwrap();
        let comp = composite_exact_channel(&h, &params).unwrap();
        let pure = qdrift_exact_channel(&h, &all, t, n_b * r).unwrap();
        worst = worst.max(choi_distance(&comp, &pure));
        cases += 1;
    }
    Verdict::new(
        worst <= 1e-10,
        format!("{cases} cases, max Choi distance {worst:.2e}"),
    )
}

fn scaling_exponents() -> Verdict {
    let grid: Vec<f64> = (1..=6).map(|e| 2f64.powi(-e)).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["xz", "ising2", "heisenberg2", "mixed2"] {
        let h = bundled(name).unwrap();
        let all = h.all_indices();
        for two_k in [2, 4] {
            let order = Order::new(two_k).unwrap();
            let points: Vec<(f64, f64)> = grid
                .iter()
                .map(|&t| {
                    let u = trotter_unitary(&h, &all, order, t, 1).unwrap();
                    (
                        t,
                        unitary_spectral_distance(&exact_unitary(&h, t), &u).unwrap(),
                    )
                })
                .collect();
            let slope = fit_scaling_exponent(&points).unwrap();
            pass &= slope >= two_k as f64 - 0.3;
            parts.push(format!("{name}/{two_k}:{slope:.2}"));
        }
        let t = 0.5 / h.lambda();
        let ideal = ideal_channel(&h, t).unwrap();
        let points: Vec<(f64, f64)> = (2..=8)
            .map(|e| {
                let n = 1u64 << e;
                (
                    n as f64,
                    choi_distance(&qdrift_exact_channel(&h, &all, t, n).unwrap(), &ideal),
                )
            })
            .collect();
        let slope = fit_scaling_exponent(&points).unwrap();
        pass &= (slope + 1.0).abs() <= 0.1;
        parts.push(format!("{name}/qdrift:{slope:.3}"));
    }
    Verdict::new(pass, format!("slopes {}", parts.join(" ")))
}

fn saturation_limits() -> Verdict {
    let mut pass = true;
    let (mut worst_qd, mut worst_trott) = (0.0f64, 0.0f64);
    for name in ["xz", "ising2", "heisenberg2", "mixed2"] {
        let h = bundled(name).unwrap();
        for two_k in [2u32, 4, 6, 8] {
            let order = Order::new(two_k).unwrap();
            let ups = order.upsilon() as f64;
            let inv = 1.0 / two_k as f64;
            let limit = ups.powf(inv) / 2f64.powf(1.0 - inv);
            if two_k == 2 {
                pass &= (limit - 1.0).abs() < 1e-15;
            }
            pass &= limit <= 1.12;
            let hi = expected_cost_bound(&h, 1.0, 1e-3, order, 1e6).unwrap();
            let lo = expected_cost_bound(&h, 1.0, 1e-3, order, 1e-9).unwrap();
            worst_qd = worst_qd.max((hi.ratio_qd - 1.0).abs());
            worst_trott = worst_trott.max((lo.ratio_trott - limit).abs());
        }
    }
    pass &= worst_qd <= 0.02 && worst_trott <= 0.01;
    Verdict::new(
        pass,
        format!("max |ratio_QD - 1| {worst_qd:.2e}, max |ratio_Trott - limit| {worst_trott:.2e}"),
    )
}

/// Right-hand side of the scheme's second guarantee on `E[λ_B]/λ`.
fn guarantee_rhs(n_b: f64, lambda: f64, t: f64, eps: f64, order: Order) -> f64 {
    let two_k = order.value() as f64;
    let ups = order.upsilon() as f64;
    let k = two_k / 2.0;
    0.5 * (((4.0 * k + 2.0 * ups) / (two_k + 1.0)).powf(1.0 / two_k)
        * (2.0 * ups).powf(1.0 + 1.0 / two_k))
    .sqrt()
        * (n_b * (eps / (lambda * t)).powf(1.0 - 1.0 / two_k)).sqrt()
}

fn prob_scheme_guarantees() -> Verdict {
    let mut violations = 0;
    let configs = 1000;
    for i in 0..configs {
        let mut rng = stream_rng(SEED, 700_000 + i);
        let len = rng.gen_range(1..=30);
        let weights: Vec<f64> = (0..len)
            .map(|_| 10f64.powf(rng.gen_range(-3.0..0.0)))
            .collect();
        let terms: Vec<(f64, CMat)> = weights
            .iter()
            .map(|&w| (w, pauli_matrix("Z").unwrap()))
            .collect();
        let h = Hamiltonian::from_weighted(terms).unwrap();
        let order = Order::new([2, 4, 6][rng.gen_range(0..3)]).unwrap();
        let t = 10f64.powf(rng.gen_range(-1.0..2.0));
        let eps = 10f64.powf(rng.gen_range(-4.0..-1.0));
        let lb = nb_lower_bound(&h, t, eps, order).unwrap();
        let n_b = if i % 10 == 0 {
            lb
        } else {
            lb * (1.0 + rng.gen_range(0.0..20.0))
        };
        let ok = match prob_partition(&h, t, eps, order, n_b) {
            Ok(pp) => {
                let in_range = pp.probs.iter().all(|p| (0.0..=1.0).contains(p));
                let ratio = pp.expected_lambda_b(&h.weights()) / h.lambda();
                in_range && ratio <= guarantee_rhs(n_b, h.lambda(), t, eps, order) * (1.0 + 1e-12)
            }
            Err(_) => false,
        };
        if !ok {
            violations += 1;
        }
    }
    Verdict::new(
        violations == 0,
        format!("{configs} configurations, {violations} violations"),
    )
}

fn moment_dominance() -> Verdict {
    let configs = 50;
    let mut failures = Vec::new();
    for i in 0..configs {
        let mut rng = stream_rng(SEED, 800_000 + i);
        let h = random_pauli_ham(&mut rng, 2, 3, 6);
        let order = if i % 2 == 0 {
            Order::SECOND
        } else {
            Order::FOURTH
        };
        let t = rng.gen_range(0.2..2.0) / h.lambda();
        let eps = 10f64.powf(rng.gen_range(-4.0..-2.0));
        let c = rng.gen_range(0.05..3.0);
        let n_b = (1.0 + c) * (1.0 + c) * nb_lower_bound(&h, t, eps, order).unwrap();
        let pp = prob_partition(&h, t, eps, order, n_b).unwrap();
        let rep = moment_report(&h, &pp, t, order, n_b, 10_000, SEED + i).unwrap();
        let p = rep.mc.p.expect("exact commutator table");
        for (name, est, bound) in [
            ("L_A^2", rep.mc.la2, rep.e_la2_bound),
            ("Q", rep.mc.q, rep.e_q_bound),
            ("P", p, rep.e_p_bound),
            ("lambda_B", rep.mc.lambda_b, rep.e_lambda_b),
        ] {
            if est.mean > bound + 3.0 * est.se + ROUNDOFF * bound.abs() {
                failures.push(format!("config {i} {name}: {} > {bound}", est.mean));
            }
        }
    }
    Verdict::new(
        failures.is_empty(),
        format!(
            "{configs} configurations x 10000 trials, {} exceedances {}",
            failures.len(),
            failures.join("; ")
        ),
    )
}

fn exp_decay_family() -> Verdict {
    let grid = [16, 32, 64, 128, 256];
    let mut pass = true;
    let mut parts = Vec::new();
    for c in [1.0, 2.0] {
        let (rows, _) = exp_decay(&grid, c, 1e-3, Order::SECOND, 10_000, SEED).unwrap();
        for row in &rows {
            let neg_log2_lambda = -(-(2f64.powi(-(row.l as i32)))).ln_1p() / std::f64::consts::LN_2;
            let formula = (c + (row.l as f64).log2() + neg_log2_lambda).floor() as usize;
            pass &= row.s_size == formula;
            pass &= row.tail_frequency <= 2.0 * (-row.expected_l_a / 3.0).exp() + 3.0 * row.tail_se;
        }
        for w in rows.windows(2) {
            pass &= w[1].mean_l_a_over_l < w[0].mean_l_a_over_l;
            pass &= w[1].mean_lambda_b_over_lambda < w[0].mean_lambda_b_over_lambda;
        }
        let sizes: Vec<String> = rows.iter().map(|r| r.s_size.to_string()).collect();
        parts.push(format!("c={c}: |S|={}", sizes.join(",")));
    }
    Verdict::new(pass, parts.join("; "))
}

fn gradient_correctness() -> Verdict {
    let instances = 50;
    let (mut worst_rel, mut increases) = (0.0f64, 0);
    for i in 0..instances {
        let mut rng = stream_rng(SEED, 1_000_000 + i);
        let h = random_ham(&mut rng, 2, 3, 8);
        let t = rng.gen_range(0.2..2.0);
        let eps = 10f64.powf(rng.gen_range(-3.0..-1.0));
        let n_b = rng.gen_range(1.0..20.0);
        let w: Vec<f64> = (0..h.len()).map(|_| rng.gen_range(0.05..0.95)).collect();
        let g = weight_gradient(&h, &w, t, eps, n_b).unwrap();
        let step = 1e-5;
        let fd: Vec<f64> = (0..h.len())
            .map(|m| {
                let (mut up, mut down) = (w.clone(), w.clone());
                up[m] += step;
                down[m] -= step;
                (weighted_relaxed_cost(&h, &up, t, eps, n_b).unwrap()
                    - weighted_relaxed_cost(&h, &down, t, eps, n_b).unwrap())
                    / (2.0 * step)
            })
            .collect();
        let scale = fd.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let err = g
            .iter()
            .zip(&fd)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        worst_rel = worst_rel.max(err / scale);
        let res = descend_weights(&h, t, eps, n_b, &w, DescentOptions::default()).unwrap();
        if res.history.windows(2).any(|p| p[1] > p[0]) || res.final_cost > res.initial_cost {
            increases += 1;
        }
    }
    Verdict::new(
        worst_rel <= 1e-6 && increases == 0,
        format!("{instances} instances, max relative gradient error {worst_rel:.2e}, {increases} descents with a cost increase"),
    )
}

fn optimal_nb_stationarity() -> Verdict {
    let mut worst = 0.0f64;
    let (mut first, mut higher) = (0, 0);
    let mut stream = 1_100_000;
    while first < 50 || higher < 50 {
        stream += 1;
        let mut rng = stream_rng(SEED, stream);
        let h = random_ham(&mut rng, 2, 2, 6);
        let partition = random_partition(&mut rng, h.len());
        if partition.a.is_empty() || partition.b.is_empty() {
            continue;
        }
        let t = rng.gen_range(0.2..2.0);
        let eps = 10f64.powf(rng.gen_range(-3.0..-1.0));
        let (order, n_star) = if first < 50 {
            match optimal_nb_first(&h, &partition) {
                Ok(n) => (Order::FIRST, n),
                Err(_) => continue,
            }
        } else {
            let order = Order::new([2, 4][rng.gen_range(0..2)]).unwrap();
            match optimal_nb_higher(&h, &partition, order, t, eps) {
                Ok(n) => (order, n),
                Err(_) => continue,
            }
        };
        let inputs = CompositeInputs::new(&h, &partition, order).unwrap();
        let cost = |n: f64| inputs.relaxed_cost(t, eps, n);
        let dn = 1e-4 * n_star;
        let derivative = (cost(n_star + dn) - cost(n_star - dn)) / (2.0 * dn);
        worst = worst.max((derivative * n_star / cost(n_star)).abs());
        if order.is_first() {
            first += 1;
        } else {
            higher += 1;
        }
    }
    Verdict::new(
        worst <= 1e-6,
        format!(
            "{first} first-order and {higher} higher-order instances, max |dC/dN|·N/C {worst:.2e}"
        ),
    )
}

/// Householder reflection exchanging `e_0` and the unit vector `a`.
fn prepare_unitary(a: &[f64]) -> DMatrix<f64> {
    let m = a.len();
    let mut v: Vec<f64> = a.iter().map(|x| -x).collect();
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if vv < 1e-30 {
        return DMatrix::identity(m, m);
    }
    let v = DMatrix::from_column_slice(m, 1, &v);
    DMatrix::identity(m, m) - (&v * v.transpose()) * (2.0 / vv)
}

/// Runs prepare, controlled select and unprepare on the joint
/// ancilla-system space and traces the ancilla out.
fn joint_space_channel(
    inst: &SelectInstance,
    amplitudes: &[f64],
    ops: &[CMat],
    unprep: Unprepare,
) -> Superoperator {
    let m = amplitudes.len();
    let d = ops[0].nrows();
    let w = prepare_unitary(amplitudes);
    let v = match unprep {
        Unprepare::Identity => DMatrix::identity(m, m),
        Unprepare::PrepInverse => w.transpose(),
    };
    let lift = |a: &DMatrix<f64>| {
        let a = a.map(|x| C64::new(x, 0.0));
        a.kronecker(&identity(d))
    };
    let mut select = CMat::zeros(m * d, m * d);
    for (j, u) in ops.iter().enumerate() {
        select.view_mut((j * d, j * d), (d, d)).copy_from(u);
    }
    let total = lift(&v) * select * lift(&w);
    let mut mat = CMat::zeros(d * d, d * d);
    for out in 0..m {
        let k = total.view((out * d, 0), (d, d)).into_owned();
        mat += k.conjugate().kronecker(&k);
    }
    assert_eq!(inst.system_dim(), d);
    Superoperator { mat, dim: d }
}

fn max_entry(a: &Superoperator, b: &Superoperator) -> f64 {
    (&a.mat - &b.mat)
        .iter()
        .fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn framework_checks() -> Verdict {
    let mut template_err = 0.0f64;
    for i in 0..20 {
        let mut rng = stream_rng(SEED, 1_200_000 + i);
        let h = random_ham(&mut rng, 2, 1, 4);
        let all = h.all_indices();
        let t = rng.gen_range(0.1..1.5);
        let n = rng.gen_range(1..=4u64);
        let lambda = h.lambda();
        let inst = qdrift_instance(&h, &all, t / n as f64).unwrap();
        let instances = vec![inst.clone(); n as usize];
        let via_template = template_channel(&instances, h.dim()).unwrap();
        let direct = qdrift_exact_channel(&h, &all, t, n).unwrap();
        let amps: Vec<f64> = all
            .iter()
            .map(|&j| (h.term(j).weight / lambda).sqrt())
            .collect();
        let ops: Vec<CMat> = all
            .iter()
            .map(|&j| h.term(j).exp_i(lambda * t / n as f64))
            .collect();
        let joint = joint_space_channel(&inst, &amps, &ops, Unprepare::Identity).power(n);
        template_err = template_err
            .max(max_entry(&via_template, &direct))
            .max(max_entry(&joint, &direct));

        let rt = randomized_trotter_template(&h, &all, t).unwrap();
        let via_template = template_channel(std::slice::from_ref(&rt), h.dim()).unwrap();
        let direct = randomized_trotter_direct(&h, &all, t).unwrap();
        let perms = compsim::framework::permutations(&all);
        let ops: Vec<CMat> = perms
            .iter()
            .map(|p| trotter_unitary(&h, p, Order::FIRST, t, 1).unwrap())
            .collect();
        let amps = vec![(1.0 / perms.len() as f64).sqrt(); perms.len()];
        let joint = joint_space_channel(&rt, &amps, &ops, Unprepare::PrepInverse);
        template_err = template_err
            .max(max_entry(&via_template, &direct))
            .max(max_entry(&joint, &direct));
    }

    let c = multiproduct_coeffs(&[1, 2]).unwrap();
    let coeff_err = (c[0] + 1.0).abs().max((c[1] - 2.0).abs());
    let residual = (c[0] + c[1] - 1.0).abs().max((c[0] + c[1] / 2.0).abs());

    let h = bundled("xz").unwrap();
    let grid: Vec<f64> = (1..=6).map(|e| 2f64.powi(-e)).collect();
    let s1 = multiproduct_error_check(&h, &[1], &grid)
        .unwrap()
        .slope
        .unwrap();
    let s2 = multiproduct_error_check(&h, &[1, 2], &grid)
        .unwrap()
        .slope
        .unwrap();
    let gap = s2 - s1;

    Verdict::new(
        template_err <= 1e-10 && coeff_err <= 1e-10 && residual <= 1e-10 && gap >= 1.5,
        format!(
            "template vs direct {template_err:.2e}, coefficients ({:.12}, {:.12}) residual {residual:.1e}, \
             multiproduct slopes N=1 {s1:.3} N=2 {s2:.3} gap {gap:.3} (need >= 1.5)",
            c[0], c[1]
        ),
    )
}

fn cli_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_compsim");
    let runs: &[&[&str]] = &[
        &[
            "--ham",
            "bundled:ising2",
            "--time",
            "1",
            "--eps",
            "0.01",
            "cost",
        ],
        &[
            "--ham",
            "bundled:heisenberg2",
            "--time",
            "1",
            "--eps",
            "0.01",
            "--order",
            "4",
            "cost",
        ],
        &[
            "--ham",
            "bundled:ising2",
            "--time",
            "1",
            "--eps",
            "0.01",
            "--trials",
            "2000",
            "partition",
        ],
        &[
            "--ham",
            "bundled:mixed2",
            "--time",
            "1",
            "--eps",
            "0.01",
            "--order",
            "1",
            "partition",
            "--scheme",
            "gradient",
        ],
        &[
            "--ham",
            "bundled:xz",
            "--time",
            "0.5",
            "--eps",
            "0.01",
            "--seed",
            "7",
            "--format",
            "json",
            "simulate",
        ],
        &[
            "--seed",
            "11",
            "--trials",
            "3000",
            "experiment",
            "exp-decay",
        ],
        &["experiment", "saturation"],
        &["experiment", "crossover"],
        &["--trials", "500", "verify"],
    ];
    let run = |args: &[&str], workers: &str| {
        Command::new(bin)
            .args(args)
            .env("COMPSIM_WORKERS", workers)
            .output()
            .expect("run compsim")
    };
    let mut mismatches = Vec::new();
    for args in runs {
        let a = run(args, "1");
        let b = run(args, "1");
        let c = run(args, "4");
        if a.stdout.is_empty() || a.status.code() != Some(0) {
            mismatches.push(format!("{} (exit {:?})", args.join(" "), a.status.code()));
            continue;
        }
        if a.stdout != b.stdout
            || a.stdout != c.stdout
            || a.stderr != b.stderr
            || a.status.code() != c.status.code()
        {
            mismatches.push(args.join(" "));
        }
    }
    Verdict::new(
        mismatches.is_empty(),
        format!(
            "{} command lines run three times, mismatches: [{}]",
            runs.len(),
            mismatches.join("; ")
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 13] = [
        ("trotter_bound_validity", trotter_bound_validity),
        ("qdrift_bound_validity", qdrift_bound_validity),
        ("composite_eps_compliance", composite_eps_compliance),
        ("collapse_exactness", collapse_exactness),
        ("scaling_exponents", scaling_exponents),
        ("saturation_limits", saturation_limits),
        ("prob_scheme_guarantees", prob_scheme_guarantees),
        ("moment_dominance", moment_dominance),
        ("exp_decay_family", exp_decay_family),
        ("gradient_correctness", gradient_correctness),
        ("optimal_nb_stationarity", optimal_nb_stationarity),
        ("framework_instances", framework_checks),
        ("cli_determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {name}: {tag} ({})", i + 1, v.detail);
        if !v.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
