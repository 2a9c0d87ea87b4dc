//! Named experiments: the exponentially decaying family, saturation of the
//! expected composite cost, and the cost crossover time.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{data, output, Experiment, Failure, Outcome, RunConfig};
use crate::commutators::alpha_single_bound;
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::metrics::{
    crossover_time, crossover_time_from_alpha, qdrift_relaxed_cost, trotter_relaxed_cost,
};
use crate::order::Order;
use crate::partition::{
    expected_cost_bound, nb_lower_bound_from, saturation_point, trotter_saturation_ratio,
    ExpDecayFamily, SaturationPoint,
};
use crate::rng::stream_rng;
use crate::trotter::trotter_alpha;

pub const DEFAULT_C_GRID: [f64; 12] = [
    1e-6, 1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1e3, 1e6,
];
pub const DEFAULT_TRIALS: usize = 10_000;
const DEFAULT_EPS: f64 = 1e-3;
const DEFAULT_HAM: &str = "ising2";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpDecayRow {
    pub l: usize,
    pub c: f64,
    pub lambda: f64,
    pub t_star: f64,
    pub n_b: f64,
    pub chi: f64,
    pub s_size: usize,
    pub s_formula: usize,
    pub s_match: bool,
    pub expected_l_a: f64,
    pub mean_l_a_over_l: f64,
    pub se_l_a_over_l: f64,
    pub expected_lambda_b_over_lambda: f64,
    pub mean_lambda_b_over_lambda: f64,
    pub se_lambda_b_over_lambda: f64,
    pub tail_frequency: f64,
    pub tail_se: f64,
    pub chernoff_bound: f64,
    pub tail_ok: bool,
    pub c_trott: f64,
    pub c_qd: f64,
    pub expected_cost_bound: f64,
    pub cost_ratio: f64,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (v / n).sqrt())
}

/// One row per family size. The crossover uses the 1-norm bound on α, the
/// only commutator information the family specifies. Trial `i` at size `L`
/// draws from stream `(seed, L·2³² + i)`.
pub fn exp_decay(
    l_grid: &[usize],
    c: f64,
    eps: f64,
    order: Order,
    trials: usize,
    seed: u64,
) -> Result<(Vec<ExpDecayRow>, Vec<Failure>)> {
    if order.is_first() {
        return Err(Error::InvalidOrder(1));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least two trials".into()));
    }
    let mut rows = Vec::with_capacity(l_grid.len());
    for &l in l_grid {
        let fam = ExpDecayFamily::new(l, c)?;
        let weights = fam.weights();
        let lambda = fam.lambda();
        let alpha = alpha_single_bound(lambda, order);
        let t_star = crossover_time_from_alpha(lambda, l, alpha, order, eps)?;
        let n_b = (1.0 + 2f64.powf(-c)).powi(2) * nb_lower_bound_from(lambda, t_star, eps, order);
        let pp = fam.prob_partition();
        let e_la = pp.expected_la();
        let samples: Vec<(f64, f64)> = (0..trials as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, ((l as u64) << 32) + i);
                let (mut la, mut lb) = (0usize, 0.0);
                for (p, w) in pp.probs.iter().zip(&weights) {
                    if rng.gen::<f64>() < *p {
                        la += 1;
                    } else {
                        lb += w;
                    }
                }
                (la as f64, lb)
            })
            .collect();
        let la: Vec<f64> = samples.iter().map(|s| s.0 / l as f64).collect();
        let lb: Vec<f64> = samples.iter().map(|s| s.1 / lambda).collect();
        let tails: Vec<f64> = samples
            .iter()
            .map(|s| ((s.0 - e_la).abs() > e_la) as u8 as f64)
            .collect();
        let (m_la, se_la) = mean_se(&la);
        let (m_lb, se_lb) = mean_se(&lb);
        let (tail, tail_se) = mean_se(&tails);
        let chernoff = 2.0 * (-e_la / 3.0).exp();
        let sat = saturation_point(&weights, lambda, &pp, t_star, eps, order, c, n_b);
        let c_trott = trotter_relaxed_cost(l, alpha, order, t_star, eps);
        let c_qd = qdrift_relaxed_cost(lambda, t_star, eps);
        let s_formula = fam.s_size_formula();
        rows.push(ExpDecayRow {
            l,
            c,
            lambda,
            t_star,
            n_b,
            chi: pp.chi,
            s_size: pp.sampling_set.len(),
            s_formula,
            s_match: pp.sampling_set.len() == s_formula,
            expected_l_a: e_la,
            mean_l_a_over_l: m_la,
            se_l_a_over_l: se_la,
            expected_lambda_b_over_lambda: pp.expected_lambda_b(&weights) / lambda,
            mean_lambda_b_over_lambda: m_lb,
            se_lambda_b_over_lambda: se_lb,
            tail_frequency: tail,
            tail_se,
            chernoff_bound: chernoff,
            tail_ok: tail <= chernoff + 3.0 * tail_se,
            c_trott,
            c_qd,
            expected_cost_bound: sat.expected_cost_bound,
            cost_ratio: sat.expected_cost_bound / c_trott.min(c_qd),
        });
    }
    let mut failures = Vec::new();
    let fail = |check: &str, row: &ExpDecayRow, value: f64, bound: f64| Failure {
        check: format!("exp_decay/{check}"),
        instance: format!("L={}", row.l),
        value,
        bound,
    };
    for r in &rows {
        if !r.s_match {
            failures.push(fail(
                "sampling_set_size",
                r,
                r.s_size as f64,
                r.s_formula as f64,
            ));
        }
        if !r.tail_ok {
            failures.push(fail(
                "chernoff_tail",
                r,
                r.tail_frequency,
                r.chernoff_bound + 3.0 * r.tail_se,
            ));
        }
    }
    for w in rows.windows(2) {
        if !(w[1].mean_l_a_over_l < w[0].mean_l_a_over_l) {
            failures.push(fail(
                "l_a_fraction_decreasing",
                &w[1],
                w[1].mean_l_a_over_l,
                w[0].mean_l_a_over_l,
            ));
        }
        if !(w[1].mean_lambda_b_over_lambda < w[0].mean_lambda_b_over_lambda) {
            failures.push(fail(
                "lambda_b_fraction_decreasing",
                &w[1],
                w[1].mean_lambda_b_over_lambda,
                w[0].mean_lambda_b_over_lambda,
            ));
        }
    }
    Ok((rows, failures))
}

/// Sweeps `c`; checks the `c → 0` endpoint against `Υ^{1/2k}/2^{1−1/2k}` times
/// the 1-norm Trotter cost and the largest `c` against the QDrift cost.
pub fn saturation(
    h: &Hamiltonian,
    t: f64,
    eps: f64,
    order: Order,
    c_grid: &[f64],
) -> Result<(Vec<SaturationPoint>, Vec<Failure>)> {
    if c_grid.is_empty() || c_grid.iter().any(|&c| !(c >= 0.0)) {
        return Err(Error::InvalidArgument(
            "--c-grid needs nonnegative values".into(),
        ));
    }
    let rows = c_grid
        .iter()
        .map(|&c| expected_cost_bound(h, t, eps, order, c))
        .collect::<Result<Vec<_>>>()?;
    let mut failures = Vec::new();
    let lo = rows
        .iter()
        .min_by(|a, b| a.c.total_cmp(&b.c))
        .expect("grid is nonempty");
    let hi = rows
        .iter()
        .max_by(|a, b| a.c.total_cmp(&b.c))
        .expect("grid is nonempty");
    let limit = trotter_saturation_ratio(order);
    if !(lo.ratio_trott >= 1.0 - 1e-12 && (lo.ratio_trott - limit).abs() <= 0.01) {
        failures.push(Failure {
            check: "saturation/trotter_limit".into(),
            instance: format!("c={}", lo.c),
            value: lo.ratio_trott,
            bound: limit,
        });
    }
    if (hi.ratio_qd - 1.0).abs() > 0.02 {
        failures.push(Failure {
            check: "saturation/qdrift_limit".into(),
            instance: format!("c={}", hi.c),
            value: hi.ratio_qd,
            bound: 1.0,
        });
    }
    Ok((rows, failures))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverRow {
    pub epsilon: f64,
    pub t_star: f64,
    pub t_star_over_eps: f64,
    pub c_trott_relaxed: f64,
    pub c_qd_relaxed: f64,
    pub beta: f64,
    pub exact_alpha: bool,
}

pub fn crossover(
    h: &Hamiltonian,
    order: Order,
    eps_grid: &[f64],
) -> Result<(Vec<CrossoverRow>, Vec<Failure>)> {
    let (alpha, exact) = trotter_alpha(h, &h.all_indices(), order)?;
    let rows = eps_grid
        .iter()
        .map(|&eps| {
            let t = crossover_time(h, eps, order)?;
            let c_trott = trotter_relaxed_cost(h.len(), alpha, order, t, eps);
            let c_qd = qdrift_relaxed_cost(h.lambda(), t, eps);
            Ok(CrossoverRow {
                epsilon: eps,
                t_star: t,
                t_star_over_eps: t / eps,
                c_trott_relaxed: c_trott,
                c_qd_relaxed: c_qd,
                beta: c_qd.ln() / c_trott.ln(),
                exact_alpha: exact,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let failures = rows
        .iter()
        .filter(|r| r.c_trott_relaxed > 1.0 && (r.beta - 1.0).abs() > 1e-6)
        .map(|r| Failure {
            check: "crossover/beta".into(),
            instance: format!("eps={}", r.epsilon),
            value: r.beta,
            bound: 1.0,
        })
        .collect();
    Ok((rows, failures))
}

pub(super) fn command(config: &RunConfig, e: &Experiment) -> Result<Outcome> {
    let order = config.order()?;
    let eps = config.epsilon.unwrap_or(DEFAULT_EPS);
    let (output, failures) = match e {
        Experiment::ExpDecay { l_grid } => {
            let trials = config.trials.unwrap_or(DEFAULT_TRIALS);
            let (rows, f) = exp_decay(
                l_grid,
                config.c.unwrap_or(1.0),
                eps,
                order,
                trials,
                config.seed,
            )?;
            (output::rows(&rows, config.format)?, f)
        }
        Experiment::Saturation { c_grid } => {
            let h = data::resolve(config.ham.as_deref(), Some(DEFAULT_HAM))?;
            let (rows, f) = saturation(&h, config.t.unwrap_or(1.0), eps, order, c_grid)?;
            (output::rows(&rows, config.format)?, f)
        }
        Experiment::Crossover { eps_grid } => {
            let h = data::resolve(config.ham.as_deref(), Some(DEFAULT_HAM))?;
            let (rows, f) = crossover(&h, order, eps_grid)?;
            (output::rows(&rows, config.format)?, f)
        }
    };
    Ok(Outcome { output, failures })
}
