use serde::Serialize;

use super::output::{self, index_list};
use super::{
    data, parse_indices, CostArgs, Failure, Format, Outcome, PartitionArgs, RunConfig, Scheme,
    SimulateArgs,
};
use crate::composite::{
    composite_exact_channel, composite_sample, optimal_nb_first_from, optimal_nb_higher_from,
    CompositeInputs, CompositeParams, CostReport,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, Partition};
use crate::metrics::{diamond_lower_bound, diamond_upper_bound, ideal_channel};
use crate::partition::{
    descend_weights, fixed_point_weight, moment_report, nb_lower_bound, prob_partition,
    sample_partition, DescentOptions, DominanceCheck, MomentReport,
};
use crate::qdrift::{qdrift_cost_unchecked, qdrift_error_bound, qdrift_exact_channel};
use crate::trotter::{trotter_channel, trotter_cost, trotter_error_bound};

const MAX_SWEEP_TERMS: usize = 12;

/// `--nb`, then `--c` through the probabilistic parametrization, then the
/// rounded optimum of the relaxed cost (1 when that is undefined).
fn resolve_nb(
    config: &RunConfig,
    h: &Hamiltonian,
    inputs: &CompositeInputs,
    t: f64,
    eps: f64,
) -> Result<u64> {
    let order = inputs.order;
    if let Some(nb) = config.nb {
        return Ok(nb.ceil() as u64);
    }
    if let Some(c) = config.c {
        return Ok(crate::partition::nb_parametrized(h, t, eps, order, c)?.max(1));
    }
    let opt = if order.is_first() {
        optimal_nb_first_from(inputs)
    } else {
        optimal_nb_higher_from(inputs, t, eps)
    };
    Ok(opt.map_or(1, |x| (x.round() as u64).max(1)))
}

#[derive(Debug, Serialize)]
struct CostRow {
    a: String,
    b: String,
    order: u32,
    t: f64,
    epsilon: f64,
    n_b: u64,
    r: u64,
    l_a: usize,
    lambda_b: f64,
    p_t: f64,
    q_t: f64,
    p_max: Option<f64>,
    q_b: f64,
    c_trott: f64,
    c_qd: f64,
    c_comp: f64,
    c_comp_relaxed: f64,
    c_comp_reexpressed: Option<f64>,
    beta: Option<f64>,
    qdrift_eps_in_range: bool,
    exact_alpha: bool,
}

impl CostRow {
    fn new(p: &Partition, r: CostReport) -> Self {
        CostRow {
            a: index_list(&p.a),
            b: index_list(&p.b),
            order: r.order,
            t: r.t,
            epsilon: r.epsilon,
            n_b: r.n_b,
            r: r.r,
            l_a: r.l_a,
            lambda_b: r.lambda_b,
            p_t: r.p_t,
            q_t: r.q_t,
            p_max: r.p_max,
            q_b: r.q_b,
            c_trott: r.c_trott,
            c_qd: r.c_qd,
            c_comp: r.c_comp,
            c_comp_relaxed: r.c_comp_relaxed,
            c_comp_reexpressed: r.c_comp_reexpressed,
            beta: r.beta,
            qdrift_eps_in_range: r.qdrift_eps_in_range,
            exact_alpha: r.exact_alpha,
        }
    }
}

fn partitions(h: &Hamiltonian, spec: Option<&str>) -> Result<Vec<Partition>> {
    match spec {
        Some(s) => Ok(vec![Partition::from_a(h.len(), &parse_indices(s)?)?]),
        None if h.len() <= MAX_SWEEP_TERMS => Ok((0u32..1 << h.len())
            .map(|m| {
                Partition::from_mask(&(0..h.len()).map(|i| m >> i & 1 == 1).collect::<Vec<_>>())
            })
            .collect()),
        None => Err(Error::InvalidArgument(format!(
            "sweeping every partition needs at most {MAX_SWEEP_TERMS} terms; pass --partition"
        ))),
    }
}

pub(super) fn cost(config: &RunConfig, args: &CostArgs) -> Result<Outcome> {
    let h = data::resolve(config.ham.as_deref(), None)?;
    let (t, eps, order) = (config.time()?, config.eps()?, config.order()?);
    let rows = partitions(&h, args.partition.as_deref())?
        .into_iter()
        .map(|p| {
            let inputs = CompositeInputs::new(&h, &p, order)?;
            let nb = resolve_nb(config, &h, &inputs, t, eps)?;
            Ok(CostRow::new(&p, inputs.report(t, eps, nb)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome {
        output: output::rows(&rows, config.format)?,
        failures: Vec::new(),
    })
}

#[derive(Debug, Serialize)]
struct WeightRow {
    term: usize,
    h: f64,
    weight: f64,
    fixed_point: f64,
    fixed_point_clamped: bool,
    in_a: bool,
}

#[derive(Debug, Serialize)]
struct GradientSummary<'a> {
    scheme: &'static str,
    n_b: f64,
    initial_cost: f64,
    final_cost: f64,
    iterations: usize,
    converged: bool,
    a: &'a [usize],
    terms: &'a [WeightRow],
}

#[derive(Debug, Serialize)]
struct ProbRow {
    term: usize,
    h: f64,
    p: f64,
    in_sampling_set: bool,
    sampled_in_a: bool,
}

#[derive(Debug, Serialize)]
struct ProbSummary<'a> {
    scheme: &'static str,
    n_b: f64,
    lower_bound: f64,
    chi: f64,
    expected_l_a: f64,
    expected_lambda_b: f64,
    sampled_a: &'a [usize],
    terms: &'a [ProbRow],
    moments: Option<&'a MomentReport>,
    dominance: Option<&'a [DominanceCheck]>,
}

pub(super) fn partition(config: &RunConfig, args: &PartitionArgs) -> Result<Outcome> {
    let h = data::resolve(config.ham.as_deref(), None)?;
    let (t, eps, order) = (config.time()?, config.eps()?, config.order()?);
    match args.scheme {
        Scheme::Gradient => {
            if !order.is_first() {
                return Err(Error::InvalidArgument(
                    "the gradient scheme uses the first-order cost; pass --order 1".into(),
                ));
            }
            let nb = config.nb.unwrap_or(1.0);
            let res = descend_weights(
                &h,
                t,
                eps,
                nb,
                &vec![0.5; h.len()],
                DescentOptions::default(),
            )?;
            let w = &res.partition.weights;
            let rows = (0..h.len())
                .map(|i| {
                    let fp = fixed_point_weight(&h, w, i)?;
                    Ok(WeightRow {
                        term: i,
                        h: h.term(i).weight,
                        weight: w[i],
                        fixed_point: fp.value,
                        fixed_point_clamped: fp.clamped,
                        in_a: w[i] >= 0.5,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let a: Vec<usize> = rows.iter().filter(|r| r.in_a).map(|r| r.term).collect();
            let output = match config.format {
                Format::Csv => output::csv(&rows)?,
                Format::Json => output::json(&GradientSummary {
                    scheme: "gradient",
                    n_b: nb,
                    initial_cost: res.initial_cost,
                    final_cost: res.final_cost,
                    iterations: res.iterations,
                    converged: res.converged,
                    a: &a,
                    terms: &rows,
                })?,
            };
            let failures = if res.final_cost > res.initial_cost {
                vec![Failure {
                    check: "partition/descent_monotone".into(),
                    instance: config.ham.clone().unwrap_or_default(),
                    value: res.final_cost,
                    bound: res.initial_cost,
                }]
            } else {
                Vec::new()
            };
            Ok(Outcome { output, failures })
        }
        Scheme::Prob => {
            let lb = nb_lower_bound(&h, t, eps, order)?;
            let nb = match config.nb {
                Some(nb) => nb,
                None => (1.0 + config.c.unwrap_or(1.0)).powi(2) * lb,
            };
            let pp = prob_partition(&h, t, eps, order, nb)?;
            let sample = sample_partition(&pp, config.seed);
            let rows: Vec<ProbRow> = (0..h.len())
                .map(|i| ProbRow {
                    term: i,
                    h: h.term(i).weight,
                    p: pp.probs[i],
                    in_sampling_set: pp.sampling_set.contains(&i),
                    sampled_in_a: sample.a.contains(&i),
                })
                .collect();
            let moments = match config.trials {
                Some(n) => Some(moment_report(&h, &pp, t, order, nb, n, config.seed)?),
                None => None,
            };
            let dominance = moments.as_ref().map(|m| m.dominance());
            let failures = dominance
                .iter()
                .flatten()
                .filter(|d| !d.holds)
                .map(|d| Failure {
                    check: format!("partition/moment_{}", d.quantity),
                    instance: config.ham.clone().unwrap_or_default(),
                    value: d.mc_mean,
                    bound: d.bound,
                })
                .collect();
            let output = match config.format {
                Format::Csv => output::csv(&rows)?,
                Format::Json => output::json(&ProbSummary {
                    scheme: "prob",
                    n_b: nb,
                    lower_bound: lb,
                    chi: pp.chi,
                    expected_l_a: pp.expected_la(),
                    expected_lambda_b: pp.expected_lambda_b(&h.weights()),
                    sampled_a: &sample.a,
                    terms: &rows,
                    moments: moments.as_ref(),
                    dominance: dominance.as_deref(),
                })?,
            };
            Ok(Outcome { output, failures })
        }
    }
}

#[derive(Debug, Serialize)]
struct SimRow {
    method: &'static str,
    order: u32,
    t: f64,
    epsilon: f64,
    steps: u64,
    n_b: Option<u64>,
    distance_lower: f64,
    distance_upper: f64,
    bound: f64,
    within_bound: bool,
}

fn within(measured: f64, bound: f64) -> bool {
    measured <= bound * (1.0 + 1e-9) + 1e-12
}

pub(super) fn simulate(config: &RunConfig, args: &SimulateArgs) -> Result<Outcome> {
    let h = data::resolve(config.ham.as_deref(), None)?;
    h.check_channel_dim()?;
    let (t, eps, order) = (config.time()?, config.eps()?, config.order()?);
    let ideal = ideal_channel(&h, t)?;
    let all = h.all_indices();
    let mut rows = Vec::new();

    let tc = trotter_cost(&h, order, t, eps)?;
    let ch = trotter_channel(&h, &all, order, t, tc.r)?;
    rows.push(SimRow {
        method: "trotter",
        order: order.value(),
        t,
        epsilon: eps,
        steps: tc.r,
        n_b: None,
        distance_lower: diamond_lower_bound(&ch, &ideal)?,
        distance_upper: diamond_upper_bound(&ch, &ideal)?,
        bound: trotter_error_bound(&h, &all, order, t, tc.r)?.channel,
        within_bound: false,
    });

    let n = qdrift_cost_unchecked(h.lambda(), t, eps).samples;
    let ch = qdrift_exact_channel(&h, &all, t, n)?;
    rows.push(SimRow {
        method: "qdrift",
        order: 1,
        t,
        epsilon: eps,
        steps: n,
        n_b: None,
        distance_lower: diamond_lower_bound(&ch, &ideal)?,
        distance_upper: diamond_upper_bound(&ch, &ideal)?,
        bound: qdrift_error_bound(h.lambda(), t, n),
        within_bound: false,
    });

    let a = match &args.partition {
        Some(s) => parse_indices(s)?,
        None => (0..h.len() - 1).collect(),
    };
    let p = Partition::from_a(h.len(), &a)?;
    let inputs = CompositeInputs::new(&h, &p, order)?;
    let nb = resolve_nb(config, &h, &inputs, t, eps)?;
    let rep = inputs.report(t, eps, nb);
    let params = CompositeParams::new(p, order, t, eps, nb, rep.r)?;
    let ch = composite_exact_channel(&h, &params)?;
    rows.push(SimRow {
        method: "composite",
        order: order.value(),
        t,
        epsilon: eps,
        steps: rep.r,
        n_b: Some(nb),
        distance_lower: diamond_lower_bound(&ch, &ideal)?,
        distance_upper: diamond_upper_bound(&ch, &ideal)?,
        bound: eps,
        within_bound: false,
    });

    if let Some(path) = &args.sequence_out {
        let seq = composite_sample(&h, &params, config.seed)?;
        std::fs::write(path, seq.to_text())
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }

    let mut failures = Vec::new();
    for r in &mut rows {
        r.within_bound = within(r.distance_lower, r.bound);
        if !r.within_bound {
            failures.push(Failure {
                check: format!("simulate/{}", r.method),
                instance: config.ham.clone().unwrap_or_default(),
                value: r.distance_lower,
                bound: r.bound,
            });
        }
    }
    Ok(Outcome {
        output: output::rows(&rows, config.format)?,
        failures,
    })
}
