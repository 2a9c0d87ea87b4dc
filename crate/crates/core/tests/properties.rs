use compsim::commutators::{alpha_bound, alpha_report, DEFAULT_BUDGET};
use compsim::framework::multiproduct_coeffs;
use compsim::hamiltonian::{dense_sum, lambda_of, parse_hamiltonian};
use compsim::linalg::max_abs;
use compsim::partition::ProbPartition;
use compsim::sequence::{Gate, GateSequence, SequenceKind};
use compsim::trotter::trotter_sequence;
use compsim::{Hamiltonian, Order, Partition};
use proptest::prelude::*;

const PAULI: [char; 4] = ['I', 'X', 'Y', 'Z'];

fn pauli_label(code: usize) -> String {
    [PAULI[code / 4], PAULI[code % 4]].iter().collect()
}

/// Two-qubit Pauli Hamiltonians with `len` terms and a membership mask.
fn ham_and_mask(
    len: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = (Hamiltonian, Vec<bool>)> {
    prop::collection::vec((1usize..16, 0.05f64..1.0, any::<bool>()), len).prop_map(|terms| {
        let labels: Vec<(String, f64)> =
            terms.iter().map(|&(c, w, _)| (pauli_label(c), w)).collect();
        let refs: Vec<(&str, f64)> = labels.iter().map(|(s, w)| (s.as_str(), *w)).collect();
        let h = Hamiltonian::from_paulis(&refs).unwrap();
        (h, terms.iter().map(|t| t.2).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alpha_cross_is_additive_and_bounded((h, mask) in ham_and_mask(1..=4), fourth in any::<bool>()) {
        let order = if fourth { Order::FOURTH } else { Order::SECOND };
        let p = Partition::from_mask(&mask);
        let exact = alpha_report(&h, &p, order, DEFAULT_BUDGET).unwrap();
        prop_assert!(exact.exact);
        let sum = exact.alpha_a + exact.alpha_b + exact.alpha_cross;
        prop_assert!((sum - exact.alpha_h).abs() <= 1e-9 * exact.alpha_h.max(1.0));
        let bound = alpha_bound(&h, &p, order).unwrap();
        let slack = 1e-9 * bound.alpha_h.max(1.0);
        prop_assert!(exact.alpha_a <= bound.alpha_a + slack);
        prop_assert!(exact.alpha_b <= bound.alpha_b + slack);
        prop_assert!(exact.alpha_cross <= bound.alpha_cross + slack);
        prop_assert!(exact.alpha_h <= bound.alpha_h + slack);
    }

    #[test]
    fn partition_weights_and_sums_split((h, mask) in ham_and_mask(1..=6)) {
        let p = Partition::from_mask(&mask);
        let la = lambda_of(&h, &p.a).unwrap();
        let lb = lambda_of(&h, &p.b).unwrap();
        prop_assert!((la + lb - h.lambda()).abs() <= 1e-12 * h.lambda());
        let full = dense_sum(&h, &h.all_indices()).unwrap();
        let split = dense_sum(&h, &p.a).unwrap() + dense_sum(&h, &p.b).unwrap();
        prop_assert!(max_abs(&(full - split)) <= 1e-12);
    }

    #[test]
    fn trotter_durations_sum_to_time((h, _) in ham_and_mask(1..=5), n in prop::sample::select(vec![1u32, 2, 4, 6]), t in -2.0f64..2.0) {
        let seq = trotter_sequence(&h, &h.all_indices(), Order::new(n).unwrap(), t).unwrap();
        for d in seq.durations_by_term(h.len()) {
            prop_assert!((d - t).abs() <= 1e-12);
        }
    }

    #[test]
    fn sequence_text_round_trips(
        gates in prop::collection::vec((0usize..50, any::<f64>().prop_filter("finite", |x| x.is_finite())), 0..40),
        time in -10.0f64..10.0,
    ) {
        let seq = GateSequence {
            dim: 8,
            kind: SequenceKind::QDrift,
            total_time: time,
            gates: gates.into_iter().map(|(term, duration)| Gate { term, duration }).collect(),
        };
        prop_assert_eq!(GateSequence::from_text(&seq.to_text()).unwrap(), seq);
    }

    #[test]
    fn probabilities_stay_in_unit_interval(weights in prop::collection::vec(1e-6f64..10.0, 1..30), chi in 0.0f64..5.0) {
        let pp = ProbPartition::from_weights(&weights, chi);
        prop_assert!(pp.probs.iter().all(|p| (0.0..=1.0).contains(p)));
        for (i, p) in pp.probs.iter().enumerate() {
            prop_assert_eq!(*p > 0.0, pp.sampling_set.contains(&i));
        }
        let lambda_b = pp.expected_lambda_b(&weights);
        let direct: f64 = weights.iter().map(|w| w.min(chi)).sum();
        prop_assert!((lambda_b - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn reloading_a_file_keeps_weights((h, _) in ham_and_mask(1..=5)) {
        let text = serde_json::to_string(&h.to_file()).unwrap();
        let back = parse_hamiltonian(&text).unwrap();
        prop_assert_eq!(back.weights(), h.weights());
        for (a, b) in h.terms().iter().zip(back.terms()) {
            prop_assert!(max_abs(&(&a.op - &b.op)) <= 1e-15);
        }
    }

    #[test]
    fn multiproduct_coefficients_solve_the_system(ks in prop::sample::subsequence(vec![1u32, 2, 3, 4, 5, 6, 8], 1..=4)) {
        let c = multiproduct_coeffs(&ks).unwrap();
        prop_assert!((c.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        for m in 1..ks.len() as i32 {
            let row: f64 = ks.iter().zip(&c).map(|(&k, &cj)| cj * (k as f64).powi(-m)).sum();
            prop_assert!(row.abs() <= 1e-10);
        }
    }
}
