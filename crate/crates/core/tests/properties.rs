use std::f64::consts::PI;

use num::rational::BigRational;
use num::{BigInt, One};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rus_core::graphstate::{GraphState, Pauli, PhysicalOp, Sign, StatevectorOracle};
use rus_core::growth::{
    bond_cost, consumed_length, derived, expected_final_length, format_rational, growth_threshold,
    mc_chain_growth, min_l0, offline_cost, offline_cost_by_recursion, one_round_expected_length,
    parse_rational, to_f64, total_cost, BondConvention, DestroyPolicy, GateProbabilities,
};
use rus_core::qcore::{equal_up_to_global_phase, random_state_with, random_unitary_2, PureState};
use rus_core::rusgate::canonical_angle;
use rus_core::verify::random_graph;
use rus_core::Error;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `(p_s, p_i, p_f)` on a grid of `1/denominator` steps, `p_s > 0`, `p_i < 1`.
fn probabilities() -> impl Strategy<Value = GateProbabilities> {
    (2i64..40)
        .prop_flat_map(|d| (Just(d), 1..=d))
        .prop_flat_map(|(d, s)| (Just(d), Just(s), 0..=d - s))
        .prop_map(|(d, s, i)| {
            GateProbabilities::new(q(s, d), q(i, d), q(d - s - i, d)).expect("grid point sums to one")
        })
}

fn pauli() -> impl Strategy<Value = Pauli> {
    prop_oneof![Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
}

fn sign() -> impl Strategy<Value = Sign> {
    prop_oneof![Just(Sign::Plus), Just(Sign::Minus)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn definite_outcomes_are_success_or_failure(p in probabilities()) {
        let d = derived(&p).unwrap();
        prop_assert_eq!(&d.success + &d.failure, BigRational::one());
        prop_assert_eq!(d.attempts * (BigRational::one() - p.insurance()), BigRational::one());
    }

    #[test]
    fn min_l0_is_smallest_feasible_power(p in probabilities()) {
        let c = growth_threshold(&p).unwrap();
        let l0 = min_l0(&p).unwrap();
        prop_assert!(l0.is_power_of_two());
        prop_assert!(q(l0 as i64, 1) > c);
        prop_assert!(l0 == 1 || q(l0 as i64 / 2, 1) <= c);
    }

    #[test]
    fn offline_sum_matches_recursion(p in probabilities(), rounds in 0u32..7) {
        let direct = offline_cost(&p, 1u64 << rounds).unwrap();
        prop_assert_eq!(direct, offline_cost_by_recursion(&p, rounds).unwrap());
    }

    #[test]
    fn cost_line_passes_through_offline_cost(p in probabilities(), extra in 0u32..3) {
        let l0 = min_l0(&p).unwrap() << extra;
        let line = total_cost(&p, l0).unwrap();
        prop_assert_eq!(line.at(&q(l0 as i64, 1)), offline_cost(&p, l0).unwrap());
    }

    #[test]
    fn cost_line_obeys_join_recursion(p in probabilities(), len in 1i64..500) {
        // joining two chains of mean length L costs 1/p_s attempts and leaves 2L − c
        let line = total_cost(&p, min_l0(&p).unwrap()).unwrap();
        let c = growth_threshold(&p).unwrap();
        let l = q(len, 1);
        let joined = line.at(&(q(2, 1) * &l - &c));
        prop_assert_eq!(joined, q(2, 1) * line.at(&l) + p.success().recip());
    }

    #[test]
    fn final_length_doubles_less_threshold(p in probabilities(), rounds in 0u32..8) {
        let l0 = min_l0(&p).unwrap();
        let c = growth_threshold(&p).unwrap();
        let now = expected_final_length(&p, l0, rounds).unwrap();
        let next = expected_final_length(&p, l0, rounds + 1).unwrap();
        prop_assert_eq!(next, q(2, 1) * now - c);
    }

    #[test]
    fn full_line_bond_adds_twice_the_intercept(p in probabilities()) {
        let l0 = min_l0(&p).unwrap();
        let line = total_cost(&p, l0).unwrap();
        let slope_only = bond_cost(&p, l0, BondConvention::SlopeOnly).unwrap();
        let full = bond_cost(&p, l0, BondConvention::FullLine).unwrap();
        prop_assert_eq!(full - slope_only, q(2, 1) * line.intercept);
        prop_assert!(consumed_length(&p).unwrap() > BigRational::one());
    }

    #[test]
    fn more_success_lowers_slope(d in 4i64..40, s in 1i64..20, i in 0i64..20) {
        prop_assume!(s + i < d);
        let lower = GateProbabilities::new(q(s, d), q(i, d), q(d - s - i, d)).unwrap();
        let higher = GateProbabilities::new(q(s + 1, d), q(i, d), q(d - s - i - 1, d)).unwrap();
        let l0 = min_l0(&lower).unwrap();
        prop_assert!(total_cost(&higher, l0).unwrap().slope < total_cost(&lower, l0).unwrap().slope);
        prop_assert!(consumed_length(&higher).unwrap() < consumed_length(&lower).unwrap());
    }

    #[test]
    fn one_round_length_grows_with_input(p in probabilities(), l in 0u64..30) {
        let now = one_round_expected_length(&p, l).unwrap();
        let next = one_round_expected_length(&p, l + 1).unwrap();
        prop_assert!(next >= now);
        prop_assert!(now <= q(2 * l as i64, 1));
    }

    #[test]
    fn rationals_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
        let r = q(n, d);
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn decimals_parse_exactly(whole in 0u32..1000, frac in 0u32..1000) {
        let text = format!("{whole}.{frac:03}");
        let expected = q(whole as i64, 1) + q(frac as i64, 1000);
        prop_assert_eq!(parse_rational(&text).unwrap(), expected);
    }

    #[test]
    fn canonical_angle_wraps_into_half_open_interval(x in -100.0f64..100.0) {
        let a = canonical_angle(x);
        prop_assert!(a > -PI && a <= PI + 1e-12);
        prop_assert!(((x - a) / (2.0 * PI) - ((x - a) / (2.0 * PI)).round()).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_unitaries_are_unitary_and_preserve_norm(seed in any::<u64>(), target in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary_2(&mut rng);
        prop_assert!(u.unitarity_deviation() < 1e-12);
        let psi = random_state_with(&[2, 2, 2], &mut rng);
        prop_assert!((psi.apply(&u, &[target]).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projections_are_normalized(seed in any::<u64>(), target in 0usize..3, p in pauli(), s in sign()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state_with(&[2, 2, 2], &mut rng);
        let eig = rus_core::graphstate::eigenvector(p, s);
        let out = psi.project(&[target], &eig).unwrap();
        let flipped = psi.project(&[target], &rus_core::graphstate::eigenvector(p, s.flipped())).unwrap();
        prop_assert!((out.post_state.norm() - 1.0).abs() < 1e-12);
        prop_assert!((out.probability + flipped.probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn local_complement_keeps_state(seed in any::<u64>(), n in 1usize..7, pick in any::<usize>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, &mut rng);
        let before = g.to_statevector().unwrap();
        let mut h = g.clone();
        h.local_complement(pick % n).unwrap();
        prop_assert!(equal_up_to_global_phase(&h.to_statevector().unwrap(), &before, 1e-10));
    }

    #[test]
    fn measurement_matches_statevector(
        seed in any::<u64>(),
        n in 1usize..7,
        pick in any::<usize>(),
        p in pauli(),
        s in sign(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, &mut rng);
        let v = pick % n;
        let mut oracle = StatevectorOracle::from_graph(&g).unwrap();
        let op = PhysicalOp::Measure { vertex: v, pauli: p, outcome: s };
        let mut measured = g.clone();
        match measured.measure(v, p, s, None) {
            Ok(prob) => {
                let oracle_prob = oracle.apply(&op).unwrap();
                prop_assert!((prob - oracle_prob).abs() < 1e-9);
                if measured.is_empty() {
                    prop_assert!(oracle.ids().is_empty());
                } else {
                    prop_assert!(oracle.matches(&measured, 1e-9).unwrap());
                }
            }
            Err(Error::ImpossibleOutcome { .. }) => {
                prop_assert!(oracle.apply(&op).is_err());
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn cz_matches_statevector(seed in any::<u64>(), n in 2usize..7, a in any::<usize>(), b in any::<usize>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, &mut rng);
        let (u, v) = (a % n, b % n);
        prop_assume!(u != v);
        let mut oracle = StatevectorOracle::from_graph(&g).unwrap();
        oracle.apply(&PhysicalOp::Cz(u, v)).unwrap();
        let mut h = g.clone();
        h.cz(u, v).unwrap();
        prop_assert!(oracle.matches(&h, 1e-9).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn simulation_repeats_with_seed(p in probabilities(), seed in any::<u64>()) {
        let l0 = min_l0(&p).unwrap();
        prop_assume!(to_f64(&offline_cost(&p, l0).unwrap()) < 1e4);
        let a = mc_chain_growth(&p, l0, 2, DestroyPolicy::SignedLength, 50, seed).unwrap();
        let b = mc_chain_growth(&p, l0, 2, DestroyPolicy::SignedLength, 50, seed).unwrap();
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}

#[test]
fn chain_statevector_is_plus_chain() {
    let g = GraphState::chain(0..3);
    let amps = g.to_statevector().unwrap();
    let h = 1.0 / 8f64.sqrt();
    let expected: Vec<_> = (0..8)
        .map(|i: usize| {
            let bits = [(i >> 2) & 1, (i >> 1) & 1, i & 1];
            let sign = if (bits[0] * bits[1] + bits[1] * bits[2]) % 2 == 1 {
                -h
            } else {
                h
            };
            num_complex::Complex64::new(sign, 0.0)
        })
        .collect();
    let target = PureState::new(vec![2; 3], expected).unwrap();
    assert!(equal_up_to_global_phase(&amps, &target, 1e-12));
}
