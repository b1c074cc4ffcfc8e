use proptest::prelude::*;

use tclab::analyzer::{Analysis, FamilyBound};
use tclab::boolmat::{builtin_oracle, comm_matrix, DEFAULT_ROW_LIMIT};
use tclab::circuit::{energy_lower_bound_sampled, measure_energy_exhaustive, profile, Assignment};
use tclab::compiler::{compile, CompileOptions};
use tclab::constructions::{build_unmeasured, Target};
use tclab::corpus::{corpus_rng, random_discretized_circuit, random_threshold_circuit, DiscretizedParams, ThresholdMode, ThresholdParams};
use tclab::discretized::ActivationKind;
use tclab::{BitMatrix, Domain, IntMatrix, ThresholdCircuit};

fn circuit(seed: u64, n: usize, size: usize, eager: bool) -> ThresholdCircuit {
    let mode = if eager { ThresholdMode::Eager } else { ThresholdMode::Balanced };
    random_threshold_circuit(&mut corpus_rng(seed, 0), ThresholdParams { n, size, weight: 3, mode })
}

fn kind() -> impl Strategy<Value = ActivationKind> {
    prop_oneof![Just(ActivationKind::Relu), Just(ActivationKind::Sigmoid)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn levels_increase_along_edges(seed: u64, n in 1usize..5, size in 1usize..10) {
        let c = circuit(seed, n, size, false);
        for g in 0..c.size() {
            for &(h, _) in c.predecessors(g) {
                prop_assert!(c.level(h) < c.level(g));
            }
            prop_assert_eq!(c.level(g) == 1, c.predecessors(g).is_empty());
        }
    }

    #[test]
    fn sampled_energy_never_exceeds_exhaustive(seed: u64, n in 1usize..5, size in 1usize..10, eager: bool) {
        let c = circuit(seed, n, size, eager);
        let (exact, _) = measure_energy_exhaustive(&c).unwrap();
        let (sampled, _) = energy_lower_bound_sampled(&c, 40, seed).unwrap();
        prop_assert!(sampled <= exact);
    }

    #[test]
    fn evaluation_is_pure(seed: u64, n in 1usize..5, size in 1usize..10, a: u32, b: u32) {
        let c = circuit(seed, n, size, false);
        let mask = (1u32 << n) - 1;
        let input = Assignment::from_codes(n, a & mask, b & mask);
        prop_assert_eq!(c.evaluate(&input).unwrap(), c.evaluate(&input).unwrap());
    }

    #[test]
    fn thresholds_do_not_affect_weight(seed: u64, size in 1usize..10, shift in -1000i128..1000) {
        let c = circuit(seed, 3, size, false);
        let mut desc = c.description();
        for g in &mut desc.gates {
            g.threshold += shift;
        }
        let shifted = ThresholdCircuit::try_from(desc).unwrap();
        prop_assert_eq!(shifted.measure_static().weight, c.measure_static().weight);
    }

    #[test]
    fn built_circuits_match_their_functions(n in 1usize..6, e in 2usize..5, d in 2usize..5, t in 0usize..3) {
        let target = [Target::Conj, Target::Disj, Target::Eq][t];
        prop_assume!((e - 1) * (d - 1) <= n);
        let built = build_unmeasured(target, n, e, d).unwrap();
        let p = profile(&built.circuit).unwrap();
        let oracle = builtin_oracle(target.function(n), n).unwrap();
        prop_assert_eq!(&p.matrix, &comm_matrix(&oracle, DEFAULT_ROW_LIMIT).unwrap());
        prop_assert!(p.energy <= e);
        prop_assert!(built.bounds_ok());
    }

    #[test]
    fn compiled_circuits_agree_with_their_source(
        seed: u64,
        n in 1usize..4,
        hidden in 0usize..4,
        k in kind(),
        b in prop_oneof![Just(1u32), Just(2), Just(4)],
    ) {
        let p = DiscretizedParams { n, hidden, kind: k, bitwidth: b, top_weight: 2 };
        let c = random_discretized_circuit(&mut corpus_rng(seed, 1), p).unwrap();
        // `compile` fails with a witness on any mismatch.
        let out = compile(&c, CompileOptions::default()).unwrap();
        prop_assert!(out.report.verified);
        prop_assert!(out.report.depth_constant < 10.0);
        prop_assert!(out.report.energy_constant.unwrap() < 10.0);
    }

    #[test]
    fn representations_partition_the_output(seed: u64, n in 1usize..4, size in 1usize..6, eager: bool) {
        let c = circuit(seed, n, size, eager);
        let an = Analysis::new(&c).unwrap();
        let mut sum = IntMatrix::zeros(Domain::full(n), Domain::full(n));
        let mut xor = BitMatrix::zeros(Domain::full(n), Domain::full(n));
        for rep in an.p1() {
            let m = an.rep_matrix(rep);
            sum.add_signed(&m, 1).unwrap();
            xor = xor.add_f2(&m).unwrap();
        }
        prop_assert_eq!(&sum, &IntMatrix::from_bits(an.output_matrix()));
        prop_assert_eq!(&xor, an.output_matrix());
    }

    #[test]
    fn shifted_thresholds_agree_below_the_first_difference(seed: u64, n in 1usize..4, size in 1usize..7) {
        let c = circuit(seed, n, size, false);
        let an = Analysis::new(&c).unwrap();
        let cols = 1u32 << n;
        for rep in an.reps() {
            for a in 0..cols {
                for b in 0..cols {
                    let star = an.arising(a, b);
                    let mut bits = vec![false; c.size()];
                    c.eval_codes(a, b, &mut bits, None).unwrap();
                    for g in 0..c.size() {
                        let l = c.level(g);
                        if rep.levels[..l - 1] == star.levels[..l - 1] {
                            let tau = an.shifted(g, rep);
                            let fires = c.x_potential(g, a).unwrap() + c.y_potential(g, b).unwrap() >= tau.threshold;
                            prop_assert_eq!(fires, bits[g]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn decomposition_holds_with_energy_sized_families(seed: u64, n in 1usize..4, size in 1usize..6, eager: bool) {
        let c = circuit(seed, n, size, eager);
        for bound in [FamilyBound::Energy, FamilyBound::Unbounded] {
            let r = Analysis::new(&c).unwrap().verify_decomposition(bound).unwrap();
            prop_assert!(r.holds, "{:?}", r);
        }
    }

    #[test]
    fn truncated_families_only_break_the_product(seed: u64, n in 1usize..4, size in 1usize..6, eager: bool) {
        let c = circuit(seed, n, size, eager);
        let r = Analysis::new(&c).unwrap().verify_decomposition(FamilyBound::EnergyMinusOne).unwrap();
        prop_assert!(r.partition && r.rep_shape && r.claim1 && r.rectangles && r.p1_within_bound);
    }
}
