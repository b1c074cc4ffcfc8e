//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when a criterion fails in a way not recorded in `KNOWN`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use tclab::analyzer::{check_bound, tightness_report, Analysis, DecompositionReport, FamilyBound};
use tclab::boolmat::{builtin_oracle, comm_matrix, BuiltinFunction, DEFAULT_ROW_LIMIT};
use tclab::circuit::profile;
use tclab::compiler::{compile, CompileOptions};
use tclab::constructions::{build_unmeasured, Target};
use tclab::corpus::{bound_corpus, corpus_rng, random_discretized_circuit, random_threshold_circuit, summarize, to_csv};
use tclab::corpus::{CorpusConfig, DiscretizedParams, ThresholdMode, ThresholdParams};
use tclab::discretized::gate;
use tclab::{ActivationKind, BitMatrix, DiscretizedActivation, DiscretizedCircuit, Domain, ThresholdCircuit};

const RANK_LIMIT: Duration = Duration::from_secs(10);
const CONSTRUCTION_LIMIT: Duration = Duration::from_secs(120);
const DECOMPOSITION_LIMIT: Duration = Duration::from_secs(300);
const COMPILER_LIMIT: Duration = Duration::from_secs(300);
const COMPILE_CONSTANT: f64 = 10.0;
const TIGHTNESS_C: f64 = 8.0;
const RANDOM_BOUND_CIRCUITS: usize = 500;
const RANDOM_DECOMPOSITION_CIRCUITS: usize = 120;
const RANDOM_DISCRETIZED_CIRCUITS: usize = 120;
const SEED: u64 = 20_240_611;

/// Criteria whose literal statement cannot hold; see the README.
const KNOWN: [(usize, &str); 2] = [
    (1, "OR_i(a_i AND b_i) has rank 2^n - 1; AND_i(a_i OR b_i) has rank 2^n"),
    (4, "families with |T| <= e-1 miss Claim 2 and can make H non-binary; |T| <= e passes every check"),
];

struct Outcome {
    pass: bool,
    /// The failure matches the recorded deviation exactly.
    known: bool,
    detail: String,
}

impl Outcome {
    fn strict(pass: bool, detail: String) -> Self {
        Outcome { pass, known: false, detail }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn bit(code: u32, n: usize, i: usize) -> bool {
    code >> (n - 1 - i) & 1 == 1
}

fn conj(n: usize, a: u32, b: u32) -> bool {
    (0..n).any(|i| bit(a, n, i) && bit(b, n, i))
}

fn and_or(n: usize, a: u32, b: u32) -> bool {
    (0..n).all(|i| bit(a, n, i) || bit(b, n, i))
}

fn full_matrix(n: usize, f: impl Fn(usize, u32, u32) -> bool) -> BitMatrix {
    BitMatrix::from_fn(Domain::full(n), Domain::full(n), |a, b| f(n, a, b))
}

fn library_rank(f: BuiltinFunction, n: usize) -> (BitMatrix, usize) {
    let m = comm_matrix(&builtin_oracle(f, n).unwrap(), DEFAULT_ROW_LIMIT).unwrap();
    let r = m.rank_f2();
    (m, r)
}

fn rank_facts() -> Outcome {
    let mut conj_ranks = Vec::new();
    let mut others_ok = true;
    let mut disj_cases = 0;
    for n in 1..=8 {
        let (m, r) = library_rank(BuiltinFunction::Conj, n);
        others_ok &= m == full_matrix(n, conj);
        conj_ranks.push(r);
        let (m, r) = library_rank(BuiltinFunction::AndOr, n);
        others_ok &= m == full_matrix(n, and_or) && r == 1 << n;
        let (m, r) = library_rank(BuiltinFunction::Eq, n);
        others_ok &= m == full_matrix(n, |_, a, b| a == b) && r == 1 << n;
        for k in 0..=n {
            let (_, r) = library_rank(BuiltinFunction::DisjK(k), n);
            others_ok &= r == (0..=k).map(|i| binomial(n, i)).sum::<usize>();
            disj_cases += 1;
        }
    }
    let conj_literal = conj_ranks.iter().enumerate().all(|(i, &r)| r == 1 << (i + 1));
    let conj_off_by_one = conj_ranks.iter().enumerate().all(|(i, &r)| r == (1 << (i + 1)) - 1);
    Outcome {
        pass: conj_literal && others_ok,
        known: conj_off_by_one && others_ok,
        detail: format!(
            "CONJ ranks {conj_ranks:?} vs 2^n; AND_OR and EQ = 2^n: {others_ok}; DISJ_(n,k) binomial sums over {disj_cases} cases"
        ),
    }
}

struct Built {
    n: usize,
    circuit: ThresholdCircuit,
}

fn constructions(built: &mut Vec<Built>) -> Outcome {
    let mut cases = 0;
    let mut bad = Vec::new();
    for target in [Target::Conj, Target::Eq] {
        for n in 1..=8 {
            for e in 2..=4 {
                for d in 2..=4 {
                    let z = (e - 1) * (d - 1);
                    if z > n {
                        continue;
                    }
                    cases += 1;
                    let c = build_unmeasured(target, n, e, d).unwrap();
                    let p = profile(&c.circuit).unwrap();
                    let expected = match target {
                        Target::Eq => full_matrix(n, |_, a, b| a == b),
                        _ => full_matrix(n, conj),
                    };
                    let m = n.div_ceil(z);
                    let size_bound = match target {
                        Target::Eq => z * (1 << (2 * m)) + 1,
                        _ => z * (1 << m) + 1,
                    };
                    // Lemma weight: (2n/z) w' over the piece weight w'.
                    let lemma_weight = (2 * n).div_ceil(z) as u128 * c.assembly.piece_weight;
                    let s = c.circuit.size();
                    let ok = p.matrix == expected
                        && s <= size_bound
                        && p.energy <= e
                        && c.circuit.depth() <= d
                        && c.circuit.weight() <= lemma_weight;
                    if !ok {
                        bad.push(format!("{target:?}(n={n},e={e},d={d})"));
                    }
                    built.push(Built { n, circuit: c.circuit });
                }
            }
        }
    }
    Outcome::strict(bad.is_empty(), format!("{cases} circuits exhaustively; failures {bad:?}"))
}

fn bound_inequality(built: &[Built]) -> Outcome {
    let mut violations = 0;
    let mut not_holding = 0;
    for b in built {
        let r = check_bound(&b.circuit).unwrap();
        not_holding += usize::from(!r.holds);
        violations += usize::from(r.violation);
    }
    let mut random = Vec::new();
    for n in 1..=4 {
        let cfg = CorpusConfig::new(SEED + n as u64, RANDOM_BOUND_CIRCUITS / 4, n);
        random.extend(bound_corpus(&cfg).unwrap());
    }
    // Sizes above 8 are needed for e >= 11; reported, not part of the count.
    let mut eager = Vec::new();
    for n in 1..=2 {
        let mut cfg = CorpusConfig::new(SEED ^ 0xe11, 40, n);
        cfg.min_size = 12;
        cfg.max_size = 16;
        cfg.mode = ThresholdMode::Eager;
        eager.extend(bound_corpus(&cfg).unwrap());
    }
    let rs = summarize(&random);
    let es = summarize(&eager);
    let pass = not_holding == 0
        && violations == 0
        && rs.circuits >= RANDOM_BOUND_CIRCUITS
        && rs.holds == rs.circuits
        && es.holds == es.circuits;
    Outcome::strict(
        pass,
        format!(
            "{} built + {} random (n<=4, s<=8, {} with e>=11) + {} eager (s<=16, {} with e>=11); not holding {}, violations {}",
            built.len(),
            rs.circuits,
            rs.in_proven_regime,
            es.circuits,
            es.in_proven_regime,
            not_holding + (rs.circuits - rs.holds) + (es.circuits - es.holds),
            violations + rs.violations + es.violations
        ),
    )
}

fn decomposition(built: &[Built]) -> Outcome {
    let mut circuits: Vec<ThresholdCircuit> = (0..RANDOM_DECOMPOSITION_CIRCUITS)
        .map(|k| {
            let mut rng = corpus_rng(SEED, k as u64);
            let n = 1 + k % 3;
            let size = 1 + (k / 3) % 5;
            let mode = if k % 2 == 0 { ThresholdMode::Balanced } else { ThresholdMode::Eager };
            random_threshold_circuit(&mut rng, ThresholdParams { n, size, weight: 3, mode })
        })
        .collect();
    circuits.extend(built.iter().filter(|b| b.n <= 4).map(|b| b.circuit.clone()));
    let run = |bound| -> Vec<DecompositionReport> {
        circuits
            .iter()
            .map(|c| Analysis::new(c).unwrap().verify_decomposition(bound).unwrap())
            .collect()
    };
    let strict = run(FamilyBound::EnergyMinusOne);
    let wide = run(FamilyBound::Energy);
    // A truncated family changes H itself, so only Claim 2 and the binary
    // check on H may fail under it.
    let rest = |r: &DecompositionReport| r.partition && r.rep_shape && r.h_rank && r.claim1 && r.rectangles;
    let claim2_misses = strict.iter().filter(|r| !r.claim2).count();
    let non_binary = strict.iter().filter(|r| !r.h_binary).count();
    let strict_rest = strict.iter().all(rest);
    let wide_ok = wide.iter().all(|r| r.holds);
    Outcome {
        pass: strict.iter().all(|r| r.holds),
        known: claim2_misses > 0 && strict_rest && wide_ok,
        detail: format!(
            "{} circuits; |T|<=e-1: Claim 2 fails on {claim2_misses}, H non-binary on {non_binary}, other checks hold: {strict_rest}; |T|<=e: all hold: {wide_ok}",
            circuits.len()
        ),
    }
}

/// Hand-built circuits over every activation kind and bitwidth.
fn hand_built() -> Vec<DiscretizedCircuit> {
    let mut out = Vec::new();
    for kind in [ActivationKind::Relu, ActivationKind::Sigmoid] {
        for b in [1u32, 2, 4] {
            let act = DiscretizedActivation::new(kind, b).unwrap();
            let l = (1i128 << b) - 1;
            let h = (l + 1) / 2;
            let shapes: Vec<(usize, Vec<_>, _)> = vec![
                (2, vec![], gate("top", &[l, 0], &[0, l], &[], l)),
                (
                    2,
                    vec![gate("h1", &[l, 0], &[l, 0], &[], l)],
                    gate("top", &[0, 0], &[0, 0], &[("h1", l)], 1),
                ),
                (
                    3,
                    vec![
                        gate("h1", &[l, -h, 0], &[0, 0, 0], &[], 0),
                        gate("h2", &[0, 0, 0], &[h, l, -1], &[("h1", -l)], -1),
                    ],
                    gate("top", &[0, 0, 0], &[0, 0, 0], &[("h1", 1), ("h2", -1)], 0),
                ),
                (
                    4,
                    vec![
                        gate("h1", &[l, 0, 0, -l], &[0, h, 0, 0], &[], h),
                        gate("h2", &[0, l, 0, 0], &[-h, 0, l, 0], &[], 0),
                        gate("h3", &[0, 0, h, 0], &[0, 0, 0, l], &[("h1", l), ("h2", -h)], -h),
                    ],
                    gate("top", &[1, 0, 0, 0], &[0, 0, 0, -1], &[("h1", h), ("h3", l)], h),
                ),
            ];
            for (n, gates, top) in shapes {
                out.push(DiscretizedCircuit::new(act.clone(), n, gates, top).unwrap());
            }
        }
    }
    out
}

fn random_discretized() -> Vec<DiscretizedCircuit> {
    let kinds = [ActivationKind::Relu, ActivationKind::Sigmoid];
    (0..RANDOM_DISCRETIZED_CIRCUITS)
        .map(|k| {
            let p = DiscretizedParams {
                n: 1 + k % 4,
                hidden: k % 5,
                kind: kinds[k % 2],
                bitwidth: [1, 2, 4][(k / 2) % 3],
                top_weight: 2,
            };
            random_discretized_circuit(&mut corpus_rng(SEED, 1000 + k as u64), p).unwrap()
        })
        .collect()
}

fn equivalent(src: &DiscretizedCircuit, dst: &ThresholdCircuit) -> bool {
    let n = src.n();
    let mut codes = vec![0; src.size()];
    let mut bits = vec![false; dst.size()];
    (0..1u32 << n).all(|a| {
        (0..1u32 << n).all(|b| src.eval_codes(a, b, &mut codes).unwrap() == dst.eval_codes(a, b, &mut bits, None).unwrap())
    })
}

fn compiler() -> Outcome {
    let hand = hand_built();
    let random = random_discretized();
    let (mut mismatches, mut depth_c, mut energy_c) = (0, 0f64, 0f64);
    for c in hand.iter().chain(&random) {
        assert!(c.size() <= 5 && c.n() <= 4);
        let out = compile(c, CompileOptions { verify: false }).unwrap();
        mismatches += usize::from(!equivalent(c, &out.circuit));
        let r = &out.report;
        // Recomputed from the raw measures rather than read off the report.
        let log_term = ((r.size_in + c.n()) as f64).log2() + (r.weight_in as f64).log2();
        let energy_out = profile(&out.circuit).unwrap().energy;
        depth_c = depth_c.max(r.depth_out as f64 / r.depth_in as f64 / log_term);
        energy_c = energy_c.max(energy_out as f64 / r.energy_in.max(1) as f64 / log_term);
    }
    let pass = hand.len() >= 20 && random.len() >= 100 && mismatches == 0 && depth_c < COMPILE_CONSTANT && energy_c < COMPILE_CONSTANT;
    Outcome::strict(
        pass,
        format!(
            "{} hand-built + {} random exhaustively, mismatches {mismatches}; fitted c: depth {depth_c:.3}, energy {energy_c:.3} (limit {COMPILE_CONSTANT})",
            hand.len(),
            random.len()
        ),
    )
}

fn tightness() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [8, 12, 16] {
        let r = tightness_report(n, 3, 3).unwrap();
        let budget = 4.0 * n as f64 + TIGHTNESS_C * 9.0 * (n as f64).log2();
        pass &= r.rhs <= budget && r.check.within;
        parts.push(format!("n={n}: rhs {:.2} <= {budget:.2}", r.rhs));
    }
    Outcome::strict(pass, format!("C = {TIGHTNESS_C}; {}", parts.join(", ")))
}

fn determinism() -> Outcome {
    let run = || {
        (1..=4)
            .map(|n| to_csv(&bound_corpus(&CorpusConfig::new(SEED, 100, n)).unwrap()))
            .collect::<String>()
    };
    let first = run();
    let second = run();
    Outcome::strict(first == second, format!("{} bytes of CSV, identical: {}", first.len(), first == second))
}

fn main() -> ExitCode {
    let mut built = Vec::new();
    let mut unexpected = 0;
    let mut report = |id: usize, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|l| took <= l);
        let limit_text = limit.map_or("no limit".to_string(), |l| format!("limit {}s", l.as_secs()));
        let status = match (o.pass && in_time, o.known && in_time) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known deviation)",
            (false, false) => "FAIL",
        };
        println!("criterion {id} {name}: {status} [{:.2}s, {limit_text}] {}", took.as_secs_f64(), o.detail);
        if !(o.pass && in_time) {
            match KNOWN.iter().find(|k| k.0 == id) {
                Some((_, why)) if o.known && in_time => println!("    known: {why}"),
                _ => unexpected += 1,
            }
        }
    };
    report(1, "rank facts", Some(RANK_LIMIT), &mut rank_facts);
    report(2, "construction correctness", Some(CONSTRUCTION_LIMIT), &mut || constructions(&mut built));
    report(3, "bound inequality", None, &mut || bound_inequality(&built));
    report(4, "proof machinery", Some(DECOMPOSITION_LIMIT), &mut || decomposition(&built));
    report(5, "compiler correctness", Some(COMPILER_LIMIT), &mut compiler);
    report(6, "tightness", None, &mut tightness);
    report(7, "determinism", None, &mut determinism);
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    }
}
