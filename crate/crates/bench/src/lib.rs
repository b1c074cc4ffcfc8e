//! Fixtures shared by the benchmarks.

use tclab::compiler::CompileOptions;
use tclab::constructions::{build_unmeasured, Target};
use tclab::corpus::{corpus_rng, random_discretized_circuit, DiscretizedParams};
use tclab::{ActivationKind, BitMatrix, DiscretizedCircuit, Domain, ThresholdCircuit};

/// Pseudo-random `2^n x 2^n` matrix, fixed by `seed`.
pub fn scrambled_matrix(n: usize, seed: u64) -> BitMatrix {
    BitMatrix::from_fn(Domain::full(n), Domain::full(n), |a, b| {
        let mut h = seed ^ ((a as u64) << 32 | b as u64);
        h = h.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h ^= h >> 29;
        h.wrapping_mul(0xbf58_476d_1ce4_e5b9) >> 63 == 1
    })
}

pub fn conj_circuit(n: usize, e: usize, d: usize) -> ThresholdCircuit {
    build_unmeasured(Target::Conj, n, e, d).expect("valid parameters").circuit
}

pub fn discretized_circuit(n: usize, hidden: usize, kind: ActivationKind, bitwidth: u32) -> DiscretizedCircuit {
    let p = DiscretizedParams { n, hidden, kind, bitwidth, top_weight: 2 };
    random_discretized_circuit(&mut corpus_rng(7, 0), p).expect("valid parameters")
}

pub fn no_verify() -> CompileOptions {
    CompileOptions { verify: false }
}
