//! Seeded random circuits and the bound sweep over them.
//!
//! Circuit `k` of a corpus is drawn from ChaCha8 seeded with the corpus seed
//! on stream `k`, so results do not depend on evaluation order.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analyzer::{check_bound, AnalyzerError, BoundReport};
use crate::circuit::{ThresholdCircuit, ThresholdGate};
use crate::discretized::{ActivationKind, DiscretizedActivation, DiscretizedCircuit, DiscretizedError};

/// How thresholds are drawn relative to a gate's reachable potentials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Anywhere between the least and the greatest potential.
    Balanced,
    /// In the lower half, so most gates fire on most inputs.
    Eager,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ThresholdParams {
    pub n: usize,
    /// Total gates including the top, at least 1.
    pub size: usize,
    /// Largest absolute weight, at least 1.
    pub weight: i128,
    pub mode: ThresholdMode,
}

pub fn corpus_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn nonzero(rng: &mut ChaCha8Rng, bound: i128) -> i128 {
    let v = rng.gen_range(1..=bound);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

fn draw_threshold(rng: &mut ChaCha8Rng, lo: i128, hi: i128, mode: ThresholdMode) -> i128 {
    // Potentials span [lo, hi]; a threshold in (lo, hi] makes the gate non-constant.
    let top = match mode {
        ThresholdMode::Balanced => hi,
        ThresholdMode::Eager => lo + (hi - lo + 1) / 2,
    };
    rng.gen_range(lo + 1..=top.max(lo + 1))
}

fn span(weights: impl IntoIterator<Item = i128>) -> (i128, i128) {
    weights.into_iter().fold((0, 0), |(lo, hi), w| if w < 0 { (lo + w, hi) } else { (lo, hi + w) })
}

/// A random threshold circuit: hidden gates `g1, g2, ...` read the inputs
/// and earlier gates; `top` reads every gate nothing else reads.
pub fn random_threshold_circuit(rng: &mut ChaCha8Rng, p: ThresholdParams) -> ThresholdCircuit {
    let n = p.n;
    let hidden = p.size.saturating_sub(1);
    let mut gates: Vec<ThresholdGate> = Vec::with_capacity(p.size);
    let mut read = vec![false; hidden];
    let draw_vars = |rng: &mut ChaCha8Rng| -> Vec<i128> {
        (0..n)
            .map(|_| if rng.gen_bool(0.3) { 0 } else { nonzero(rng, p.weight) })
            .collect()
    };
    for i in 0..=hidden {
        let is_top = i == hidden;
        let id = if is_top { "top".to_string() } else { format!("g{}", i + 1) };
        let mut g = ThresholdGate::new(id, n, 0);
        g.x_weights = draw_vars(rng);
        g.y_weights = draw_vars(rng);
        for j in 0..i {
            if (is_top && !read[j]) || rng.gen_bool(0.5) {
                g.gate_weights.insert(gates[j].id.clone(), nonzero(rng, p.weight));
                read[j] = true;
            }
        }
        if g.gate_weights.is_empty() && g.x_weights.iter().chain(&g.y_weights).all(|&w| w == 0) {
            let k = rng.gen_range(0..n);
            g.x_weights[k] = nonzero(rng, p.weight);
        }
        let (lo, hi) = span(g.x_weights.iter().chain(&g.y_weights).chain(g.gate_weights.values()).copied());
        g.threshold = draw_threshold(rng, lo, hi, p.mode);
        gates.push(g);
    }
    ThresholdCircuit::new(n, gates, "top").expect("generated circuits are well formed")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DiscretizedParams {
    pub n: usize,
    /// Hidden gates, excluding the top.
    pub hidden: usize,
    pub kind: ActivationKind,
    pub bitwidth: u32,
    /// Largest absolute top weight over codes.
    pub top_weight: i128,
}

/// A random discretized circuit with numerators drawn from the full
/// representable range.
pub fn random_discretized_circuit(rng: &mut ChaCha8Rng, p: DiscretizedParams) -> Result<DiscretizedCircuit, DiscretizedError> {
    let act = DiscretizedActivation::new(p.kind, p.bitwidth)?;
    let limit = (1i128 << p.bitwidth) - 1;
    let n = p.n;
    let draw = |rng: &mut ChaCha8Rng| -> Vec<i128> {
        (0..n)
            .map(|_| if rng.gen_bool(0.3) { 0 } else { nonzero(rng, limit) })
            .collect()
    };
    let mut gates: Vec<ThresholdGate> = Vec::with_capacity(p.hidden);
    for i in 0..p.hidden {
        let mut g = ThresholdGate::new(format!("h{}", i + 1), n, rng.gen_range(-limit..=limit));
        g.x_weights = draw(rng);
        g.y_weights = draw(rng);
        for prev in &gates {
            if rng.gen_bool(0.5) {
                g.gate_weights.insert(prev.id.clone(), nonzero(rng, limit));
            }
        }
        if g.gate_weights.is_empty() && g.x_weights.iter().chain(&g.y_weights).all(|&w| w == 0) {
            g.x_weights[rng.gen_range(0..n)] = nonzero(rng, limit);
        }
        gates.push(g);
    }
    let mut top = ThresholdGate::new("top", n, 0);
    for g in &gates {
        top.gate_weights.insert(g.id.clone(), nonzero(rng, p.top_weight));
    }
    if gates.is_empty() {
        top.x_weights = draw(rng);
        top.x_weights[0] = 1;
    }
    let max_code = act.max_code();
    let (lo, hi) = span(
        top.x_weights
            .iter()
            .chain(&top.y_weights)
            .copied()
            .chain(top.gate_weights.values().map(|w| w * max_code)),
    );
    top.threshold = draw_threshold(rng, lo, hi, ThresholdMode::Balanced);
    DiscretizedCircuit::new(act, n, gates, top)
}

/// Settings of a bound sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CorpusConfig {
    pub seed: u64,
    pub count: usize,
    pub n: usize,
    /// Sizes are drawn from `min_size..=max_size`.
    pub min_size: usize,
    pub max_size: usize,
    pub weight: i128,
    pub mode: ThresholdMode,
}

impl CorpusConfig {
    pub fn new(seed: u64, count: usize, n: usize) -> Self {
        CorpusConfig {
            seed,
            count,
            n,
            min_size: 2,
            max_size: 8,
            weight: 3,
            mode: ThresholdMode::Balanced,
        }
    }

    pub fn circuit(&self, index: usize) -> ThresholdCircuit {
        let mut rng = corpus_rng(self.seed, index as u64);
        let size = rng.gen_range(self.min_size..=self.max_size);
        random_threshold_circuit(
            &mut rng,
            ThresholdParams {
                n: self.n,
                size,
                weight: self.weight,
                mode: self.mode,
            },
        )
    }
}

pub const CSV_HEADER: &str = "n,s,d,e,w,rank,lhs,rhs,holds";

pub fn csv_row(r: &BoundReport) -> String {
    format!("{},{},{},{},{},{},{:.6},{:.6},{}", r.n, r.s, r.d, r.e, r.w, r.rank, r.lhs, r.rhs, r.holds)
}

pub fn to_csv<'a>(reports: impl IntoIterator<Item = &'a BoundReport>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{}", csv_row(r));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub circuits: usize,
    pub holds: usize,
    /// Circuits with `e >= 10` and the other hypotheses.
    pub in_hypotheses: usize,
    /// Circuits with `e >= 11` and the other hypotheses.
    pub in_proven_regime: usize,
    pub violations: usize,
}

/// Bound reports for every circuit of the corpus, in index order.
pub fn bound_corpus(cfg: &CorpusConfig) -> Result<Vec<BoundReport>, AnalyzerError> {
    (0..cfg.count)
        .into_par_iter()
        .map(|k| check_bound(&cfg.circuit(k)))
        .collect()
}

pub fn summarize(reports: &[BoundReport]) -> CorpusSummary {
    CorpusSummary {
        circuits: reports.len(),
        holds: reports.iter().filter(|r| r.holds).count(),
        in_hypotheses: reports.iter().filter(|r| r.hypotheses_e10).count(),
        in_proven_regime: reports.iter().filter(|r| r.hypotheses_e11).count(),
        violations: reports.iter().filter(|r| r.violation).count(),
    }
}
