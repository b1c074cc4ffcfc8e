//! Exhaustive evaluation over all `2^(2n)` assignments, one row `a` at a time.
//!
//! For a fixed `a`, every gate's outputs over all `b` form a bitset row. Gates
//! without gate inputs are looked up from precomputed masks over the distinct
//! values of `p^y`; other gates accumulate predecessor contributions into an
//! `i64` table. Circuits whose potentials may leave `i64` fall back to the
//! checked scalar evaluator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Assignment, CircuitError, Measures, ThresholdCircuit};
use crate::boolmat::{BitMatrix, Domain};

/// Default cap on `2n` for exhaustive sweeps.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 26;

const DIRECT_MAX_VALUES: usize = 64;
const SAFE_MAGNITUDE: u128 = 1 << 62;

enum Kernel {
    /// `values` sorted ascending; `masks[j]` is `{b : p^y(b) >= values[j]}`.
    Direct { values: Vec<i64>, masks: Vec<u64> },
    Table { py: Vec<i64> },
}

/// Precomputed per-gate kernels for row-at-a-time sweeps of one circuit.
pub struct Sweep<'c> {
    circuit: &'c ThresholdCircuit,
    cols: usize,
    words: usize,
    kernels: Option<Vec<Kernel>>,
}

/// Per-worker buffers for [`Sweep::rows`].
pub struct RowScratch {
    rows: Vec<u64>,
    acc: Vec<i64>,
    bits: Vec<bool>,
}

fn y_table(c: &ThresholdCircuit, gate: usize) -> Vec<i64> {
    let n = c.n();
    let mut w = vec![0i64; n];
    for &(k, v) in c.y_terms(gate) {
        w[k] = v as i64;
    }
    let mut table = vec![0i64; 1 << n];
    for b in 1..table.len() {
        let low = b.trailing_zeros() as usize;
        table[b] = table[b & (b - 1)] + w[n - 1 - low];
    }
    table
}

fn fits_i64(c: &ThresholdCircuit, gate: usize) -> bool {
    let g = c.gate(gate);
    let total = g
        .x_weights
        .iter()
        .chain(&g.y_weights)
        .chain(g.gate_weights.values())
        .chain(std::iter::once(&g.threshold))
        .try_fold(0u128, |acc, w| acc.checked_add(w.unsigned_abs()));
    matches!(total, Some(t) if t < SAFE_MAGNITUDE)
}

impl<'c> Sweep<'c> {
    pub fn new(circuit: &'c ThresholdCircuit) -> Result<Self, CircuitError> {
        Self::with_limit(circuit, DEFAULT_EXHAUSTIVE_LIMIT)
    }

    pub fn with_limit(circuit: &'c ThresholdCircuit, limit: usize) -> Result<Self, CircuitError> {
        let n = circuit.n();
        if 2 * n > limit {
            return Err(CircuitError::ExhaustiveLimit { inputs: 2 * n, limit });
        }
        let cols = 1usize << n;
        let words = cols.div_ceil(64);
        let fast = (0..circuit.size()).all(|i| fits_i64(circuit, i));
        let kernels = fast.then(|| {
            (0..circuit.size())
                .map(|i| {
                    let py = y_table(circuit, i);
                    if !circuit.predecessors(i).is_empty() {
                        return Kernel::Table { py };
                    }
                    let mut values = py.clone();
                    values.sort_unstable();
                    values.dedup();
                    if values.len() > DIRECT_MAX_VALUES {
                        return Kernel::Table { py };
                    }
                    let mut masks = vec![0u64; values.len() * words];
                    for (b, &v) in py.iter().enumerate() {
                        // b is in mask j for every j with values[j] <= v.
                        let upto = values.partition_point(|&u| u <= v);
                        for j in 0..upto {
                            masks[j * words + b / 64] |= 1 << (b % 64);
                        }
                    }
                    Kernel::Direct { values, masks }
                })
                .collect()
        });
        Ok(Sweep {
            circuit,
            cols,
            words,
            kernels,
        })
    }

    pub fn circuit(&self) -> &ThresholdCircuit {
        self.circuit
    }

    /// Number of `b` values per row (`2^n`).
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Words per gate row.
    pub fn words(&self) -> usize {
        self.words
    }

    pub fn scratch(&self) -> RowScratch {
        RowScratch {
            rows: vec![0; self.circuit.size() * self.words],
            acc: vec![0; self.cols],
            bits: vec![false; self.circuit.size()],
        }
    }

    /// Outputs of every gate for fixed `a`: gate `i` occupies
    /// `[i * words, (i + 1) * words)` and bit `b` of that row is `g_i(a, b)`.
    pub fn rows<'s>(&self, a: u32, s: &'s mut RowScratch) -> Result<&'s [u64], CircuitError> {
        match &self.kernels {
            Some(kernels) => self.fast_rows(a, kernels, s),
            None => self.scalar_rows(a, s)?,
        }
        Ok(&s.rows)
    }

    fn fast_rows(&self, a: u32, kernels: &[Kernel], s: &mut RowScratch) {
        let c = self.circuit;
        let w = self.words;
        for (i, kernel) in kernels.iter().enumerate() {
            // Cannot overflow: fits_i64 bounds every partial sum.
            let px = c.x_potential(i, a).expect("bounded potential") as i64;
            let thr = c.gate(i).threshold as i64 - px;
            let (done, rest) = s.rows.split_at_mut(i * w);
            let row = &mut rest[..w];
            match kernel {
                Kernel::Direct { values, masks } => {
                    let j = values.partition_point(|&v| v < thr);
                    if j == values.len() {
                        row.fill(0);
                    } else {
                        row.copy_from_slice(&masks[j * w..(j + 1) * w]);
                    }
                }
                Kernel::Table { py } => {
                    s.acc.copy_from_slice(py);
                    for &(h, wh) in c.predecessors(i) {
                        let wh = wh as i64;
                        for (k, &word) in done[h * w..(h + 1) * w].iter().enumerate() {
                            let mut word = word;
                            while word != 0 {
                                let bit = word.trailing_zeros() as usize;
                                s.acc[k * 64 + bit] += wh;
                                word &= word - 1;
                            }
                        }
                    }
                    row.fill(0);
                    for (b, &p) in s.acc.iter().enumerate() {
                        if p >= thr {
                            row[b / 64] |= 1 << (b % 64);
                        }
                    }
                }
            }
        }
    }

    fn scalar_rows(&self, a: u32, s: &mut RowScratch) -> Result<(), CircuitError> {
        let w = self.words;
        s.rows.fill(0);
        for b in 0..self.cols {
            self.circuit.eval_codes(a, b as u32, &mut s.bits, None)?;
            for (i, &fired) in s.bits.iter().enumerate() {
                if fired {
                    s.rows[i * w + b / 64] |= 1 << (b % 64);
                }
            }
        }
        Ok(())
    }
}

/// `M_C` together with the exact energy of a circuit.
#[derive(Clone, Debug)]
pub struct Profile {
    pub matrix: BitMatrix,
    pub energy: usize,
    /// Lexicographically smallest `(a, b)` attaining `energy`.
    pub witness: Assignment,
}

struct RowSummary {
    output: Vec<u64>,
    best: usize,
    best_b: usize,
}

/// Exhaustively evaluates `circuit`, returning its communication matrix and energy.
pub fn profile(circuit: &ThresholdCircuit) -> Result<Profile, CircuitError> {
    let sweep = Sweep::new(circuit)?;
    let n = circuit.n();
    let w = sweep.words();
    let out = circuit.output_index();
    let summaries: Vec<RowSummary> = (0..sweep.cols())
        .into_par_iter()
        .map_init(
            || (sweep.scratch(), vec![0u32; sweep.cols()]),
            |(scratch, counts), a| -> Result<RowSummary, CircuitError> {
                let rows = sweep.rows(a as u32, scratch)?;
                counts.fill(0);
                for row in rows.chunks_exact(w) {
                    for (k, &word) in row.iter().enumerate() {
                        let mut word = word;
                        while word != 0 {
                            counts[k * 64 + word.trailing_zeros() as usize] += 1;
                            word &= word - 1;
                        }
                    }
                }
                let (mut best, mut best_b) = (0u32, 0usize);
                for (b, &cnt) in counts.iter().enumerate() {
                    if cnt > best {
                        (best, best_b) = (cnt, b);
                    }
                }
                Ok(RowSummary {
                    output: rows[out * w..(out + 1) * w].to_vec(),
                    best: best as usize,
                    best_b,
                })
            },
        )
        .collect::<Result<_, _>>()?;

    let mut matrix = BitMatrix::zeros(Domain::full(n), Domain::full(n));
    let (mut energy, mut at) = (0usize, (0u32, 0u32));
    for (a, row) in summaries.iter().enumerate() {
        matrix.set_row_words(a, &row.output);
        if row.best > energy {
            energy = row.best;
            at = (a as u32, row.best_b as u32);
        }
    }
    Ok(Profile {
        matrix,
        energy,
        witness: Assignment::from_codes(n, at.0, at.1),
    })
}

/// Exact energy and a witness attaining it.
pub fn measure_energy_exhaustive(circuit: &ThresholdCircuit) -> Result<(usize, Assignment), CircuitError> {
    let p = profile(circuit)?;
    Ok((p.energy, p.witness))
}

/// Size, depth, energy and weight, with energy measured exhaustively.
pub fn measure(circuit: &ThresholdCircuit) -> Result<Measures, CircuitError> {
    let (energy, energy_witness) = measure_energy_exhaustive(circuit)?;
    Ok(Measures {
        size: circuit.size(),
        depth: circuit.depth(),
        energy,
        weight: circuit.weight(),
        energy_witness,
    })
}

/// Largest number of firing gates over the given assignments; the first
/// assignment reaching it is returned. `None` when `inputs` is empty.
pub fn energy_over<'a>(
    circuit: &ThresholdCircuit,
    inputs: impl IntoIterator<Item = &'a Assignment>,
) -> Result<Option<(usize, Assignment)>, CircuitError> {
    let mut best: Option<(usize, Assignment)> = None;
    for input in inputs {
        let trace = circuit.evaluate(input)?;
        let count = trace.bits.iter().filter(|&&b| b).count();
        if best.as_ref().is_none_or(|(e, _)| count > *e) {
            best = Some((count, input.clone()));
        }
    }
    Ok(best)
}

/// Lower bound on the energy from `samples` uniform assignments drawn from
/// ChaCha8 seeded with `seed`.
pub fn energy_lower_bound_sampled(
    circuit: &ThresholdCircuit,
    samples: usize,
    seed: u64,
) -> Result<(usize, Assignment), CircuitError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = circuit.n();
    let draws: Vec<Assignment> = (0..samples.max(1))
        .map(|_| {
            let a = (0..n).map(|_| rng.gen()).collect();
            let b = (0..n).map(|_| rng.gen()).collect();
            Assignment::new(a, b)
        })
        .collect();
    Ok(energy_over(circuit, &draws)?.expect("at least one sample"))
}
