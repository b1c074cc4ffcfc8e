//! Compiles a discretized circuit into an equivalent threshold circuit.
//!
//! Every hidden gate is replaced by a binary-search gadget over the values
//! its potential can take outside the silent range. Gadget gate `g_s` sees
//! the gate's potential plus `+W` from each `g_t` with `t1` a prefix of `s`
//! and `-W` from each `g_t` with `t0` a prefix of `s`; its threshold is
//! `mid(P_s) + W * N_1(s)`. Exactly one leaf fires when the potential is
//! non-silent, and it feeds each successor with weight `w_{g,g'} * code(p)`.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{self, Assignment, CircuitError, ThresholdCircuit, ThresholdGate};
use crate::discretized::{DiscretizedCircuit, DiscretizedError};

/// Cap on the number of values in one potential set.
pub const MAX_POTENTIAL_SET: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("split needs at least two values, got {0}")]
    SplitTooSmall(usize),
    #[error("potential grid of gate `{gate}` has {size} values (limit {MAX_POTENTIAL_SET})")]
    GridTooLarge { gate: String, size: u128 },
    #[error("W = {w} does not exceed the potential spread {spread} of gate `{gate}`")]
    WeakW { gate: String, w: i128, spread: i128 },
    #[error("compiled circuit differs from the source at {witness:?}: source gives {expected}")]
    Mismatch { witness: Assignment, expected: bool },
    #[error(transparent)]
    Discretized(#[from] DiscretizedError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Potentials at or above the silent range.
    Upper,
    /// Potentials at or below the silent range, handled by negating the gate.
    Lower,
}

/// Candidate non-silent potentials of one gate, in units of `1 / S^2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PotentialSet {
    pub gate: String,
    pub side: Side,
    pub values: Vec<i128>,
}

/// `sum x_i a_i + sum y_i b_i + sum w_h h + constant`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinearForm {
    pub x: Vec<i128>,
    pub y: Vec<i128>,
    pub inputs: BTreeMap<String, i128>,
    pub constant: i128,
}

impl LinearForm {
    pub fn negated(&self) -> LinearForm {
        LinearForm {
            x: self.x.iter().map(|w| -w).collect(),
            y: self.y.iter().map(|w| -w).collect(),
            inputs: self.inputs.iter().map(|(k, w)| (k.clone(), -w)).collect(),
            constant: -self.constant,
        }
    }
}

/// Gates of one gadget; `leaves` pairs each leaf id with its potential.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gadget {
    pub gates: Vec<ThresholdGate>,
    pub leaves: Vec<(String, i128)>,
    /// Length of the longest search string.
    pub depth: usize,
}

/// `mid` is the upper median; `Q_plus = {p >= mid}`, `Q_minus = {p < mid}`.
pub fn split(q: &[i128]) -> Result<(i128, Vec<i128>, Vec<i128>), CompileError> {
    if q.len() < 2 {
        return Err(CompileError::SplitTooSmall(q.len()));
    }
    let mut sorted = q.to_vec();
    sorted.sort_unstable();
    let mid = sorted[sorted.len() / 2];
    let (minus, plus): (Vec<i128>, Vec<i128>) = sorted.into_iter().partition(|&p| p < mid);
    Ok((mid, plus, minus))
}

/// Binary-search gates over `values` (ascending, nonempty) for `form`.
pub fn emit_gadget(prefix: &str, form: &LinearForm, values: &[i128], w: i128) -> Gadget {
    assert!(!values.is_empty(), "gadget needs at least one value");
    let n = form.x.len();
    let mut gates = Vec::new();
    let mut leaves = Vec::new();
    let mut depth = 0;
    // Depth-first over (s, P_s); prefixes are created before their extensions.
    let mut stack: Vec<(String, Vec<i128>)> = vec![(String::new(), values.to_vec())];
    while let Some((s, set)) = stack.pop() {
        let ones = s.bytes().filter(|&c| c == b'1').count() as i128;
        let mid = if set.len() == 1 { set[0] } else { split(&set).expect("two values").0 };
        let id = format!("{prefix}.s{s}");
        let mut g = ThresholdGate::new(id.clone(), n, mid + w * ones - form.constant);
        g.x_weights = form.x.clone();
        g.y_weights = form.y.clone();
        g.gate_weights = form.inputs.clone();
        for (k, c) in s.bytes().enumerate() {
            let weight = if c == b'1' { w } else { -w };
            g.gate_weights.insert(format!("{prefix}.s{}", &s[..k]), weight);
        }
        gates.push(g);
        depth = depth.max(s.len());
        if set.len() == 1 {
            leaves.push((id, set[0]));
        } else {
            let (_, plus, minus) = split(&set).expect("two values");
            stack.push((format!("{s}0"), minus));
            stack.push((format!("{s}1"), plus));
        }
    }
    Gadget { gates, leaves, depth }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Per-gate facts gathered while compiling.
#[derive(Clone, Debug)]
enum Lowered {
    /// The output code never changes.
    Constant(i128),
    /// Leaf ids with their output codes.
    Leaves(Vec<(String, i128)>),
}

struct GateAnalysis {
    lo: i128,
    hi: i128,
    step: i128,
    base: i128,
    form: LinearForm,
}

fn analyze(c: &DiscretizedCircuit, i: usize, lowered: &[Lowered], code_range: &[(i128, i128)]) -> GateAnalysis {
    let s = c.activation().scale();
    let g = c.gate(i);
    let mut form = LinearForm {
        x: g.x_weights.iter().map(|w| w * s).collect(),
        y: g.y_weights.iter().map(|w| w * s).collect(),
        inputs: BTreeMap::new(),
        constant: -s * g.threshold,
    };
    let (mut lo, mut hi) = (form.constant, form.constant);
    let mut step = 0;
    for &w in form.x.iter().chain(&form.y) {
        if w > 0 {
            hi += w;
        } else {
            lo += w;
        }
        step = gcd(step, w);
    }
    for &(h, w) in c.predecessors(i) {
        match &lowered[h] {
            Lowered::Constant(k) => form.constant += w * k,
            Lowered::Leaves(leaves) => {
                for (id, code) in leaves {
                    if w * code != 0 {
                        form.inputs.insert(id.clone(), w * code);
                    }
                }
                step = gcd(step, w);
            }
        }
        let (cl, ch) = code_range[h];
        if w > 0 {
            lo += w * cl;
            hi += w * ch;
        } else {
            lo += w * ch;
            hi += w * cl;
        }
    }
    GateAnalysis {
        lo,
        hi,
        step,
        base: form.constant,
        form,
    }
}

fn grid(a: &GateAnalysis, from: i128, gate: &str) -> Result<Vec<i128>, CompileError> {
    let start = from.max(a.lo);
    if start > a.hi {
        return Ok(Vec::new());
    }
    if a.step == 0 {
        return Ok(if (start..=a.hi).contains(&a.base) { vec![a.base] } else { Vec::new() });
    }
    let first = start + (a.base - start).rem_euclid(a.step);
    if first > a.hi {
        return Ok(Vec::new());
    }
    let count = ((a.hi - first) / a.step + 1) as u128;
    if count > MAX_POTENTIAL_SET as u128 {
        return Err(CompileError::GridTooLarge {
            gate: gate.to_string(),
            size: count,
        });
    }
    Ok((0..count as i128).map(|k| first + k * a.step).collect())
}

/// Grid superset of the non-silent potentials of hidden gate `gate`, with
/// every predecessor able to output any code in its range.
pub fn potential_set(c: &DiscretizedCircuit, gate: usize, side: Side) -> Result<PotentialSet, CompileError> {
    let act = c.activation();
    let full: Vec<(i128, i128)> = (0..c.hidden()).map(|_| (0, act.max_code())).collect();
    let lowered: Vec<Lowered> = (0..c.hidden()).map(|_| Lowered::Leaves(Vec::new())).collect();
    let a = analyze(c, gate, &lowered, &full);
    let id = &c.gate(gate).id;
    let values = match (side, act.silent_interval().upper) {
        (Side::Upper, Some(u)) => grid(&a, u, id)?,
        // Both activations are silent below their cutoff, so there is no lower pass.
        (Side::Upper, None) | (Side::Lower, _) => Vec::new(),
    };
    Ok(PotentialSet {
        gate: id.clone(),
        side,
        values,
    })
}

/// Measured blowups of one compilation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompileReport {
    #[serde(rename = "W")]
    pub w_big: i128,
    pub size_in: usize,
    pub size_out: usize,
    pub depth_in: usize,
    pub depth_out: usize,
    pub energy_in: usize,
    pub energy_out: Option<usize>,
    pub weight_in: u128,
    pub weight_out: u128,
    pub size_factor: f64,
    pub depth_factor: f64,
    /// `energy_out / max(energy_in, 1)`.
    pub energy_factor: Option<f64>,
    /// `log2(s + n) + log2(w)` for the source circuit.
    pub log_term: f64,
    pub depth_constant: f64,
    pub energy_constant: Option<f64>,
    pub largest_potential_set: usize,
    /// `largest_potential_set / ((s + n) w)`.
    pub potential_set_constant: f64,
    pub verified: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompileOptions {
    /// Check equivalence and measure energy exhaustively.
    pub verify: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { verify: true }
    }
}

#[derive(Clone, Debug)]
pub struct Compiled {
    pub circuit: ThresholdCircuit,
    pub report: CompileReport,
}

pub fn compile(c: &DiscretizedCircuit, options: CompileOptions) -> Result<Compiled, CompileError> {
    let act = c.activation();
    let n = c.n();
    let hidden = c.hidden();
    let size_in = c.size();
    let weight_in = act.weight();
    let w_big = 3 * (size_in + n) as i128 * weight_in as i128;
    let upper = act.silent_interval().upper;

    let mut lowered: Vec<Lowered> = Vec::with_capacity(hidden);
    let mut code_range: Vec<(i128, i128)> = Vec::with_capacity(hidden);
    let mut gates: Vec<ThresholdGate> = Vec::new();
    let mut largest = 0usize;
    for i in 0..hidden {
        let a = analyze(c, i, &lowered, &code_range);
        let (cl, ch) = (act.code(a.lo), act.code(a.hi));
        code_range.push((cl, ch));
        if cl == ch {
            lowered.push(Lowered::Constant(cl));
            continue;
        }
        let id = &c.gate(i).id;
        let values = grid(&a, upper.expect("non-constant gate has a non-silent side"), id)?;
        largest = largest.max(values.len());
        let spread = a.hi - values[0];
        if w_big <= spread {
            return Err(CompileError::WeakW {
                gate: id.clone(),
                w: w_big,
                spread,
            });
        }
        let gadget = emit_gadget(id, &a.form, &values, w_big);
        let leaves = gadget.leaves.iter().map(|(l, p)| (l.clone(), act.code(*p))).collect();
        gates.extend(gadget.gates);
        lowered.push(Lowered::Leaves(leaves));
    }

    let top = c.top();
    let mut out = ThresholdGate::new(top.id.clone(), n, top.threshold);
    out.x_weights = top.x_weights.clone();
    out.y_weights = top.y_weights.clone();
    for &(h, w) in c.predecessors(hidden) {
        match &lowered[h] {
            Lowered::Constant(k) => out.threshold -= w * k,
            Lowered::Leaves(leaves) => {
                for (id, code) in leaves {
                    if w * code != 0 {
                        out.gate_weights.insert(id.clone(), w * code);
                    }
                }
            }
        }
    }
    if out.gate_weights.is_empty() && out.x_weights.iter().chain(&out.y_weights).all(|&w| w == 0) {
        // Constant output: x_1 >= 0 always holds, x_1 >= 2 never does.
        let fires = out.threshold <= 0;
        out.x_weights[0] = 1;
        out.threshold = if fires { 0 } else { 2 };
    }
    let top_id = out.id.clone();
    gates.push(out);
    let gates = prune(gates, &top_id);
    let circuit = ThresholdCircuit::new(n, gates, top_id)?;

    let depth_in = c.depth();
    let log_term = ((size_in + n) as f64).log2() + (weight_in as f64).log2();
    let mut energy_in = 0;
    let mut energy_out = None;
    let mut verified = false;
    if options.verify {
        let source = c.measure()?;
        energy_in = source.energy;
        let expect = c.comm_matrix()?;
        let profile = circuit::profile(&circuit)?;
        if profile.matrix != expect {
            let (a, b) = (0..expect.rows())
                .flat_map(|a| (0..expect.cols()).map(move |b| (a, b)))
                .find(|&(a, b)| expect.get(a, b) != profile.matrix.get(a, b))
                .expect("matrices differ somewhere");
            return Err(CompileError::Mismatch {
                witness: Assignment::from_codes(n, a as u32, b as u32),
                expected: expect.get(a, b),
            });
        }
        energy_out = Some(profile.energy);
        verified = true;
    }
    let depth_out = circuit.depth();
    let depth_factor = depth_out as f64 / depth_in as f64;
    let energy_factor = energy_out.map(|e| e as f64 / energy_in.max(1) as f64);
    let report = CompileReport {
        w_big,
        size_in,
        size_out: circuit.size(),
        depth_in,
        depth_out,
        energy_in,
        energy_out,
        weight_in,
        weight_out: circuit.weight(),
        size_factor: circuit.size() as f64 / size_in as f64,
        depth_factor,
        energy_factor,
        log_term,
        depth_constant: depth_factor / log_term,
        energy_constant: energy_factor.map(|f| f / log_term),
        largest_potential_set: largest,
        potential_set_constant: largest as f64 / ((size_in + n) as f64 * weight_in as f64),
        verified,
    };
    Ok(Compiled { circuit, report })
}

/// Drops gates with no path to `top`.
fn prune(gates: Vec<ThresholdGate>, top: &str) -> Vec<ThresholdGate> {
    let index: HashMap<&str, usize> = gates.iter().enumerate().map(|(i, g)| (g.id.as_str(), i)).collect();
    let mut live = vec![false; gates.len()];
    let mut stack = vec![index[top]];
    while let Some(i) = stack.pop() {
        if std::mem::replace(&mut live[i], true) {
            continue;
        }
        stack.extend(gates[i].gate_weights.keys().map(|h| index[h.as_str()]));
    }
    gates.into_iter().zip(live).filter(|(_, l)| *l).map(|(g, _)| g).collect()
}
