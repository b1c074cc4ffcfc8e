//! Discretized (ReLU / sigmoid) circuits in exact fixed point.
//!
//! Weights and thresholds are integer numerators over the activation scale
//! `S` (`2^b` for ReLU, `2^b - 1` for sigmoid) with magnitude at most
//! `2^b - 1`. A gate output is a code `c` in `[0, 2^b - 1]` standing for
//! `c / S`. Potentials are kept in units of `1 / S^2`:
//! `P = S * (sum w^x a + sum w^y b - t) + sum w_{h,g} c_h`.
//! The top gate is an ordinary threshold gate over input bits and codes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolmat::{code_bit, BitMatrix, Domain};
use crate::circuit::{self, Assignment, CircuitError, ThresholdCircuit, ThresholdGate};
use crate::wide;

/// Largest supported bitwidth.
pub const MAX_BITWIDTH: u32 = 16;

#[derive(Debug, Error)]
pub enum DiscretizedError {
    #[error("bitwidth must be in 1..={MAX_BITWIDTH}, got {0}")]
    Bitwidth(u32),
    #[error("scale {got} does not match the {kind} scale {expected}")]
    Scale { kind: &'static str, got: i128, expected: i128 },
    #[error("value {value} of gate `{gate}` exceeds the {bits}-bit magnitude {limit}")]
    Magnitude { gate: String, value: i128, bits: u32, limit: i128 },
    #[error("output must be \"top\" and name the top gate, got `{0}`")]
    Output(String),
    #[error("the top gate id `{0}` is also used by a hidden gate")]
    TopId(String),
    #[error("potential of gate `{gate}` overflows the exact integer range")]
    Overflow { gate: String },
    #[error("sigmoid breakpoint {k} lies too close to an integer to round safely")]
    Breakpoint { k: i128 },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("discretized circuit json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    Sigmoid,
}

/// `delta o phi` with a floor discretizer onto the `1 / S` grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscretizedActivation {
    kind: ActivationKind,
    bitwidth: u32,
    scale: i128,
    /// Sigmoid only: code >= k iff `P >= breakpoints[k - 1]`.
    breakpoints: Vec<i128>,
}

/// Silent set of an activation over potentials `P` (units `1 / S^2`): the
/// output is zero iff `P < upper`. `upper = None` means silent everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SilentInterval {
    pub upper: Option<i128>,
    /// `upper / S^2`, the real-valued cutoff `t_max`.
    pub t_max: Option<f64>,
}

impl DiscretizedActivation {
    pub fn new(kind: ActivationKind, bitwidth: u32) -> Result<Self, DiscretizedError> {
        if !(1..=MAX_BITWIDTH).contains(&bitwidth) {
            return Err(DiscretizedError::Bitwidth(bitwidth));
        }
        let levels = 1i128 << bitwidth;
        let (scale, breakpoints) = match kind {
            ActivationKind::Relu => (levels, Vec::new()),
            ActivationKind::Sigmoid => {
                let m = levels - 1;
                let s2 = (m * m) as f64;
                // sigma(x) >= k/m  iff  x >= ln(k / (m - k)).
                let bps = (1..m)
                    .map(|k| {
                        let u = s2 * ((k as f64) / ((m - k) as f64)).ln();
                        if (u - u.round()).abs() < 1e-6 {
                            return Err(DiscretizedError::Breakpoint { k });
                        }
                        Ok(u.ceil() as i128)
                    })
                    .collect::<Result<_, _>>()?;
                (m, bps)
            }
        };
        Ok(DiscretizedActivation {
            kind,
            bitwidth,
            scale,
            breakpoints,
        })
    }

    pub fn kind(&self) -> ActivationKind {
        self.kind
    }

    pub fn bitwidth(&self) -> u32 {
        self.bitwidth
    }

    pub fn scale(&self) -> i128 {
        self.scale
    }

    /// Largest output code, `2^b - 1` for ReLU and `2^b - 2` for sigmoid.
    pub fn max_code(&self) -> i128 {
        match self.kind {
            ActivationKind::Relu => (1 << self.bitwidth) - 1,
            ActivationKind::Sigmoid => self.breakpoints.len() as i128,
        }
    }

    /// Output code for potential `p` (units `1 / S^2`).
    pub fn code(&self, p: i128) -> i128 {
        match self.kind {
            ActivationKind::Relu => p.div_euclid(self.scale).clamp(0, self.max_code()),
            ActivationKind::Sigmoid => self.breakpoints.partition_point(|&u| u <= p) as i128,
        }
    }

    /// Output value `code / S`.
    pub fn value(&self, p: i128) -> f64 {
        self.code(p) as f64 / self.scale as f64
    }

    pub fn silent_interval(&self) -> SilentInterval {
        let upper = match self.kind {
            ActivationKind::Relu => Some(self.scale),
            ActivationKind::Sigmoid => self.breakpoints.first().copied(),
        };
        SilentInterval {
            upper,
            t_max: upper.map(|u| u as f64 / (self.scale * self.scale) as f64),
        }
    }

    /// The cutoff usually quoted for this activation: `0` for ReLU,
    /// `ln(1 / (2^b - 1))` for sigmoid.
    pub fn nominal_cutoff(&self) -> f64 {
        match self.kind {
            ActivationKind::Relu => 0.0,
            ActivationKind::Sigmoid => (1.0 / ((1u64 << self.bitwidth) - 1) as f64).ln(),
        }
    }

    /// Weight measure `2^(2b)`.
    pub fn weight(&self) -> u128 {
        1u128 << (2 * self.bitwidth)
    }

    fn magnitude_limit(&self) -> i128 {
        (1i128 << self.bitwidth) - 1
    }
}

/// Returned by [`make_activation`]: the activation and its computed silent range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActivationReport {
    pub kind: ActivationKind,
    pub bitwidth: u32,
    pub scale: i128,
    pub silent: SilentInterval,
    pub nominal_cutoff: f64,
    /// The computed cutoff differs from the nominal one.
    pub cutoff_differs: bool,
}

pub fn make_activation(kind: ActivationKind, bitwidth: u32) -> Result<(DiscretizedActivation, ActivationReport), DiscretizedError> {
    let act = DiscretizedActivation::new(kind, bitwidth)?;
    let silent = act.silent_interval();
    let nominal = act.nominal_cutoff();
    let report = ActivationReport {
        kind,
        bitwidth,
        scale: act.scale,
        silent,
        nominal_cutoff: nominal,
        cutoff_differs: silent.t_max.is_none_or(|t| (t - nominal).abs() > 1e-12),
    };
    Ok((act, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscretizedKind {
    Discretized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    pub bitwidth: u32,
}

/// Serialized form of a discretized circuit. Hidden gates use the threshold
/// gate field layout with numerators over `scale`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizedDescription {
    pub kind: DiscretizedKind,
    pub activation: ActivationSpec,
    pub n: usize,
    pub gates: Vec<ThresholdGate>,
    #[serde(with = "wide::scalar")]
    pub scale: i128,
    pub top: ThresholdGate,
    pub output: String,
}

/// A validated discretized circuit.
#[derive(Clone, Debug)]
pub struct DiscretizedCircuit {
    activation: DiscretizedActivation,
    /// Hidden gates followed by the top gate, with structure checks done.
    structure: ThresholdCircuit,
}

impl PartialEq for DiscretizedCircuit {
    fn eq(&self, other: &Self) -> bool {
        self.activation == other.activation && self.structure == other.structure
    }
}

/// Output of [`DiscretizedCircuit::evaluate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscretizedTrace {
    pub output: bool,
    /// Output codes of the hidden gates (value `code / S`).
    pub codes: Vec<i128>,
    /// Hidden-gate potentials in units of `1 / S^2`.
    pub potentials: Vec<i128>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiscretizedMeasures {
    /// Hidden gates plus the top gate.
    pub size: usize,
    pub depth: usize,
    /// Most hidden gates with nonzero output on one assignment.
    pub energy: usize,
    pub weight: u128,
    pub energy_witness: Assignment,
}

impl DiscretizedCircuit {
    pub fn new(
        activation: DiscretizedActivation,
        n: usize,
        gates: Vec<ThresholdGate>,
        top: ThresholdGate,
    ) -> Result<Self, DiscretizedError> {
        let limit = activation.magnitude_limit();
        for g in &gates {
            let values = g
                .x_weights
                .iter()
                .chain(&g.y_weights)
                .chain(g.gate_weights.values())
                .chain(std::iter::once(&g.threshold));
            for &v in values {
                if v.abs() > limit {
                    return Err(DiscretizedError::Magnitude {
                        gate: g.id.clone(),
                        value: v,
                        bits: activation.bitwidth,
                        limit,
                    });
                }
            }
        }
        if gates.iter().any(|g| g.id == top.id) {
            return Err(DiscretizedError::TopId(top.id));
        }
        let top_id = top.id.clone();
        let mut all = gates;
        all.push(top);
        let structure = ThresholdCircuit::new(n, all, top_id)?;
        Ok(DiscretizedCircuit { activation, structure })
    }

    pub fn from_description(desc: DiscretizedDescription) -> Result<Self, DiscretizedError> {
        let act = DiscretizedActivation::new(desc.activation.kind, desc.activation.bitwidth)?;
        if desc.scale != act.scale {
            return Err(DiscretizedError::Scale {
                kind: match act.kind {
                    ActivationKind::Relu => "relu",
                    ActivationKind::Sigmoid => "sigmoid",
                },
                got: desc.scale,
                expected: act.scale,
            });
        }
        if desc.output != desc.top.id {
            return Err(DiscretizedError::Output(desc.output));
        }
        DiscretizedCircuit::new(act, desc.n, desc.gates, desc.top)
    }

    pub fn from_json(text: &str) -> Result<Self, DiscretizedError> {
        Self::from_description(serde_json::from_str(text)?)
    }

    pub fn description(&self) -> DiscretizedDescription {
        let mut gates = self.structure.gates().to_vec();
        let top = gates.pop().expect("top gate");
        DiscretizedDescription {
            kind: DiscretizedKind::Discretized,
            activation: ActivationSpec {
                kind: self.activation.kind,
                bitwidth: self.activation.bitwidth,
            },
            n: self.structure.n(),
            gates,
            scale: self.activation.scale,
            output: top.id.clone(),
            top,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.description()).expect("circuit serializes")
    }

    pub fn activation(&self) -> &DiscretizedActivation {
        &self.activation
    }

    pub fn n(&self) -> usize {
        self.structure.n()
    }

    /// Number of hidden gates.
    pub fn hidden(&self) -> usize {
        self.structure.size() - 1
    }

    pub fn gate(&self, i: usize) -> &ThresholdGate {
        self.structure.gate(i)
    }

    pub fn top(&self) -> &ThresholdGate {
        self.structure.gate(self.hidden())
    }

    /// `(predecessor index, weight)` pairs of gate `i` (the top is `hidden()`).
    pub fn predecessors(&self, i: usize) -> &[(usize, i128)] {
        self.structure.predecessors(i)
    }

    pub fn size(&self) -> usize {
        self.structure.size()
    }

    pub fn depth(&self) -> usize {
        self.structure.depth()
    }

    pub fn level(&self, i: usize) -> usize {
        self.structure.level(i)
    }

    fn overflow(&self, i: usize) -> DiscretizedError {
        DiscretizedError::Overflow {
            gate: self.gate(i).id.clone(),
        }
    }

    /// Potential of hidden gate `i` in units `1 / S^2`, given predecessor codes.
    fn potential(&self, i: usize, x: &dyn Fn(usize) -> bool, y: &dyn Fn(usize) -> bool, codes: &[i128]) -> Result<i128, DiscretizedError> {
        let s = self.activation.scale;
        let err = || self.overflow(i);
        let mut lin: i128 = -self.gate(i).threshold;
        for &(k, w) in self.structure.x_terms(i) {
            if x(k) {
                lin = lin.checked_add(w).ok_or_else(err)?;
            }
        }
        for &(k, w) in self.structure.y_terms(i) {
            if y(k) {
                lin = lin.checked_add(w).ok_or_else(err)?;
            }
        }
        let mut p = lin.checked_mul(s).ok_or_else(err)?;
        for &(h, w) in self.predecessors(i) {
            p = w
                .checked_mul(codes[h])
                .and_then(|v| p.checked_add(v))
                .ok_or_else(err)?;
        }
        Ok(p)
    }

    fn eval_with(
        &self,
        x: &dyn Fn(usize) -> bool,
        y: &dyn Fn(usize) -> bool,
        codes: &mut [i128],
        mut potentials: Option<&mut [i128]>,
    ) -> Result<bool, DiscretizedError> {
        let hidden = self.hidden();
        for i in 0..hidden {
            let p = self.potential(i, x, y, codes)?;
            codes[i] = self.activation.code(p);
            if let Some(pots) = potentials.as_deref_mut() {
                pots[i] = p;
            }
        }
        let err = || self.overflow(hidden);
        let mut p: i128 = 0;
        for &(k, w) in self.structure.x_terms(hidden) {
            if x(k) {
                p = p.checked_add(w).ok_or_else(err)?;
            }
        }
        for &(k, w) in self.structure.y_terms(hidden) {
            if y(k) {
                p = p.checked_add(w).ok_or_else(err)?;
            }
        }
        for &(h, w) in self.predecessors(hidden) {
            p = w.checked_mul(codes[h]).and_then(|v| p.checked_add(v)).ok_or_else(err)?;
        }
        Ok(p >= self.top().threshold)
    }

    /// Exact fixed-point evaluation.
    pub fn evaluate(&self, input: &Assignment) -> Result<DiscretizedTrace, DiscretizedError> {
        let n = self.n();
        if input.a.len() != n || input.b.len() != n {
            return Err(CircuitError::AssignmentLength {
                a: input.a.len(),
                b: input.b.len(),
                n,
            }
            .into());
        }
        let mut codes = vec![0; self.size()];
        let mut potentials = vec![0; self.size()];
        let output = self.eval_with(&|k| input.a[k], &|k| input.b[k], &mut codes, Some(&mut potentials))?;
        codes.truncate(self.hidden());
        potentials.truncate(self.hidden());
        Ok(DiscretizedTrace {
            output,
            codes,
            potentials,
        })
    }

    /// Evaluates on codes; `codes` must have length `size()`.
    pub fn eval_codes(&self, a: u32, b: u32, codes: &mut [i128]) -> Result<bool, DiscretizedError> {
        let n = self.n();
        self.eval_with(&|k| code_bit(a, n, k), &|k| code_bit(b, n, k), codes, None)
    }

    /// Communication matrix of the circuit, by exhaustive evaluation.
    pub fn comm_matrix(&self) -> Result<BitMatrix, DiscretizedError> {
        Ok(self.sweep()?.0)
    }

    fn sweep(&self) -> Result<(BitMatrix, usize, Assignment), DiscretizedError> {
        let n = self.n();
        if 2 * n > circuit::DEFAULT_EXHAUSTIVE_LIMIT {
            return Err(CircuitError::ExhaustiveLimit {
                inputs: 2 * n,
                limit: circuit::DEFAULT_EXHAUSTIVE_LIMIT,
            }
            .into());
        }
        let mut m = BitMatrix::zeros(Domain::full(n), Domain::full(n));
        let mut codes = vec![0; self.size()];
        let (mut best, mut at) = (0usize, (0u32, 0u32));
        for a in 0..1u32 << n {
            for b in 0..1u32 << n {
                let out = self.eval_codes(a, b, &mut codes)?;
                m.set(a as usize, b as usize, out);
                let active = codes[..self.hidden()].iter().filter(|&&c| c != 0).count();
                if active > best {
                    (best, at) = (active, (a, b));
                }
            }
        }
        Ok((m, best, Assignment::from_codes(n, at.0, at.1)))
    }

    /// Size, depth, energy (hidden gates with nonzero output) and weight `2^(2b)`.
    pub fn measure(&self) -> Result<DiscretizedMeasures, DiscretizedError> {
        let (_, energy, energy_witness) = self.sweep()?;
        Ok(DiscretizedMeasures {
            size: self.size(),
            depth: self.depth(),
            energy,
            weight: self.activation.weight(),
            energy_witness,
        })
    }

    /// Smallest and largest potential of hidden gate `i` over all inputs,
    /// using the code ranges of its predecessors.
    pub fn potential_bounds(&self, i: usize) -> (i128, i128) {
        let s = self.activation.scale;
        let g = self.gate(i);
        let (mut lo, mut hi) = (-s * g.threshold, -s * g.threshold);
        for &w in g.x_weights.iter().chain(&g.y_weights) {
            if w > 0 {
                hi += s * w;
            } else {
                lo += s * w;
            }
        }
        let max_code = self.activation.max_code();
        for &(_, w) in self.predecessors(i) {
            if w > 0 {
                hi += w * max_code;
            } else {
                lo += w * max_code;
            }
        }
        (lo, hi)
    }
}

/// Builds a hidden or top gate from literal weights.
pub fn gate(id: &str, x: &[i128], y: &[i128], inputs: &[(&str, i128)], threshold: i128) -> ThresholdGate {
    ThresholdGate {
        id: id.to_string(),
        x_weights: x.to_vec(),
        y_weights: y.to_vec(),
        gate_weights: inputs.iter().map(|&(h, w)| (h.to_string(), w)).collect::<BTreeMap<_, _>>(),
        threshold,
    }
}

/// Free-function form of [`DiscretizedCircuit::evaluate`].
pub fn evaluate_discretized(c: &DiscretizedCircuit, input: &Assignment) -> Result<DiscretizedTrace, DiscretizedError> {
    c.evaluate(input)
}

/// Free-function form of [`DiscretizedCircuit::measure`].
pub fn measure_discretized(c: &DiscretizedCircuit) -> Result<DiscretizedMeasures, DiscretizedError> {
    c.measure()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn relu(b: u32) -> DiscretizedActivation {
        DiscretizedActivation::new(ActivationKind::Relu, b).unwrap()
    }

    fn sigmoid(b: u32) -> DiscretizedActivation {
        DiscretizedActivation::new(ActivationKind::Sigmoid, b).unwrap()
    }

    /// Floating-point reference for the sigmoid code at potential `p / S^2`.
    fn sigmoid_code_oracle(b: u32, p: i128) -> i128 {
        let m = ((1u64 << b) - 1) as f64;
        let x = p as f64 / (m * m);
        (m / (1.0 + (-x).exp())).floor() as i128
    }

    fn and_circuit() -> DiscretizedCircuit {
        // max(0, x1/2 + x2/2 - 1/2) on the b = 1 grid, then top >= 1.
        let h = gate("h", &[1, 1], &[0, 0], &[], 1);
        let top = gate("top", &[0, 0], &[0, 0], &[("h", 1)], 1);
        DiscretizedCircuit::new(relu(1), 2, vec![h], top).unwrap()
    }

    #[test]
    fn relu_basics() {
        let r = relu(3);
        assert_eq!(r.scale(), 8);
        assert_eq!(r.code(-5 * 64), 0);
        assert_eq!(r.code(0), 0);
        assert_eq!(r.code(8), 1);
        assert_eq!(r.code(10_000), 7);
        assert_eq!(r.silent_interval().upper, Some(8));
        assert_eq!(r.weight(), 64);
        assert_eq!(relu(4).weight(), 256);
    }

    #[test]
    fn sigmoid_b1_is_silent_and_b4_cutoff_matches_reference() {
        let s1 = sigmoid(1);
        assert_eq!(s1.silent_interval().upper, None);
        for p in -100..100 {
            assert!(s1.code(p) <= 1);
            assert_eq!(s1.code(p), 0);
        }
        let s4 = sigmoid(4);
        let upper = s4.silent_interval().upper.unwrap();
        for p in -2000..2000 {
            assert_eq!(s4.code(p), sigmoid_code_oracle(4, p), "p = {p}");
            assert_eq!(s4.code(p) == 0, p < upper);
        }
        let (_, report) = make_activation(ActivationKind::Sigmoid, 4).unwrap();
        assert!(report.cutoff_differs);
        // ln(1/14) for the computed cutoff vs ln(1/15) nominal.
        let t = report.silent.t_max.unwrap();
        assert!((t - (1.0f64 / 14.0).ln()).abs() < 1.0 / 225.0);
    }

    #[test]
    fn single_relu_gate() {
        let g = gate("g", &[1], &[0], &[], 0);
        let top = gate("top", &[0], &[0], &[("g", 1)], 1);
        let c = DiscretizedCircuit::new(relu(1), 1, vec![g], top).unwrap();
        let on = c.evaluate(&Assignment::from_bitstrings("1", "0").unwrap()).unwrap();
        assert_eq!((on.codes[0], on.output), (1, true));
        let off = c.evaluate(&Assignment::from_bitstrings("0", "1").unwrap()).unwrap();
        assert_eq!((off.codes[0], off.output), (0, false));
    }

    #[test]
    fn relu_and_circuit() {
        let c = and_circuit();
        for a in 0..4u32 {
            let t = c.evaluate(&Assignment::from_codes(2, a, 0)).unwrap();
            assert_eq!(t.output, a == 3);
        }
        let m = c.measure().unwrap();
        assert_eq!((m.energy, m.weight, m.size, m.depth), (1, 4, 2, 2));
    }

    #[test]
    fn silent_everywhere_gate_has_zero_energy() {
        let g = gate("g", &[1], &[1], &[], 1);
        let top = gate("top", &[1], &[0], &[("g", 1)], 1);
        let c = DiscretizedCircuit::new(sigmoid(1), 1, vec![g], top).unwrap();
        assert_eq!(c.measure().unwrap().energy, 0);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let c = and_circuit();
        let text = c.to_json();
        assert_eq!(DiscretizedCircuit::from_json(&text).unwrap(), c);
        let bad_scale = text.replace("\"scale\": 2", "\"scale\": 3");
        assert!(matches!(DiscretizedCircuit::from_json(&bad_scale), Err(DiscretizedError::Scale { .. })));
        let g = gate("g", &[2], &[0], &[], 0);
        let top = gate("top", &[0], &[0], &[("g", 1)], 1);
        assert!(matches!(
            DiscretizedCircuit::new(relu(1), 1, vec![g], top),
            Err(DiscretizedError::Magnitude { .. })
        ));
    }

    proptest! {
        #[test]
        fn silence_dichotomy(kind in prop_oneof![Just(ActivationKind::Relu), Just(ActivationKind::Sigmoid)],
                             b in 1u32..=6, p in -50_000i128..50_000) {
            let act = DiscretizedActivation::new(kind, b).unwrap();
            let silent = act.silent_interval();
            let inside = silent.upper.is_none_or(|u| p < u);
            prop_assert_eq!(act.code(p) == 0, inside);
            prop_assert!(act.code(p) <= act.max_code());
            prop_assert!(act.max_code() < 1 << b);
        }

        #[test]
        fn codes_are_monotone(kind in prop_oneof![Just(ActivationKind::Relu), Just(ActivationKind::Sigmoid)],
                              b in 1u32..=6, p in -50_000i128..50_000, d in 0i128..1000) {
            let act = DiscretizedActivation::new(kind, b).unwrap();
            prop_assert!(act.code(p) <= act.code(p + d));
        }
    }
}
