//! Threshold-circuit representation, validation, evaluation and measures.
//!
//! A gate `g` fires (outputs 1) iff
//! `sum_i wx_i a_i + sum_i wy_i b_i + sum_h w_{h,g} h(a,b) >= t_g`.
//! Potentials are computed in `i128` with overflow checks.

mod sweep;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolmat::{bits_to_code, code_bit, code_to_bits};
use crate::wide;

pub use sweep::{
    energy_lower_bound_sampled, energy_over, measure, measure_energy_exhaustive, profile, Profile, RowScratch,
    Sweep, DEFAULT_EXHAUSTIVE_LIMIT,
};

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("invalid circuit:\n{0}")]
    Invalid(ValidationReport),
    #[error("potential of gate `{gate}` overflows the exact integer range")]
    Overflow { gate: String },
    #[error("assignment lengths ({a}, {b}) do not match n = {n}")]
    AssignmentLength { a: usize, b: usize, n: usize },
    #[error("`{0}` is not a bitstring")]
    BadBitstring(String),
    #[error("exhaustive sweep needs 2n = {inputs} <= {limit}; use energy_lower_bound_sampled instead")]
    ExhaustiveLimit { inputs: usize, limit: usize },
    #[error("circuit json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One threshold gate. Weights and threshold are exact integers; `gate_weights`
/// maps predecessor gate ids to `w_{h,g}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdGate {
    pub id: String,
    #[serde(with = "wide::vec")]
    pub x_weights: Vec<i128>,
    #[serde(with = "wide::vec")]
    pub y_weights: Vec<i128>,
    #[serde(default, with = "wide::map")]
    pub gate_weights: BTreeMap<String, i128>,
    #[serde(with = "wide::scalar")]
    pub threshold: i128,
}

impl ThresholdGate {
    /// A gate over `n`-bit inputs with all weights zero.
    pub fn new(id: impl Into<String>, n: usize, threshold: i128) -> Self {
        ThresholdGate {
            id: id.into(),
            x_weights: vec![0; n],
            y_weights: vec![0; n],
            gate_weights: BTreeMap::new(),
            threshold,
        }
    }

    pub fn with_x(mut self, weights: &[i128]) -> Self {
        self.x_weights = weights.to_vec();
        self
    }

    pub fn with_y(mut self, weights: &[i128]) -> Self {
        self.y_weights = weights.to_vec();
        self
    }

    pub fn with_input(mut self, from: impl Into<String>, weight: i128) -> Self {
        self.gate_weights.insert(from.into(), weight);
        self
    }

    /// Largest absolute weight; the threshold does not count.
    pub fn weight(&self) -> u128 {
        self.x_weights
            .iter()
            .chain(&self.y_weights)
            .chain(self.gate_weights.values())
            .map(|w| w.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    fn has_variable_input(&self) -> bool {
        self.x_weights.iter().chain(&self.y_weights).any(|&w| w != 0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitKind {
    #[default]
    Threshold,
}

/// Serialized (unvalidated) form of a threshold circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDescription {
    pub kind: CircuitKind,
    pub n: usize,
    pub gates: Vec<ThresholdGate>,
    pub output: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    NoVariables,
    DuplicateId { gate: String },
    WeightLength { gate: String, x: usize, y: usize, n: usize },
    DanglingPredecessor { gate: String, predecessor: String },
    Cycle { gates: Vec<String> },
    NotTopological { gate: String, predecessor: String },
    NoInputs { gate: String },
    UnknownOutput { output: String },
    OutputNotTop { gate: String, level: usize, output_level: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoVariables => write!(f, "n must be positive"),
            Violation::DuplicateId { gate } => write!(f, "gate id `{gate}` is used twice"),
            Violation::WeightLength { gate, x, y, n } => {
                write!(f, "gate `{gate}` has {x} x-weights and {y} y-weights, expected {n}")
            }
            Violation::DanglingPredecessor { gate, predecessor } => {
                write!(f, "gate `{gate}` reads missing gate `{predecessor}`")
            }
            Violation::Cycle { gates } => write!(f, "cycle through gates {gates:?}"),
            Violation::NotTopological { gate, predecessor } => {
                write!(f, "gate `{gate}` is listed before its predecessor `{predecessor}`")
            }
            Violation::NoInputs { gate } => write!(f, "gate `{gate}` has no inputs"),
            Violation::UnknownOutput { output } => write!(f, "output `{output}` is not a gate"),
            Violation::OutputNotTop { gate, level, output_level } => write!(
                f,
                "gate `{gate}` sits at level {level}, not below the output level {output_level}"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of a circuit description. An empty
/// report means [`ThresholdCircuit::try_from`] will succeed.
pub fn validate(desc: &CircuitDescription) -> ValidationReport {
    validate_parts(desc.n, &desc.gates, &desc.output).0
}

struct Structure {
    index: HashMap<String, usize>,
    preds: Vec<Vec<(usize, i128)>>,
    levels: Vec<usize>,
    output: usize,
}

fn validate_parts(n: usize, gates: &[ThresholdGate], output: &str) -> (ValidationReport, Option<Structure>) {
    let mut violations = Vec::new();
    if n == 0 {
        violations.push(Violation::NoVariables);
    }
    let mut index = HashMap::with_capacity(gates.len());
    for (i, g) in gates.iter().enumerate() {
        if index.insert(g.id.clone(), i).is_some() {
            violations.push(Violation::DuplicateId { gate: g.id.clone() });
        }
        if g.x_weights.len() != n || g.y_weights.len() != n {
            violations.push(Violation::WeightLength {
                gate: g.id.clone(),
                x: g.x_weights.len(),
                y: g.y_weights.len(),
                n,
            });
        }
        if !g.has_variable_input() && g.gate_weights.is_empty() {
            violations.push(Violation::NoInputs { gate: g.id.clone() });
        }
    }

    let mut preds: Vec<Vec<(usize, i128)>> = vec![Vec::new(); gates.len()];
    let mut dangling = false;
    for (i, g) in gates.iter().enumerate() {
        for (p, &w) in &g.gate_weights {
            match index.get(p) {
                Some(&j) => preds[i].push((j, w)),
                None => {
                    dangling = true;
                    violations.push(Violation::DanglingPredecessor {
                        gate: g.id.clone(),
                        predecessor: p.clone(),
                    });
                }
            }
        }
    }

    // Kahn's algorithm: anything left over lies on or behind a cycle.
    let mut indegree: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); gates.len()];
    for (i, ps) in preds.iter().enumerate() {
        for &(j, _) in ps {
            succs[j].push(i);
        }
    }
    let mut queue: Vec<usize> = (0..gates.len()).filter(|&i| indegree[i] == 0).collect();
    let mut levels = vec![0usize; gates.len()];
    let mut done = 0;
    while let Some(i) = queue.pop() {
        done += 1;
        levels[i] = 1 + preds[i].iter().map(|&(j, _)| levels[j]).max().unwrap_or(0);
        for &s in &succs[i] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                queue.push(s);
            }
        }
    }
    let acyclic = done == gates.len();
    if !acyclic {
        violations.push(Violation::Cycle {
            gates: (0..gates.len())
                .filter(|&i| indegree[i] > 0)
                .map(|i| gates[i].id.clone())
                .collect(),
        });
    }
    if acyclic {
        for (i, ps) in preds.iter().enumerate() {
            for &(j, _) in ps {
                if j > i {
                    violations.push(Violation::NotTopological {
                        gate: gates[i].id.clone(),
                        predecessor: gates[j].id.clone(),
                    });
                }
            }
        }
    }

    let out = index.get(output).copied();
    match out {
        None => violations.push(Violation::UnknownOutput {
            output: output.to_string(),
        }),
        Some(o) if acyclic && !dangling => {
            for (i, g) in gates.iter().enumerate() {
                if i != o && levels[i] >= levels[o] {
                    violations.push(Violation::OutputNotTop {
                        gate: g.id.clone(),
                        level: levels[i],
                        output_level: levels[o],
                    });
                }
            }
        }
        Some(_) => {}
    }

    let report = ValidationReport { violations };
    let structure = report.is_ok().then(|| Structure {
        index,
        preds,
        levels,
        output: out.expect("validated output"),
    });
    (report, structure)
}

/// Input bit vectors `a` (for `x`) and `b` (for `y`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub a: Vec<bool>,
    pub b: Vec<bool>,
}

fn parse_bits(s: &str) -> Result<Vec<bool>, CircuitError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(CircuitError::BadBitstring(s.to_string())),
        })
        .collect()
}

fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl Assignment {
    pub fn new(a: Vec<bool>, b: Vec<bool>) -> Self {
        Assignment { a, b }
    }

    /// Parses bitstrings such as `"1010"`; `x_1` is the first character.
    pub fn from_bitstrings(a: &str, b: &str) -> Result<Self, CircuitError> {
        Ok(Assignment {
            a: parse_bits(a)?,
            b: parse_bits(b)?,
        })
    }

    pub fn from_codes(n: usize, a: u32, b: u32) -> Self {
        Assignment {
            a: code_to_bits(a, n),
            b: code_to_bits(b, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Assignment {
            a: vec![false; n],
            b: vec![false; n],
        }
    }

    pub fn codes(&self) -> (u32, u32) {
        (bits_to_code(&self.a), bits_to_code(&self.b))
    }

    pub fn bitstrings(&self) -> (String, String) {
        (format_bits(&self.a), format_bits(&self.b))
    }
}

impl Serialize for Assignment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (a, b) = self.bitstrings();
        let mut m = BTreeMap::new();
        m.insert("a", a);
        m.insert("b", b);
        m.serialize(s)
    }
}

/// Output of [`ThresholdCircuit::evaluate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub output: bool,
    pub bits: Vec<bool>,
    pub potentials: Vec<i128>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StaticMeasures {
    pub size: usize,
    pub depth: usize,
    pub weight: u128,
}

/// Size, depth, energy and weight of a circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Measures {
    pub size: usize,
    pub depth: usize,
    pub energy: usize,
    pub weight: u128,
    pub energy_witness: Assignment,
}

/// A validated threshold circuit. Immutable; gates are stored in topological order.
#[derive(Clone, Debug)]
pub struct ThresholdCircuit {
    n: usize,
    gates: Vec<ThresholdGate>,
    output: usize,
    index: HashMap<String, usize>,
    preds: Vec<Vec<(usize, i128)>>,
    xs: Vec<Vec<(usize, i128)>>,
    ys: Vec<Vec<(usize, i128)>>,
    levels: Vec<usize>,
}

impl PartialEq for ThresholdCircuit {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.gates == other.gates && self.output == other.output
    }
}

impl ThresholdCircuit {
    pub fn new(n: usize, gates: Vec<ThresholdGate>, output: impl Into<String>) -> Result<Self, CircuitError> {
        let output = output.into();
        let (report, structure) = validate_parts(n, &gates, &output);
        let Some(s) = structure else {
            return Err(CircuitError::Invalid(report));
        };
        let nonzero = |w: &[i128]| -> Vec<(usize, i128)> {
            w.iter().enumerate().filter(|(_, &v)| v != 0).map(|(i, &v)| (i, v)).collect()
        };
        let xs = gates.iter().map(|g| nonzero(&g.x_weights)).collect();
        let ys = gates.iter().map(|g| nonzero(&g.y_weights)).collect();
        Ok(ThresholdCircuit {
            n,
            output: s.output,
            index: s.index,
            preds: s.preds,
            levels: s.levels,
            xs,
            ys,
            gates,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CircuitError> {
        let desc: CircuitDescription = serde_json::from_str(text)?;
        ThresholdCircuit::try_from(desc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.description()).expect("circuit serializes")
    }

    pub fn description(&self) -> CircuitDescription {
        CircuitDescription {
            kind: CircuitKind::Threshold,
            n: self.n,
            gates: self.gates.clone(),
            output: self.gates[self.output].id.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn gates(&self) -> &[ThresholdGate] {
        &self.gates
    }

    pub fn gate(&self, i: usize) -> &ThresholdGate {
        &self.gates[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn output_index(&self) -> usize {
        self.output
    }

    /// Resolved `(predecessor index, weight)` pairs of gate `i`.
    pub fn predecessors(&self, i: usize) -> &[(usize, i128)] {
        &self.preds[i]
    }

    /// Nonzero `(coordinate, weight)` pairs on `x`.
    pub fn x_terms(&self, i: usize) -> &[(usize, i128)] {
        &self.xs[i]
    }

    pub fn y_terms(&self, i: usize) -> &[(usize, i128)] {
        &self.ys[i]
    }

    /// Length of a longest path from an input variable to gate `i`.
    pub fn level(&self, i: usize) -> usize {
        self.levels[i]
    }

    pub fn depth(&self) -> usize {
        self.levels[self.output]
    }

    /// `G_1, ..., G_d` as gate indices; `level_sets()[l - 1]` is level `l`.
    pub fn level_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.depth()];
        for (i, &l) in self.levels.iter().enumerate() {
            sets[l - 1].push(i);
        }
        sets
    }

    pub fn weight(&self) -> u128 {
        self.gates.iter().map(ThresholdGate::weight).max().unwrap_or(0)
    }

    pub fn measure_static(&self) -> StaticMeasures {
        StaticMeasures {
            size: self.size(),
            depth: self.depth(),
            weight: self.weight(),
        }
    }

    /// `p^x_g(a)`: the part of gate `i`'s potential contributed by `x`.
    pub fn x_potential(&self, i: usize, a: u32) -> Result<i128, CircuitError> {
        self.side_potential(&self.xs[i], a, i)
    }

    pub fn y_potential(&self, i: usize, b: u32) -> Result<i128, CircuitError> {
        self.side_potential(&self.ys[i], b, i)
    }

    fn side_potential(&self, terms: &[(usize, i128)], code: u32, gate: usize) -> Result<i128, CircuitError> {
        let mut p: i128 = 0;
        for &(k, w) in terms {
            if code_bit(code, self.n, k) {
                p = p.checked_add(w).ok_or_else(|| self.overflow(gate))?;
            }
        }
        Ok(p)
    }

    fn overflow(&self, gate: usize) -> CircuitError {
        CircuitError::Overflow {
            gate: self.gates[gate].id.clone(),
        }
    }

    /// Evaluates every gate on `(a, b)` given as codes; fills `bits` and
    /// optionally `potentials`. Returns the output bit.
    pub fn eval_codes(
        &self,
        a: u32,
        b: u32,
        bits: &mut [bool],
        potentials: Option<&mut [i128]>,
    ) -> Result<bool, CircuitError> {
        let n = self.n;
        self.eval_with(|k| code_bit(a, n, k), |k| code_bit(b, n, k), bits, potentials)
    }

    fn eval_with(
        &self,
        x: impl Fn(usize) -> bool,
        y: impl Fn(usize) -> bool,
        bits: &mut [bool],
        mut potentials: Option<&mut [i128]>,
    ) -> Result<bool, CircuitError> {
        for i in 0..self.gates.len() {
            let mut p: i128 = 0;
            let terms = self.xs[i]
                .iter()
                .filter(|&&(k, _)| x(k))
                .chain(self.ys[i].iter().filter(|&&(k, _)| y(k)))
                .map(|&(_, w)| w)
                .chain(self.preds[i].iter().filter(|&&(h, _)| bits[h]).map(|&(_, w)| w));
            for w in terms {
                p = p.checked_add(w).ok_or_else(|| self.overflow(i))?;
            }
            bits[i] = p >= self.gates[i].threshold;
            if let Some(pots) = potentials.as_deref_mut() {
                pots[i] = p;
            }
        }
        Ok(bits[self.output])
    }

    pub fn evaluate(&self, input: &Assignment) -> Result<Trace, CircuitError> {
        if input.a.len() != self.n || input.b.len() != self.n {
            return Err(CircuitError::AssignmentLength {
                a: input.a.len(),
                b: input.b.len(),
                n: self.n,
            });
        }
        let mut bits = vec![false; self.size()];
        let mut potentials = vec![0; self.size()];
        let output = self.eval_with(|k| input.a[k], |k| input.b[k], &mut bits, Some(&mut potentials))?;
        Ok(Trace {
            output,
            bits,
            potentials,
        })
    }
}

impl TryFrom<CircuitDescription> for ThresholdCircuit {
    type Error = CircuitError;

    fn try_from(desc: CircuitDescription) -> Result<Self, Self::Error> {
        ThresholdCircuit::new(desc.n, desc.gates, desc.output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn and_gate() -> ThresholdCircuit {
        ThresholdCircuit::new(1, vec![ThresholdGate::new("g", 1, 2).with_x(&[1]).with_y(&[1])], "g").unwrap()
    }

    fn desc(gates: Vec<ThresholdGate>, output: &str) -> CircuitDescription {
        CircuitDescription {
            kind: CircuitKind::Threshold,
            n: 1,
            gates,
            output: output.into(),
        }
    }

    #[test]
    fn single_and_gate() {
        let c = and_gate();
        assert!(validate(&c.description()).is_ok());
        let t = c.evaluate(&Assignment::from_bitstrings("1", "1").unwrap()).unwrap();
        assert_eq!((t.output, t.potentials[0]), (true, 2));
        let t = c.evaluate(&Assignment::from_bitstrings("1", "0").unwrap()).unwrap();
        assert_eq!((t.output, t.potentials[0]), (false, 1));
        assert_eq!(
            c.measure_static(),
            StaticMeasures {
                size: 1,
                depth: 1,
                weight: 1
            }
        );
    }

    #[test]
    fn claim5_style_gate() {
        // B_j = {1,2}, B = {1}: x-weights (+1, -1), y-weights (1, 0), t = |B|^2 + 1.
        let g = ThresholdGate::new("g", 2, 2).with_x(&[1, -1]).with_y(&[1, 0]);
        let c = ThresholdCircuit::new(2, vec![g], "g").unwrap();
        let run = |a, b| c.evaluate(&Assignment::from_bitstrings(a, b).unwrap()).unwrap().output;
        assert!(run("10", "10"));
        assert!(!run("11", "10"));
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let g = ThresholdGate::new("g", 1, 1).with_x(&[1]).with_y(&[0]).with_input("g", 1);
        let r = validate(&desc(vec![g], "g"));
        assert_eq!(r.violations, vec![Violation::Cycle { gates: vec!["g".into()] }]);
    }

    #[test]
    fn dangling_and_unknown_output() {
        let g = ThresholdGate::new("g", 1, 1).with_x(&[1]).with_y(&[0]).with_input("ghost", 1);
        let r = validate(&desc(vec![g], "nope"));
        assert!(r.violations.contains(&Violation::DanglingPredecessor {
            gate: "g".into(),
            predecessor: "ghost".into()
        }));
        assert!(r.violations.contains(&Violation::UnknownOutput { output: "nope".into() }));
    }

    #[test]
    fn order_inputs_and_output_level() {
        let late = ThresholdGate::new("top", 1, 1).with_input("h", 1);
        let h = ThresholdGate::new("h", 1, 1).with_x(&[1]).with_y(&[0]);
        let r = validate(&desc(vec![late, h.clone()], "top"));
        assert_eq!(
            r.violations,
            vec![Violation::NotTopological {
                gate: "top".into(),
                predecessor: "h".into()
            }]
        );
        let idle = ThresholdGate::new("idle", 1, 0);
        let top = ThresholdGate::new("top", 1, 1).with_input("h", 1).with_input("idle", 1);
        let r = validate(&desc(vec![h.clone(), idle, top], "top"));
        assert_eq!(r.violations, vec![Violation::NoInputs { gate: "idle".into() }]);
        let side = ThresholdGate::new("side", 1, 0).with_y(&[1]);
        let r = validate(&desc(vec![h, side], "h"));
        assert!(matches!(r.violations[..], [Violation::OutputNotTop { .. }]));
    }

    #[test]
    fn two_parallel_gates_and_top() {
        let g1 = ThresholdGate::new("g1", 1, 1).with_x(&[1]).with_y(&[0]);
        let g2 = ThresholdGate::new("g2", 1, 1).with_x(&[0]).with_y(&[1]);
        let top = ThresholdGate::new("top", 1, 2).with_input("g1", 1).with_input("g2", 1);
        let c = ThresholdCircuit::new(1, vec![g1, g2, top], "top").unwrap();
        assert_eq!((c.size(), c.depth()), (3, 2));
        assert_eq!(c.level_sets(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn overflow_is_an_error() {
        let big = i128::MAX / 2 + 1;
        let g = ThresholdGate::new("g", 1, 0).with_x(&[big]).with_y(&[big]);
        let c = ThresholdCircuit::new(1, vec![g], "g").unwrap();
        let err = c.evaluate(&Assignment::from_bitstrings("1", "1").unwrap()).unwrap_err();
        assert!(matches!(err, CircuitError::Overflow { .. }));
        assert!(c.evaluate(&Assignment::from_bitstrings("1", "0").unwrap()).is_ok());
    }

    #[test]
    fn weight_ignores_threshold() {
        let g = ThresholdGate::new("g", 2, 1000).with_x(&[3, -7]).with_y(&[0, 2]);
        assert_eq!(g.weight(), 7);
    }

    #[test]
    fn json_round_trip_with_big_integers() {
        let big = 1i128 << 70;
        let g = ThresholdGate::new("g", 1, big).with_x(&[big]).with_y(&[1]);
        let c = ThresholdCircuit::new(1, vec![g], "g").unwrap();
        let text = c.to_json();
        assert!(text.contains(&format!("\"{big}\"")));
        assert_eq!(ThresholdCircuit::from_json(&text).unwrap(), c);
        assert!(ThresholdCircuit::from_json("{\"kind\":\"threshold\"").is_err());
        let wrong_kind = text.replace("\"threshold\"", "\"relu\"");
        assert!(matches!(ThresholdCircuit::from_json(&wrong_kind), Err(CircuitError::Json(_))));
    }

    #[test]
    fn bad_assignment() {
        let c = and_gate();
        assert!(Assignment::from_bitstrings("12", "0").is_err());
        assert!(matches!(
            c.evaluate(&Assignment::from_bitstrings("10", "1").unwrap()),
            Err(CircuitError::AssignmentLength { .. })
        ));
    }
}
