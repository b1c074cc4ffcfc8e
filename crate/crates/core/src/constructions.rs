//! Low-energy threshold circuits for piecewise functions: selective neural
//! sets, their layered assembly with inhibition, and CONJ / DISJ / EQ builders.

use serde::Serialize;
use thiserror::Error;

use crate::boolmat::{code_bit, BuiltinFunction};
use crate::circuit::{self, Assignment, CircuitError, Measures, StaticMeasures, ThresholdCircuit, ThresholdGate};

/// Largest number of variables accepted by [`dnf_selective_set`].
pub const DNF_VARIABLE_LIMIT: usize = 16;

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("need e >= 2 and d >= 2, got e = {e}, d = {d}")]
    Parameters { e: usize, d: usize },
    #[error("z = (e-1)(d-1) = {z} exceeds n = {n}")]
    TooManyPieces { z: usize, n: usize },
    #[error("piece {piece} has an empty block")]
    EmptyBlock { piece: usize },
    #[error("DNF over {vars} variables exceeds the limit of {limit}")]
    DnfLimit { vars: usize, limit: usize },
    #[error("piece {piece} is not selective: {count} gates fire on {witness:?}")]
    NotSelective {
        piece: usize,
        count: usize,
        witness: Assignment,
    },
    #[error("piece {piece} does not compute its target at {witness:?}")]
    WrongPiece { piece: usize, witness: Assignment },
    #[error("blocks do not partition [n]: {0}")]
    Partition(String),
    #[error("inhibition {inhibition} cannot silence gate `{gate}` (needs more than {needed})")]
    Suppression { gate: String, inhibition: i128, needed: i128 },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// An input variable of a piece: `x_i` or `y_i` (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Var {
    X(usize),
    Y(usize),
}

/// Gates over a shared block of coordinates, at most one of which fires on
/// any assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectiveNeuralSet {
    pub n: usize,
    /// Coordinates `B_j` (0-based, ascending) the gates may read.
    pub block: Vec<usize>,
    /// Gates over the full `n`-bit inputs; weights outside `block` are zero.
    pub gates: Vec<ThresholdGate>,
}

impl SelectiveNeuralSet {
    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn weight(&self) -> u128 {
        self.gates.iter().map(ThresholdGate::weight).max().unwrap_or(0)
    }

    /// The set restricted to its block plus an OR gate, as a circuit on
    /// `|block|`-bit inputs. `None` for an empty set.
    fn projected(&self) -> Option<ThresholdCircuit> {
        if self.gates.is_empty() {
            return None;
        }
        let m = self.block.len();
        let mut gates: Vec<ThresholdGate> = self
            .gates
            .iter()
            .map(|g| ThresholdGate {
                id: g.id.clone(),
                x_weights: self.block.iter().map(|&i| g.x_weights[i]).collect(),
                y_weights: self.block.iter().map(|&i| g.y_weights[i]).collect(),
                gate_weights: Default::default(),
                threshold: g.threshold,
            })
            .collect();
        let mut top = ThresholdGate::new("__or", m, 1);
        for g in &gates {
            top.gate_weights.insert(g.id.clone(), 1);
        }
        gates.push(top);
        Some(ThresholdCircuit::new(m, gates, "__or").expect("projected piece is well formed"))
    }

    /// Exhaustively checks selectivity over the block and, when `target` is
    /// given, that the set computes it. `target` receives block codes with
    /// the first block coordinate as the most significant bit.
    pub fn verify(&self, piece: usize, target: Option<&dyn Fn(u32, u32) -> bool>) -> Result<(), ConstructionError> {
        let Some(c) = self.projected() else {
            return match target {
                Some(f) => {
                    let m = self.block.len();
                    for a in 0..1u32 << m {
                        for b in 0..1u32 << m {
                            if f(a, b) {
                                return Err(ConstructionError::WrongPiece {
                                    piece,
                                    witness: self.lift(a, b),
                                });
                            }
                        }
                    }
                    Ok(())
                }
                None => Ok(()),
            };
        };
        let p = circuit::profile(&c)?;
        // Energy counts the OR gate too, so selectivity means energy <= 2.
        if p.energy > 2 {
            let (a, b) = p.witness.codes();
            return Err(ConstructionError::NotSelective {
                piece,
                count: p.energy - 1,
                witness: self.lift(a, b),
            });
        }
        if let Some(f) = target {
            let m = self.block.len();
            for a in 0..1u32 << m {
                for b in 0..1u32 << m {
                    if p.matrix.get(a as usize, b as usize) != f(a, b) {
                        return Err(ConstructionError::WrongPiece {
                            piece,
                            witness: self.lift(a, b),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Full-width assignment that is zero outside the block.
    fn lift(&self, a: u32, b: u32) -> Assignment {
        let m = self.block.len();
        let mut out = Assignment::zeros(self.n);
        for (k, &i) in self.block.iter().enumerate() {
            out.a[i] = code_bit(a, m, k);
            out.b[i] = code_bit(b, m, k);
        }
        out
    }
}

/// One gate per satisfying assignment `c` of `f`: weight `+1` where `c` is 1,
/// `-1` where it is 0, threshold the number of ones in `c`.
pub fn dnf_selective_set(
    n: usize,
    vars: &[Var],
    f: impl Fn(&[bool]) -> bool,
    id_prefix: &str,
) -> Result<SelectiveNeuralSet, ConstructionError> {
    let m = vars.len();
    if m > DNF_VARIABLE_LIMIT {
        return Err(ConstructionError::DnfLimit {
            vars: m,
            limit: DNF_VARIABLE_LIMIT,
        });
    }
    let mut block: Vec<usize> = vars.iter().map(|v| match *v {
        Var::X(i) | Var::Y(i) => i,
    }).collect();
    block.sort_unstable();
    block.dedup();
    let mut gates = Vec::new();
    let mut values = vec![false; m];
    for code in 0..1u32 << m {
        for (k, v) in values.iter_mut().enumerate() {
            *v = code_bit(code, m, k);
        }
        if !f(&values) {
            continue;
        }
        let ones = values.iter().filter(|&&v| v).count();
        let mut g = ThresholdGate::new(format!("{id_prefix}{}", gates.len()), n, ones as i128);
        for (var, &v) in vars.iter().zip(&values) {
            let w = if v { 1 } else { -1 };
            match *var {
                Var::X(i) => g.x_weights[i] = w,
                Var::Y(i) => g.y_weights[i] = w,
            }
        }
        gates.push(g);
    }
    Ok(SelectiveNeuralSet { n, block, gates })
}

/// Gates `g^B` for every nonempty `B` within `block`, computing
/// `OR_{i in block} (x_i AND y_i)`.
pub fn conj_piece_set(n: usize, block: &[usize], id_prefix: &str) -> Result<SelectiveNeuralSet, ConstructionError> {
    if block.is_empty() {
        return Err(ConstructionError::EmptyBlock { piece: 0 });
    }
    let m = block.len();
    let mut gates = Vec::with_capacity((1 << m) - 1);
    for subset in 1u32..1 << m {
        let size = subset.count_ones() as i128;
        let mut g = ThresholdGate::new(format!("{id_prefix}{}", gates.len()), n, size * size + 1);
        for (k, &i) in block.iter().enumerate() {
            if subset >> k & 1 == 1 {
                g.x_weights[i] = size;
                g.y_weights[i] = 1;
            } else {
                g.x_weights[i] = -size;
            }
        }
        gates.push(g);
    }
    Ok(SelectiveNeuralSet {
        n,
        block: block.to_vec(),
        gates,
    })
}

/// DNF set for `OR_{i in block} (x_i XOR y_i)`.
pub fn eq_piece_set(n: usize, block: &[usize], id_prefix: &str) -> Result<SelectiveNeuralSet, ConstructionError> {
    if block.is_empty() {
        return Err(ConstructionError::EmptyBlock { piece: 0 });
    }
    let vars: Vec<Var> = block.iter().map(|&i| Var::X(i)).chain(block.iter().map(|&i| Var::Y(i))).collect();
    let m = block.len();
    dnf_selective_set(n, &vars, |v| (0..m).any(|k| v[k] != v[m + k]), id_prefix)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// `f = OR_j f_j`.
    Or,
    /// `f = NOT OR_j f_j`.
    NotOr,
}

/// `f` as an OR (or NOR) of pieces over disjoint blocks.
#[derive(Clone, Debug)]
pub struct PiecewiseSpec {
    pub n: usize,
    pub blocks: Vec<Vec<usize>>,
    pub pieces: Vec<SelectiveNeuralSet>,
    pub polarity: Polarity,
}

/// Splits `[n]` into `z` consecutive blocks of `ceil(n / z)` coordinates;
/// trailing blocks may be short or empty.
pub fn ceil_blocks(n: usize, z: usize) -> Vec<Vec<usize>> {
    let m = n.div_ceil(z);
    (0..z).map(|j| ((j * m).min(n)..((j + 1) * m).min(n)).collect()).collect()
}

/// Details of an assembled circuit.
#[derive(Clone, Debug, Serialize)]
pub struct Assembly {
    pub z: usize,
    pub piece_size: usize,
    pub piece_weight: u128,
    pub inhibition: i128,
}

/// Layers the pieces: piece `j` goes to level `j / (e-1) + 1`, every gate at
/// level `l >= 2` is inhibited by every gate below it, and a top gate ORs
/// (or NORs) all piece outputs.
pub fn assemble_piecewise(
    spec: &PiecewiseSpec,
    e: usize,
    d: usize,
) -> Result<(ThresholdCircuit, Assembly), ConstructionError> {
    if e < 2 || d < 2 {
        return Err(ConstructionError::Parameters { e, d });
    }
    let z = (e - 1) * (d - 1);
    let n = spec.n;
    if spec.pieces.len() != z || spec.blocks.len() != z {
        return Err(ConstructionError::Partition(format!(
            "expected {z} pieces and blocks, got {} and {}",
            spec.pieces.len(),
            spec.blocks.len()
        )));
    }
    let mut seen = vec![false; n];
    for block in &spec.blocks {
        for &i in block {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(ConstructionError::Partition(format!("coordinate {i} repeated or out of range")));
            }
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(ConstructionError::Partition("blocks do not cover [n]".into()));
    }
    for (j, (piece, block)) in spec.pieces.iter().zip(&spec.blocks).enumerate() {
        if piece.gates.iter().any(|g| {
            (0..n).any(|i| (g.x_weights[i] != 0 || g.y_weights[i] != 0) && !block.contains(&i))
        }) {
            return Err(ConstructionError::Partition(format!("piece {j} reads outside its block")));
        }
        piece.verify(j, None)?;
    }

    let piece_size = spec.pieces.iter().map(SelectiveNeuralSet::size).max().unwrap_or(0);
    let piece_weight = spec.pieces.iter().map(SelectiveNeuralSet::weight).max().unwrap_or(0);
    let inhibition = (2 * n as i128 * piece_weight as i128 + z as i128 - 1) / z as i128;

    let mut gates: Vec<ThresholdGate> = Vec::new();
    let mut below: Vec<String> = Vec::new();
    for l in 1..d {
        let mut level = Vec::new();
        for k in 1..e {
            let j = (l - 1) * (e - 1) + (k - 1);
            for (idx, g) in spec.pieces[j].gates.iter().enumerate() {
                let mut g = g.clone();
                g.id = format!("g{l}_{k}_{idx}");
                g.gate_weights.clear();
                if l >= 2 {
                    let positive: i128 = g.x_weights.iter().chain(&g.y_weights).filter(|&&w| w > 0).sum();
                    let needed = positive - g.threshold;
                    if !below.is_empty() && inhibition <= needed {
                        return Err(ConstructionError::Suppression {
                            gate: g.id,
                            inhibition,
                            needed,
                        });
                    }
                    for h in &below {
                        g.gate_weights.insert(h.clone(), -inhibition);
                    }
                }
                level.push(g);
            }
        }
        below.extend(level.iter().map(|g| g.id.clone()));
        gates.extend(level);
    }

    let mut top = match spec.polarity {
        Polarity::Or => ThresholdGate::new("top", n, 1),
        Polarity::NotOr => ThresholdGate::new("top", n, 0),
    };
    let sign = if spec.polarity == Polarity::Or { 1 } else { -1 };
    for h in &below {
        top.gate_weights.insert(h.clone(), sign);
    }
    if below.is_empty() {
        // No piece gates: the function is constant. Keep the top gate well formed.
        top.x_weights[0] = 1;
        top.threshold = if spec.polarity == Polarity::Or { 2 } else { 0 };
    }
    gates.push(top);
    let circuit = ThresholdCircuit::new(n, gates, "top")?;
    Ok((
        circuit,
        Assembly {
            z,
            piece_size,
            piece_weight,
            inhibition,
        },
    ))
}

/// Which function a [`Construction`] computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Conj,
    Disj,
    Eq,
}

impl Target {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "conj" => Some(Target::Conj),
            "disj" => Some(Target::Disj),
            "eq" => Some(Target::Eq),
            _ => None,
        }
    }

    /// The oracle the built circuit must agree with.
    pub fn function(self, n: usize) -> BuiltinFunction {
        match self {
            Target::Conj => BuiltinFunction::Conj,
            Target::Disj => BuiltinFunction::DisjK(n),
            Target::Eq => BuiltinFunction::Eq,
        }
    }
}

/// Upper bounds the built circuit is expected to meet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConstructionBounds {
    pub size: u128,
    pub depth: usize,
    pub energy: usize,
    pub weight: u128,
}

/// A built circuit with its parameters, bounds and measures.
#[derive(Clone, Debug)]
pub struct Construction {
    pub target: Target,
    pub n: usize,
    pub e: usize,
    pub d: usize,
    pub block_size: usize,
    pub assembly: Assembly,
    pub circuit: ThresholdCircuit,
    pub bounds: ConstructionBounds,
    pub static_measures: StaticMeasures,
    /// Exact energy, when `2n` is within the exhaustive limit.
    pub measures: Option<Measures>,
}

/// `{"s","d","e","w","bounds_ok"}`; `e` is null when energy was not measured.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MeasuresReport {
    pub s: usize,
    pub d: usize,
    pub e: Option<usize>,
    pub w: u128,
    pub bounds_ok: bool,
}

impl Construction {
    /// Size, depth and weight bounds hold, and energy too when measured.
    pub fn bounds_ok(&self) -> bool {
        let s = &self.static_measures;
        let energy_ok = self.measures.as_ref().is_none_or(|m| m.energy <= self.bounds.energy);
        s.size as u128 <= self.bounds.size && s.depth <= self.bounds.depth && s.weight <= self.bounds.weight && energy_ok
    }

    pub fn report(&self) -> MeasuresReport {
        MeasuresReport {
            s: self.static_measures.size,
            d: self.static_measures.depth,
            e: self.measures.as_ref().map(|m| m.energy),
            w: self.static_measures.weight,
            bounds_ok: self.bounds_ok(),
        }
    }
}

fn build(target: Target, n: usize, e: usize, d: usize, measure: bool) -> Result<Construction, ConstructionError> {
    if e < 2 || d < 2 {
        return Err(ConstructionError::Parameters { e, d });
    }
    let z = (e - 1) * (d - 1);
    if n == 0 || z > n {
        return Err(ConstructionError::TooManyPieces { z, n });
    }
    let m = n.div_ceil(z);
    let blocks = ceil_blocks(n, z);
    let pieces = blocks
        .iter()
        .enumerate()
        .map(|(j, block)| {
            if block.is_empty() {
                return Ok(SelectiveNeuralSet {
                    n,
                    block: Vec::new(),
                    gates: Vec::new(),
                });
            }
            let prefix = format!("p{j}_");
            match target {
                Target::Conj | Target::Disj => conj_piece_set(n, block, &prefix),
                Target::Eq => eq_piece_set(n, block, &prefix),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let polarity = match target {
        Target::Conj => Polarity::Or,
        Target::Disj | Target::Eq => Polarity::NotOr,
    };
    let spec = PiecewiseSpec {
        n,
        blocks,
        pieces,
        polarity,
    };
    let (circuit, assembly) = assemble_piecewise(&spec, e, d)?;
    let w_piece = assembly.piece_weight;
    let (size, weight) = match target {
        Target::Conj | Target::Disj => (z as u128 * (1u128 << m) + 1, (2 * m * m) as u128),
        Target::Eq => (z as u128 * (1u128 << (2 * m)) + 1, (2 * m) as u128),
    };
    let lemma_weight = w_piece.max(assembly.inhibition as u128);
    let bounds = ConstructionBounds {
        size,
        depth: d,
        energy: e,
        // Both the layered-assembly bound and the block-size bound must hold.
        weight: weight.min(lemma_weight),
    };
    let static_measures = circuit.measure_static();
    let measures = if measure && 2 * n <= circuit::DEFAULT_EXHAUSTIVE_LIMIT {
        Some(circuit::measure(&circuit)?)
    } else {
        None
    };
    Ok(Construction {
        target,
        n,
        e,
        d,
        block_size: m,
        assembly,
        circuit,
        bounds,
        static_measures,
        measures,
    })
}

/// Circuit for `CONJ_n = OR_i (x_i AND y_i)` of depth `d` and energy `e`.
pub fn build_conj_circuit(n: usize, e: usize, d: usize) -> Result<Construction, ConstructionError> {
    build(Target::Conj, n, e, d, true)
}

/// Circuit for `DISJ_n`: the CONJ pieces under a NOR top gate.
pub fn build_disj_circuit(n: usize, e: usize, d: usize) -> Result<Construction, ConstructionError> {
    build(Target::Disj, n, e, d, true)
}

/// Circuit for `EQ_n` from DNF pieces `OR_{i in B_j} (x_i XOR y_i)` under a NOR top gate.
pub fn build_eq_circuit(n: usize, e: usize, d: usize) -> Result<Construction, ConstructionError> {
    build(Target::Eq, n, e, d, true)
}

/// Builds without the exhaustive energy measurement.
pub fn build_unmeasured(target: Target, n: usize, e: usize, d: usize) -> Result<Construction, ConstructionError> {
    build(target, n, e, d, false)
}
