//! Instance-level checks of the rank lower bound and of the decomposition
//! behind it: internal representations, shifted thresholds, `M[T]`,
//! combinatorial rectangles and the inclusion-exclusion terms `H[Q_l]`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::boolmat::{BitMatrix, Domain, IntMatrix};
use crate::circuit::{self, CircuitError, ThresholdCircuit};
use crate::constructions::{build_unmeasured, ConstructionError, Target};

/// Largest `2n` for which the decomposition machinery enumerates inputs.
pub const ANALYSIS_LIMIT: usize = 16;
/// Largest family `𝒯(Q_l)` enumerated by `hadamard_term`.
pub const FAMILY_BUDGET: usize = 1 << 16;
/// Binomial-sum constant in the intermediate bound.
pub const DEFAULT_C_PRIME: f64 = 3.0;
/// Constant in `4n + C e d log2 n`.
pub const DEFAULT_TIGHTNESS_C: f64 = 8.0;

const LOG_GUARD: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error("analysis enumerates 2^{inputs} inputs, above the limit 2^{limit}")]
    Limit { inputs: usize, limit: usize },
    #[error("family for level {level} has {size} sets, above the budget {budget}")]
    Budget { level: usize, size: u128, budget: usize },
    #[error("level {level} is outside 1..={depth}")]
    Level { level: usize, depth: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
}

/// Firing gates per level; `levels[l - 1]` holds the sorted indices in `P_l`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InternalRep {
    pub levels: Vec<Vec<usize>>,
}

impl InternalRep {
    pub fn contains(&self, gate: usize, level: usize) -> bool {
        self.levels[level - 1].binary_search(&gate).is_ok()
    }

    /// `|P_1| + ... + |P_{d-1}|`.
    pub fn internal_count(&self) -> usize {
        self.levels[..self.levels.len() - 1].iter().map(Vec::len).sum()
    }

    pub fn total(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// Gate ids per level.
    pub fn ids(&self, c: &ThresholdCircuit) -> Vec<Vec<String>> {
        self.levels
            .iter()
            .map(|l| l.iter().map(|&g| c.gate(g).id.clone()).collect())
            .collect()
    }
}

/// `τ[g, P]`: gate `g` with lower-level outputs fixed by `P`; fires iff
/// `p^x_g(a) + p^y_g(b) >= threshold`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ShiftedThreshold {
    pub gate: String,
    #[serde(skip)]
    pub index: usize,
    #[serde(with = "crate::wide::scalar")]
    pub threshold: i128,
    #[serde(with = "crate::wide::vec")]
    pub x_weights: Vec<i128>,
    #[serde(with = "crate::wide::vec")]
    pub y_weights: Vec<i128>,
}

impl ShiftedThreshold {
    /// `t_g[P]` in the `sign(p^x + p^y + t_g[P])` form.
    pub fn offset(&self) -> i128 {
        -self.threshold
    }
}

/// Which sets `T ⊇ Q_l` enter `H[Q_l]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyBound {
    /// `|T| <= e - 1`.
    EnergyMinusOne,
    /// `|T| <= e`.
    Energy,
    /// Every `T` with `Q_l ⊆ T ⊆ T_l`.
    Unbounded,
}

impl FamilyBound {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "e-1" | "energy-minus-one" => Some(FamilyBound::EnergyMinusOne),
            "e" | "energy" => Some(FamilyBound::Energy),
            "all" | "unbounded" => Some(FamilyBound::Unbounded),
            _ => None,
        }
    }

    fn limit(self, energy: usize, level_size: usize) -> usize {
        match self {
            FamilyBound::EnergyMinusOne => energy.saturating_sub(1),
            FamilyBound::Energy => energy,
            FamilyBound::Unbounded => level_size,
        }
    }
}

/// One rank-1 block of `M[T]`: rows with x-potentials `potentials`, and the
/// columns completing every threshold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rectangle {
    #[serde(with = "crate::wide::vec")]
    pub potentials: Vec<i128>,
    pub rows: Vec<u32>,
    pub cols: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RectangleDecomposition {
    pub rectangles: Vec<Rectangle>,
    /// `|R_k|`: number of achievable x-potentials of each threshold.
    pub achievable: Vec<usize>,
}

impl RectangleDecomposition {
    pub fn reconstruct(&self, n: usize) -> BitMatrix {
        let mut m = BitMatrix::zeros(Domain::full(n), Domain::full(n));
        for r in &self.rectangles {
            for &a in &r.rows {
                for &b in &r.cols {
                    m.set(a as usize, b as usize, true);
                }
            }
        }
        m
    }

    /// No entry is covered twice.
    pub fn disjoint(&self) -> bool {
        let covered: usize = self.rectangles.iter().map(|r| r.rows.len() * r.cols.len()).sum();
        let mut seen = std::collections::HashSet::new();
        self.rectangles
            .iter()
            .flat_map(|r| r.rows.iter().flat_map(move |&a| r.cols.iter().map(move |&b| (a, b))))
            .all(|e| seen.insert(e))
            && seen.len() == covered
    }

    /// `Π |R_k|`, saturating.
    pub fn product_bound(&self) -> u128 {
        self.achievable.iter().fold(1u128, |acc, &k| acc.saturating_mul(k as u128))
    }
}

/// Exhaustive evaluation of a circuit with its internal representations.
pub struct Analysis<'c> {
    circuit: &'c ThresholdCircuit,
    n: usize,
    levels: Vec<Vec<usize>>,
    px: Vec<Vec<i128>>,
    py: Vec<Vec<i128>>,
    /// Rep index for assignment `a * 2^n + b`.
    arising: Vec<usize>,
    reps: Vec<InternalRep>,
    p1: Vec<usize>,
    energy: usize,
    output: BitMatrix,
}

impl<'c> Analysis<'c> {
    pub fn new(circuit: &'c ThresholdCircuit) -> Result<Self, AnalyzerError> {
        let n = circuit.n();
        if 2 * n > ANALYSIS_LIMIT {
            return Err(AnalyzerError::Limit {
                inputs: 2 * n,
                limit: ANALYSIS_LIMIT,
            });
        }
        let cols = 1usize << n;
        let size = circuit.size();
        let levels = circuit.level_sets();
        let px = (0..size)
            .map(|g| (0..cols as u32).map(|a| circuit.x_potential(g, a)).collect())
            .collect::<Result<Vec<Vec<i128>>, _>>()?;
        let py = (0..size)
            .map(|g| (0..cols as u32).map(|b| circuit.y_potential(g, b)).collect())
            .collect::<Result<Vec<Vec<i128>>, _>>()?;
        let rows: Vec<Vec<InternalRep>> = (0..cols as u32)
            .into_par_iter()
            .map_init(
                || vec![false; size],
                |bits, a| {
                    (0..cols as u32)
                        .map(|b| {
                            circuit.eval_codes(a, b, bits, None)?;
                            Ok(arising_from_bits(&levels, bits))
                        })
                        .collect::<Result<Vec<_>, CircuitError>>()
                },
            )
            .collect::<Result<_, _>>()?;
        let mut index: HashMap<InternalRep, usize> = HashMap::new();
        let mut reps = Vec::new();
        let mut arising = Vec::with_capacity(cols * cols);
        let mut output = BitMatrix::zeros(Domain::full(n), Domain::full(n));
        let top = circuit.output_index();
        let mut energy = 0;
        for (a, row) in rows.into_iter().enumerate() {
            for (b, rep) in row.into_iter().enumerate() {
                energy = energy.max(rep.total());
                output.set(a, b, rep.contains(top, levels.len()));
                let k = *index.entry(rep.clone()).or_insert_with(|| {
                    reps.push(rep);
                    reps.len() - 1
                });
                arising.push(k);
            }
        }
        let mut p1: Vec<usize> = (0..reps.len()).filter(|&k| reps[k].contains(top, levels.len())).collect();
        p1.sort_by(|&i, &j| reps[i].cmp(&reps[j]));
        Ok(Analysis {
            circuit,
            n,
            levels,
            px,
            py,
            arising,
            reps,
            p1,
            energy,
            output,
        })
    }

    pub fn circuit(&self) -> &ThresholdCircuit {
        self.circuit
    }

    pub fn energy(&self) -> usize {
        self.energy
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// `M_C`.
    pub fn output_matrix(&self) -> &BitMatrix {
        &self.output
    }

    /// `P*(a, b)`.
    pub fn arising(&self, a: u32, b: u32) -> &InternalRep {
        &self.reps[self.arising[((a as usize) << self.n) | b as usize]]
    }

    /// Every representation that arises, in first-seen order.
    pub fn reps(&self) -> &[InternalRep] {
        &self.reps
    }

    /// `𝒫_1`, sorted.
    pub fn p1(&self) -> impl Iterator<Item = &InternalRep> + '_ {
        self.p1.iter().map(|&k| &self.reps[k])
    }

    pub fn p1_len(&self) -> usize {
        self.p1.len()
    }

    /// `M_P`.
    pub fn rep_matrix(&self, rep: &InternalRep) -> BitMatrix {
        let target = self.reps.iter().position(|r| r == rep);
        let cols = 1usize << self.n;
        BitMatrix::from_fn(Domain::full(self.n), Domain::full(self.n), |a, b| {
            target == Some(self.arising[(a as usize) * cols + b as usize])
        })
    }

    /// `τ[g, P]`.
    pub fn shifted(&self, gate: usize, rep: &InternalRep) -> ShiftedThreshold {
        let c = self.circuit;
        let g = c.gate(gate);
        let shift: i128 = c
            .predecessors(gate)
            .iter()
            .filter(|&&(h, _)| rep.contains(h, c.level(h)))
            .map(|&(_, w)| w)
            .sum();
        ShiftedThreshold {
            gate: g.id.clone(),
            index: gate,
            threshold: g.threshold - shift,
            x_weights: g.x_weights.clone(),
            y_weights: g.y_weights.clone(),
        }
    }

    /// `T_l` for level `l`.
    pub fn level_thresholds(&self, rep: &InternalRep, level: usize) -> Vec<ShiftedThreshold> {
        self.levels[level - 1].iter().map(|&g| self.shifted(g, rep)).collect()
    }

    fn fires(&self, tau: &ShiftedThreshold, a: usize, b: usize) -> bool {
        self.px[tau.index][a] + self.py[tau.index][b] >= tau.threshold
    }

    /// `M[T]`; all-ones for empty `T`.
    pub fn matrix_of_set(&self, set: &[ShiftedThreshold]) -> BitMatrix {
        BitMatrix::from_fn(Domain::full(self.n), Domain::full(self.n), |a, b| {
            set.iter().all(|t| self.fires(t, a as usize, b as usize))
        })
    }

    /// Partition of the ones of `M[T]` by the tuple of x-potentials.
    pub fn rectangle_decomposition(&self, set: &[ShiftedThreshold]) -> RectangleDecomposition {
        let cols = 1usize << self.n;
        let mut groups: BTreeMap<Vec<i128>, Vec<u32>> = BTreeMap::new();
        for a in 0..cols {
            let key = set.iter().map(|t| self.px[t.index][a]).collect();
            groups.entry(key).or_default().push(a as u32);
        }
        let achievable = set
            .iter()
            .map(|t| {
                let mut v = self.px[t.index].clone();
                v.sort_unstable();
                v.dedup();
                v.len()
            })
            .collect();
        let rectangles = groups
            .into_iter()
            .filter_map(|(potentials, rows)| {
                let cols: Vec<u32> = (0..cols)
                    .filter(|&b| {
                        set.iter()
                            .zip(&potentials)
                            .all(|(t, &r)| r + self.py[t.index][b] >= t.threshold)
                    })
                    .map(|b| b as u32)
                    .collect();
                (!cols.is_empty()).then_some(Rectangle { potentials, rows, cols })
            })
            .collect();
        RectangleDecomposition { rectangles, achievable }
    }

    /// `𝒯(Q_l)` as sets of gate indices, each listing `Q_l` first.
    pub fn family(&self, rep: &InternalRep, level: usize, bound: FamilyBound) -> Result<Vec<Vec<usize>>, AnalyzerError> {
        self.check_level(level)?;
        let q = &rep.levels[level - 1];
        if level == self.depth() {
            // G_d = {top}, so 𝒯(Q_d) = {Q_d}.
            return Ok(vec![q.clone()]);
        }
        let rest: Vec<usize> = self.levels[level - 1].iter().copied().filter(|g| q.binary_search(g).is_err()).collect();
        let limit = bound.limit(self.energy, self.levels[level - 1].len());
        if q.len() > limit {
            return Ok(Vec::new());
        }
        let extra = (limit - q.len()).min(rest.len());
        let size: u128 = (0..=extra).map(|k| binomial(rest.len() as u64, k as u64)).sum();
        if size > FAMILY_BUDGET as u128 {
            return Err(AnalyzerError::Budget {
                level,
                size,
                budget: FAMILY_BUDGET,
            });
        }
        let mut out = Vec::with_capacity(size as usize);
        let mut chosen = Vec::new();
        subsets(&rest, extra, 0, &mut chosen, &mut |sub| {
            let mut t = q.clone();
            t.extend_from_slice(sub);
            out.push(t);
        });
        Ok(out)
    }

    /// `H[Q_l] = Σ_{T ∈ 𝒯(Q_l)} (-1)^{|T| - |Q_l|} M[T]`.
    pub fn hadamard_term(&self, rep: &InternalRep, level: usize, bound: FamilyBound) -> Result<IntMatrix, AnalyzerError> {
        let q = rep.levels[level - 1].len();
        let mut h = IntMatrix::zeros(Domain::full(self.n), Domain::full(self.n));
        for t in self.family(rep, level, bound)? {
            let taus: Vec<ShiftedThreshold> = t.iter().map(|&g| self.shifted(g, rep)).collect();
            let sign = if (t.len() - q).is_multiple_of(2) { 1 } else { -1 };
            h.add_signed(&self.matrix_of_set(&taus), sign).expect("equal shapes");
        }
        Ok(h)
    }

    fn check_level(&self, level: usize) -> Result<(), AnalyzerError> {
        if level == 0 || level > self.depth() {
            return Err(AnalyzerError::Level {
                level,
                depth: self.depth(),
            });
        }
        Ok(())
    }

    /// Compares `H[Q_1] ∘ ... ∘ H[Q_d]` with `M_P` entrywise.
    pub fn verify_claim2(&self, rep: &InternalRep, bound: FamilyBound) -> Result<Claim2Check, AnalyzerError> {
        let mut product: Option<IntMatrix> = None;
        let mut non_binary = Vec::new();
        let mut level_ranks = Vec::new();
        for l in 1..=self.depth() {
            let family = self.family(rep, l, bound)?.len();
            let h = self.hadamard_term(rep, l, bound)?;
            if !h.is_binary() {
                non_binary.push(l);
            }
            let rank = h.to_bits_checked().ok().map(|m| m.rank_f2());
            level_ranks.push(LevelRank { level: l, family, rank });
            product = Some(match product {
                None => h,
                Some(p) => p.hadamard(&h).expect("equal shapes"),
            });
        }
        let product = product.expect("depth >= 1");
        let expect = IntMatrix::from_bits(&self.rep_matrix(rep));
        let cols = 1usize << self.n;
        let witness = (0..cols * cols)
            .find(|&k| product.get(k / cols, k % cols) != expect.get(k / cols, k % cols))
            .map(|k| Witness {
                a: (k / cols) as u32,
                b: (k % cols) as u32,
                expected: expect.get(k / cols, k % cols),
                found: product.get(k / cols, k % cols),
            });
        Ok(Claim2Check {
            holds: witness.is_none(),
            witness,
            non_binary_levels: non_binary,
            level_ranks,
        })
    }

    /// Runs every decomposition check over all of `𝒫_1`.
    pub fn verify_decomposition(&self, bound: FamilyBound) -> Result<DecompositionReport, AnalyzerError> {
        let c = self.circuit;
        let n = self.n;
        let s = c.size();
        let e = self.energy;
        let w = c.weight();
        let cols = 1usize << n;

        let mut sum = IntMatrix::zeros(Domain::full(n), Domain::full(n));
        for rep in self.p1() {
            sum.add_signed(&self.rep_matrix(rep), 1).expect("equal shapes");
        }
        let partition = (0..cols * cols).all(|k| sum.get(k / cols, k % cols) == self.output.get(k / cols, k % cols) as i64);
        let p1_bound: u128 = (0..e as u64).map(|k| binomial(s as u64, k)).fold(0u128, u128::saturating_add);
        let rep_shape = self
            .p1()
            .all(|r| r.internal_count() < e && r.levels[self.depth() - 1].len() == 1);

        let per_rep: Vec<RepOutcome> = self
            .p1
            .par_iter()
            .map(|&k| self.rep_outcome(&self.reps[k], bound))
            .collect::<Result<_, _>>()?;
        let failures: Vec<Claim2Failure> = per_rep
            .iter()
            .filter(|o| !o.claim2.holds || !o.claim2.non_binary_levels.is_empty())
            .take(8)
            .map(|o| Claim2Failure {
                rep: o.ids.clone(),
                witness: o.claim2.witness.clone(),
                non_binary_levels: o.claim2.non_binary_levels.clone(),
            })
            .collect();
        let claim2 = per_rep.iter().all(|o| o.claim2.holds);
        let h_binary = per_rep.iter().all(|o| o.claim2.non_binary_levels.is_empty());
        let h_rank = per_rep.iter().all(|o| o.h_rank_ok);
        let sets_checked = per_rep.iter().map(|o| o.sets).sum();
        let claim1 = per_rep.iter().all(|o| o.claim1);
        let rectangles = per_rep.iter().all(|o| o.rectangles);
        Ok(DecompositionReport {
            n,
            s,
            d: self.depth(),
            e,
            w,
            family: bound,
            reps: self.reps.len(),
            p1: self.p1.len(),
            p1_bound,
            p1_within_bound: self.p1.len() as u128 <= p1_bound,
            rep_shape,
            partition,
            claim2,
            h_binary,
            h_rank,
            claim1,
            rectangles,
            sets_checked,
            failures,
            holds: partition && rep_shape && claim2 && h_binary && h_rank && claim1 && rectangles,
        })
    }

    fn rep_outcome(&self, rep: &InternalRep, bound: FamilyBound) -> Result<RepOutcome, AnalyzerError> {
        let claim2 = self.verify_claim2(rep, bound)?;
        let base = 2 * self.n as u128 * self.circuit.weight() + 1;
        let mut h_rank = true;
        let (mut sets, mut claim1, mut rectangles) = (0, true, true);
        for l in 1..=self.depth() {
            let family = self.family(rep, l, bound)?;
            // Subadditivity over the family, then the bound on each M[T].
            let budget = family
                .iter()
                .fold(0u128, |acc, t| acc.saturating_add(base.saturating_pow(t.len() as u32)));
            h_rank &= claim2.level_ranks[l - 1].rank.is_none_or(|r| r as u128 <= budget);
            for t in family {
                let taus: Vec<ShiftedThreshold> = t.iter().map(|&g| self.shifted(g, rep)).collect();
                let m = self.matrix_of_set(&taus);
                claim1 &= (m.rank_f2() as u128) <= base.saturating_pow(taus.len() as u32);
                let dec = self.rectangle_decomposition(&taus);
                rectangles &= dec.reconstruct(self.n) == m
                    && dec.disjoint()
                    && dec.rectangles.len() as u128 <= dec.product_bound()
                    && dec.achievable.iter().all(|&k| k as u128 <= base);
                sets += 1;
            }
        }
        Ok(RepOutcome {
            ids: rep.ids(self.circuit),
            claim2,
            h_rank_ok: h_rank,
            sets,
            claim1,
            rectangles,
        })
    }
}

fn arising_from_bits(levels: &[Vec<usize>], bits: &[bool]) -> InternalRep {
    InternalRep {
        levels: levels.iter().map(|l| l.iter().copied().filter(|&g| bits[g]).collect()).collect(),
    }
}

fn subsets(pool: &[usize], max: usize, from: usize, chosen: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    f(chosen);
    if chosen.len() == max {
        return;
    }
    for i in from..pool.len() {
        chosen.push(pool[i]);
        subsets(pool, max, i + 1, chosen, f);
        chosen.pop();
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i + 1) as u128)
}

struct RepOutcome {
    ids: Vec<Vec<String>>,
    claim2: Claim2Check,
    h_rank_ok: bool,
    sets: usize,
    claim1: bool,
    rectangles: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub a: u32,
    pub b: u32,
    pub expected: i64,
    pub found: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelRank {
    pub level: usize,
    /// `|𝒯(Q_l)|`.
    pub family: usize,
    /// F2 rank of `H[Q_l]` when it is 0/1.
    pub rank: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Claim2Check {
    pub holds: bool,
    pub witness: Option<Witness>,
    pub non_binary_levels: Vec<usize>,
    pub level_ranks: Vec<LevelRank>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Claim2Failure {
    pub rep: Vec<Vec<String>>,
    pub witness: Option<Witness>,
    pub non_binary_levels: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecompositionReport {
    pub n: usize,
    pub s: usize,
    pub d: usize,
    pub e: usize,
    pub w: u128,
    pub family: FamilyBound,
    /// Distinct representations over all inputs.
    pub reps: usize,
    /// `|𝒫_1|`.
    pub p1: usize,
    /// `Σ_{k <= e-1} C(s, k)`.
    pub p1_bound: u128,
    pub p1_within_bound: bool,
    /// Every rep in `𝒫_1` has at most `e - 1` internal gates and one top gate.
    pub rep_shape: bool,
    /// `Σ_{P ∈ 𝒫_1} M_P = M_C` over the integers.
    pub partition: bool,
    pub claim2: bool,
    pub h_binary: bool,
    /// `rk(H[Q_l]) <= Σ_{T ∈ 𝒯(Q_l)} (2nw+1)^{|T|}` where `H[Q_l]` is 0/1.
    pub h_rank: bool,
    /// `rk(M[T]) <= (2nw+1)^{|T|}` for every `T` in every family.
    pub claim1: bool,
    pub rectangles: bool,
    pub sets_checked: usize,
    pub failures: Vec<Claim2Failure>,
    pub holds: bool,
}

pub fn verify_decomposition(c: &ThresholdCircuit, bound: FamilyBound) -> Result<DecompositionReport, AnalyzerError> {
    Analysis::new(c)?.verify_decomposition(bound)
}

/// Circuit measures entering the bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundInputs {
    pub n: usize,
    pub s: usize,
    pub d: usize,
    pub e: usize,
    pub w: u128,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntermediateCheck {
    pub c_prime: f64,
    /// log2 of the intermediate right-hand side.
    pub log2_rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TightnessCheck {
    pub c: f64,
    pub budget: f64,
    /// Smallest `C` with `rhs <= 4n + C e d log2 n`; absent when `n = 1`.
    pub required_c: Option<f64>,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub s: usize,
    pub d: usize,
    pub e: usize,
    pub w: u128,
    pub rank: usize,
    /// `log2 rk(M_C)`, taken as 0 for rank 0.
    pub lhs: f64,
    /// `e d (log2 s + log2 w + log2 n)` with `w` floored at 1.
    pub rhs: f64,
    /// `rank <= (s w n)^{e d}`, compared exactly.
    pub holds: bool,
    /// `s, d >= 2`, `e >= 10`, `w >= 1`.
    pub hypotheses_e10: bool,
    /// As above with `e >= 11`.
    pub hypotheses_e11: bool,
    /// `holds` is false inside the hypotheses.
    pub violation: bool,
    pub intermediate_eq3: Option<IntermediateCheck>,
    pub tightness: TightnessCheck,
}

pub fn bound_report(inputs: BoundInputs) -> BoundReport {
    let BoundInputs { n, s, d, e, w, rank } = inputs;
    let w1 = w.max(1);
    let rhs = (e * d) as f64 * ((s as f64).log2() + (w1 as f64).log2() + (n as f64).log2());
    let lhs = if rank == 0 { 0.0 } else { (rank as f64).log2() };
    let base = (s as u128).saturating_mul(w1).saturating_mul(n as u128);
    let holds = rank as u128 <= pow_saturating(base, e * d);
    let hyp = s >= 2 && d >= 2 && w >= 1;
    let hypotheses_e10 = hyp && e >= 10;
    let hypotheses_e11 = hyp && e >= 11;
    let intermediate_eq3 = (e >= 2).then(|| {
        let c_prime = DEFAULT_C_PRIME;
        let r = (2 * n as u128 * w + 1) as f64;
        let k = (e - 1) as f64;
        let lead = k * (c_prime * s as f64 / k).log2();
        let log2_rhs = lead + (d - 1) as f64 * (lead + k * r.log2()) + r.log2();
        IntermediateCheck {
            c_prime,
            log2_rhs,
            holds: lhs <= log2_rhs + LOG_GUARD,
        }
    });
    BoundReport {
        n,
        s,
        d,
        e,
        w,
        rank,
        lhs,
        rhs,
        holds,
        hypotheses_e10,
        hypotheses_e11,
        violation: hypotheses_e10 && !holds,
        intermediate_eq3,
        tightness: tightness_check(n, e, d, rhs, DEFAULT_TIGHTNESS_C),
    }
}

fn pow_saturating(base: u128, exp: usize) -> u128 {
    base.saturating_pow(exp.min(u32::MAX as usize) as u32)
}

fn tightness_check(n: usize, e: usize, d: usize, rhs: f64, c: f64) -> TightnessCheck {
    let log_n = (n as f64).log2();
    let spread = (e * d) as f64 * log_n;
    let budget = 4.0 * n as f64 + c * spread;
    TightnessCheck {
        c,
        budget,
        required_c: (spread > 0.0).then(|| ((rhs - 4.0 * n as f64) / spread).max(0.0)),
        within: rhs <= budget + LOG_GUARD,
    }
}

/// Measures `c` exhaustively and evaluates the bound.
pub fn check_bound(c: &ThresholdCircuit) -> Result<BoundReport, AnalyzerError> {
    let profile = circuit::profile(c)?;
    Ok(bound_report(BoundInputs {
        n: c.n(),
        s: c.size(),
        d: c.depth(),
        e: profile.energy,
        w: c.weight(),
        rank: profile.matrix.rank_f2(),
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TightnessReport {
    pub n: usize,
    pub e: usize,
    pub d: usize,
    /// Number of pieces `(e-1)(d-1)`.
    pub z: usize,
    pub s: usize,
    pub w: u128,
    /// `e d (log2 s + log2 w + log2 n)` with the design `e` and `d`.
    pub rhs: f64,
    pub check: TightnessCheck,
    /// `z = 1`: a single piece, outside the `ed = o(n / log n)` regime.
    pub degenerate: bool,
}

/// Bound for the CONJ circuit built with parameters `(n, e, d)`.
pub fn tightness_report(n: usize, e: usize, d: usize) -> Result<TightnessReport, AnalyzerError> {
    tightness_report_with(n, e, d, DEFAULT_TIGHTNESS_C)
}

pub fn tightness_report_with(n: usize, e: usize, d: usize, c: f64) -> Result<TightnessReport, AnalyzerError> {
    let built = build_unmeasured(Target::Conj, n, e, d)?;
    let s = built.circuit.size();
    let w = built.circuit.weight();
    let rhs = (e * d) as f64 * ((s as f64).log2() + (w.max(1) as f64).log2() + (n as f64).log2());
    let z = built.assembly.z;
    Ok(TightnessReport {
        n,
        e,
        d,
        z,
        s,
        w,
        rhs,
        check: tightness_check(n, e, d, rhs, c),
        degenerate: z == 1,
    })
}
