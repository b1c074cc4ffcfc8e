use std::fmt;
use std::sync::Arc;

use super::{BitMatrix, Domain, MatrixError};

/// Default cap on the number of rows of a communication matrix (`2^13`).
pub const DEFAULT_ROW_LIMIT: usize = 1 << 13;

type EvalFn = dyn Fn(u32, u32) -> bool + Send + Sync;

/// A Boolean function of `(a, b)` with both sides drawn from one domain.
#[derive(Clone)]
pub struct FunctionOracle {
    name: String,
    n: usize,
    domain: Domain,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for FunctionOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionOracle")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("domain_size", &self.domain.len())
            .finish()
    }
}

impl FunctionOracle {
    /// Oracle over the full cube `{0,1}^n`; `eval` receives the codes of `a` and `b`.
    pub fn new(name: impl Into<String>, n: usize, eval: impl Fn(u32, u32) -> bool + Send + Sync + 'static) -> Self {
        FunctionOracle {
            name: name.into(),
            n,
            domain: Domain::full(n),
            eval: Arc::new(eval),
        }
    }

    /// Restricts both sides to `domain`.
    pub fn restricted(mut self, domain: Domain) -> Self {
        assert_eq!(domain.width(), self.n, "domain width must equal n");
        self.domain = domain;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn eval(&self, a: u32, b: u32) -> bool {
        (self.eval)(a, b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinFunction {
    /// `OR_i (a_i AND b_i)`, the complement of disjointness.
    Conj,
    /// `AND_i (a_i OR b_i)`.
    AndOr,
    /// `a == b`.
    Eq,
    /// `AND_i NOT(a_i AND b_i)` over vectors with at most `k` ones.
    DisjK(usize),
    /// Parity of `sum_i a_i b_i`.
    Ip,
}

impl BuiltinFunction {
    pub fn parse(name: &str, k: Option<usize>) -> Result<Self, MatrixError> {
        match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "conj" => Ok(BuiltinFunction::Conj),
            "and_or" | "andor" => Ok(BuiltinFunction::AndOr),
            "eq" => Ok(BuiltinFunction::Eq),
            "ip" => Ok(BuiltinFunction::Ip),
            "disj_k" | "disjk" => k
                .map(BuiltinFunction::DisjK)
                .ok_or_else(|| MatrixError::MissingK(name.to_string())),
            other => Err(MatrixError::UnknownFunction(other.to_string())),
        }
    }

    /// Value on `n`-bit inputs given as codes.
    pub fn evaluate(self, n: usize, a: u32, b: u32) -> bool {
        match self {
            BuiltinFunction::Conj => a & b != 0,
            BuiltinFunction::AndOr => a | b == ((1u64 << n) - 1) as u32,
            BuiltinFunction::Eq => a == b,
            BuiltinFunction::DisjK(_) => a & b == 0,
            BuiltinFunction::Ip => (a & b).count_ones() % 2 == 1,
        }
    }
}

/// Instantiates a named function on `n`-bit inputs.
pub fn builtin_oracle(function: BuiltinFunction, n: usize) -> Result<FunctionOracle, MatrixError> {
    let name = match function {
        BuiltinFunction::Conj => format!("CONJ_{n}"),
        BuiltinFunction::AndOr => format!("ANDOR_{n}"),
        BuiltinFunction::Eq => format!("EQ_{n}"),
        BuiltinFunction::DisjK(k) => format!("DISJ_{n},{k}"),
        BuiltinFunction::Ip => format!("IP_{n}"),
    };
    let oracle = FunctionOracle::new(name, n, move |a, b| function.evaluate(n, a, b));
    match function {
        BuiltinFunction::DisjK(k) if k > n => Err(MatrixError::KExceedsN { k, n }),
        BuiltinFunction::DisjK(k) => Ok(oracle.restricted(Domain::at_most_ones(n, k))),
        _ => Ok(oracle),
    }
}

/// Communication matrix of `oracle`: entry `[a, b]` is `f(a, b)`.
pub fn comm_matrix(oracle: &FunctionOracle, row_limit: usize) -> Result<BitMatrix, MatrixError> {
    let size = oracle.domain().len();
    if size > row_limit {
        return Err(MatrixError::TooLarge { size, limit: row_limit });
    }
    Ok(BitMatrix::from_fn(
        oracle.domain().clone(),
        oracle.domain().clone(),
        |a, b| oracle.eval(a, b),
    ))
}
