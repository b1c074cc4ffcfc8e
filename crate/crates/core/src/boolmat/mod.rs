//! Packed binary matrices over GF(2) and communication matrices.
//!
//! Rows and columns are indexed by input bit vectors. A bit vector
//! `(v_1, ..., v_n)` is stored as the integer code `sum v_i * 2^(n-i)`, so
//! numeric order of codes is lexicographic order of the vectors.

mod oracle;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use oracle::{builtin_oracle, comm_matrix, BuiltinFunction, FunctionOracle, DEFAULT_ROW_LIMIT};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatrixError {
    #[error("shape mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    Shape {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("row or column domains differ")]
    Domain,
    #[error("entry ({row}, {col}) = {value} is not 0 or 1")]
    NotBinary { row: usize, col: usize, value: i64 },
    #[error("matrix text is malformed: {0}")]
    Parse(String),
    #[error("domain has {size} elements, limit is {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("k = {k} exceeds n = {n}")]
    KExceedsN { k: usize, n: usize },
    #[error("function `{0}` needs parameter k")]
    MissingK(String),
}

/// Value of coordinate `i` (0-based) of an `n`-bit code.
#[inline]
pub fn code_bit(code: u32, n: usize, i: usize) -> bool {
    (code >> (n - 1 - i)) & 1 == 1
}

/// Packs a bit vector into its code.
pub fn bits_to_code(bits: &[bool]) -> u32 {
    bits.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32)
}

pub fn code_to_bits(code: u32, n: usize) -> Vec<bool> {
    (0..n).map(|i| code_bit(code, n, i)).collect()
}

/// Ordered, duplicate-free list of `width`-bit vectors indexing one side of a matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Domain {
    width: usize,
    codes: Vec<u32>,
}

impl Domain {
    /// All of `{0,1}^n` in lexicographic order.
    pub fn full(n: usize) -> Self {
        assert!(n < 32, "domain width {n} too large");
        Domain {
            width: n,
            codes: (0..1u32 << n).collect(),
        }
    }

    /// `Z_k`: vectors with at most `k` ones, in lexicographic order.
    pub fn at_most_ones(n: usize, k: usize) -> Self {
        assert!(n < 32, "domain width {n} too large");
        Domain {
            width: n,
            codes: (0..1u32 << n)
                .filter(|c| c.count_ones() as usize <= k)
                .collect(),
        }
    }

    /// Builds a domain from explicit codes; they are sorted and deduplicated.
    pub fn from_codes(width: usize, mut codes: Vec<u32>) -> Self {
        codes.sort_unstable();
        codes.dedup();
        Domain { width, codes }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn is_full(&self) -> bool {
        self.width < 32 && self.codes.len() == 1usize << self.width
    }

    pub fn position(&self, code: u32) -> Option<usize> {
        self.codes.binary_search(&code).ok()
    }
}

#[inline]
fn words_for(cols: usize) -> usize {
    cols.div_ceil(64)
}

/// Dense binary matrix with packed rows.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    bits: Vec<u64>,
    row_domain: Domain,
    col_domain: Domain,
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows.min(32) {
            let line: String = (0..self.cols.min(64))
                .map(|c| if self.get(r, c) { '1' } else { '0' })
                .collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl BitMatrix {
    pub fn zeros(row_domain: Domain, col_domain: Domain) -> Self {
        let rows = row_domain.len();
        let cols = col_domain.len();
        let stride = words_for(cols);
        BitMatrix {
            rows,
            cols,
            stride,
            bits: vec![0; rows * stride],
            row_domain,
            col_domain,
        }
    }

    /// A `rows x cols` matrix indexed by plain positions.
    pub fn zeros_indexed(rows: usize, cols: usize) -> Self {
        let width = |k: usize| (usize::BITS - k.saturating_sub(1).leading_zeros()) as usize;
        BitMatrix::zeros(
            Domain::from_codes(width(rows), (0..rows as u32).collect()),
            Domain::from_codes(width(cols), (0..cols as u32).collect()),
        )
    }

    pub fn identity(size: usize) -> Self {
        let mut m = BitMatrix::zeros_indexed(size, size);
        for i in 0..size {
            m.set(i, i, true);
        }
        m
    }

    pub fn ones(row_domain: Domain, col_domain: Domain) -> Self {
        let mut m = BitMatrix::zeros(row_domain, col_domain);
        for r in 0..m.rows {
            for c in 0..m.cols {
                m.set(r, c, true);
            }
        }
        m
    }

    /// Fills entry `[r, c]` with `f(row_code, col_code)`.
    pub fn from_fn(row_domain: Domain, col_domain: Domain, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut m = BitMatrix::zeros(row_domain, col_domain);
        for r in 0..m.rows {
            let a = m.row_domain.codes[r];
            for c in 0..m.cols {
                if f(a, m.col_domain.codes[c]) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_domain(&self) -> &Domain {
        &self.row_domain
    }

    pub fn col_domain(&self) -> &Domain {
        &self.col_domain
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.bits[r * self.stride + c / 64] >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.bits[r * self.stride + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.bits[r * self.stride..(r + 1) * self.stride]
    }

    /// Overwrites row `r` with packed words (bits past `cols` are ignored).
    pub fn set_row_words(&mut self, r: usize, words: &[u64]) {
        let stride = self.stride;
        let dst = &mut self.bits[r * stride..(r + 1) * stride];
        dst.copy_from_slice(&words[..stride]);
        let tail = self.cols % 64;
        if tail != 0 {
            dst[stride - 1] &= (1u64 << tail) - 1;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Positions `(r, c)` of all 1-entries in row-major order.
    pub fn ones_positions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for (wi, &w) in self.row_words(r).iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let bit = w.trailing_zeros() as usize;
                    out.push((r, wi * 64 + bit));
                    w &= w - 1;
                }
            }
        }
        out
    }

    fn check_compatible(&self, other: &BitMatrix) -> Result<(), MatrixError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatrixError::Shape {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        if self.row_domain != other.row_domain || self.col_domain != other.col_domain {
            return Err(MatrixError::Domain);
        }
        Ok(())
    }

    fn zip_with(&self, other: &BitMatrix, op: impl Fn(u64, u64) -> u64) -> Result<BitMatrix, MatrixError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (o, &b) in out.bits.iter_mut().zip(&other.bits) {
            *o = op(*o, b);
        }
        Ok(out)
    }

    /// Entrywise sum over GF(2).
    pub fn add_f2(&self, other: &BitMatrix) -> Result<BitMatrix, MatrixError> {
        self.zip_with(other, |a, b| a ^ b)
    }

    /// Entrywise (Hadamard) product.
    pub fn hadamard(&self, other: &BitMatrix) -> Result<BitMatrix, MatrixError> {
        self.zip_with(other, |a, b| a & b)
    }

    /// Rank over GF(2). Works on a private copy of the rows.
    pub fn rank_f2(&self) -> usize {
        let stride = self.stride;
        let mut rows: Vec<&[u64]> = (0..self.rows).map(|r| self.row_words(r)).collect();
        rows.retain(|r| r.iter().any(|&w| w != 0));
        let mut work: Vec<u64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let n_rows = rows.len();
        let mut rank = 0;
        for col in 0..self.cols {
            if rank == n_rows {
                break;
            }
            let (wi, mask) = (col / 64, 1u64 << (col % 64));
            let Some(pivot) = (rank..n_rows).find(|&r| work[r * stride + wi] & mask != 0) else {
                continue;
            };
            if pivot != rank {
                for k in 0..stride {
                    work.swap(pivot * stride + k, rank * stride + k);
                }
            }
            let (head, tail) = work.split_at_mut((rank + 1) * stride);
            let pivot_row = &head[rank * stride..];
            for row in tail.chunks_exact_mut(stride) {
                if row[wi] & mask != 0 {
                    for k in wi..stride {
                        row[k] ^= pivot_row[k];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.col_domain.clone(), self.row_domain.clone());
        for (r, c) in self.ones_positions() {
            t.set(c, r, true);
        }
        t
    }

    /// Dense text export: a `rows cols` header line, then one line of `0`/`1` per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            s.extend((0..self.cols).map(|c| if self.get(r, c) { '1' } else { '0' }));
            s.push('\n');
        }
        s
    }

    /// Parses [`BitMatrix::to_text`] output; domains become plain positions.
    pub fn from_text(text: &str) -> Result<BitMatrix, MatrixError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| MatrixError::Parse("missing header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| MatrixError::Parse(format!("bad header `{header}`"))))
            .collect::<Result<_, _>>()?;
        let [rows, cols] = dims[..] else {
            return Err(MatrixError::Parse(format!("bad header `{header}`")));
        };
        let mut m = BitMatrix::zeros_indexed(rows, cols);
        let mut seen = 0;
        for (r, line) in lines.enumerate() {
            let line = line.trim();
            if r >= rows || line.len() != cols {
                return Err(MatrixError::Parse(format!("row {r} has wrong length or is extra")));
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(r, c, true),
                    other => return Err(MatrixError::Parse(format!("unexpected character `{other}`"))),
                }
            }
            seen += 1;
        }
        if seen != rows {
            return Err(MatrixError::Parse(format!("expected {rows} rows, found {seen}")));
        }
        Ok(m)
    }

    pub fn rank_report(&self) -> RankReport {
        RankReport {
            rows: self.rows,
            cols: self.cols,
            rank: self.rank_f2(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
}

/// Dense matrix of exact signed integers sharing the indexing of a [`BitMatrix`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<i64>,
    row_domain: Domain,
    col_domain: Domain,
}

impl IntMatrix {
    pub fn zeros(row_domain: Domain, col_domain: Domain) -> Self {
        let (rows, cols) = (row_domain.len(), col_domain.len());
        IntMatrix {
            rows,
            cols,
            entries: vec![0; rows * cols],
            row_domain,
            col_domain,
        }
    }

    pub fn from_bits(m: &BitMatrix) -> Self {
        let mut out = IntMatrix::zeros(m.row_domain.clone(), m.col_domain.clone());
        for (r, c) in m.ones_positions() {
            out.entries[r * out.cols + c] = 1;
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.entries[r * self.cols + c]
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    /// `self += sign * m` over the integers.
    pub fn add_signed(&mut self, m: &BitMatrix, sign: i64) -> Result<(), MatrixError> {
        if m.rows != self.rows || m.cols != self.cols {
            return Err(MatrixError::Shape {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: m.rows,
                right_cols: m.cols,
            });
        }
        for (r, c) in m.ones_positions() {
            self.entries[r * self.cols + c] += sign;
        }
        Ok(())
    }

    pub fn hadamard(&self, other: &IntMatrix) -> Result<IntMatrix, MatrixError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatrixError::Shape {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = self.clone();
        for (o, &b) in out.entries.iter_mut().zip(&other.entries) {
            *o *= b;
        }
        Ok(out)
    }

    /// Smallest and largest entry.
    pub fn entry_range(&self) -> (i64, i64) {
        let lo = self.entries.iter().copied().min().unwrap_or(0);
        let hi = self.entries.iter().copied().max().unwrap_or(0);
        (lo, hi)
    }

    pub fn is_binary(&self) -> bool {
        self.entries.iter().all(|&v| v == 0 || v == 1)
    }

    /// Converts to a [`BitMatrix`], failing on the first entry outside `{0, 1}`.
    pub fn to_bits_checked(&self) -> Result<BitMatrix, MatrixError> {
        let mut m = BitMatrix::zeros(self.row_domain.clone(), self.col_domain.clone());
        for r in 0..self.rows {
            for c in 0..self.cols {
                match self.get(r, c) {
                    0 => {}
                    1 => m.set(r, c, true),
                    value => return Err(MatrixError::NotBinary { row: r, col: c, value }),
                }
            }
        }
        Ok(m)
    }

    /// Reduction of every entry modulo 2.
    pub fn reduce_mod2(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.row_domain.clone(), self.col_domain.clone());
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c).rem_euclid(2) == 1 {
                    m.set(r, c, true);
                }
            }
        }
        m
    }
}
