//! Dense bit-packed linear algebra over the two-element field.
//!
//! Vectors pack 64 coordinates per word; matrices are stored as a list of
//! packed rows. Every elimination routine picks the leftmost available pivot,
//! so results are deterministic for a given input.

use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

fn word_count(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A vector in GF(2)^len.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; word_count(len)],
        }
    }

    /// Unit vector `e_i`.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Low `len` bits of `value`, bit `i` of the integer becoming coordinate `i`.
    pub fn from_u64(len: usize, value: u64) -> Self {
        assert!(len <= WORD, "from_u64 supports at most 64 coordinates");
        let mut v = Self::zeros(len);
        if len > 0 {
            let mask = if len == WORD {
                u64::MAX
            } else {
                (1u64 << len) - 1
            };
            v.words[0] = value & mask;
        }
        v
    }

    /// Parses a string of `0`/`1` characters, coordinate 0 first.
    pub fn parse(s: &str) -> Option<Self> {
        let bits: Option<Vec<bool>> = s
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        bits.map(|b| Self::from_bits(&b))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// The first word, for vectors of at most 64 coordinates.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= WORD);
        self.words.first().copied().unwrap_or(0)
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Lowest coordinate holding a one.
    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * WORD + w.trailing_zeros() as usize)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD + bit)
            })
        })
    }

    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len, "dot of vectors with different lengths");
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    /// Concatenation `[self | other]`.
    pub fn concat(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.len + other.len);
        for i in self.iter_ones() {
            out.set(i, true);
        }
        for i in other.iter_ones() {
            out.set(self.len + i, true);
        }
        out
    }

    /// Coordinates `range` as a new vector.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.len);
        let mut out = Self::zeros(end - start);
        for i in self.iter_ones().filter(|&i| i >= start && i < end) {
            out.set(i - start, true);
        }
        out
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

/// XOR basis keyed by lowest set bit. Used for rank, span and membership queries.
#[derive(Clone, Debug)]
struct EchelonBasis {
    by_pivot: Vec<Option<BitVector>>,
    rank: usize,
}

impl EchelonBasis {
    fn new(len: usize) -> Self {
        Self {
            by_pivot: vec![None; len],
            rank: 0,
        }
    }

    fn reduce(&self, mut v: BitVector) -> BitVector {
        while let Some(p) = v.first_one() {
            match &self.by_pivot[p] {
                Some(b) => v.xor_assign(b),
                None => break,
            }
        }
        v
    }

    /// Inserts `v`; returns true when it was independent of the current span.
    fn insert(&mut self, v: BitVector) -> bool {
        let v = self.reduce(v);
        match v.first_one() {
            Some(p) => {
                self.by_pivot[p] = Some(v);
                self.rank += 1;
                true
            }
            None => false,
        }
    }
}

/// A dense `rows × cols` matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BitVector>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BitVector::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows; `cols` is needed to shape a matrix with no rows.
    pub fn from_rows(cols: usize, rows: Vec<BitVector>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row of length {} in a matrix with {cols} columns",
                bad.len()
            )));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows,
        })
    }

    /// Builds a matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(rows: usize, columns: &[BitVector]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::DimensionMismatch(format!(
                    "column of length {} in a matrix with {rows} rows",
                    c.len()
                )));
            }
            for i in c.iter_ones() {
                m.data[i].set(j, true);
            }
        }
        Ok(m)
    }

    /// Parses rows written as `0`/`1` strings, e.g. `["110", "011"]`.
    pub fn parse_rows(rows: &[&str]) -> Option<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let data: Option<Vec<BitVector>> = rows.iter().map(|r| BitVector::parse(r)).collect();
        Self::from_rows(cols, data?).ok()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i].get(j)
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.data[i].set(j, value);
    }

    pub fn row(&self, i: usize) -> &BitVector {
        &self.data[i]
    }

    pub fn row_vectors(&self) -> &[BitVector] {
        &self.data
    }

    pub fn column(&self, j: usize) -> BitVector {
        assert!(j < self.cols);
        let mut c = BitVector::zeros(self.rows);
        for (i, r) in self.data.iter().enumerate() {
            if r.get(j) {
                c.set(i, true);
            }
        }
        c
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for (i, r) in self.data.iter().enumerate() {
            for j in r.iter_ones() {
                t.data[j].set(i, true);
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(BitVector::is_zero)
    }

    /// Stacks `self` on top of `below`.
    pub fn vstack(&self, below: &Self) -> Result<Self> {
        if self.cols != below.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack {} columns over {}",
                self.cols, below.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend(below.data.iter().cloned());
        Ok(Self {
            rows: self.rows + below.rows,
            cols: self.cols,
            data,
        })
    }

    /// Matrix product over GF(2).
    pub fn multiply(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let data = self
            .data
            .iter()
            .map(|r| {
                let mut acc = BitVector::zeros(rhs.cols);
                for j in r.iter_ones() {
                    acc.xor_assign(&rhs.data[j]);
                }
                acc
            })
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: rhs.cols,
            data,
        })
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &BitVector) -> Result<BitVector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = BitVector::zeros(self.rows);
        for (i, r) in self.data.iter().enumerate() {
            if r.dot(v) {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// Rank by forward elimination on a copy of the rows.
    pub fn rank(&self) -> usize {
        let mut rows = self.data.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(pivot) = (rank..rows.len()).find(|&i| rows[i].get(col)) else {
                continue;
            };
            rows.swap(rank, pivot);
            let (head, tail) = rows.split_at_mut(rank + 1);
            let p = &head[rank];
            let w = col / WORD;
            let mask = 1u64 << (col % WORD);
            for r in tail.iter_mut() {
                if r.words[w] & mask != 0 {
                    // Words left of the pivot word are already zero in both rows.
                    for (a, b) in r.words[w..].iter_mut().zip(&p.words[w..]) {
                        *a ^= b;
                    }
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }

    /// Greedy left-to-right column basis: column `j` is kept iff it is not in
    /// the span of the columns kept before it. Returns the kept indices and the
    /// matrix stacking those columns in index order.
    pub fn column_basis(&self) -> (Vec<usize>, BitMatrix) {
        let mut basis = EchelonBasis::new(self.rows);
        let mut indices = Vec::new();
        let mut columns = Vec::new();
        for (j, c) in self.transpose().data.into_iter().enumerate() {
            if basis.rank == self.rows {
                break;
            }
            if basis.insert(c.clone()) {
                indices.push(j);
                columns.push(c);
            }
        }
        let q = BitMatrix::from_columns(self.rows, &columns).expect("columns share the row count");
        (indices, q)
    }

    /// A matrix `P` with `P · self = I`. Requires independent columns.
    pub fn left_inverse(&self) -> Result<BitMatrix> {
        let (n, k) = (self.rows, self.cols);
        // Gauss-Jordan on [Q | I_n]; the first k rows of the transform give P.
        let mut aug: Vec<BitVector> = (0..n)
            .map(|i| self.data[i].concat(&BitVector::unit(n, i)))
            .collect();
        for c in 0..k {
            let pivot = (c..n)
                .find(|&i| aug[i].get(c))
                .ok_or(Error::DependentColumns)?;
            aug.swap(c, pivot);
            let p = aug[c].clone();
            for (i, r) in aug.iter_mut().enumerate() {
                if i != c && r.get(c) {
                    r.xor_assign(&p);
                }
            }
        }
        let rows = aug.iter().take(k).map(|r| r.slice(k, k + n)).collect();
        BitMatrix::from_rows(n, rows)
    }

    /// Whether `v` is a sum of rows of `self`.
    pub fn row_space_member(&self, v: &BitVector) -> Result<bool> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        let mut basis = EchelonBasis::new(self.cols);
        for r in &self.data {
            basis.insert(r.clone());
        }
        Ok(basis.reduce(v.clone()).is_zero())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for r in &self.data {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}
