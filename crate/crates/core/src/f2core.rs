//! Linear algebra over F2.
//!
//! Vectors are packed into `u64` words. Matrices keep dense row bitsets as
//! the compute representation; sparse coordinate lists are accepted on input
//! and produced for serialization. Elimination always pivots on columns in
//! ascending order, so every basis and solution returned here is a
//! deterministic function of the input.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest number of nonzero entries a matrix may carry.
pub const MAX_NNZ: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum F2Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("entry ({row}, {col}) out of range for {rows}x{cols} matrix")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("matrix has {0} nonzeros, above the limit of {MAX_NNZ}")]
    TooLarge(usize),
    #[error("subspace is not contained in the ambient span")]
    NotContained,
}

// ============================================================================
// F2Vector
// ============================================================================

/// A vector over F2 of fixed length.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct F2Vector {
    words: Vec<u64>,
    len: usize,
}

impl F2Vector {
    #[must_use]
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    #[must_use]
    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for w in &mut v.words {
            *w = u64::MAX;
        }
        v.mask_tail();
        v
    }

    /// Vector with the listed coordinates set. Repeated indices cancel.
    ///
    /// # Panics
    /// Panics if an index is out of range.
    #[must_use]
    pub fn from_indices(len: usize, idx: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in idx {
            v.flip(i);
        }
        v
    }

    #[must_use]
    pub fn unit(len: usize, i: usize) -> Self {
        Self::from_indices(len, &[i])
    }

    #[must_use]
    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    fn mask_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    #[must_use]
    pub const fn len(&self) -> usize {
        self.len
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[must_use]
    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// # Panics
    /// Panics if `i >= len`.
    #[must_use]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range (len={})", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range (len={})", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range (len={})", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    /// In-place addition (XOR).
    ///
    /// # Panics
    /// Panics on length mismatch.
    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "length mismatch in F2 addition");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    #[must_use]
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    /// Coordinatewise product.
    #[must_use]
    pub fn and(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len, "length mismatch in F2 product");
        Self {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
            len: self.len,
        }
    }

    /// Standard bilinear pairing mod 2.
    #[must_use]
    pub fn dot(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in F2 dot");
        let mut acc = 0u32;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= (a & b).count_ones() & 1;
        }
        acc == 1
    }

    #[must_use]
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Index of the lowest set coordinate.
    #[must_use]
    pub fn first_one(&self) -> Option<usize> {
        for (k, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(k * 64 + w.trailing_zeros() as usize);
            }
        }
        None
    }

    /// Set coordinates in ascending order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * 64 + t)
                }
            })
        })
    }

    #[must_use]
    pub fn support(&self) -> Vec<usize> {
        self.iter_ones().collect()
    }

    /// Concatenation `self ++ other`.
    #[must_use]
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

    /// Sub-vector of coordinates `start..start+len`.
    #[must_use]
    pub fn slice(&self, start: usize, len: usize) -> Self {
        let mut out = Self::zeros(len);
        for i in self.iter_ones() {
            if i >= start && i < start + len {
                out.set(i - start, true);
            }
        }
        out
    }
}

impl fmt::Debug for F2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F2Vector[{}]{:?}", self.len, self.support())
    }
}

impl Serialize for F2Vector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            len: usize,
            ones: Vec<usize>,
        }
        Repr {
            len: self.len,
            ones: self.support(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for F2Vector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            len: usize,
            ones: Vec<usize>,
        }
        let r = Repr::deserialize(d)?;
        if let Some(&bad) = r.ones.iter().find(|&&i| i >= r.len) {
            return Err(serde::de::Error::custom(format!(
                "index {bad} out of range for length {}",
                r.len
            )));
        }
        Ok(F2Vector::from_indices(r.len, &r.ones))
    }
}

// ============================================================================
// F2Matrix
// ============================================================================

/// A matrix over F2 stored as packed rows.
#[derive(Clone, PartialEq, Eq)]
pub struct F2Matrix {
    rows: usize,
    cols: usize,
    data: Vec<F2Vector>,
}

impl fmt::Debug for F2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F2Matrix {}x{} {:?}", self.rows, self.cols, self.coo())
    }
}

impl F2Matrix {
    #[must_use]
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![F2Vector::zeros(cols); rows],
        }
    }

    #[must_use]
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i].set(i, true);
        }
        m
    }

    /// Builds a matrix from coordinates; duplicates cancel mod 2.
    pub fn from_coo(rows: usize, cols: usize, entries: &[(usize, usize)]) -> Result<Self, F2Error> {
        if entries.len() > MAX_NNZ {
            return Err(F2Error::TooLarge(entries.len()));
        }
        let mut m = Self::zeros(rows, cols);
        for &(r, c) in entries {
            if r >= rows || c >= cols {
                return Err(F2Error::OutOfRange {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
            m.data[r].flip(c);
        }
        Ok(m)
    }

    /// Builds a matrix whose rows are the given vectors.
    pub fn from_rows(cols: usize, rows: Vec<F2Vector>) -> Result<Self, F2Error> {
        for r in &rows {
            if r.len() != cols {
                return Err(F2Error::Dimension {
                    expected: cols,
                    got: r.len(),
                });
            }
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows,
        })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(rows: usize, cols: &[F2Vector]) -> Result<Self, F2Error> {
        Ok(Self::from_rows(rows, cols.to_vec())?.transpose())
    }

    #[must_use]
    pub const fn rows(&self) -> usize {
        self.rows
    }

    #[must_use]
    pub const fn cols(&self) -> usize {
        self.cols
    }

    #[must_use]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.data[r].set(c, value);
    }

    pub fn flip(&mut self, r: usize, c: usize) {
        self.data[r].flip(c);
    }

    #[must_use]
    pub fn row(&self, r: usize) -> &F2Vector {
        &self.data[r]
    }

    #[must_use]
    pub fn row_vectors(&self) -> &[F2Vector] {
        &self.data
    }

    #[must_use]
    pub fn col(&self, c: usize) -> F2Vector {
        let mut v = F2Vector::zeros(self.rows);
        for r in 0..self.rows {
            if self.data[r].get(c) {
                v.set(r, true);
            }
        }
        v
    }

    #[must_use]
    pub fn col_vectors(&self) -> Vec<F2Vector> {
        self.transpose().data
    }

    /// Sorted coordinate list of the nonzero entries.
    #[must_use]
    pub fn coo(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (r, row) in self.data.iter().enumerate() {
            out.extend(row.iter_ones().map(|c| (r, c)));
        }
        out
    }

    #[must_use]
    pub fn nnz(&self) -> usize {
        self.data.iter().map(F2Vector::weight).sum()
    }

    #[must_use]
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(F2Vector::is_zero)
    }

    #[must_use]
    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for (r, row) in self.data.iter().enumerate() {
            for c in row.iter_ones() {
                t.data[c].set(r, true);
            }
        }
        t
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &F2Vector) -> Result<F2Vector, F2Error> {
        if v.len() != self.cols {
            return Err(F2Error::Dimension {
                expected: self.cols,
                got: v.len(),
            });
        }
        let mut out = F2Vector::zeros(self.rows);
        for (r, row) in self.data.iter().enumerate() {
            if row.dot(v) {
                out.set(r, true);
            }
        }
        Ok(out)
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Self, F2Error> {
        if self.cols != other.rows {
            return Err(F2Error::Dimension {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for (r, row) in self.data.iter().enumerate() {
            for k in row.iter_ones() {
                out.data[r].add_assign(&other.data[k]);
            }
        }
        Ok(out)
    }

    #[must_use]
    pub fn max_row_weight(&self) -> usize {
        self.data.iter().map(F2Vector::weight).max().unwrap_or(0)
    }

    #[must_use]
    pub fn max_col_weight(&self) -> usize {
        self.transpose().max_row_weight()
    }

    /// Permutes rows and columns: entry (r, c) moves to (row_perm[r], col_perm[c]).
    #[must_use]
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, self.cols);
        for (r, c) in self.coo() {
            out.data[row_perm[r]].set(col_perm[c], true);
        }
        out
    }

    /// Sparse JSON form.
    #[must_use]
    pub fn to_sparse(&self) -> SparseMatrix {
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            nnz: self.coo().into_iter().map(|(r, c)| [r, c]).collect(),
        }
    }
}

/// Coordinate-list serialization of an [`F2Matrix`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub nnz: Vec<[usize; 2]>,
}

impl SparseMatrix {
    pub fn to_dense(&self) -> Result<F2Matrix, F2Error> {
        let entries: Vec<(usize, usize)> = self.nnz.iter().map(|e| (e[0], e[1])).collect();
        F2Matrix::from_coo(self.rows, self.cols, &entries)
    }
}

impl Serialize for F2Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_sparse().serialize(s)
    }
}

impl<'de> Deserialize<'de> for F2Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        SparseMatrix::deserialize(d)?
            .to_dense()
            .map_err(serde::de::Error::custom)
    }
}

// ============================================================================
// Elimination
// ============================================================================

/// Reduced row echelon form of a matrix, pivots chosen column by column.
#[derive(Debug, Clone)]
struct Echelon {
    rows: Vec<F2Vector>,
    pivots: Vec<usize>,
}

fn echelon(m: &F2Matrix) -> Echelon {
    let mut rows: Vec<F2Vector> = m.data.clone();
    let mut pivots = Vec::new();
    let mut next = 0;
    for c in 0..m.cols {
        if next == rows.len() {
            break;
        }
        let Some(p) = (next..rows.len()).find(|&r| rows[r].get(c)) else {
            continue;
        };
        rows.swap(next, p);
        let pivot_row = rows[next].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != next && row.get(c) {
                row.add_assign(&pivot_row);
            }
        }
        pivots.push(c);
        next += 1;
    }
    rows.truncate(next);
    Echelon { rows, pivots }
}

#[must_use]
pub fn rank(m: &F2Matrix) -> usize {
    echelon(m).pivots.len()
}

/// Basis of `{v : m v = 0}`, one vector per free column in ascending order.
#[must_use]
pub fn kernel_basis(m: &F2Matrix) -> Vec<F2Vector> {
    let e = echelon(m);
    let mut is_pivot = vec![false; m.cols];
    for &p in &e.pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for free in (0..m.cols).filter(|&c| !is_pivot[c]) {
        let mut v = F2Vector::unit(m.cols, free);
        for (row, &p) in e.rows.iter().zip(&e.pivots) {
            if row.get(free) {
                v.set(p, true);
            }
        }
        basis.push(v);
    }
    basis
}

/// Basis of the column space, given as the pivot columns of `m`.
#[must_use]
pub fn image_basis(m: &F2Matrix) -> Vec<F2Vector> {
    let e = echelon(m);
    e.pivots.iter().map(|&c| m.col(c)).collect()
}

/// Some `x` with `m x = b`, or `None` when `b` is outside the column space.
/// Free variables are set to zero.
pub fn solve(m: &F2Matrix, b: &F2Vector) -> Result<Option<F2Vector>, F2Error> {
    if b.len() != m.rows {
        return Err(F2Error::Dimension {
            expected: m.rows,
            got: b.len(),
        });
    }
    // Augment each row with its right-hand side bit.
    let aug_rows: Vec<F2Vector> = m
        .data
        .iter()
        .enumerate()
        .map(|(r, row)| row.concat(&F2Vector::from_bools(&[b.get(r)])))
        .collect();
    let aug = F2Matrix::from_rows(m.cols + 1, aug_rows)?;
    let e = echelon(&aug);
    if e.pivots.last() == Some(&m.cols) {
        return Ok(None);
    }
    let mut x = F2Vector::zeros(m.cols);
    for (row, &p) in e.rows.iter().zip(&e.pivots) {
        if row.get(m.cols) {
            x.set(p, true);
        }
    }
    Ok(Some(x))
}

/// Inverse of a square matrix, or `None` if it is singular.
#[must_use]
pub fn inverse(m: &F2Matrix) -> Option<F2Matrix> {
    if m.rows != m.cols {
        return None;
    }
    let n = m.rows;
    let aug: Vec<F2Vector> = (0..n)
        .map(|r| m.data[r].concat(&F2Vector::unit(n, r)))
        .collect();
    let e = echelon(&F2Matrix::from_rows(2 * n, aug).ok()?);
    if e.pivots.len() < n || e.pivots[n - 1] >= n {
        return None;
    }
    let rows = e.rows.iter().map(|r| r.slice(n, n)).collect();
    F2Matrix::from_rows(n, rows).ok()
}

/// Vectors from `within` that extend `subspace` to a basis of `span(within)`.
///
/// The result is a set of coset representatives for the quotient, chosen
/// greedily in input order.
pub fn quotient_basis(
    subspace: &[F2Vector],
    within: &[F2Vector],
) -> Result<Vec<F2Vector>, F2Error> {
    let Some(len) = within.first().or(subspace.first()).map(F2Vector::len) else {
        return Ok(Vec::new());
    };
    let mut ambient = Span::new(len);
    for w in within {
        ambient.insert(w);
    }
    if subspace.iter().any(|s| !ambient.contains(s)) {
        return Err(F2Error::NotContained);
    }
    let mut span = Span::new(len);
    for s in subspace {
        span.insert(s);
    }
    let mut reps = Vec::new();
    for w in within {
        if span.insert(w) {
            reps.push(w.clone());
        }
    }
    Ok(reps)
}

// ============================================================================
// Incremental span
// ============================================================================

/// An incrementally built subspace in reduced echelon form.
///
/// Each stored row has a distinct leading coordinate. Inserting
/// or testing a vector costs one pass over the stored rows.
#[derive(Debug, Clone)]
pub struct Span {
    len: usize,
    rows: Vec<F2Vector>,
    leads: Vec<usize>,
}

impl Span {
    #[must_use]
    pub fn new(len: usize) -> Self {
        Self {
            len,
            rows: Vec::new(),
            leads: Vec::new(),
        }
    }

    #[must_use]
    pub fn from_vectors(len: usize, vs: &[F2Vector]) -> Self {
        let mut s = Self::new(len);
        for v in vs {
            s.insert(v);
        }
        s
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    #[must_use]
    pub const fn ambient_len(&self) -> usize {
        self.len
    }

    /// Remainder of `v` after elimination against the stored rows.
    #[must_use]
    pub fn reduce(&self, v: &F2Vector) -> F2Vector {
        let mut r = v.clone();
        for (row, &lead) in self.rows.iter().zip(&self.leads) {
            if r.get(lead) {
                r.add_assign(row);
            }
        }
        r
    }

    #[must_use]
    pub fn contains(&self, v: &F2Vector) -> bool {
        self.reduce(v).is_zero()
    }

    /// Adds `v`; returns whether the dimension grew.
    pub fn insert(&mut self, v: &F2Vector) -> bool {
        assert_eq!(v.len(), self.len, "length mismatch in span insert");
        let r = self.reduce(v);
        let Some(lead) = r.first_one() else {
            return false;
        };
        for row in &mut self.rows {
            if row.get(lead) {
                row.add_assign(&r);
            }
        }
        self.rows.push(r);
        self.leads.push(lead);
        true
    }

    /// Stored rows in reduced row echelon form, ordered by leading coordinate.
    #[must_use]
    pub fn rref_rows(&self) -> Vec<F2Vector> {
        let mut idx: Vec<usize> = (0..self.rows.len()).collect();
        idx.sort_by_key(|&k| self.leads[k]);
        idx.into_iter().map(|k| self.rows[k].clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toric_l2_d1() -> F2Matrix {
        // vertices y*2+x, horizontal edges y*2+x, vertical edges 4+y*2+x
        let l = 2;
        let mut e = Vec::new();
        for y in 0..l {
            for x in 0..l {
                let h = y * l + x;
                e.push((y * l + x, h));
                e.push((y * l + (x + 1) % l, h));
                let u = l * l + y * l + x;
                e.push((y * l + x, u));
                e.push((((y + 1) % l) * l + x, u));
            }
        }
        F2Matrix::from_coo(4, 8, &e).unwrap()
    }

    #[test]
    fn rank_basics() {
        assert_eq!(rank(&F2Matrix::zeros(3, 3)), 0);
        assert_eq!(rank(&F2Matrix::identity(4)), 4);
        assert_eq!(rank(&toric_l2_d1()), 3);
    }

    #[test]
    fn kernel_of_toric_boundary() {
        let m = toric_l2_d1();
        let k = kernel_basis(&m);
        assert_eq!(k.len(), 5);
        for v in &k {
            assert!(m.mul_vec(v).unwrap().is_zero());
        }
        assert_eq!(Span::from_vectors(8, &k).dim(), 5);
        assert!(kernel_basis(&F2Matrix::identity(4)).is_empty());
    }

    #[test]
    fn duplicates_cancel() {
        let m = F2Matrix::from_coo(2, 2, &[(0, 0), (0, 0), (1, 1)]).unwrap();
        assert_eq!(m.coo(), vec![(1, 1)]);
        assert!(F2Matrix::from_coo(2, 2, &[(2, 0)]).is_err());
    }

    #[test]
    fn solve_cases() {
        let id = F2Matrix::identity(5);
        let b = F2Vector::from_indices(5, &[0, 3]);
        assert_eq!(solve(&id, &b).unwrap(), Some(b.clone()));
        let m = toric_l2_d1();
        assert_eq!(solve(&m, &F2Vector::unit(4, 2)).unwrap(), None);
        let b = F2Vector::from_indices(4, &[0, 3]);
        let x = solve(&m, &b).unwrap().unwrap();
        assert_eq!(m.mul_vec(&x).unwrap(), b);
        assert!(solve(&m, &F2Vector::zeros(3)).is_err());
    }

    #[test]
    fn quotient_cases() {
        let m = toric_l2_d1();
        let within = kernel_basis(&m);
        assert!(quotient_basis(&within, &within).unwrap().is_empty());
        let bogus = vec![F2Vector::unit(8, 0)];
        assert_eq!(quotient_basis(&bogus, &within), Err(F2Error::NotContained));
    }

    #[test]
    fn image_matches_rank() {
        let m = toric_l2_d1();
        let im = image_basis(&m);
        assert_eq!(im.len(), 3);
        assert_eq!(rank(&m.transpose()), 3);
    }

    #[test]
    fn vector_ops() {
        let v = F2Vector::from_indices(70, &[1, 65, 69]);
        assert_eq!(v.weight(), 3);
        assert_eq!(v.first_one(), Some(1));
        assert_eq!(v.support(), vec![1, 65, 69]);
        assert_eq!(F2Vector::ones(70).weight(), 70);
        let json = serde_json::to_string(&v).unwrap();
        let back: F2Vector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
