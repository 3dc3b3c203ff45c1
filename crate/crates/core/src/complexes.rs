//! Level-(2+1) chain complexes: 2-cells (Z checks) -> 1-cells (qubits) -> 0-cells (X checks).
//!
//! Constructors cover the toric code, the periodic Ising chain, the
//! plaquette Ising model, hypergraph products, bivariate bicycle codes,
//! graph cluster complexes and the one-vertex torus.

use crate::f2core::{self, F2Error, F2Matrix, F2Vector, Span};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComplexError {
    #[error("invalid size: {0}")]
    Size(String),
    #[error("chain condition violated: d1 * d2 != 0")]
    ChainCondition,
    #[error("inconsistent dimensions: {0}")]
    Shape(String),
    #[error("cannot parse monomial {0:?}")]
    Monomial(String),
    #[error("graph is not simple: {0}")]
    Graph(String),
    #[error(transparent)]
    F2(#[from] F2Error),
}

/// Geometric name of a basis cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellLabel {
    pub kind: String,
    pub coords: Vec<i64>,
}

impl CellLabel {
    #[must_use]
    pub fn new(kind: &str, coords: &[i64]) -> Self {
        Self {
            kind: kind.to_string(),
            coords: coords.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Labels {
    pub d0: Vec<CellLabel>,
    pub d1: Vec<CellLabel>,
    pub d2: Vec<CellLabel>,
}

/// Which constructor produced a complex, with its parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family", content = "params")]
pub enum Family {
    Toric { l: usize },
    Alp { lx: usize, ly: usize, lz: usize },
    Bb {
        f: Vec<(i64, i64)>,
        g: Vec<(i64, i64)>,
        lx: usize,
        ly: usize,
    },
    Hgp,
    Graph,
    MinimalTorus,
    Custom,
}

/// A level-(2+1) chain complex over F2.
///
/// `d2` is the boundary map from 2-cells to 1-cells (|D1| x |D2|) and `d1`
/// the boundary map from 1-cells to 0-cells (|D0| x |D1|). Coboundaries are
/// the transposes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainComplex {
    pub d2: F2Matrix,
    pub d1: F2Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Labels>,
    #[serde(flatten)]
    pub family: Family,
}

impl ChainComplex {
    /// Checks shapes and the chain condition.
    pub fn new(
        d2: F2Matrix,
        d1: F2Matrix,
        labels: Option<Labels>,
        family: Family,
    ) -> Result<Self, ComplexError> {
        let c = Self::unchecked(d2, d1, labels, family)?;
        if !c.validate().chain_ok {
            return Err(ComplexError::ChainCondition);
        }
        Ok(c)
    }

    /// Checks shapes only.
    pub fn unchecked(
        d2: F2Matrix,
        d1: F2Matrix,
        labels: Option<Labels>,
        family: Family,
    ) -> Result<Self, ComplexError> {
        if d1.cols() != d2.rows() {
            return Err(ComplexError::Shape(format!(
                "d1 has {} columns but d2 has {} rows",
                d1.cols(),
                d2.rows()
            )));
        }
        if let Some(l) = &labels {
            if l.d0.len() != d1.rows() || l.d1.len() != d1.cols() || l.d2.len() != d2.cols() {
                return Err(ComplexError::Shape("label counts do not match cells".into()));
            }
        }
        Ok(Self {
            d2,
            d1,
            labels,
            family,
        })
    }

    #[must_use]
    pub fn n0(&self) -> usize {
        self.d1.rows()
    }

    #[must_use]
    pub fn n1(&self) -> usize {
        self.d1.cols()
    }

    #[must_use]
    pub fn n2(&self) -> usize {
        self.d2.cols()
    }

    /// Number of cells of degree `k`.
    #[must_use]
    pub fn size(&self, k: usize) -> usize {
        match k {
            0 => self.n0(),
            1 => self.n1(),
            2 => self.n2(),
            _ => 0,
        }
    }

    /// Coboundary of the basis cochain of degree `k` at cell `i`, as a list of cells.
    #[must_use]
    pub fn coboundary_cell(&self, k: usize, i: usize) -> Vec<usize> {
        match k {
            0 => self.d1.row(i).support(),
            1 => self.d2.row(i).support(),
            _ => Vec::new(),
        }
    }

    /// Coboundary of a `k`-cochain.
    #[must_use]
    pub fn coboundary(&self, k: usize, a: &F2Vector) -> F2Vector {
        let mut out = F2Vector::zeros(self.size(k + 1));
        for i in a.iter_ones() {
            for j in self.coboundary_cell(k, i) {
                out.flip(j);
            }
        }
        out
    }

    /// Boundary of a `k`-chain.
    #[must_use]
    pub fn boundary(&self, k: usize, c: &F2Vector) -> F2Vector {
        match k {
            1 => self.d1.mul_vec(c).expect("chain length"),
            2 => self.d2.mul_vec(c).expect("chain length"),
            _ => F2Vector::zeros(0),
        }
    }

    #[must_use]
    pub fn validate(&self) -> ValidationReport {
        let chain_ok = self.d1.cols() == self.d2.rows()
            && self.d1.mul(&self.d2).map(|m| m.is_zero()).unwrap_or(false);
        ValidationReport {
            chain_ok,
            x_check_weight: self.d1.max_row_weight(),
            qubit_x_degree: self.d1.max_col_weight(),
            qubit_z_degree: self.d2.max_row_weight(),
            z_check_weight: self.d2.max_col_weight(),
        }
    }

    pub fn homology(&self) -> Result<HomologySummary, ComplexError> {
        if !self.validate().chain_ok {
            return Err(ComplexError::ChainCondition);
        }
        let r1 = f2core::rank(&self.d1);
        let r2 = f2core::rank(&self.d2);
        let (n0, n1, n2) = (self.n0(), self.n1(), self.n2());
        let ker_d1 = f2core::kernel_basis(&self.d1);
        let im_d2 = self.d2.col_vectors();
        let cycle_reps = f2core::quotient_basis(&im_d2, &ker_d1)?;
        let d1t = self.d1.transpose();
        let d2t = self.d2.transpose();
        let ker_d2t = f2core::kernel_basis(&d2t);
        let im_d1t = d1t.col_vectors();
        let cocycle_reps = f2core::quotient_basis(&im_d1t, &ker_d2t)?;
        let h2_reps = f2core::kernel_basis(&self.d2);
        let h0_co_reps = f2core::kernel_basis(&d1t);
        let h = (n0 - r1, n1 - r1 - r2, n2 - r2);
        Ok(HomologySummary {
            dims: h,
            codims: (h0_co_reps.len(), cocycle_reps.len(), n2 - r2),
            cycle_reps,
            cocycle_reps,
            h2_reps,
            h0_co_reps,
        })
    }

    #[must_use]
    pub fn label(&self, k: usize, i: usize) -> Option<&CellLabel> {
        let l = self.labels.as_ref()?;
        match k {
            0 => l.d0.get(i),
            1 => l.d1.get(i),
            2 => l.d2.get(i),
            _ => None,
        }
    }

    /// Vertices in the closure of a cell of degree `k`.
    #[must_use]
    pub fn closure_vertices(&self, k: usize, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = match k {
            0 => vec![i],
            1 => self.d1.col(i).support(),
            2 => self
                .d2
                .col(i)
                .iter_ones()
                .flat_map(|e| self.d1.col(e).support())
                .collect(),
            _ => Vec::new(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub chain_ok: bool,
    /// Max row weight of d1: the heaviest X check.
    pub x_check_weight: usize,
    /// Max column weight of d1: X checks touching one qubit.
    pub qubit_x_degree: usize,
    /// Max row weight of d2: Z checks touching one qubit.
    pub qubit_z_degree: usize,
    /// Max column weight of d2: the heaviest Z check.
    pub z_check_weight: usize,
}

/// Homology and cohomology of a complex with representatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomologySummary {
    /// (h0, h1, h2)
    pub dims: (usize, usize, usize),
    /// (h^0, h^1, h^2)
    pub codims: (usize, usize, usize),
    /// H1 representatives (Z logicals).
    pub cycle_reps: Vec<F2Vector>,
    /// H^1 representatives (X logicals).
    pub cocycle_reps: Vec<F2Vector>,
    /// Basis of H2 = ker d2.
    pub h2_reps: Vec<F2Vector>,
    /// Basis of H^0 = ker d0.
    pub h0_co_reps: Vec<F2Vector>,
}

// ============================================================================
// Sublattice layout
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sublattice {
    #[serde(rename = "a")]
    Vertex,
    #[serde(rename = "A")]
    Gauge,
    B,
    C,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutBlock {
    pub sublattice: Sublattice,
    pub start: usize,
    pub len: usize,
}

/// Global qubit numbering across sublattices, blocks contiguous in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeLayout {
    pub blocks: Vec<LayoutBlock>,
}

impl CodeLayout {
    #[must_use]
    pub fn new(parts: &[(Sublattice, usize)]) -> Self {
        let mut start = 0;
        let mut blocks = Vec::new();
        for &(sublattice, len) in parts {
            blocks.push(LayoutBlock {
                sublattice,
                start,
                len,
            });
            start += len;
        }
        Self { blocks }
    }

    #[must_use]
    pub fn total(&self) -> usize {
        self.blocks.iter().map(|b| b.len).sum()
    }

    #[must_use]
    pub fn block(&self, s: Sublattice) -> Option<&LayoutBlock> {
        self.blocks.iter().find(|b| b.sublattice == s)
    }

    /// Global index of local cell `i` in sublattice `s`.
    ///
    /// # Panics
    /// Panics if the sublattice is absent or `i` is out of range.
    #[must_use]
    pub fn q(&self, s: Sublattice, i: usize) -> usize {
        let b = self
            .block(s)
            .unwrap_or_else(|| panic!("sublattice {s:?} not in layout"));
        assert!(i < b.len, "index {i} out of range for {s:?}");
        b.start + i
    }

    /// Sublattice and local index of a global qubit.
    #[must_use]
    pub fn locate(&self, q: usize) -> Option<(Sublattice, usize)> {
        self.blocks
            .iter()
            .find(|b| q >= b.start && q < b.start + b.len)
            .map(|b| (b.sublattice, q - b.start))
    }

    /// Embeds a local vector on sublattice `s` into the global numbering.
    #[must_use]
    pub fn embed(&self, s: Sublattice, v: &F2Vector) -> F2Vector {
        let mut out = F2Vector::zeros(self.total());
        for i in v.iter_ones() {
            out.set(self.q(s, i), true);
        }
        out
    }
}

// ============================================================================
// One-level complexes
// ============================================================================

/// A classical code as a two-term complex C1 -> C0 (bits -> checks in the
/// hypergraph product convention). `d` is |C0| x |C1|.
#[derive(Debug, Clone, PartialEq)]
pub struct OneLevel {
    pub d: F2Matrix,
    pub labels0: Vec<CellLabel>,
    pub labels1: Vec<CellLabel>,
    pub kind: OneLevelKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OneLevelKind {
    Ising { n: usize },
    PlaquetteIsing { lx: usize, ly: usize },
    Custom,
}

impl OneLevel {
    #[must_use]
    pub fn n0(&self) -> usize {
        self.d.rows()
    }

    #[must_use]
    pub fn n1(&self) -> usize {
        self.d.cols()
    }

    /// dim ker d (the 1-cycles).
    #[must_use]
    pub fn h1(&self) -> usize {
        self.n1() - f2core::rank(&self.d)
    }

    /// dim coker d.
    #[must_use]
    pub fn h0(&self) -> usize {
        self.n0() - f2core::rank(&self.d)
    }
}

/// Periodic Ising chain: edge `x` joins vertices `x` and `x+1`.
pub fn build_classical_ising(n: usize) -> Result<OneLevel, ComplexError> {
    if n < 2 {
        return Err(ComplexError::Size(format!("Ising chain needs N >= 2, got {n}")));
    }
    let mut e = Vec::new();
    for x in 0..n {
        e.push((x, x));
        e.push(((x + 1) % n, x));
    }
    Ok(OneLevel {
        d: F2Matrix::from_coo(n, n, &e)?,
        labels0: (0..n).map(|x| CellLabel::new("v", &[x as i64])).collect(),
        labels1: (0..n).map(|x| CellLabel::new("e", &[x as i64])).collect(),
        kind: OneLevelKind::Ising { n },
    })
}

/// Periodic plaquette Ising model. Vertex `(x,y)` has index `y*lx + x`,
/// plaquette `(x,y)` (lower-left corner) the same index.
pub fn build_plaquette_ising(lx: usize, ly: usize) -> Result<OneLevel, ComplexError> {
    if lx < 2 || ly < 2 {
        return Err(ComplexError::Size(format!(
            "plaquette Ising needs sizes >= 2, got {lx}x{ly}"
        )));
    }
    let n = lx * ly;
    let idx = |x: usize, y: usize| (y % ly) * lx + (x % lx);
    let mut e = Vec::new();
    for y in 0..ly {
        for x in 0..lx {
            let p = idx(x, y);
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                e.push((idx(x + dx, y + dy), p));
            }
        }
    }
    let mut labels0 = Vec::new();
    let mut labels1 = Vec::new();
    for y in 0..ly {
        for x in 0..lx {
            labels0.push(CellLabel::new("v", &[x as i64, y as i64]));
            labels1.push(CellLabel::new("p", &[x as i64, y as i64]));
        }
    }
    Ok(OneLevel {
        d: F2Matrix::from_coo(n, n, &e)?,
        labels0,
        labels1,
        kind: OneLevelKind::PlaquetteIsing { lx, ly },
    })
}

/// Index bookkeeping for a hypergraph product of `a` and `b`.
///
/// D2 = A1 x B1, D1 = (A0 x B1) ++ (A1 x B0), D0 = A0 x B0, all row-major
/// in the (a-cell, b-cell) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HgpIndex {
    pub a0: usize,
    pub a1: usize,
    pub b0: usize,
    pub b1: usize,
}

impl HgpIndex {
    #[must_use]
    pub fn new(a: &OneLevel, b: &OneLevel) -> Self {
        Self {
            a0: a.n0(),
            a1: a.n1(),
            b0: b.n0(),
            b1: b.n1(),
        }
    }

    #[must_use]
    pub const fn d0(&self, i0: usize, j0: usize) -> usize {
        i0 * self.b0 + j0
    }

    /// 1-cell from a 0-cell of A and a 1-cell of B.
    #[must_use]
    pub const fn d1_left(&self, i0: usize, j1: usize) -> usize {
        i0 * self.b1 + j1
    }

    /// 1-cell from a 1-cell of A and a 0-cell of B.
    #[must_use]
    pub const fn d1_right(&self, i1: usize, j0: usize) -> usize {
        self.a0 * self.b1 + i1 * self.b0 + j0
    }

    #[must_use]
    pub const fn d2(&self, i1: usize, j1: usize) -> usize {
        i1 * self.b1 + j1
    }

    /// Cell of degree `k` in the product from factor cells of degrees
    /// (`da`, `k - da`). Returns `None` for impossible degree splits.
    #[must_use]
    pub fn cell(&self, da: usize, i: usize, db: usize, j: usize) -> Option<usize> {
        match (da, db) {
            (0, 0) => Some(self.d0(i, j)),
            (0, 1) => Some(self.d1_left(i, j)),
            (1, 0) => Some(self.d1_right(i, j)),
            (1, 1) => Some(self.d2(i, j)),
            _ => None,
        }
    }

    /// Factor decomposition of a product cell: (deg_a, i, deg_b, j).
    #[must_use]
    pub fn split(&self, k: usize, c: usize) -> (usize, usize, usize, usize) {
        match k {
            0 => (0, c / self.b0, 0, c % self.b0),
            1 => {
                if c < self.a0 * self.b1 {
                    (0, c / self.b1, 1, c % self.b1)
                } else {
                    let r = c - self.a0 * self.b1;
                    (1, r / self.b0, 0, r % self.b0)
                }
            }
            2 => (1, c / self.b1, 1, c % self.b1),
            _ => panic!("degree {k} out of range"),
        }
    }
}

/// Hypergraph (tensor) product of two one-level complexes.
pub fn hypergraph_product(a: &OneLevel, b: &OneLevel) -> Result<ChainComplex, ComplexError> {
    let ix = HgpIndex::new(a, b);
    let n2 = ix.a1 * ix.b1;
    let n1 = ix.a0 * ix.b1 + ix.a1 * ix.b0;
    let n0 = ix.a0 * ix.b0;
    let at = a.d.transpose();
    let bt = b.d.transpose();
    let mut e2 = Vec::new();
    for i1 in 0..ix.a1 {
        for j1 in 0..ix.b1 {
            let c = ix.d2(i1, j1);
            for i0 in at.row(i1).iter_ones() {
                e2.push((ix.d1_left(i0, j1), c));
            }
            for j0 in bt.row(j1).iter_ones() {
                e2.push((ix.d1_right(i1, j0), c));
            }
        }
    }
    let mut e1 = Vec::new();
    for i0 in 0..ix.a0 {
        for j1 in 0..ix.b1 {
            let c = ix.d1_left(i0, j1);
            for j0 in bt.row(j1).iter_ones() {
                e1.push((ix.d0(i0, j0), c));
            }
        }
    }
    for i1 in 0..ix.a1 {
        for j0 in 0..ix.b0 {
            let c = ix.d1_right(i1, j0);
            for i0 in at.row(i1).iter_ones() {
                e1.push((ix.d0(i0, j0), c));
            }
        }
    }
    let pair = |la: &CellLabel, lb: &CellLabel| {
        let mut coords = la.coords.clone();
        coords.extend(&lb.coords);
        CellLabel {
            kind: format!("{}{}", la.kind, lb.kind),
            coords,
        }
    };
    let mut labels = Labels::default();
    for i0 in 0..ix.a0 {
        for j0 in 0..ix.b0 {
            labels.d0.push(pair(&a.labels0[i0], &b.labels0[j0]));
        }
    }
    for i0 in 0..ix.a0 {
        for j1 in 0..ix.b1 {
            labels.d1.push(pair(&a.labels0[i0], &b.labels1[j1]));
        }
    }
    for i1 in 0..ix.a1 {
        for j0 in 0..ix.b0 {
            labels.d1.push(pair(&a.labels1[i1], &b.labels0[j0]));
        }
    }
    for i1 in 0..ix.a1 {
        for j1 in 0..ix.b1 {
            labels.d2.push(pair(&a.labels1[i1], &b.labels1[j1]));
        }
    }
    ChainComplex::new(
        F2Matrix::from_coo(n1, n2, &e2)?,
        F2Matrix::from_coo(n0, n1, &e1)?,
        Some(labels),
        Family::Hgp,
    )
}

// ============================================================================
// Toric code
// ============================================================================

/// Index helpers for the periodic square lattice of side `l`.
///
/// Vertex `(x,y)` and plaquette `(x,y)` (lower-left corner) have index
/// `y*l + x`. Horizontal edge `h(x,y)` runs from `(x,y)` to `(x+1,y)` with
/// index `y*l + x`; vertical edge `u(x,y)` runs from `(x,y)` to `(x,y+1)` with
/// index `l*l + y*l + x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToricIndex {
    pub l: usize,
}

impl ToricIndex {
    fn wrap(&self, x: i64) -> usize {
        x.rem_euclid(self.l as i64) as usize
    }

    #[must_use]
    pub fn v(&self, x: i64, y: i64) -> usize {
        self.wrap(y) * self.l + self.wrap(x)
    }

    #[must_use]
    pub fn h(&self, x: i64, y: i64) -> usize {
        self.v(x, y)
    }

    #[must_use]
    pub fn u(&self, x: i64, y: i64) -> usize {
        self.l * self.l + self.v(x, y)
    }

    #[must_use]
    pub fn p(&self, x: i64, y: i64) -> usize {
        self.v(x, y)
    }

    #[must_use]
    pub fn xy(&self, i: usize) -> (i64, i64) {
        let i = i % (self.l * self.l);
        ((i % self.l) as i64, (i / self.l) as i64)
    }

    #[must_use]
    pub fn is_vertical(&self, e: usize) -> bool {
        e >= self.l * self.l
    }
}

pub fn build_toric(l: usize) -> Result<ChainComplex, ComplexError> {
    if l < 2 {
        return Err(ComplexError::Size(format!("toric code needs L >= 2, got {l}")));
    }
    let t = ToricIndex { l };
    let n = l * l;
    let mut e1 = Vec::new();
    let mut e2 = Vec::new();
    let mut labels = Labels::default();
    for i in 0..n {
        let (x, y) = t.xy(i);
        labels.d0.push(CellLabel::new("v", &[x, y]));
        labels.d2.push(CellLabel::new("p", &[x, y]));
        e1.push((t.v(x, y), t.h(x, y)));
        e1.push((t.v(x + 1, y), t.h(x, y)));
        e1.push((t.v(x, y), t.u(x, y)));
        e1.push((t.v(x, y + 1), t.u(x, y)));
        let p = t.p(x, y);
        for e in [t.h(x, y), t.h(x, y + 1), t.u(x, y), t.u(x + 1, y)] {
            e2.push((e, p));
        }
    }
    for i in 0..n {
        let (x, y) = t.xy(i);
        labels.d1.push(CellLabel::new("h", &[x, y]));
    }
    for i in 0..n {
        let (x, y) = t.xy(i);
        labels.d1.push(CellLabel::new("u", &[x, y]));
    }
    ChainComplex::new(
        F2Matrix::from_coo(2 * n, n, &e2)?,
        F2Matrix::from_coo(n, 2 * n, &e1)?,
        Some(labels),
        Family::Toric { l },
    )
}

// ============================================================================
// ALP model
// ============================================================================

/// Index helpers for the ALP complex = Ising(lz) x PlaquetteIsing(lx, ly).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlpIndex {
    pub lx: usize,
    pub ly: usize,
    pub lz: usize,
}

impl AlpIndex {
    fn xy(&self, x: i64, y: i64) -> usize {
        y.rem_euclid(self.ly as i64) as usize * self.lx + x.rem_euclid(self.lx as i64) as usize
    }

    fn z(&self, z: i64) -> usize {
        z.rem_euclid(self.lz as i64) as usize
    }

    #[must_use]
    pub fn plane(&self) -> usize {
        self.lx * self.ly
    }

    #[must_use]
    pub fn vertex(&self, x: i64, y: i64, z: i64) -> usize {
        self.z(z) * self.plane() + self.xy(x, y)
    }

    /// xy-plaquette with lower-left corner (x,y) at height z.
    #[must_use]
    pub fn plaq(&self, x: i64, y: i64, z: i64) -> usize {
        self.z(z) * self.plane() + self.xy(x, y)
    }

    /// z-edge from (x,y,z) to (x,y,z+1).
    #[must_use]
    pub fn zedge(&self, x: i64, y: i64, z: i64) -> usize {
        self.lz * self.plane() + self.z(z) * self.plane() + self.xy(x, y)
    }

    /// Cube with lower corner (x,y,z).
    #[must_use]
    pub fn cube(&self, x: i64, y: i64, z: i64) -> usize {
        self.z(z) * self.plane() + self.xy(x, y)
    }

    /// Coordinates of a cell of degree `k`.
    #[must_use]
    pub fn coords(&self, k: usize, i: usize) -> (i64, i64, i64) {
        let n = self.plane() * self.lz;
        let i = if k == 1 && i >= n { i - n } else { i };
        let z = i / self.plane();
        let r = i % self.plane();
        ((r % self.lx) as i64, (r / self.lx) as i64, z as i64)
    }

    #[must_use]
    pub fn is_zedge(&self, e: usize) -> bool {
        e >= self.plane() * self.lz
    }
}

/// The anisotropic lineon-planeon model as a hypergraph product.
pub fn build_alp(lx: usize, ly: usize, lz: usize) -> Result<ChainComplex, ComplexError> {
    let i = build_classical_ising(lz)?;
    let p = build_plaquette_ising(lx, ly)?;
    let mut c = hypergraph_product(&i, &p)?;
    c.family = Family::Alp { lx, ly, lz };
    let ix = AlpIndex { lx, ly, lz };
    let mut labels = Labels::default();
    for v in 0..c.n0() {
        let (x, y, z) = ix.coords(0, v);
        labels.d0.push(CellLabel::new("v", &[x, y, z]));
    }
    for e in 0..c.n1() {
        let (x, y, z) = ix.coords(1, e);
        let kind = if ix.is_zedge(e) { "ez" } else { "pxy" };
        labels.d1.push(CellLabel::new(kind, &[x, y, z]));
    }
    for q in 0..c.n2() {
        let (x, y, z) = ix.coords(2, q);
        labels.d2.push(CellLabel::new("cube", &[x, y, z]));
    }
    c.labels = Some(labels);
    Ok(c)
}

// ============================================================================
// Bivariate bicycle codes
// ============================================================================

/// Parses a comma-separated monomial list such as `"1,x,x^-1*y"`.
pub fn parse_monomials(s: &str) -> Result<Vec<(i64, i64)>, ComplexError> {
    let mut out = Vec::new();
    for term in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (mut a, mut b) = (0i64, 0i64);
        for factor in term.split('*').map(str::trim) {
            if factor == "1" {
                continue;
            }
            let (var, exp) = match factor.split_once('^') {
                Some((v, e)) => (
                    v.trim(),
                    e.trim()
                        .trim_matches(|c| c == '(' || c == ')')
                        .parse::<i64>()
                        .map_err(|_| ComplexError::Monomial(term.to_string()))?,
                ),
                None => (factor, 1),
            };
            match var {
                "x" => a += exp,
                "y" => b += exp,
                _ => return Err(ComplexError::Monomial(term.to_string())),
            }
        }
        out.push((a, b));
    }
    if out.is_empty() {
        return Err(ComplexError::Monomial(s.to_string()));
    }
    Ok(out)
}

/// Index helpers for a bivariate bicycle code on an `lx` x `ly` torus.
/// Qubit `H(i,j)` is `i*ly + j`, `V(i,j)` is `lx*ly + i*ly + j`; checks and
/// plaquettes use `i*ly + j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BbIndex {
    pub lx: usize,
    pub ly: usize,
}

impl BbIndex {
    #[must_use]
    pub fn site(&self, i: i64, j: i64) -> usize {
        i.rem_euclid(self.lx as i64) as usize * self.ly + j.rem_euclid(self.ly as i64) as usize
    }

    #[must_use]
    pub fn h(&self, i: i64, j: i64) -> usize {
        self.site(i, j)
    }

    #[must_use]
    pub fn v(&self, i: i64, j: i64) -> usize {
        self.lx * self.ly + self.site(i, j)
    }

    #[must_use]
    pub fn ij(&self, s: usize) -> (i64, i64) {
        let s = s % (self.lx * self.ly);
        ((s / self.ly) as i64, (s % self.ly) as i64)
    }

    #[must_use]
    pub fn is_v(&self, q: usize) -> bool {
        q >= self.lx * self.ly
    }
}

/// Bivariate bicycle code with H_X = (f | g) and H_Z = (g^T | f^T).
pub fn build_bb_code(
    f: &[(i64, i64)],
    g: &[(i64, i64)],
    lx: usize,
    ly: usize,
) -> Result<ChainComplex, ComplexError> {
    if f.is_empty() || g.is_empty() {
        return Err(ComplexError::Size("polynomials must be nonempty".into()));
    }
    if lx < 1 || ly < 1 {
        return Err(ComplexError::Size(format!("torus {lx}x{ly} is empty")));
    }
    let red = |m: &[(i64, i64)]| -> Vec<(i64, i64)> {
        m.iter()
            .map(|&(a, b)| (a.rem_euclid(lx as i64), b.rem_euclid(ly as i64)))
            .collect()
    };
    let (f, g) = (red(f), red(g));
    let ix = BbIndex { lx, ly };
    let n = lx * ly;
    let mut e1 = Vec::new();
    let mut e2 = Vec::new();
    let mut labels = Labels::default();
    for s in 0..n {
        let (i, j) = ix.ij(s);
        for &(a, b) in &f {
            e1.push((s, ix.h(i + a, j + b)));
            e2.push((ix.v(i - a, j - b), s));
        }
        for &(a, b) in &g {
            e1.push((s, ix.v(i + a, j + b)));
            e2.push((ix.h(i - a, j - b), s));
        }
        labels.d0.push(CellLabel::new("v", &[i, j]));
        labels.d2.push(CellLabel::new("p", &[i, j]));
    }
    for s in 0..n {
        let (i, j) = ix.ij(s);
        labels.d1.push(CellLabel::new("H", &[i, j]));
    }
    for s in 0..n {
        let (i, j) = ix.ij(s);
        labels.d1.push(CellLabel::new("V", &[i, j]));
    }
    let c = ChainComplex::unchecked(
        F2Matrix::from_coo(2 * n, n, &e2)?,
        F2Matrix::from_coo(n, 2 * n, &e1)?,
        Some(labels),
        Family::Bb { f, g, lx, ly },
    )?;
    assert!(c.validate().chain_ok, "shift matrices commute, so d1 d2 = 0");
    Ok(c)
}

// ============================================================================
// Graph complexes
// ============================================================================

/// Normalizes and checks a simple undirected edge list.
fn check_simple(n: usize, edges: &[(usize, usize)]) -> Result<(), ComplexError> {
    let mut seen = std::collections::HashSet::new();
    for &(u, w) in edges {
        if u >= n || w >= n {
            return Err(ComplexError::Graph(format!("edge ({u},{w}) out of range")));
        }
        if u == w {
            return Err(ComplexError::Graph(format!("self loop at {u}")));
        }
        if !seen.insert((u.min(w), u.max(w))) {
            return Err(ComplexError::Graph(format!("repeated edge ({u},{w})")));
        }
    }
    Ok(())
}

/// Edge indices of a breadth-first spanning forest, with parent links.
struct Forest {
    parent_edge: Vec<Option<usize>>,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    in_tree: Vec<bool>,
}

fn bfs_forest(n: usize, edges: &[(usize, usize)]) -> Forest {
    let mut adj = vec![Vec::new(); n];
    for (k, &(u, w)) in edges.iter().enumerate() {
        adj[u].push((w, k));
        adj[w].push((u, k));
    }
    let mut f = Forest {
        parent_edge: vec![None; n],
        parent: vec![None; n],
        depth: vec![0; n],
        in_tree: vec![false; edges.len()],
    };
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut q = VecDeque::from([root]);
        while let Some(u) = q.pop_front() {
            for &(w, k) in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    f.parent[w] = Some(u);
                    f.parent_edge[w] = Some(k);
                    f.depth[w] = f.depth[u] + 1;
                    f.in_tree[k] = true;
                    q.push_back(w);
                }
            }
        }
    }
    f
}

/// Cluster complex of a graph: vertices, edges, and one 2-cell per
/// fundamental cycle of a breadth-first spanning forest.
pub fn build_graph_cluster_complex(
    n: usize,
    edges: &[(usize, usize)],
) -> Result<ChainComplex, ComplexError> {
    check_simple(n, edges)?;
    let f = bfs_forest(n, edges);
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for (k, &(u, w)) in edges.iter().enumerate() {
        if f.in_tree[k] {
            continue;
        }
        let mut cyc = vec![k];
        let (mut a, mut b) = (u, w);
        while a != b {
            if f.depth[a] >= f.depth[b] {
                cyc.push(f.parent_edge[a].expect("non-root"));
                a = f.parent[a].expect("non-root");
            } else {
                cyc.push(f.parent_edge[b].expect("non-root"));
                b = f.parent[b].expect("non-root");
            }
        }
        cycles.push(cyc);
    }
    build_graph_complex_with_cells(n, edges, &cycles)
}

/// Graph complex with caller-supplied 2-cells, each given as a list of edge indices.
pub fn build_graph_complex_with_cells(
    n: usize,
    edges: &[(usize, usize)],
    cells: &[Vec<usize>],
) -> Result<ChainComplex, ComplexError> {
    check_simple(n, edges)?;
    let mut e1 = Vec::new();
    for (k, &(u, w)) in edges.iter().enumerate() {
        e1.push((u, k));
        e1.push((w, k));
    }
    let mut e2 = Vec::new();
    for (p, cyc) in cells.iter().enumerate() {
        for &k in cyc {
            e2.push((k, p));
        }
    }
    let labels = Labels {
        d0: (0..n).map(|v| CellLabel::new("v", &[v as i64])).collect(),
        d1: edges
            .iter()
            .map(|&(u, w)| CellLabel::new("e", &[u as i64, w as i64]))
            .collect(),
        d2: (0..cells.len())
            .map(|p| CellLabel::new("cycle", &[p as i64]))
            .collect(),
    };
    ChainComplex::new(
        F2Matrix::from_coo(edges.len(), cells.len(), &e2)?,
        F2Matrix::from_coo(n, edges.len(), &e1)?,
        Some(labels),
        Family::Graph,
    )
}

/// One vertex, two edges, one face, all boundary maps zero.
#[must_use]
pub fn build_minimal_torus() -> ChainComplex {
    let labels = Labels {
        d0: vec![CellLabel::new("v", &[0])],
        d1: vec![CellLabel::new("e", &[1]), CellLabel::new("e", &[2])],
        d2: vec![CellLabel::new("face", &[0])],
    };
    ChainComplex::new(
        F2Matrix::zeros(2, 1),
        F2Matrix::zeros(1, 2),
        Some(labels),
        Family::MinimalTorus,
    )
    .expect("zero maps form a complex")
}

/// Exhaustive (X, Z) distances for complexes with at most 24 qubits.
///
/// The Z distance is the least weight of a cycle outside Im d2, the X
/// distance the least weight of a cocycle outside Im d0. Returns `None`
/// above the size cap or when there are no logicals.
#[must_use]
pub fn brute_force_distance(c: &ChainComplex) -> Option<(usize, usize)> {
    let n = c.n1();
    if n > 24 {
        return None;
    }
    let min_weight = |check: &F2Matrix, trivial: &Span| -> Option<usize> {
        let cols: Vec<u64> = (0..n)
            .map(|q| {
                let col = check.col(q);
                col.iter_ones().fold(0u64, |acc, r| acc | (1 << r))
            })
            .collect();
        let mut best: Option<usize> = None;
        for mask in 1u32..(1u32 << n) {
            let w = mask.count_ones() as usize;
            if best.is_some_and(|b| w >= b) {
                continue;
            }
            let mut syn = 0u64;
            for (q, col) in cols.iter().enumerate() {
                if mask >> q & 1 == 1 {
                    syn ^= col;
                }
            }
            if syn != 0 {
                continue;
            }
            let v = F2Vector::from_indices(
                n,
                &(0..n).filter(|&q| mask >> q & 1 == 1).collect::<Vec<_>>(),
            );
            if !trivial.contains(&v) {
                best = Some(w);
            }
        }
        best
    };
    if c.n0() > 64 || c.n2() > 64 {
        return None;
    }
    let dz = min_weight(&c.d1, &Span::from_vectors(n, &c.d2.col_vectors()))?;
    let dx = min_weight(&c.d2.transpose(), &Span::from_vectors(n, &c.d1.row_vectors().to_vec()))?;
    Some((dx, dz))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toric_sizes_and_weights() {
        let c = build_toric(2).unwrap();
        assert_eq!((c.n0(), c.n1(), c.n2()), (4, 8, 4));
        let c3 = build_toric(3).unwrap();
        let r = c3.validate();
        assert!(r.chain_ok);
        assert_eq!(r.z_check_weight, 4);
        assert_eq!(r.x_check_weight, 4);
        for v in 0..9 {
            assert_eq!(c3.d1.row(v).weight(), 4);
        }
        assert!(build_toric(1).is_err());
    }

    #[test]
    fn toric_homology() {
        for l in [2, 3, 4] {
            let h = build_toric(l).unwrap().homology().unwrap();
            assert_eq!(h.dims, (1, 2, 1));
            assert_eq!(h.codims, (1, 2, 1));
        }
    }

    #[test]
    fn broken_chain_is_flagged() {
        let mut c = build_toric(2).unwrap();
        c.d2.flip(0, 0);
        assert!(!c.validate().chain_ok);
        assert!(c.homology().is_err());
    }

    #[test]
    fn ising_chain() {
        let i3 = build_classical_ising(3).unwrap();
        assert_eq!(i3.d.max_row_weight(), 2);
        assert_eq!(i3.d.max_col_weight(), 2);
        assert_eq!(build_classical_ising(4).unwrap().h1(), 1);
        assert_eq!(f2core::rank(&build_classical_ising(2).unwrap().d), 1);
        assert!(build_classical_ising(1).is_err());
    }

    #[test]
    fn plaquette_ising() {
        let p = build_plaquette_ising(2, 2).unwrap();
        assert_eq!(p.d.max_col_weight(), 4);
        assert_eq!(build_plaquette_ising(2, 3).unwrap().h1(), 4);
        let p3 = build_plaquette_ising(3, 3).unwrap();
        for y in 0..3 {
            let strip: Vec<usize> = (0..3).map(|x| y * 3 + x).collect();
            let v = F2Vector::from_indices(9, &strip);
            assert!(p3.d.mul_vec(&v).unwrap().is_zero());
        }
    }

    #[test]
    fn alp_counts() {
        let c = build_alp(2, 2, 2).unwrap();
        let r = c.validate();
        assert!(r.chain_ok);
        assert_eq!(r.z_check_weight, 6);
        assert_eq!(r.x_check_weight, 6);
        let h = c.homology().unwrap();
        assert_eq!(h.dims.1, 6);
        assert_eq!(h.dims.2, 3);
    }

    #[test]
    fn minimal_torus() {
        let c = build_minimal_torus();
        let h = c.homology().unwrap();
        assert_eq!(h.dims, (1, 2, 1));
        assert_eq!(h.h0_co_reps, vec![F2Vector::unit(1, 0)]);
        assert_eq!(h.cycle_reps.len(), 2);
        assert_eq!(h.cocycle_reps.len(), 2);
    }

    #[test]
    fn graph_complexes() {
        let tri = build_graph_cluster_complex(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(tri.n2(), 1);
        assert_eq!(tri.homology().unwrap().codims.0, 1);
        let path = build_graph_cluster_complex(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.n2(), 0);
        assert_eq!(path.homology().unwrap().codims.0, 1);
        let two = build_graph_cluster_complex(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
            .unwrap();
        assert_eq!(two.homology().unwrap().codims.0, 2);
        assert!(build_graph_cluster_complex(2, &[(0, 0)]).is_err());
        assert!(build_graph_cluster_complex(2, &[(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn monomial_parsing() {
        assert_eq!(
            parse_monomials("1,x,x^-1*y").unwrap(),
            vec![(0, 0), (1, 0), (-1, 1)]
        );
        assert_eq!(parse_monomials("x^-2*y^-1").unwrap(), vec![(-2, -1)]);
        assert!(parse_monomials("z").is_err());
    }

    #[test]
    fn bb_gross_like_instance() {
        let f = parse_monomials("1,x,x^-1*y").unwrap();
        let g = parse_monomials("1,y,x^-2*y^-1").unwrap();
        let c = build_bb_code(&f, &g, 6, 6).unwrap();
        assert_eq!(c.n1(), 72);
        let ix = BbIndex { lx: 6, ly: 6 };
        for v in 0..36 {
            let row = c.d1.row(v);
            let hs = row.iter_ones().filter(|&q| !ix.is_v(q)).count();
            let vs = row.iter_ones().filter(|&q| ix.is_v(q)).count();
            assert_eq!((hs, vs), (3, 3));
        }
    }

    #[test]
    fn layout_roundtrip() {
        let l = CodeLayout::new(&[(Sublattice::Gauge, 3), (Sublattice::B, 2)]);
        assert_eq!(l.total(), 5);
        assert_eq!(l.q(Sublattice::B, 1), 4);
        assert_eq!(l.locate(4), Some((Sublattice::B, 1)));
        let json = serde_json::to_string(&l).unwrap();
        assert!(json.contains("\"A\""));
    }

    #[test]
    fn toric_distance() {
        assert_eq!(brute_force_distance(&build_toric(2).unwrap()), Some((2, 2)));
    }

    #[test]
    fn json_roundtrip() {
        let c = build_toric(2).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"family\":\"toric\""));
        let back: ChainComplex = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
