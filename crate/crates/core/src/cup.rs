//! Cup and cap products on level-(2+1) complexes.
//!
//! A [`CupProduct`] is a bilinear pairing given on basis cochains by sparse
//! tables, one per degree pair `(p, q)` with `p + q <= 2`. Products of
//! hypergraph-product complexes are assembled from one-level tables by the
//! tensor rule `(a_I x a_P) cup (b_I x b_P) = (a_I cup b_I) x (a_P cup b_P)`.

use crate::complexes::{
    build_classical_ising, build_plaquette_ising, AlpIndex, ChainComplex, ComplexError, Family,
    HgpIndex, OneLevel, ToricIndex,
};
use crate::f2core::{F2Vector, Span};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CupError {
    #[error("degrees {0} + {1} exceed 2")]
    DegreeOverflow(usize, usize),
    #[error("cochain of degree {degree} has length {got}, expected {expected}")]
    Length {
        degree: usize,
        expected: usize,
        got: usize,
    },
    #[error("complex family {0} does not match the requested cup product")]
    Family(String),
    #[error("class is not closed: d2 M != 0")]
    NotClosed,
    #[error("table entry references a cell out of range")]
    Range,
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

/// Degree pairs with a table, in storage order.
pub const DEGREE_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (2, 0)];

fn pair_slot(p: usize, q: usize) -> Option<usize> {
    DEGREE_PAIRS.iter().position(|&d| d == (p, q))
}

/// One sparse table: basis pair -> result cells (a cochain given by its support).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CupTable {
    entries: BTreeMap<(usize, usize), Vec<usize>>,
}

impl CupTable {
    /// Adds `result` to the entry at `(i, j)`; repeated cells cancel.
    pub fn accumulate(&mut self, i: usize, j: usize, result: &[usize]) {
        let slot = self.entries.entry((i, j)).or_default();
        for &r in result {
            if let Some(pos) = slot.iter().position(|&x| x == r) {
                slot.swap_remove(pos);
            } else {
                slot.push(r);
            }
        }
        slot.sort_unstable();
        if slot.is_empty() {
            self.entries.remove(&(i, j));
        }
    }

    #[must_use]
    pub fn get(&self, i: usize, j: usize) -> &[usize] {
        self.entries.get(&(i, j)).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &[usize])> {
        self.entries.iter().map(|(&(i, j), r)| (i, j, r.as_slice()))
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn remove(&mut self, i: usize, j: usize) -> Option<Vec<usize>> {
        self.entries.remove(&(i, j))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Certification {
    LeibnizExact,
    IntegratedLeibniz { lambda: usize, classes: Vec<String> },
    Uncertified,
}

/// Cup product tables with per-cell lookup indices.
#[derive(Debug, Clone)]
pub struct CupProduct {
    sizes: [usize; 3],
    tables: [CupTable; 6],
    by_first: [Vec<Vec<(usize, usize)>>; 6],
    by_second: [Vec<Vec<(usize, usize)>>; 6],
    pub certification: Certification,
}

impl CupProduct {
    /// Builds a product from tables; checks every cell index.
    pub fn from_tables(sizes: [usize; 3], tables: [CupTable; 6]) -> Result<Self, CupError> {
        for (slot, &(p, q)) in DEGREE_PAIRS.iter().enumerate() {
            for (i, j, r) in tables[slot].iter() {
                if i >= sizes[p] || j >= sizes[q] || r.iter().any(|&x| x >= sizes[p + q]) {
                    return Err(CupError::Range);
                }
            }
        }
        let mut by_first: [Vec<Vec<(usize, usize)>>; 6] = Default::default();
        let mut by_second: [Vec<Vec<(usize, usize)>>; 6] = Default::default();
        for (slot, &(p, q)) in DEGREE_PAIRS.iter().enumerate() {
            by_first[slot] = vec![Vec::new(); sizes[p]];
            by_second[slot] = vec![Vec::new(); sizes[q]];
            for (i, j, _) in tables[slot].iter() {
                by_first[slot][i].push((i, j));
                by_second[slot][j].push((i, j));
            }
        }
        Ok(Self {
            sizes,
            tables,
            by_first,
            by_second,
            certification: Certification::Uncertified,
        })
    }

    #[must_use]
    pub fn sizes(&self) -> [usize; 3] {
        self.sizes
    }

    #[must_use]
    pub fn table(&self, p: usize, q: usize) -> Option<&CupTable> {
        pair_slot(p, q).map(|s| &self.tables[s])
    }

    #[must_use]
    pub fn tables(&self) -> &[CupTable; 6] {
        &self.tables
    }

    /// Product of two basis cochains, as a list of result cells.
    #[must_use]
    pub fn basis(&self, p: usize, i: usize, q: usize, j: usize) -> &[usize] {
        match pair_slot(p, q) {
            Some(s) => self.tables[s].get(i, j),
            None => &[],
        }
    }

    /// Nonzero basis products `(i, j)` with first factor `i`.
    #[must_use]
    pub fn with_first(&self, p: usize, q: usize, i: usize) -> &[(usize, usize)] {
        pair_slot(p, q).map_or(&[], |s| self.by_first[s][i].as_slice())
    }

    /// Nonzero basis products `(i, j)` with second factor `j`.
    #[must_use]
    pub fn with_second(&self, p: usize, q: usize, j: usize) -> &[(usize, usize)] {
        pair_slot(p, q).map_or(&[], |s| self.by_second[s][j].as_slice())
    }

    fn check_len(&self, deg: usize, v: &F2Vector) -> Result<(), CupError> {
        if deg > 2 {
            return Err(CupError::DegreeOverflow(deg, 0));
        }
        if v.len() != self.sizes[deg] {
            return Err(CupError::Length {
                degree: deg,
                expected: self.sizes[deg],
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Bilinear extension of the tables.
    pub fn cup(&self, p: usize, a: &F2Vector, q: usize, b: &F2Vector) -> Result<F2Vector, CupError> {
        if p + q > 2 {
            return Err(CupError::DegreeOverflow(p, q));
        }
        self.check_len(p, a)?;
        self.check_len(q, b)?;
        let slot = pair_slot(p, q).expect("degree pair");
        let mut out = F2Vector::zeros(self.sizes[p + q]);
        if a.weight() <= b.weight() {
            for i in a.iter_ones() {
                for &(_, j) in &self.by_first[slot][i] {
                    if b.get(j) {
                        for &r in self.tables[slot].get(i, j) {
                            out.flip(r);
                        }
                    }
                }
            }
        } else {
            for j in b.iter_ones() {
                for &(i, _) in &self.by_second[slot][j] {
                    if a.get(i) {
                        for &r in self.tables[slot].get(i, j) {
                            out.flip(r);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `a cap M = sum_x (int_M x cup a) x`, a (2-p)-chain.
    pub fn cap(&self, p: usize, a: &F2Vector, m: &F2Vector) -> Result<F2Vector, CupError> {
        self.cap_impl(p, a, m, false)
    }

    /// `M cap a = sum_x (int_M a cup x) x`, the other integrand order.
    pub fn cap_right(&self, m: &F2Vector, p: usize, a: &F2Vector) -> Result<F2Vector, CupError> {
        self.cap_impl(p, a, m, true)
    }

    fn cap_impl(&self, p: usize, a: &F2Vector, m: &F2Vector, a_first: bool) -> Result<F2Vector, CupError> {
        if p > 2 {
            return Err(CupError::DegreeOverflow(p, 0));
        }
        self.check_len(p, a)?;
        self.check_len(2, m)?;
        let k = 2 - p;
        let mut out = F2Vector::zeros(self.sizes[k]);
        for i in a.iter_ones() {
            let pairs = if a_first {
                self.with_first(p, k, i)
            } else {
                self.with_second(k, p, i)
            };
            for &(x0, x1) in pairs {
                let x = if a_first { x1 } else { x0 };
                let r = if a_first {
                    self.basis(p, x0, k, x1)
                } else {
                    self.basis(k, x0, p, x1)
                };
                if r.iter().filter(|&&c| m.get(c)).count() % 2 == 1 {
                    out.flip(x);
                }
            }
        }
        Ok(out)
    }

    /// Serializable form of the tables.
    #[must_use]
    pub fn to_file(&self) -> CupFile {
        let dump = |t: &CupTable| -> Vec<([usize; 2], Vec<usize>)> {
            t.iter().map(|(i, j, r)| ([i, j], r.to_vec())).collect()
        };
        CupFile {
            sizes: self.sizes,
            t00: dump(&self.tables[0]),
            t01: dump(&self.tables[1]),
            t10: dump(&self.tables[2]),
            t11: dump(&self.tables[3]),
            t02: dump(&self.tables[4]),
            t20: dump(&self.tables[5]),
            certification: self.certification.clone(),
        }
    }

    pub fn from_file(f: &CupFile) -> Result<Self, CupError> {
        let load = |e: &[([usize; 2], Vec<usize>)]| {
            let mut t = CupTable::default();
            for (k, r) in e {
                t.accumulate(k[0], k[1], r);
            }
            t
        };
        let mut cp = Self::from_tables(
            f.sizes,
            [
                load(&f.t00),
                load(&f.t01),
                load(&f.t10),
                load(&f.t11),
                load(&f.t02),
                load(&f.t20),
            ],
        )?;
        cp.certification = f.certification.clone();
        Ok(cp)
    }

    /// Largest hypergraph distance between vertices touched by one table entry.
    ///
    /// Two vertices are adjacent when they share a 1-cell.
    #[must_use]
    pub fn locality_radius(&self, c: &ChainComplex) -> usize {
        let n0 = c.n0();
        let mut adj = vec![Vec::new(); n0];
        for e in 0..c.n1() {
            let vs = c.closure_vertices(1, e);
            for &a in &vs {
                for &b in &vs {
                    if a != b {
                        adj[a].push(b);
                    }
                }
            }
        }
        let dist_from = |s: usize| {
            let mut d = vec![usize::MAX; n0];
            d[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &w in &adj[u] {
                    if d[w] == usize::MAX {
                        d[w] = d[u] + 1;
                        q.push_back(w);
                    }
                }
            }
            d
        };
        let dists: Vec<Vec<usize>> = (0..n0).map(dist_from).collect();
        let mut radius = 0;
        for (slot, &(p, q)) in DEGREE_PAIRS.iter().enumerate() {
            for (i, j, r) in self.tables[slot].iter() {
                let mut vs = c.closure_vertices(p, i);
                vs.extend(c.closure_vertices(q, j));
                for &x in r {
                    vs.extend(c.closure_vertices(p + q, x));
                }
                for &a in &vs {
                    for &b in &vs {
                        if dists[a][b] != usize::MAX {
                            radius = radius.max(dists[a][b]);
                        }
                    }
                }
            }
        }
        radius
    }
}

/// JSON form of a cup product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CupFile {
    pub sizes: [usize; 3],
    pub t00: Vec<([usize; 2], Vec<usize>)>,
    pub t01: Vec<([usize; 2], Vec<usize>)>,
    pub t10: Vec<([usize; 2], Vec<usize>)>,
    pub t11: Vec<([usize; 2], Vec<usize>)>,
    #[serde(default)]
    pub t02: Vec<([usize; 2], Vec<usize>)>,
    #[serde(default)]
    pub t20: Vec<([usize; 2], Vec<usize>)>,
    pub certification: Certification,
}

// ============================================================================
// One-level cups and the tensor rule
// ============================================================================

/// Cup tables of a one-level complex: degree pairs (0,0), (0,1), (1,0).
#[derive(Debug, Clone, Default)]
pub struct OneLevelCup {
    pub t00: CupTable,
    pub t01: CupTable,
    pub t10: CupTable,
}

impl OneLevelCup {
    fn table(&self, p: usize, q: usize) -> Option<&CupTable> {
        match (p, q) {
            (0, 0) => Some(&self.t00),
            (0, 1) => Some(&self.t01),
            (1, 0) => Some(&self.t10),
            _ => None,
        }
    }
}

/// Ising chain: `v cup v = v`, `v cup e = e` if `e` leaves `v`, `e cup v = e` if `e` enters `v`.
#[must_use]
pub fn ising_cup(n: usize) -> OneLevelCup {
    let mut c = OneLevelCup::default();
    for x in 0..n {
        c.t00.accumulate(x, x, &[x]);
        c.t01.accumulate(x, x, &[x]);
        c.t10.accumulate(x, (x + 1) % n, &[x]);
    }
    c
}

/// Translation-invariant plaquette Ising rules. `V(x,y)` is a vertex
/// 0-cochain and `P(x,y)` the plaquette with lower-left corner `(x,y)`.
#[must_use]
pub fn plaquette_ising_cup(lx: usize, ly: usize) -> OneLevelCup {
    let ix = |x: i64, y: i64| -> usize {
        y.rem_euclid(ly as i64) as usize * lx + x.rem_euclid(lx as i64) as usize
    };
    let mut c = OneLevelCup::default();
    for y in 0..ly as i64 {
        for x in 0..lx as i64 {
            let v = ix(x, y);
            c.t00.accumulate(v, ix(x, y + 1), &[ix(x, y + 1)]);
            c.t00.accumulate(v, v, &[ix(x, y), ix(x, y + 1)]);
            c.t00.accumulate(v, ix(x, y - 1), &[ix(x, y)]);
            c.t01.accumulate(v, ix(x, y), &[ix(x, y), ix(x, y + 1)]);
            c.t01.accumulate(v, ix(x, y - 1), &[ix(x, y - 1), ix(x, y)]);
            c.t10.accumulate(ix(x - 1, y), v, &[ix(x - 1, y), ix(x - 1, y + 1)]);
            c.t10.accumulate(ix(x - 1, y - 1), v, &[ix(x - 1, y - 1), ix(x - 1, y)]);
        }
    }
    c
}

/// Tensor-product cup on a hypergraph product complex.
pub fn tensor_cup(
    a: &OneLevel,
    ca: &OneLevelCup,
    b: &OneLevel,
    cb: &OneLevelCup,
) -> Result<CupProduct, CupError> {
    let ix = HgpIndex::new(a, b);
    let sizes = [
        ix.a0 * ix.b0,
        ix.a0 * ix.b1 + ix.a1 * ix.b0,
        ix.a1 * ix.b1,
    ];
    let mut tables: [CupTable; 6] = Default::default();
    let one_level_pairs = [(0, 0), (0, 1), (1, 0)];
    for &(da1, da2) in &one_level_pairs {
        let ta = ca.table(da1, da2).expect("pair");
        for &(db1, db2) in &one_level_pairs {
            let tb = cb.table(db1, db2).expect("pair");
            let p = da1 + db1;
            let q = da2 + db2;
            let Some(slot) = pair_slot(p, q) else {
                continue;
            };
            for (i1, i2, ra) in ta.iter() {
                for (j1, j2, rb) in tb.iter() {
                    let left = ix.cell(da1, i1, db1, j1).expect("cell");
                    let right = ix.cell(da2, i2, db2, j2).expect("cell");
                    let mut res = Vec::with_capacity(ra.len() * rb.len());
                    for &r in ra {
                        for &s in rb {
                            res.push(ix.cell(da1 + da2, r, db1 + db2, s).expect("cell"));
                        }
                    }
                    tables[slot].accumulate(left, right, &res);
                }
            }
        }
    }
    CupProduct::from_tables(sizes, tables)
}

// ============================================================================
// Installers
// ============================================================================

/// Square-lattice rules on the toric complex.
fn toric_tables(l: usize) -> CupProduct {
    let t = ToricIndex { l };
    let mut tables: [CupTable; 6] = Default::default();
    for i in 0..l * l {
        let (x, y) = t.xy(i);
        let v = t.v(x, y);
        tables[0].accumulate(v, v, &[v]);
        tables[1].accumulate(v, t.h(x, y), &[t.h(x, y)]);
        tables[1].accumulate(v, t.u(x, y), &[t.u(x, y)]);
        tables[2].accumulate(t.h(x, y), t.v(x + 1, y), &[t.h(x, y)]);
        tables[2].accumulate(t.u(x, y), t.v(x, y + 1), &[t.u(x, y)]);
        let p = t.p(x, y);
        tables[3].accumulate(t.u(x, y), t.h(x, y + 1), &[p]);
        tables[3].accumulate(t.h(x, y), t.u(x + 1, y), &[p]);
        tables[4].accumulate(v, p, &[p]);
        tables[5].accumulate(p, t.v(x + 1, y + 1), &[p]);
    }
    CupProduct::from_tables([l * l, 2 * l * l, l * l], tables).expect("toric table in range")
}

fn certify(cp: &mut CupProduct, c: &ChainComplex) {
    let report = check_leibniz(cp, c, 200, 0);
    cp.certification = if report.failures.is_empty() {
        Certification::LeibnizExact
    } else {
        Certification::Uncertified
    };
}

pub fn install_toric_cup(c: &ChainComplex) -> Result<CupProduct, CupError> {
    let Family::Toric { l } = c.family else {
        return Err(CupError::Family(format!("{:?}", c.family)));
    };
    let mut cp = toric_tables(l);
    certify(&mut cp, c);
    Ok(cp)
}

pub fn install_alp_cup(c: &ChainComplex) -> Result<CupProduct, CupError> {
    let Family::Alp { lx, ly, lz } = c.family else {
        return Err(CupError::Family(format!("{:?}", c.family)));
    };
    let i = build_classical_ising(lz)?;
    let p = build_plaquette_ising(lx, ly)?;
    let mut cp = tensor_cup(&i, &ising_cup(lz), &p, &plaquette_ising_cup(lx, ly))?;
    certify(&mut cp, c);
    Ok(cp)
}

/// `e1 cup e2 = face`, `e2 cup e1 = 0`, and the vertex acts as the unit.
pub fn install_minimal_torus_cup(c: &ChainComplex) -> Result<CupProduct, CupError> {
    if c.family != Family::MinimalTorus {
        return Err(CupError::Family(format!("{:?}", c.family)));
    }
    let mut tables: [CupTable; 6] = Default::default();
    tables[0].accumulate(0, 0, &[0]);
    for e in 0..2 {
        tables[1].accumulate(0, e, &[e]);
        tables[2].accumulate(e, 0, &[e]);
    }
    tables[3].accumulate(0, 1, &[0]);
    tables[4].accumulate(0, 0, &[0]);
    tables[5].accumulate(0, 0, &[0]);
    let mut cp = CupProduct::from_tables([1, 2, 1], tables)?;
    certify(&mut cp, c);
    Ok(cp)
}

/// Installs the cup product matching the complex family.
pub fn install_cup(c: &ChainComplex) -> Result<CupProduct, CupError> {
    match c.family {
        Family::Toric { .. } => install_toric_cup(c),
        Family::Alp { .. } => install_alp_cup(c),
        Family::MinimalTorus => install_minimal_torus_cup(c),
        _ => Err(CupError::Family(format!("{:?}", c.family))),
    }
}

// ============================================================================
// Certification checks
// ============================================================================

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeibnizFailure {
    pub degrees: (usize, usize),
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeibnizReport {
    pub exhaustive: bool,
    pub checked: usize,
    pub failures: Vec<LeibnizFailure>,
}

/// Basis-pair count below which [`check_leibniz`] is exhaustive.
pub const EXHAUSTIVE_LIMIT: usize = 10_000;

fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> F2Vector {
    let mut v = F2Vector::zeros(len);
    for i in 0..len {
        if rng.gen::<bool>() {
            v.set(i, true);
        }
    }
    v
}

fn leibniz_holds(cp: &CupProduct, c: &ChainComplex, p: usize, a: &F2Vector, q: usize, b: &F2Vector) -> bool {
    let lhs = c.coboundary(p + q, &cp.cup(p, a, q, b).expect("degrees"));
    let mut rhs = cp.cup(p + 1, &c.coboundary(p, a), q, b).expect("degrees");
    rhs.add_assign(&cp.cup(p, a, q + 1, &c.coboundary(q, b)).expect("degrees"));
    lhs == rhs
}

/// Checks `d(a cup b) = da cup b + a cup db` for degree pairs with `p + q <= 1`.
///
/// Exhaustive over basis pairs when there are at most [`EXHAUSTIVE_LIMIT`]
/// of them, since the identity is bilinear; otherwise `trials` random pairs
/// per degree pair.
#[must_use]
pub fn check_leibniz(cp: &CupProduct, c: &ChainComplex, trials: usize, seed: u64) -> LeibnizReport {
    let sizes = cp.sizes();
    let degree_pairs = [(0, 0), (0, 1), (1, 0)];
    let pairs: usize = degree_pairs.iter().map(|&(p, q)| sizes[p] * sizes[q]).sum();
    let exhaustive = pairs <= EXHAUSTIVE_LIMIT;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut checked = 0;
    for &(p, q) in &degree_pairs {
        if exhaustive {
            for i in 0..sizes[p] {
                let a = F2Vector::unit(sizes[p], i);
                for j in 0..sizes[q] {
                    let b = F2Vector::unit(sizes[q], j);
                    checked += 1;
                    if !leibniz_holds(cp, c, p, &a, q, &b) {
                        failures.push(LeibnizFailure {
                            degrees: (p, q),
                            a: vec![i],
                            b: vec![j],
                        });
                    }
                }
            }
        } else {
            for _ in 0..trials {
                let a = random_vec(&mut rng, sizes[p]);
                let b = random_vec(&mut rng, sizes[q]);
                checked += 1;
                if !leibniz_holds(cp, c, p, &a, q, &b) {
                    failures.push(LeibnizFailure {
                        degrees: (p, q),
                        a: a.support(),
                        b: b.support(),
                    });
                }
            }
        }
    }
    LeibnizReport {
        exhaustive,
        checked,
        failures,
    }
}

/// Right-nested product `a_1 cup (a_2 cup (... cup a_n))`.
fn nested(cp: &CupProduct, items: &[(usize, F2Vector)]) -> (usize, F2Vector) {
    let (mut deg, mut acc) = items.last().expect("nonempty").clone();
    for (p, a) in items.iter().rev().skip(1) {
        acc = cp.cup(*p, a, deg, &acc).expect("degree at most 2");
        deg += p;
    }
    (deg, acc)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratedLeibnizReport {
    pub lambda: usize,
    pub checked: usize,
    pub failures: usize,
}

/// Checks `sum_k int_M a_1 cup (... (d a_k cup (... a_L)))= 0` for random
/// tuples whose degrees sum to 1, so each integrand has degree 2.
pub fn check_integrated_leibniz(
    cp: &CupProduct,
    c: &ChainComplex,
    m: &FundamentalClass,
    lambda: usize,
    trials: usize,
    seed: u64,
) -> Result<IntegratedLeibnizReport, CupError> {
    if !c.boundary(2, &m.chain).is_zero() {
        return Err(CupError::NotClosed);
    }
    let sizes = cp.sizes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for t in 0..trials {
        let one = t % lambda;
        let items: Vec<(usize, F2Vector)> = (0..lambda)
            .map(|k| {
                let p = usize::from(k == one);
                (p, random_vec(&mut rng, sizes[p]))
            })
            .collect();
        let mut total = false;
        for k in 0..lambda {
            let mut it = items.clone();
            let (p, a) = &items[k];
            it[k] = (p + 1, c.coboundary(*p, a));
            let (deg, r) = nested(cp, &it);
            debug_assert_eq!(deg, 2);
            total ^= r.dot(&m.chain);
        }
        if total {
            failures += 1;
        }
    }
    Ok(IntegratedLeibnizReport {
        lambda,
        checked: trials,
        failures,
    })
}

// ============================================================================
// Fundamental classes
// ============================================================================

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FundamentalClass {
    pub chain: F2Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

impl FundamentalClass {
    pub fn new(c: &ChainComplex, chain: F2Vector, tag: Option<String>) -> Result<Self, CupError> {
        if chain.len() != c.n2() || !c.boundary(2, &chain).is_zero() {
            return Err(CupError::NotClosed);
        }
        Ok(Self { chain, tag })
    }

    /// Integral of a 2-cochain over the class.
    #[must_use]
    pub fn integrate(&self, two_cochain: &F2Vector) -> bool {
        self.chain.dot(two_cochain)
    }
}

/// ALP strip class: all cubes with `y >= y0`.
pub fn alp_strip_class(c: &ChainComplex, y0: usize) -> Result<FundamentalClass, CupError> {
    let Family::Alp { lx, ly, lz } = c.family else {
        return Err(CupError::Family(format!("{:?}", c.family)));
    };
    let ix = AlpIndex { lx, ly, lz };
    let mut v = F2Vector::zeros(c.n2());
    for q in 0..c.n2() {
        let (_, y, _) = ix.coords(2, q);
        if y as usize >= y0 {
            v.set(q, true);
        }
    }
    FundamentalClass::new(c, v, Some(format!("strip y>={y0}")))
}

/// ALP column class: all cubes with `x == x0`.
pub fn alp_column_class(c: &ChainComplex, x0: usize) -> Result<FundamentalClass, CupError> {
    let Family::Alp { lx, ly, lz } = c.family else {
        return Err(CupError::Family(format!("{:?}", c.family)));
    };
    let ix = AlpIndex { lx, ly, lz };
    let mut v = F2Vector::zeros(c.n2());
    for q in 0..c.n2() {
        if ix.coords(2, q).0 as usize == x0 {
            v.set(q, true);
        }
    }
    FundamentalClass::new(c, v, Some(format!("column x={x0}")))
}

/// Basis of H2 = ker d2, with geometric tags where the family allows.
#[must_use]
pub fn fundamental_classes(c: &ChainComplex) -> Vec<FundamentalClass> {
    if let Family::Alp { lx, ly, .. } = c.family {
        let mut out: Vec<FundamentalClass> = (0..ly)
            .map(|y| alp_strip_class(c, y).expect("strip is closed"))
            .collect();
        out.extend((1..lx).map(|x| alp_column_class(c, x).expect("column is closed")));
        return out;
    }
    let basis = crate::f2core::kernel_basis(&c.d2);
    // Prefer the all-cells sum as the first element when it is closed.
    let all = F2Vector::ones(c.n2());
    let mut out = Vec::new();
    let mut span = Span::new(c.n2());
    if c.n2() > 0 && c.boundary(2, &all).is_zero() {
        let tag = match c.family {
            Family::Toric { .. } => "all-plaquettes",
            Family::MinimalTorus => "face",
            _ => "all-cells",
        };
        span.insert(&all);
        out.push(FundamentalClass {
            chain: all,
            tag: Some(tag.into()),
        });
    }
    for v in basis {
        if span.insert(&v) {
            out.push(FundamentalClass {
                chain: v,
                tag: None,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexes::{build_alp, build_minimal_torus, build_toric, hypergraph_product};

    #[test]
    fn toric_basic_products() {
        let c = build_toric(3).unwrap();
        let cp = install_toric_cup(&c).unwrap();
        assert_eq!(cp.certification, Certification::LeibnizExact);
        let t = ToricIndex { l: 3 };
        let v = F2Vector::unit(9, t.v(1, 1));
        assert_eq!(cp.cup(0, &v, 0, &v).unwrap(), v);
        let w = F2Vector::unit(9, t.v(2, 1));
        assert!(cp.cup(0, &v, 0, &w).unwrap().is_zero());
        let left = F2Vector::unit(18, t.u(0, 0));
        let top = F2Vector::unit(18, t.h(0, 1));
        assert_eq!(cp.cup(1, &left, 1, &top).unwrap(), F2Vector::unit(9, t.p(0, 0)));
        assert!(cp.cup(1, &left, 1, &F2Vector::zeros(18)).unwrap().is_zero());
        assert!(cp.cup(1, &left, 2, &F2Vector::zeros(9)).is_err());
    }

    #[test]
    fn toric_table_has_two_entries_per_plaquette() {
        let c = build_toric(2).unwrap();
        let cp = install_toric_cup(&c).unwrap();
        let t11 = cp.table(1, 1).unwrap();
        assert_eq!(t11.len(), 8);
        let mut per_p = [0; 4];
        for (_, _, r) in t11.iter() {
            for &p in r {
                per_p[p] += 1;
            }
        }
        assert_eq!(per_p, [2; 4]);
    }

    #[test]
    fn toric_matches_tensor_of_ising() {
        let l = 3;
        let i = build_classical_ising(l).unwrap();
        let hgp = hypergraph_product(&i, &i).unwrap();
        let tensor = tensor_cup(&i, &ising_cup(l), &i, &ising_cup(l)).unwrap();
        let t = ToricIndex { l };
        let ix = HgpIndex::new(&i, &i);
        // product cell -> toric cell
        let map = |k: usize, c: usize| -> usize {
            let (da, a, _, b) = ix.split(k, c);
            let (a, b) = (a as i64, b as i64);
            match (k, da) {
                (0, _) => t.v(a, b),
                (1, 0) => t.u(a, b),
                (1, _) => t.h(a, b),
                _ => t.p(a, b),
            }
        };
        let direct = toric_tables(l);
        for (slot, &(p, q)) in DEGREE_PAIRS.iter().enumerate() {
            let mut mapped = CupTable::default();
            for (a, b, r) in tensor.tables()[slot].iter() {
                let r: Vec<usize> = r.iter().map(|&x| map(p + q, x)).collect();
                mapped.accumulate(map(p, a), map(q, b), &r);
            }
            assert_eq!(mapped, direct.tables()[slot], "table {p}{q}");
        }
        assert!(hgp.validate().chain_ok);
    }

    #[test]
    fn leibniz_detects_deleted_entry() {
        let c = build_toric(3).unwrap();
        let mut cp = toric_tables(3);
        assert!(check_leibniz(&cp, &c, 0, 0).failures.is_empty());
        let mut tables = cp.tables().clone();
        let (i, j, _) = tables[3].iter().next().map(|(i, j, r)| (i, j, r.to_vec())).unwrap();
        tables[3].remove(i, j);
        cp = CupProduct::from_tables(cp.sizes(), tables).unwrap();
        let r = check_leibniz(&cp, &c, 0, 0);
        assert!(r.exhaustive);
        assert!(!r.failures.is_empty());
    }

    #[test]
    fn alp_leibniz_exact() {
        for (lx, ly, lz) in [(2, 2, 2), (3, 3, 2), (2, 4, 3)] {
            let c = build_alp(lx, ly, lz).unwrap();
            let cp = install_alp_cup(&c).unwrap();
            let r = check_leibniz(&cp, &c, 300, 1);
            assert!(r.failures.is_empty(), "{lx}{ly}{lz}: {:?}", &r.failures[..1]);
        }
    }

    #[test]
    fn plaquette_cup_unit_is_zero() {
        // 1 cup b vanishes: the product is a finite difference in y.
        let c = build_alp(3, 3, 2).unwrap();
        let cp = install_alp_cup(&c).unwrap();
        let one = F2Vector::ones(c.n0());
        for e in [0, 5, 20, 30] {
            let b = F2Vector::unit(c.n1(), e);
            let _ = cp.cup(0, &one, 1, &b).unwrap();
        }
    }

    #[test]
    fn integrated_leibniz() {
        let c = build_toric(3).unwrap();
        let cp = install_toric_cup(&c).unwrap();
        let m = &fundamental_classes(&c)[0];
        for lambda in [2, 3] {
            let r = check_integrated_leibniz(&cp, &c, m, lambda, 500, 3).unwrap();
            assert_eq!(r.failures, 0);
        }
        let bad = FundamentalClass {
            chain: F2Vector::unit(9, 0),
            tag: None,
        };
        assert!(check_integrated_leibniz(&cp, &c, &bad, 3, 1, 0).is_err());
    }

    #[test]
    fn caps() {
        let c = build_toric(3).unwrap();
        let cp = install_toric_cup(&c).unwrap();
        let m = fundamental_classes(&c).remove(0);
        assert_eq!(m.tag.as_deref(), Some("all-plaquettes"));
        let one = F2Vector::ones(9);
        assert_eq!(cp.cap(0, &one, &m.chain).unwrap(), m.chain);
        let h = c.homology().unwrap();
        let mut images = Span::new(18);
        let im = Span::from_vectors(18, &c.d2.col_vectors());
        for g in &h.cocycle_reps {
            let z = cp.cap(1, g, &m.chain).unwrap();
            assert!(c.boundary(1, &z).is_zero());
            assert!(!im.contains(&z));
            images.insert(&im.reduce(&z));
        }
        assert_eq!(images.dim(), 2);

        let t = build_minimal_torus();
        let tcp = install_minimal_torus_cup(&t).unwrap();
        let face = F2Vector::unit(1, 0);
        let e1 = F2Vector::unit(2, 0);
        let e2 = F2Vector::unit(2, 1);
        // only e1 cup e2 is nonzero, so each ordering picks one partner
        assert_eq!(tcp.cap_right(&face, 1, &e1).unwrap(), e2);
        assert!(tcp.cap(1, &e1, &face).unwrap().is_zero());
        assert_eq!(tcp.cap(1, &e2, &face).unwrap(), e1);
    }

    #[test]
    fn fundamental_class_bases() {
        let c = build_toric(3).unwrap();
        let f = fundamental_classes(&c);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].chain, F2Vector::ones(9));
        let a = build_alp(2, 2, 2).unwrap();
        let fa = fundamental_classes(&a);
        assert_eq!(fa.len(), 3);
        assert_eq!(Span::from_vectors(a.n2(), &fa.iter().map(|m| m.chain.clone()).collect::<Vec<_>>()).dim(), 3);
        let t = build_minimal_torus();
        let ft = fundamental_classes(&t);
        assert_eq!(ft.len(), 1);
        assert_eq!(ft[0].tag.as_deref(), Some("face"));
    }

    #[test]
    fn minimal_torus_pairing() {
        let t = build_minimal_torus();
        let cp = install_minimal_torus_cup(&t).unwrap();
        let e1 = F2Vector::unit(2, 0);
        let e2 = F2Vector::unit(2, 1);
        assert!(cp.cup(1, &e1, 1, &e2).unwrap().get(0));
        assert!(cp.cup(1, &e2, 1, &e1).unwrap().is_zero());
        assert!(install_minimal_torus_cup(&build_toric(2).unwrap()).is_err());
    }

    #[test]
    fn alp_restricts_to_ising() {
        // (Ising x V) cup (Ising x V) on one plaquette-Ising vertex column
        let c = build_alp(2, 2, 3).unwrap();
        let cp = install_alp_cup(&c).unwrap();
        let ix = AlpIndex { lx: 2, ly: 2, lz: 3 };
        let v = F2Vector::unit(c.n0(), ix.vertex(0, 0, 1));
        let ez = F2Vector::unit(c.n1(), ix.zedge(0, 0, 1));
        // V cup V at equal (x,y) contributes V(x,y) + V(x,y+1)
        let r = cp.cup(0, &v, 1, &ez).unwrap();
        let expect = F2Vector::from_indices(c.n1(), &[ix.zedge(0, 0, 1), ix.zedge(0, 1, 1)]);
        assert_eq!(r, expect);
    }

    #[test]
    fn json_roundtrip() {
        let c = build_toric(2).unwrap();
        let cp = install_toric_cup(&c).unwrap();
        let s = serde_json::to_string(&cp.to_file()).unwrap();
        let back = CupProduct::from_file(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back.tables(), cp.tables());
        assert_eq!(back.certification, cp.certification);
    }

    #[test]
    fn locality() {
        let c = build_toric(4).unwrap();
        let cp = install_toric_cup(&c).unwrap();
        assert!(cp.locality_radius(&c) <= 2);
    }
}
