//! Operator algebra for dressed stabilizers.
//!
//! [`PhasePolyOp`] is the canonical form `D(f) X_x`, acting as
//! `|z> -> (-1)^{f(z + x)} |z + x>`, with `f` a multilinear F2 polynomial of
//! degree at most 3. It covers Pauli strings, CZ-dressed stabilizers and
//! CCZ enrichment operators. [`CliffordOp`] stores the conjugation action
//! on the 2n Pauli generators and covers CNOT- and SWAP-type dressing.

use crate::complexes::CodeLayout;
use crate::f2core::{self, F2Matrix, F2Vector, Span};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OpError {
    #[error("qubit count mismatch: {0} vs {1}")]
    Size(usize, usize),
    #[error("operator has a degree-3 phase and is not Clifford")]
    NonClifford,
    #[error("operator is not diagonal")]
    NotDiagonal,
    #[error("qubit index {0} out of range")]
    Index(usize),
    #[error("monomial degree {0} exceeds 3")]
    Degree(usize),
    #[error("Paulis must commute and be Hermitian")]
    BadControl,
    #[error("tableau is not invertible")]
    Singular,
}

// ============================================================================
// Monomials
// ============================================================================

/// Product of up to three distinct variables; degree 0 is the constant 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    deg: u8,
    vars: [u32; 3],
}

impl Monomial {
    /// Builds `z_{a} z_{b} ...`; repeated variables collapse since z^2 = z.
    pub fn new(vars: &[usize]) -> Result<Self, OpError> {
        let mut v: Vec<usize> = vars.to_vec();
        v.sort_unstable();
        v.dedup();
        if v.len() > 3 {
            return Err(OpError::Degree(v.len()));
        }
        let mut out = [0u32; 3];
        for (k, &x) in v.iter().enumerate() {
            out[k] = u32::try_from(x).map_err(|_| OpError::Index(x))?;
        }
        Ok(Self {
            deg: v.len() as u8,
            vars: out,
        })
    }

    #[must_use]
    pub fn degree(&self) -> usize {
        self.deg as usize
    }

    #[must_use]
    pub fn vars(&self) -> Vec<usize> {
        self.vars[..self.deg as usize]
            .iter()
            .map(|&v| v as usize)
            .collect()
    }

    fn eval_mask(&self, z: u64) -> bool {
        self.vars[..self.deg as usize]
            .iter()
            .all(|&v| (z >> v) & 1 == 1)
    }

    fn eval(&self, z: &F2Vector) -> bool {
        self.vars[..self.deg as usize]
            .iter()
            .all(|&v| z.get(v as usize))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z{:?}", self.vars())
    }
}

fn toggle(set: &mut BTreeSet<Monomial>, m: Monomial) {
    if !set.remove(&m) {
        set.insert(m);
    }
}

/// Adds `f(z + x)` into `(out, sign)`.
fn add_shifted(out: &mut BTreeSet<Monomial>, sign: &mut bool, f: &BTreeSet<Monomial>, x: &F2Vector) {
    for m in f {
        let vars = m.vars();
        let shifted: Vec<bool> = vars.iter().map(|&v| x.get(v)).collect();
        if shifted.iter().all(|&s| !s) {
            toggle(out, *m);
            continue;
        }
        // prod (z_i + x_i) = sum over subsets T of prod_{T} z_i, where the
        // complement of T must consist of shifted variables.
        let k = vars.len();
        for t in 0u32..(1 << k) {
            let ok = (0..k).all(|i| t >> i & 1 == 1 || shifted[i]);
            if !ok {
                continue;
            }
            let kept: Vec<usize> = (0..k).filter(|&i| t >> i & 1 == 1).map(|i| vars[i]).collect();
            if kept.is_empty() {
                *sign ^= true;
            } else {
                toggle(out, Monomial::new(&kept).expect("subset of a monomial"));
            }
        }
    }
}

// ============================================================================
// PhasePolyOp
// ============================================================================

/// `(-1)^{sign} D(f) X_x` in canonical form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PhasePolyOp {
    n: usize,
    x: F2Vector,
    phase: BTreeSet<Monomial>,
    sign: bool,
}

impl fmt::Debug for PhasePolyOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}D{:?}X{:?}",
            if self.sign { "-" } else { "" },
            self.phase,
            self.x.support()
        )
    }
}

impl PhasePolyOp {
    #[must_use]
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x: F2Vector::zeros(n),
            phase: BTreeSet::new(),
            sign: false,
        }
    }

    /// X on the listed qubits (repeats cancel).
    #[must_use]
    pub fn x(n: usize, qubits: &[usize]) -> Self {
        Self {
            x: F2Vector::from_indices(n, qubits),
            ..Self::identity(n)
        }
    }

    #[must_use]
    pub fn x_vec(x: F2Vector) -> Self {
        Self {
            n: x.len(),
            x,
            phase: BTreeSet::new(),
            sign: false,
        }
    }

    /// Z on the listed qubits (repeats cancel).
    #[must_use]
    pub fn z(n: usize, qubits: &[usize]) -> Self {
        let mut op = Self::identity(n);
        for &q in qubits {
            op.toggle_monomial(&[q]);
        }
        op
    }

    #[must_use]
    pub fn z_vec(z: &F2Vector) -> Self {
        Self::z(z.len(), &z.support())
    }

    #[must_use]
    pub fn cz(n: usize, a: usize, b: usize) -> Self {
        let mut op = Self::identity(n);
        op.toggle_monomial(&[a, b]);
        op
    }

    #[must_use]
    pub fn ccz(n: usize, a: usize, b: usize, c: usize) -> Self {
        let mut op = Self::identity(n);
        op.toggle_monomial(&[a, b, c]);
        op
    }

    /// Builds an operator from its parts.
    pub fn from_parts(
        n: usize,
        x: &[usize],
        monomials: &[Vec<usize>],
        sign: bool,
    ) -> Result<Self, OpError> {
        let mut op = Self::x(n, x);
        for m in monomials {
            if let Some(&bad) = m.iter().find(|&&q| q >= n) {
                return Err(OpError::Index(bad));
            }
            let mono = Monomial::new(m)?;
            if mono.degree() == 0 {
                op.sign ^= true;
            } else {
                toggle(&mut op.phase, mono);
            }
        }
        op.sign ^= sign;
        Ok(op)
    }

    /// Multiplies the phase by `(-1)^{prod_{q in vars} z_q}`.
    ///
    /// # Panics
    /// Panics on more than three variables or an index out of range.
    pub fn toggle_monomial(&mut self, vars: &[usize]) {
        assert!(vars.iter().all(|&q| q < self.n), "qubit out of range");
        let m = Monomial::new(vars).expect("degree at most 3");
        if m.degree() == 0 {
            self.sign ^= true;
        } else {
            toggle(&mut self.phase, m);
        }
    }

    pub fn flip_sign(&mut self) {
        self.sign ^= true;
    }

    #[must_use]
    pub const fn n(&self) -> usize {
        self.n
    }

    #[must_use]
    pub fn x_part(&self) -> &F2Vector {
        &self.x
    }

    #[must_use]
    pub fn monomials(&self) -> &BTreeSet<Monomial> {
        &self.phase
    }

    #[must_use]
    pub const fn sign(&self) -> bool {
        self.sign
    }

    #[must_use]
    pub fn degree(&self) -> usize {
        self.phase.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    #[must_use]
    pub fn non_clifford(&self) -> bool {
        self.degree() >= 3
    }

    #[must_use]
    pub fn is_diagonal(&self) -> bool {
        self.x.is_zero()
    }

    #[must_use]
    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.phase.is_empty() && !self.sign
    }

    /// Number of monomials of degree `d`.
    #[must_use]
    pub fn count_degree(&self, d: usize) -> usize {
        self.phase.iter().filter(|m| m.degree() == d).count()
    }

    #[must_use]
    pub fn x_weight(&self) -> usize {
        self.x.weight()
    }

    #[must_use]
    pub fn cz_count(&self) -> usize {
        self.count_degree(2)
    }

    /// Qubits touched by the X part or the phase.
    #[must_use]
    pub fn support(&self) -> BTreeSet<usize> {
        let mut s: BTreeSet<usize> = self.x.iter_ones().collect();
        for m in &self.phase {
            s.extend(m.vars());
        }
        s
    }

    fn same_n(&self, other: &Self) -> Result<(), OpError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(OpError::Size(self.n, other.n))
        }
    }

    /// Product `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Self, OpError> {
        self.same_n(other)?;
        let mut phase = self.phase.clone();
        let mut sign = self.sign ^ other.sign;
        add_shifted(&mut phase, &mut sign, &other.phase, &self.x);
        Ok(Self {
            n: self.n,
            x: self.x.add(&other.x),
            phase,
            sign,
        })
    }

    #[must_use]
    pub fn inverse(&self) -> Self {
        let mut phase = BTreeSet::new();
        let mut sign = self.sign;
        add_shifted(&mut phase, &mut sign, &self.phase, &self.x);
        Self {
            n: self.n,
            x: self.x.clone(),
            phase,
            sign,
        }
    }

    /// Phase polynomial value at a basis state given as a bit mask (n <= 64).
    #[must_use]
    pub fn phase_at_mask(&self, z: u64) -> bool {
        self.phase.iter().fold(self.sign, |acc, m| acc ^ m.eval_mask(z))
    }

    #[must_use]
    pub fn phase_at(&self, z: &F2Vector) -> bool {
        self.phase.iter().fold(self.sign, |acc, m| acc ^ m.eval(z))
    }

    /// Image of the basis state `z` (bit mask) as (sign, new state).
    #[must_use]
    pub fn apply_mask(&self, z: u64) -> (bool, u64) {
        let xm = self.x.iter_ones().fold(0u64, |acc, q| acc | 1 << q);
        let out = z ^ xm;
        (self.phase_at_mask(out), out)
    }

    /// Phase polynomial restricted to the diagonal part (ignoring X).
    #[must_use]
    pub fn diagonal_part(&self) -> Self {
        Self {
            x: F2Vector::zeros(self.n),
            ..self.clone()
        }
    }

    /// Operator on a larger register, qubit `q` moved to `map[q]`.
    #[must_use]
    pub fn relabel(&self, n: usize, map: &[usize]) -> Self {
        let mut out = Self::identity(n);
        for q in self.x.iter_ones() {
            out.x.flip(map[q]);
        }
        for m in &self.phase {
            let vars: Vec<usize> = m.vars().iter().map(|&v| map[v]).collect();
            out.toggle_monomial(&vars);
        }
        out.sign = self.sign;
        out
    }

    #[must_use]
    pub fn to_file(&self) -> OpFile {
        let mut f = OpFile {
            n: self.n,
            x: self.x.support(),
            z: Vec::new(),
            cz: Vec::new(),
            ccz: Vec::new(),
            sign: u8::from(self.sign),
        };
        for m in &self.phase {
            let v = m.vars();
            match v.len() {
                1 => f.z.push(v[0]),
                2 => f.cz.push([v[0], v[1]]),
                _ => f.ccz.push([v[0], v[1], v[2]]),
            }
        }
        f
    }

    pub fn from_file(f: &OpFile) -> Result<Self, OpError> {
        if let Some(&bad) = f.x.iter().find(|&&q| q >= f.n) {
            return Err(OpError::Index(bad));
        }
        let mut monos: Vec<Vec<usize>> = f.z.iter().map(|&q| vec![q]).collect();
        monos.extend(f.cz.iter().map(|p| p.to_vec()));
        monos.extend(f.ccz.iter().map(|p| p.to_vec()));
        Self::from_parts(f.n, &f.x, &monos, f.sign == 1)
    }
}

/// JSON form of a [`PhasePolyOp`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpFile {
    pub n: usize,
    pub x: Vec<usize>,
    pub z: Vec<usize>,
    pub cz: Vec<[usize; 2]>,
    pub ccz: Vec<[usize; 3]>,
    pub sign: u8,
}

pub fn multiply(a: &PhasePolyOp, b: &PhasePolyOp) -> Result<PhasePolyOp, OpError> {
    a.mul(b)
}

/// `u s u^{-1}`.
pub fn conjugate(u: &PhasePolyOp, s: &PhasePolyOp) -> Result<PhasePolyOp, OpError> {
    u.mul(s)?.mul(&u.inverse())
}

/// `a^{-1} b^{-1} a b`; both operands must be Clifford.
pub fn group_commutator(a: &PhasePolyOp, b: &PhasePolyOp) -> Result<PhasePolyOp, OpError> {
    if a.non_clifford() || b.non_clifford() {
        return Err(OpError::NonClifford);
    }
    a.inverse().mul(&b.inverse())?.mul(a)?.mul(b)
}

// ============================================================================
// Diagonal groups
// ============================================================================

/// The group generated by commuting diagonal operators, as an F2 span of
/// phase polynomials (constant terms excluded).
#[derive(Debug, Clone)]
pub struct DiagonalGroup {
    n: usize,
    columns: BTreeMap<Monomial, usize>,
    span: Span,
}

impl DiagonalGroup {
    pub fn new(n: usize, generators: &[PhasePolyOp]) -> Result<Self, OpError> {
        let mut columns = BTreeMap::new();
        for g in generators {
            if g.n != n {
                return Err(OpError::Size(n, g.n));
            }
            if !g.is_diagonal() {
                return Err(OpError::NotDiagonal);
            }
            for m in &g.phase {
                let next = columns.len();
                columns.entry(*m).or_insert(next);
            }
        }
        let mut span = Span::new(columns.len());
        for g in generators {
            let v = Self::vectorize(&columns, g).expect("generator monomials are indexed");
            span.insert(&v);
        }
        Ok(Self { n, columns, span })
    }

    fn vectorize(columns: &BTreeMap<Monomial, usize>, op: &PhasePolyOp) -> Option<F2Vector> {
        let mut v = F2Vector::zeros(columns.len());
        for m in &op.phase {
            v.flip(*columns.get(m)?);
        }
        Some(v)
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.span.dim()
    }

    #[must_use]
    pub const fn n(&self) -> usize {
        self.n
    }

    /// Membership with the sign required to be `+`.
    pub fn contains(&self, op: &PhasePolyOp) -> Result<bool, OpError> {
        Ok(!op.sign && self.contains_up_to_sign(op)?)
    }

    /// Membership ignoring the overall sign.
    pub fn contains_up_to_sign(&self, op: &PhasePolyOp) -> Result<bool, OpError> {
        if op.n != self.n {
            return Err(OpError::Size(self.n, op.n));
        }
        if !op.is_diagonal() {
            return Err(OpError::NotDiagonal);
        }
        Ok(Self::vectorize(&self.columns, op).is_some_and(|v| self.span.contains(&v)))
    }
}

/// Generators plus the group of diagonal stabilizers.
#[derive(Debug, Clone)]
pub struct StabilizerSet {
    pub generators: Vec<Operator>,
    pub diagonal: Vec<PhasePolyOp>,
    pub layout: CodeLayout,
}

impl StabilizerSet {
    pub fn diagonal_group(&self) -> Result<DiagonalGroup, OpError> {
        DiagonalGroup::new(self.layout.total(), &self.diagonal)
    }
}

/// Membership of a diagonal operator in the group of linear diagonal
/// stabilizers. Quadratic residuals are never members.
pub fn in_diagonal_group(op: &PhasePolyOp, s: &StabilizerSet) -> Result<bool, OpError> {
    if !op.is_diagonal() {
        return Err(OpError::NotDiagonal);
    }
    if op.degree() > 1 {
        return Ok(false);
    }
    s.diagonal_group()?.contains(op)
}

// ============================================================================
// Paulis and Clifford tableaux
// ============================================================================

/// `i^phase X^x Z^z`, X factors to the left.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Pauli {
    pub x: F2Vector,
    pub z: F2Vector,
    pub phase: u8,
}

impl fmt::Debug for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i^{} X{:?} Z{:?}", self.phase, self.x.support(), self.z.support())
    }
}

impl Pauli {
    #[must_use]
    pub fn identity(n: usize) -> Self {
        Self {
            x: F2Vector::zeros(n),
            z: F2Vector::zeros(n),
            phase: 0,
        }
    }

    /// Hermitian Pauli with the given supports and sign `(-1)^minus`.
    #[must_use]
    pub fn hermitian(x: F2Vector, z: F2Vector, minus: bool) -> Self {
        let base = u8::from(x.dot(&z));
        Self {
            x,
            z,
            phase: (base + 2 * u8::from(minus)) % 4,
        }
    }

    #[must_use]
    pub fn x_on(n: usize, qubits: &[usize]) -> Self {
        Self::hermitian(F2Vector::from_indices(n, qubits), F2Vector::zeros(n), false)
    }

    #[must_use]
    pub fn z_on(n: usize, qubits: &[usize]) -> Self {
        Self::hermitian(F2Vector::zeros(n), F2Vector::from_indices(n, qubits), false)
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.x.len()
    }

    #[must_use]
    pub fn mul(&self, other: &Self) -> Self {
        let swap = u8::from(self.z.dot(&other.x));
        Self {
            x: self.x.add(&other.x),
            z: self.z.add(&other.z),
            phase: (self.phase + other.phase + 2 * swap) % 4,
        }
    }

    #[must_use]
    pub fn commutes(&self, other: &Self) -> bool {
        self.x.dot(&other.z) == self.z.dot(&other.x)
    }

    #[must_use]
    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == u8::from(self.x.dot(&self.z))
    }

    /// Sign of a Hermitian Pauli relative to its `+` form.
    #[must_use]
    pub fn minus(&self) -> bool {
        (self.phase + 4 - u8::from(self.x.dot(&self.z))) % 4 == 2
    }

    #[must_use]
    pub fn negated(&self) -> Self {
        Self {
            phase: (self.phase + 2) % 4,
            ..self.clone()
        }
    }

    fn symplectic(&self) -> F2Vector {
        self.x.concat(&self.z)
    }
}

/// JSON form of one tableau row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliFile {
    pub x: Vec<usize>,
    pub z: Vec<usize>,
    pub phase: u8,
}

/// Clifford unitary `U` given by `U X_j U^dag` (rows `0..n`) and
/// `U Z_j U^dag` (rows `n..2n`). Global phase is not tracked.
#[derive(Clone, PartialEq, Eq)]
pub struct CliffordOp {
    n: usize,
    images: Vec<Pauli>,
}

impl fmt::Debug for CliffordOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CliffordOp")
            .field("n", &self.n)
            .field("nontrivial", &self.moved_generators())
            .finish()
    }
}

impl CliffordOp {
    #[must_use]
    pub fn identity(n: usize) -> Self {
        let mut images = Vec::with_capacity(2 * n);
        for j in 0..n {
            images.push(Pauli::x_on(n, &[j]));
        }
        for j in 0..n {
            images.push(Pauli::z_on(n, &[j]));
        }
        Self { n, images }
    }

    #[must_use]
    pub const fn n(&self) -> usize {
        self.n
    }

    #[must_use]
    pub fn images(&self) -> &[Pauli] {
        &self.images
    }

    fn generator(&self, g: usize) -> Pauli {
        if g < self.n {
            Pauli::x_on(self.n, &[g])
        } else {
            Pauli::z_on(self.n, &[g - self.n])
        }
    }

    /// Generators whose image differs from themselves.
    #[must_use]
    pub fn moved_generators(&self) -> Vec<usize> {
        (0..2 * self.n)
            .filter(|&g| self.images[g] != self.generator(g))
            .collect()
    }

    /// Qubits on which the action is nontrivial.
    #[must_use]
    pub fn support(&self) -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        for g in self.moved_generators() {
            s.insert(g % self.n);
            let p = &self.images[g];
            s.extend(p.x.iter_ones());
            s.extend(p.z.iter_ones());
        }
        s
    }

    /// `U P U^dag`.
    #[must_use]
    pub fn conjugate_pauli(&self, p: &Pauli) -> Pauli {
        let mut out = Pauli::identity(self.n);
        out.phase = p.phase;
        for j in p.x.iter_ones() {
            out = out.mul(&self.images[j]);
        }
        for j in p.z.iter_ones() {
            out = out.mul(&self.images[self.n + j]);
        }
        out
    }

    /// Operator product `self * other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Result<Self, OpError> {
        if self.n != other.n {
            return Err(OpError::Size(self.n, other.n));
        }
        Ok(Self {
            n: self.n,
            images: other.images.iter().map(|p| self.conjugate_pauli(p)).collect(),
        })
    }

    pub fn inverse(&self) -> Result<Self, OpError> {
        let n = self.n;
        let rows: Vec<F2Vector> = self.images.iter().map(Pauli::symplectic).collect();
        let s = F2Matrix::from_rows(2 * n, rows).expect("tableau shape");
        let inv = f2core::inverse(&s).ok_or(OpError::Singular)?;
        let mut images = Vec::with_capacity(2 * n);
        for g in 0..2 * n {
            let q = inv.row(g);
            let cand = Pauli::hermitian(q.slice(0, n), q.slice(n, n), false);
            let img = self.conjugate_pauli(&cand);
            images.push(if img.minus() { cand.negated() } else { cand });
        }
        Ok(Self { n, images })
    }

    /// True when the symplectic part is the identity.
    #[must_use]
    pub fn is_pauli(&self) -> bool {
        (0..2 * self.n).all(|g| {
            let p = &self.images[g];
            let e = self.generator(g);
            p.x == e.x && p.z == e.z
        })
    }

    /// The Pauli (up to global sign) implementing this tableau, if it is one.
    #[must_use]
    pub fn as_pauli(&self) -> Option<Pauli> {
        if !self.is_pauli() {
            return None;
        }
        let n = self.n;
        let z = F2Vector::from_bools(&(0..n).map(|j| self.images[j].minus()).collect::<Vec<_>>());
        let x = F2Vector::from_bools(&(0..n).map(|j| self.images[n + j].minus()).collect::<Vec<_>>());
        Some(Pauli::hermitian(x, z, false))
    }

    /// True when every `Z_j` is fixed.
    #[must_use]
    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|j| self.images[self.n + j] == Pauli::z_on(self.n, &[j]))
    }

    /// For `U = X^x D` with `D` diagonal, returns `x`: every `Z_j` must map
    /// to `+-Z_j`.
    #[must_use]
    pub fn x_shift(&self) -> Option<F2Vector> {
        let n = self.n;
        let mut x = F2Vector::zeros(n);
        for j in 0..n {
            let img = &self.images[n + j];
            if !img.x.is_zero() || img.z != F2Vector::unit(n, j) {
                return None;
            }
            if img.minus() {
                x.set(j, true);
            }
        }
        Some(x)
    }

    /// Phase polynomial (degree at most 2, sign dropped) of a diagonal Clifford.
    #[must_use]
    pub fn diagonal_phase_poly(&self) -> Option<PhasePolyOp> {
        if !self.is_diagonal() {
            return None;
        }
        let n = self.n;
        let mut op = PhasePolyOp::identity(n);
        for j in 0..n {
            let img = &self.images[j];
            if img.x != F2Vector::unit(n, j) || img.z.get(j) {
                return None;
            }
            if img.minus() {
                op.toggle_monomial(&[j]);
            }
            for k in img.z.iter_ones() {
                if k > j {
                    op.toggle_monomial(&[j, k]);
                }
            }
        }
        Some(op)
    }

    /// Clifford tableau of a phase-polynomial operator of degree <= 2.
    pub fn from_phase_poly(op: &PhasePolyOp) -> Result<Self, OpError> {
        if op.non_clifford() {
            return Err(OpError::NonClifford);
        }
        let n = op.n();
        let mut images = Vec::with_capacity(2 * n);
        // U X_j U^dag = X_j D(f(z + e_j) + f(z))
        let mut lin: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut cst = vec![false; n];
        for m in op.monomials() {
            let v = m.vars();
            match v.len() {
                1 => cst[v[0]] ^= true,
                2 => {
                    for (a, b) in [(v[0], v[1]), (v[1], v[0])] {
                        if !lin[a].remove(&b) {
                            lin[a].insert(b);
                        }
                    }
                }
                _ => unreachable!("degree checked"),
            }
        }
        for j in 0..n {
            let z: Vec<usize> = lin[j].iter().copied().collect();
            images.push(Pauli::hermitian(
                F2Vector::unit(n, j),
                F2Vector::from_indices(n, &z),
                cst[j],
            ));
        }
        for j in 0..n {
            images.push(Pauli::hermitian(
                F2Vector::zeros(n),
                F2Vector::unit(n, j),
                op.x_part().get(j),
            ));
        }
        Ok(Self { n, images })
    }

    /// The Pauli `P` itself as a Clifford.
    #[must_use]
    pub fn from_pauli(p: &Pauli) -> Self {
        let mut c = Self::identity(p.n());
        for g in 0..2 * c.n {
            if !c.images[g].commutes(p) {
                c.images[g] = c.images[g].negated();
            }
        }
        c
    }

    #[must_use]
    pub fn h(n: usize, q: usize) -> Self {
        let mut c = Self::identity(n);
        c.images[q] = Pauli::z_on(n, &[q]);
        c.images[n + q] = Pauli::x_on(n, &[q]);
        c
    }

    #[must_use]
    pub fn cnot(n: usize, control: usize, target: usize) -> Self {
        let mut c = Self::identity(n);
        c.images[control] = Pauli::x_on(n, &[control, target]);
        c.images[n + target] = Pauli::z_on(n, &[control, target]);
        c
    }

    #[must_use]
    pub fn cz(n: usize, a: usize, b: usize) -> Self {
        Self::from_phase_poly(&PhasePolyOp::cz(n, a, b)).expect("CZ is Clifford")
    }

    #[must_use]
    pub fn swap(n: usize, a: usize, b: usize) -> Self {
        let mut c = Self::identity(n);
        c.images.swap(a, b);
        c.images.swap(n + a, n + b);
        c
    }

    /// `(1 + P)/2 + (1 - P)/2 Q` for commuting Hermitian Paulis `P`, `Q`:
    /// apply `Q` when `P` reads `-1`.
    pub fn controlled_pauli(control: &Pauli, target: &Pauli) -> Result<Self, OpError> {
        if !control.commutes(target) || !control.is_hermitian() || !target.is_hermitian() {
            return Err(OpError::BadControl);
        }
        let mut c = Self::identity(control.n());
        for g in 0..2 * c.n {
            let r = c.images[g].clone();
            let ap = !r.commutes(control);
            let aq = !r.commutes(target);
            c.images[g] = match (ap, aq) {
                (false, false) => r,
                (true, false) => r.mul(target),
                (false, true) => r.mul(control),
                (true, true) => r.mul(control).mul(target).negated(),
            };
        }
        Ok(c)
    }

    #[must_use]
    pub fn to_file(&self) -> CliffordFile {
        let moved = self.moved_generators();
        CliffordFile {
            n: self.n,
            images: moved
                .into_iter()
                .map(|g| {
                    let p = &self.images[g];
                    (
                        g,
                        PauliFile {
                            x: p.x.support(),
                            z: p.z.support(),
                            phase: p.phase,
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn from_file(f: &CliffordFile) -> Result<Self, OpError> {
        let mut c = Self::identity(f.n);
        for (g, p) in &f.images {
            if *g >= 2 * f.n {
                return Err(OpError::Index(*g));
            }
            if let Some(&bad) = p.x.iter().chain(&p.z).find(|&&q| q >= f.n) {
                return Err(OpError::Index(bad));
            }
            c.images[*g] = Pauli {
                x: F2Vector::from_indices(f.n, &p.x),
                z: F2Vector::from_indices(f.n, &p.z),
                phase: p.phase % 4,
            };
        }
        Ok(c)
    }
}

/// Sparse tableau JSON: only generators with a nontrivial image are listed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordFile {
    pub n: usize,
    pub images: Vec<(usize, PauliFile)>,
}

pub fn to_clifford(op: &PhasePolyOp) -> Result<CliffordOp, OpError> {
    CliffordOp::from_phase_poly(op)
}

pub fn clifford_compose(a: &CliffordOp, b: &CliffordOp) -> Result<CliffordOp, OpError> {
    a.compose(b)
}

pub fn clifford_inverse(a: &CliffordOp) -> Result<CliffordOp, OpError> {
    a.inverse()
}

#[must_use]
pub fn clifford_is_pauli(a: &CliffordOp) -> bool {
    a.is_pauli()
}

// ============================================================================
// Operator: either representation
// ============================================================================

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operator {
    Phase(PhasePolyOp),
    Clifford(CliffordOp),
}

/// Outcome of a group commutator taken in the diagonal group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommutatorClass {
    /// Diagonal with this phase polynomial; `sign_known` is false when it
    /// came from a tableau, which does not track global phase.
    Diagonal { op: PhasePolyOp, sign_known: bool },
    NotDiagonal,
}

impl Operator {
    #[must_use]
    pub fn n(&self) -> usize {
        match self {
            Self::Phase(p) => p.n(),
            Self::Clifford(c) => c.n(),
        }
    }

    #[must_use]
    pub fn support(&self) -> BTreeSet<usize> {
        match self {
            Self::Phase(p) => p.support(),
            Self::Clifford(c) => c.support(),
        }
    }

    pub fn to_clifford(&self) -> Result<CliffordOp, OpError> {
        match self {
            Self::Phase(p) => CliffordOp::from_phase_poly(p),
            Self::Clifford(c) => Ok(c.clone()),
        }
    }

    /// Whether `op * op` is the identity (up to global phase for tableaux).
    pub fn is_involution(&self) -> Result<bool, OpError> {
        match self {
            Self::Phase(p) => Ok(p.mul(p)?.is_identity()),
            Self::Clifford(c) => Ok(c.compose(c)?.moved_generators().is_empty()),
        }
    }

    /// `a^{-1} b^{-1} a b`, classified as diagonal or not.
    pub fn commutator(&self, other: &Self) -> Result<CommutatorClass, OpError> {
        if let (Self::Phase(a), Self::Phase(b)) = (self, other) {
            let c = group_commutator(a, b)?;
            return Ok(if c.is_diagonal() {
                CommutatorClass::Diagonal {
                    op: c,
                    sign_known: true,
                }
            } else {
                CommutatorClass::NotDiagonal
            });
        }
        let a = self.to_clifford()?;
        let b = other.to_clifford()?;
        let c = a.inverse()?.compose(&b.inverse()?)?.compose(&a)?.compose(&b)?;
        Ok(match c.diagonal_phase_poly() {
            Some(op) => CommutatorClass::Diagonal {
                op,
                sign_known: false,
            },
            None => CommutatorClass::NotDiagonal,
        })
    }

    #[must_use]
    pub fn to_file(&self) -> OperatorFile {
        match self {
            Self::Phase(p) => OperatorFile::Phase(p.to_file()),
            Self::Clifford(c) => OperatorFile::Clifford(c.to_file()),
        }
    }

    pub fn from_file(f: &OperatorFile) -> Result<Self, OpError> {
        Ok(match f {
            OperatorFile::Phase(p) => Self::Phase(PhasePolyOp::from_file(p)?),
            OperatorFile::Clifford(c) => Self::Clifford(CliffordOp::from_file(c)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OperatorFile {
    Phase(OpFile),
    Clifford(CliffordFile),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x_involution() {
        let x = PhasePolyOp::x(2, &[0]);
        assert!(x.mul(&x).unwrap().is_identity());
    }

    #[test]
    fn cz_conjugates_x() {
        let cz = PhasePolyOp::cz(2, 0, 1);
        let x = PhasePolyOp::x(2, &[0]);
        let r = cz.mul(&x).unwrap().mul(&cz).unwrap().mul(&x).unwrap();
        assert_eq!(r, PhasePolyOp::z(2, &[1]));
        let c = conjugate(&cz, &x).unwrap();
        assert_eq!(c, PhasePolyOp::x(2, &[0]).mul(&PhasePolyOp::z(2, &[1])).unwrap());
    }

    #[test]
    fn ccz_conjugates_x_to_cz() {
        let ccz = PhasePolyOp::ccz(3, 0, 1, 2);
        let x = PhasePolyOp::x(3, &[0]);
        let r = ccz.mul(&x).unwrap().mul(&ccz).unwrap().mul(&x).unwrap();
        assert_eq!(r, PhasePolyOp::cz(3, 1, 2));
    }

    #[test]
    fn commutators() {
        let z = PhasePolyOp::z(2, &[1]);
        let x = PhasePolyOp::x(2, &[0]);
        assert!(group_commutator(&z, &x).unwrap().is_identity());
        let z1 = PhasePolyOp::z(1, &[0]);
        let x1 = PhasePolyOp::x(1, &[0]);
        let c = group_commutator(&x1, &z1).unwrap();
        assert!(c.sign() && c.monomials().is_empty() && c.is_diagonal());
        let ccz = PhasePolyOp::ccz(3, 0, 1, 2);
        assert_eq!(
            group_commutator(&ccz, &PhasePolyOp::x(3, &[0])),
            Err(OpError::NonClifford)
        );
    }

    #[test]
    fn diagonal_membership() {
        let layout = CodeLayout::new(&[(crate::complexes::Sublattice::B, 4)]);
        let s = StabilizerSet {
            generators: vec![],
            diagonal: vec![PhasePolyOp::z(4, &[0, 1]), PhasePolyOp::z(4, &[1, 2])],
            layout,
        };
        assert!(in_diagonal_group(&PhasePolyOp::z(4, &[0, 2]), &s).unwrap());
        assert!(!in_diagonal_group(&PhasePolyOp::z(4, &[3]), &s).unwrap());
        assert!(!in_diagonal_group(&PhasePolyOp::cz(4, 0, 1), &s).unwrap());
        assert!(in_diagonal_group(&PhasePolyOp::x(4, &[0]), &s).is_err());
        let mut neg = PhasePolyOp::z(4, &[0, 1]);
        neg.flip_sign();
        assert!(!in_diagonal_group(&neg, &s).unwrap());
    }

    #[test]
    fn tableaux() {
        let z = CliffordOp::from_phase_poly(&PhasePolyOp::z(1, &[0])).unwrap();
        assert!(z.is_pauli());
        assert_eq!(z.moved_generators(), vec![0]);
        let sw = CliffordOp::swap(2, 0, 1);
        assert!(sw.compose(&sw).unwrap().moved_generators().is_empty());
        let cx = CliffordOp::cnot(2, 0, 1);
        assert!(cx.compose(&cx).unwrap().moved_generators().is_empty());
        let cz = CliffordOp::cz(2, 0, 1);
        let hcxh = CliffordOp::h(2, 1).compose(&cx).unwrap().compose(&CliffordOp::h(2, 1)).unwrap();
        assert_eq!(hcxh, cz);
        let inv = cx.compose(&cz).unwrap().inverse().unwrap();
        assert!(inv.compose(&cx.compose(&cz).unwrap()).unwrap().moved_generators().is_empty());
    }

    #[test]
    fn controlled_pauli_matches_cnot() {
        // control Z_0 (apply when Z_0 = -1), target X_1
        let c = CliffordOp::controlled_pauli(&Pauli::z_on(2, &[0]), &Pauli::x_on(2, &[1])).unwrap();
        assert_eq!(c, CliffordOp::cnot(2, 0, 1));
        assert!(CliffordOp::controlled_pauli(&Pauli::z_on(1, &[0]), &Pauli::x_on(1, &[0])).is_err());
    }

    #[test]
    fn diagonal_roundtrip() {
        let mut op = PhasePolyOp::cz(3, 0, 2);
        op.toggle_monomial(&[1]);
        let c = CliffordOp::from_phase_poly(&op).unwrap();
        assert_eq!(c.diagonal_phase_poly().unwrap(), op);
    }

    #[test]
    fn json_roundtrip() {
        let mut op = PhasePolyOp::x(5, &[0, 3]);
        op.toggle_monomial(&[1, 2]);
        op.toggle_monomial(&[1, 2, 4]);
        op.toggle_monomial(&[4]);
        op.flip_sign();
        assert_eq!(PhasePolyOp::from_file(&op.to_file()).unwrap(), op);
        let c = CliffordOp::cnot(3, 0, 2).compose(&CliffordOp::h(3, 1)).unwrap();
        let s = serde_json::to_string(&Operator::Clifford(c.clone()).to_file()).unwrap();
        let back = Operator::from_file(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back, Operator::Clifford(c));
    }
}
