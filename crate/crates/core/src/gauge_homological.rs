//! Homological gauging of transversal CZ and SWAP gates.
//!
//! Two copies B, C of a code on a complex with a cup product are coupled to
//! a cluster state (a on vertices, A on edges) built from the same complex.
//! After enrichment and projection of `a`, the stabilizers live on the
//! layout `[A | B | C]`.

use crate::complexes::{ChainComplex, CodeLayout, Sublattice};
use crate::cup::{Certification, CupError, CupProduct, FundamentalClass};
use crate::f2core::{self, F2Matrix, F2Vector};
use crate::ops::{
    conjugate, CliffordOp, CommutatorClass, DiagonalGroup, OpError, OpFile, Operator,
    OperatorFile, Pauli, PauliFile, PhasePolyOp, StabilizerSet,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, thiserror::Error)]
pub enum GaugeError {
    #[error(transparent)]
    Cup(#[from] CupError),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    F2(#[from] f2core::F2Error),
    #[error("Poincare map is not bijective (rank {rank} of {n})")]
    NotBijective { rank: usize, n: usize },
    #[error("no vertex cochain v_p with d v_p = PD^-1(boundary p) for plaquettes {0:?}")]
    Unsolvable(Vec<usize>),
    #[error("{0}")]
    Invalid(String),
}

use Sublattice::{Gauge as A, Vertex as Va, B, C};

// ============================================================================
// Output type
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeMode {
    HomologicalCz,
    HomologicalSwap,
    GraphCz,
    GraphSwap,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LdpcAudit {
    pub max_generator_weight: usize,
    pub max_qubit_degree: usize,
    pub max_x_weight: usize,
    pub max_cz_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub mode: GaugeMode,
    pub classes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub certified: bool,
    pub ldpc: LdpcAudit,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct GaugedCode {
    pub layout: CodeLayout,
    pub x_type: Vec<Operator>,
    pub z_type: Vec<PhasePolyOp>,
    pub mu_basis: Vec<F2Vector>,
    /// Pauli elements of the stabilizer group (such as `X^B_{dv} X^C_{dv}`
    /// in SWAP gaugings) used to reduce non-diagonal commutators.
    pub pauli_elements: Vec<Pauli>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaugedFile {
    pub layout: CodeLayout,
    pub x_type_stabilizers: Vec<OperatorFile>,
    pub z_type_stabilizers: Vec<OpFile>,
    pub mu_basis: Vec<F2Vector>,
    #[serde(default)]
    pub pauli_elements: Vec<PauliFile>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureFailure {
    pub first: usize,
    pub second: usize,
    pub reason: String,
}

/// Pairwise commutator audit. Generator indices run over `x_type` first,
/// then `z_type`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub pairs_checked: usize,
    pub pairs_skipped: usize,
    pub sign_untracked: usize,
    pub failures: Vec<ClosureFailure>,
}

impl ClosureReport {
    #[must_use]
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

impl GaugedCode {
    pub(crate) fn new(
        layout: CodeLayout,
        x_type: Vec<Operator>,
        z_type: Vec<PhasePolyOp>,
        mu_basis: Vec<F2Vector>,
        mode: GaugeMode,
        classes: Vec<String>,
        certified: bool,
    ) -> Self {
        let mut g = Self {
            layout,
            x_type,
            z_type,
            mu_basis,
            pauli_elements: Vec::new(),
            provenance: Provenance {
                mode,
                classes,
                seed: None,
                certified,
                ldpc: LdpcAudit::default(),
                notes: Vec::new(),
            },
        };
        g.provenance.ldpc = g.ldpc_audit();
        if !certified {
            g.provenance.notes.push("uncertified cup product".into());
        }
        g
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.layout.total()
    }

    fn all_generators(&self) -> Vec<Operator> {
        self.x_type
            .iter()
            .cloned()
            .chain(self.z_type.iter().cloned().map(Operator::Phase))
            .collect()
    }

    #[must_use]
    pub fn ldpc_audit(&self) -> LdpcAudit {
        let mut audit = LdpcAudit::default();
        let mut degree = vec![0usize; self.n()];
        for g in self.all_generators() {
            let s = g.support();
            audit.max_generator_weight = audit.max_generator_weight.max(s.len());
            for q in s {
                degree[q] += 1;
            }
            if let Operator::Phase(p) = &g {
                audit.max_x_weight = audit.max_x_weight.max(p.x_weight());
                audit.max_cz_count = audit.max_cz_count.max(p.cz_count());
            }
        }
        audit.max_qubit_degree = degree.into_iter().max().unwrap_or(0);
        audit
    }

    pub fn stabilizer_set(&self) -> StabilizerSet {
        StabilizerSet {
            generators: self.x_type.clone(),
            diagonal: self.z_type.clone(),
            layout: self.layout.clone(),
        }
    }

    pub fn diagonal_group(&self) -> Result<DiagonalGroup, OpError> {
        DiagonalGroup::new(self.n(), &self.z_type)
    }

    /// Every generator squares to the identity.
    pub fn audit_involution(&self) -> Result<Vec<usize>, OpError> {
        let mut bad = Vec::new();
        for (k, g) in self.all_generators().iter().enumerate() {
            if !g.is_involution()? {
                bad.push(k);
            }
        }
        Ok(bad)
    }

    /// Group commutators of every overlapping generator pair lie in the
    /// group of diagonal stabilizers.
    pub fn audit_closure(&self) -> Result<ClosureReport, GaugeError> {
        let group = self.diagonal_group()?;
        let gens = self.all_generators();
        let nx = self.x_type.len();
        let supports: Vec<BTreeSet<usize>> = gens.iter().map(Operator::support).collect();
        let mut by_qubit: Vec<Vec<usize>> = vec![Vec::new(); self.n()];
        for (k, s) in supports.iter().enumerate() {
            for &q in s {
                by_qubit[q].push(k);
            }
        }
        let mut report = ClosureReport::default();
        for i in 0..nx {
            let mut partners: BTreeSet<usize> = BTreeSet::new();
            for &q in &supports[i] {
                partners.extend(by_qubit[q].iter().copied().filter(|&j| j > i));
            }
            let total = gens.len() - i - 1;
            report.pairs_skipped += total - partners.len();
            for j in partners {
                report.pairs_checked += 1;
                let (reason, untracked) = self.pair_residual(&gens[i], &gens[j], &group)?;
                report.sign_untracked += usize::from(untracked);
                if let Some(reason) = reason {
                    report.failures.push(ClosureFailure {
                        first: i,
                        second: j,
                        reason,
                    });
                }
            }
        }
        Ok(report)
    }

    /// Tests whether the group commutator of `a` and `b` is a stabilizer
    /// (diagonal, possibly after removing `pauli_elements`). Returns the
    /// failure reason, if any, and whether the sign went untracked.
    pub fn pair_residual(
        &self,
        a: &Operator,
        b: &Operator,
        group: &DiagonalGroup,
    ) -> Result<(Option<String>, bool), GaugeError> {
        Ok(match a.commutator(b)? {
            CommutatorClass::NotDiagonal => (self.reduce_by_paulis(a, b, group)?, true),
            CommutatorClass::Diagonal { op, sign_known } => {
                let ok = if sign_known {
                    group.contains(&op)?
                } else {
                    group.contains_up_to_sign(&op)?
                };
                ((!ok).then(|| format!("residual {op:?} not in diagonal group")), !sign_known)
            }
        })
    }

    /// Strips an X-type Pauli factor built from `pauli_elements` off a
    /// non-diagonal commutator and tests the diagonal remainder.
    fn reduce_by_paulis(
        &self,
        a: &Operator,
        b: &Operator,
        group: &DiagonalGroup,
    ) -> Result<Option<String>, GaugeError> {
        let (ac, bc) = (a.to_clifford()?, b.to_clifford()?);
        let comm = ac.inverse()?.compose(&bc.inverse()?)?.compose(&ac)?.compose(&bc)?;
        let Some(x) = comm.x_shift() else {
            return Ok(Some("commutator moves Z operators".into()));
        };
        let cols: Vec<F2Vector> = self.pauli_elements.iter().map(|e| e.x.clone()).collect();
        let m = F2Matrix::from_cols(self.n(), &cols)?;
        let Some(coef) = f2core::solve(&m, &x)? else {
            return Ok(Some("X part not solvable".into()));
        };
        let p = coef
            .iter_ones()
            .fold(Pauli::identity(self.n()), |acc, k| acc.mul(&self.pauli_elements[k]));
        let diag = CliffordOp::from_pauli(&p).compose(&comm)?;
        Ok(match diag.diagonal_phase_poly() {
            Some(d) if group.contains_up_to_sign(&d)? => None,
            Some(d) => Some(format!("residual {d:?} not in diagonal group")),
            None => Some("remainder is not diagonal".into()),
        })
    }

    #[must_use]
    pub fn to_file(&self) -> GaugedFile {
        GaugedFile {
            layout: self.layout.clone(),
            x_type_stabilizers: self.x_type.iter().map(Operator::to_file).collect(),
            z_type_stabilizers: self.z_type.iter().map(PhasePolyOp::to_file).collect(),
            mu_basis: self.mu_basis.clone(),
            pauli_elements: self
                .pauli_elements
                .iter()
                .map(|p| PauliFile {
                    x: p.x.support(),
                    z: p.z.support(),
                    phase: p.phase,
                })
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn from_file(f: &GaugedFile) -> Result<Self, OpError> {
        let n = f.layout.total();
        let x_type = f
            .x_type_stabilizers
            .iter()
            .map(Operator::from_file)
            .collect::<Result<Vec<_>, _>>()?;
        let z_type = f
            .z_type_stabilizers
            .iter()
            .map(PhasePolyOp::from_file)
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(g) = x_type.iter().find(|g| g.n() != n) {
            return Err(OpError::Size(n, g.n()));
        }
        if let Some(g) = z_type.iter().find(|g| g.n() != n) {
            return Err(OpError::Size(n, g.n()));
        }
        let pauli_elements = f
            .pauli_elements
            .iter()
            .map(|p| {
                if let Some(&bad) = p.x.iter().chain(&p.z).find(|&&q| q >= n) {
                    return Err(OpError::Index(bad));
                }
                Ok(Pauli {
                    x: F2Vector::from_indices(n, &p.x),
                    z: F2Vector::from_indices(n, &p.z),
                    phase: p.phase % 4,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            layout: f.layout.clone(),
            x_type,
            z_type,
            mu_basis: f.mu_basis.clone(),
            pauli_elements,
            provenance: f.provenance.clone(),
        })
    }
}

// ============================================================================
// Cup integrals
// ============================================================================

fn odd_on(m: &F2Vector, cells: &[usize]) -> bool {
    cells.iter().filter(|&&r| m.get(r)).count() % 2 == 1
}

fn toggle3(set: &mut BTreeSet<(usize, usize, usize)>, t: (usize, usize, usize)) {
    if !set.remove(&t) {
        set.insert(t);
    }
}

/// Pairs `(e, e')` with `int_M e cup e' = 1`.
#[must_use]
pub fn edge_pairs(cp: &CupProduct, m: &F2Vector) -> BTreeSet<(usize, usize)> {
    cp.table(1, 1)
        .map(|t| {
            t.iter()
                .filter(|(_, _, r)| odd_on(m, r))
                .map(|(e, f, _)| (e, f))
                .collect()
        })
        .unwrap_or_default()
}

/// For each 2-cell p, the vertices v with `int_M v cup p = 1`.
fn vertex_face_weights(cp: &CupProduct, m: &F2Vector) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); cp.sizes()[2]];
    if let Some(t) = cp.table(0, 2) {
        for (v, p, r) in t.iter() {
            if odd_on(m, r) {
                out[p].push(v);
            }
        }
    }
    out
}

/// For each edge f, the edges e with `int_M e cup f = 1`.
fn first_partners(cp: &CupProduct, m: &F2Vector) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); cp.sizes()[1]];
    for (e, f) in edge_pairs(cp, m) {
        out[f].push(e);
    }
    out
}

/// Which bracketing of the triple product to integrate; triples are always
/// reported as `(v, e, e')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Triple {
    /// `int_M v cup (e cup e')`
    VEE,
    /// `int_M e cup (v cup e')`
    EVE,
    /// `int_M e' cup (e cup v)`
    EEV,
}

/// All `(v, e, e')` with the chosen triple integral equal to 1.
#[must_use]
pub fn triples(cp: &CupProduct, m: &F2Vector, kind: Triple) -> BTreeSet<(usize, usize, usize)> {
    let mut out = BTreeSet::new();
    match kind {
        Triple::VEE => {
            let w = vertex_face_weights(cp, m);
            if let Some(t) = cp.table(1, 1) {
                for (e, f, faces) in t.iter() {
                    for &p in faces {
                        for &v in &w[p] {
                            toggle3(&mut out, (v, e, f));
                        }
                    }
                }
            }
        }
        Triple::EVE => {
            let firsts = first_partners(cp, m);
            if let Some(t) = cp.table(0, 1) {
                for (v, f, edges) in t.iter() {
                    for &g in edges {
                        for &e in &firsts[g] {
                            toggle3(&mut out, (v, e, f));
                        }
                    }
                }
            }
        }
        Triple::EEV => {
            let firsts = first_partners(cp, m);
            if let Some(t) = cp.table(1, 0) {
                for (e, v, edges) in t.iter() {
                    for &g in edges {
                        for &f in &firsts[g] {
                            toggle3(&mut out, (v, e, f));
                        }
                    }
                }
            }
        }
    }
    out
}

fn group_by_vertex(
    n0: usize,
    t: &BTreeSet<(usize, usize, usize)>,
) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new(); n0];
    for &(v, e, f) in t {
        out[v].push((e, f));
    }
    out
}

// ============================================================================
// Layouts and original stabilizers
// ============================================================================

#[must_use]
pub fn bc_layout(c: &ChainComplex) -> CodeLayout {
    CodeLayout::new(&[(B, c.n1()), (C, c.n1())])
}

#[must_use]
pub fn gauged_layout(c: &ChainComplex) -> CodeLayout {
    CodeLayout::new(&[(A, c.n1()), (B, c.n1()), (C, c.n1())])
}

/// Layout with the vertex ancillas, `[a | A | B | C]`.
#[must_use]
pub fn full_layout(c: &ChainComplex) -> CodeLayout {
    CodeLayout::new(&[(Va, c.n0()), (A, c.n1()), (B, c.n1()), (C, c.n1())])
}

pub(crate) fn x_on(layout: &CodeLayout, s: Sublattice, cells: &[usize]) -> PhasePolyOp {
    let q: Vec<usize> = cells.iter().map(|&i| layout.q(s, i)).collect();
    PhasePolyOp::x(layout.total(), &q)
}

pub(crate) fn z_on(layout: &CodeLayout, s: Sublattice, cells: &[usize]) -> PhasePolyOp {
    let q: Vec<usize> = cells.iter().map(|&i| layout.q(s, i)).collect();
    PhasePolyOp::z(layout.total(), &q)
}

/// `X_{dv}` and `Z_{boundary p}` on sublattice `s` of `layout`.
#[must_use]
pub fn css_stabilizers(
    c: &ChainComplex,
    layout: &CodeLayout,
    s: Sublattice,
) -> (Vec<PhasePolyOp>, Vec<PhasePolyOp>) {
    let xs = (0..c.n0())
        .map(|v| x_on(layout, s, &c.coboundary_cell(0, v)))
        .collect();
    let zs = (0..c.n2())
        .map(|p| z_on(layout, s, &c.d2.col(p).support()))
        .collect();
    (xs, zs)
}

/// Basis of H^0 in reduced row echelon form, so each element has a
/// distinct leading vertex.
#[must_use]
pub fn mu_basis(c: &ChainComplex) -> Vec<F2Vector> {
    let ker = f2core::kernel_basis(&c.d1.transpose());
    f2core::Span::from_vectors(c.n0(), &ker).rref_rows()
}

pub(crate) fn certified(cp: &CupProduct) -> bool {
    !matches!(cp.certification, Certification::Uncertified)
}

fn class_tag(m: &FundamentalClass) -> String {
    m.tag.clone().unwrap_or_else(|| format!("chain{:?}", m.chain.support()))
}

// ============================================================================
// CZ gauging
// ============================================================================

/// `U_CZ[M]` on an arbitrary layout containing B and C.
pub fn build_ucz_in(cp: &CupProduct, m: &F2Vector, layout: &CodeLayout) -> Result<PhasePolyOp, GaugeError> {
    if m.len() != cp.sizes()[2] {
        return Err(GaugeError::Invalid("class length does not match 2-cells".into()));
    }
    let mut op = PhasePolyOp::identity(layout.total());
    for (e, f) in edge_pairs(cp, m) {
        op.toggle_monomial(&[layout.q(B, e), layout.q(C, f)]);
    }
    Ok(op)
}

/// `U_CZ[M] = prod (CZ_{B e, C e'})^{int_M e cup e'}` on `[B | C]`.
pub fn build_ucz(c: &ChainComplex, cp: &CupProduct, m: &FundamentalClass) -> Result<PhasePolyOp, GaugeError> {
    build_ucz_in(cp, &m.chain, &bc_layout(c))
}

/// `Omega = prod (CCZ_{a v, B e, C e'})^{int_M v cup (e cup e')}` on `[a | A | B | C]`.
pub fn build_omega_cz(c: &ChainComplex, cp: &CupProduct, m: &FundamentalClass) -> Result<PhasePolyOp, GaugeError> {
    let layout = full_layout(c);
    let mut op = PhasePolyOp::identity(layout.total());
    for (v, e, f) in triples(cp, &m.chain, Triple::VEE) {
        op.toggle_monomial(&[layout.q(Va, v), layout.q(B, e), layout.q(C, f)]);
    }
    Ok(op)
}

/// Checks `X_mu Omega X_mu Omega^dag == U_CZ[M cap mu]` for each `mu`.
pub fn check_enrichment(
    c: &ChainComplex,
    cp: &CupProduct,
    m: &FundamentalClass,
    mus: &[F2Vector],
) -> Result<Vec<bool>, GaugeError> {
    let layout = full_layout(c);
    let omega = build_omega_cz(c, cp, m)?;
    let mut out = Vec::new();
    for mu in mus {
        let xm = x_on(&layout, Va, &mu.support());
        let lhs = conjugate(&omega, &xm)?.mul(&xm.inverse())?;
        let capped = cp.cap_right(&m.chain, 0, mu)?;
        let rhs = build_ucz_in(cp, &capped, &layout)?;
        out.push(lhs == rhs);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub index: usize,
    pub residual: OpFile,
    pub in_group: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub residuals: Vec<Residual>,
    pub all_in_group: bool,
}

/// For each stabilizer `s`, tests `u s u^{-1} s^{-1}` against the group
/// generated by `diagonal`.
pub fn verify_symmetry(
    u: &Operator,
    stabilizers: &[Operator],
    diagonal: &[PhasePolyOp],
) -> Result<SymmetryReport, GaugeError> {
    let n = u.n();
    let group = DiagonalGroup::new(n, diagonal)?;
    let uc = u.to_clifford().ok();
    let mut residuals = Vec::new();
    for (index, s) in stabilizers.iter().enumerate() {
        let (res, sign_known) = match (u, s) {
            (Operator::Phase(up), Operator::Phase(sp)) => (Some(conjugate(up, sp)?.mul(&sp.inverse())?), true),
            _ => {
                let uc = uc.clone().ok_or(OpError::NonClifford)?;
                let sc = s.to_clifford()?;
                let r = uc.compose(&sc)?.compose(&uc.inverse()?)?.compose(&sc.inverse()?)?;
                (r.diagonal_phase_poly(), false)
            }
        };
        let (residual, in_group) = match res {
            Some(r) if r.is_diagonal() => {
                let ok = if sign_known {
                    group.contains(&r)?
                } else {
                    group.contains_up_to_sign(&r)?
                };
                (r, ok)
            }
            Some(r) => (r, false),
            None => (PhasePolyOp::identity(n), false),
        };
        residuals.push(Residual {
            index,
            residual: residual.to_file(),
            in_group,
        });
    }
    let all_in_group = residuals.iter().all(|r| r.in_group);
    Ok(SymmetryReport {
        residuals,
        all_in_group,
    })
}

/// Gauges `U_CZ[M cap mu]` for all `mu` in H^0 at once.
pub fn gauge_cz(c: &ChainComplex, cp: &CupProduct, m: &FundamentalClass) -> Result<GaugedCode, GaugeError> {
    let layout = gauged_layout(c);
    let n = layout.total();
    let by_a = group_by_vertex(c.n0(), &triples(cp, &m.chain, Triple::VEE));
    let by_b = group_by_vertex(c.n0(), &triples(cp, &m.chain, Triple::EVE));
    let by_c = group_by_vertex(c.n0(), &triples(cp, &m.chain, Triple::EEV));
    let mut x_type = Vec::with_capacity(3 * c.n0());
    for v in 0..c.n0() {
        let dv = c.coboundary_cell(0, v);
        let mut op = x_on(&layout, A, &dv);
        for &(e, f) in &by_a[v] {
            op.toggle_monomial(&[layout.q(B, e), layout.q(C, f)]);
        }
        x_type.push(Operator::Phase(op));
    }
    for v in 0..c.n0() {
        let mut op = x_on(&layout, B, &c.coboundary_cell(0, v));
        for &(e, f) in &by_b[v] {
            op.toggle_monomial(&[layout.q(A, e), layout.q(C, f)]);
        }
        x_type.push(Operator::Phase(op));
    }
    for v in 0..c.n0() {
        let mut op = x_on(&layout, C, &c.coboundary_cell(0, v));
        for &(e, f) in &by_c[v] {
            op.toggle_monomial(&[layout.q(B, e), layout.q(A, f)]);
        }
        x_type.push(Operator::Phase(op));
    }
    let mut z_type = Vec::with_capacity(3 * c.n2());
    for s in [A, B, C] {
        z_type.extend(css_stabilizers(c, &layout, s).1);
    }
    debug_assert!(z_type.iter().all(|z| z.n() == n));
    Ok(GaugedCode::new(
        layout,
        x_type,
        z_type,
        mu_basis(c),
        GaugeMode::HomologicalCz,
        vec![class_tag(m)],
        certified(cp),
    ))
}

// ============================================================================
// SWAP gauging
// ============================================================================

/// `PD^{-1}`: column `e` is the 1-cochain mapped to the edge `e` by
/// `a -> a cap M0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdInverse {
    columns: Vec<F2Vector>,
}

impl PdInverse {
    /// Inverts `a -> a cap M0` on 1-cochains.
    pub fn from_class(c: &ChainComplex, cp: &CupProduct, m0: &F2Vector) -> Result<Self, GaugeError> {
        let n = c.n1();
        let cols = (0..n)
            .map(|j| cp.cap(1, &F2Vector::unit(n, j), m0))
            .collect::<Result<Vec<_>, _>>()?;
        let pd = F2Matrix::from_cols(n, &cols)?;
        let inv = f2core::inverse(&pd).ok_or_else(|| GaugeError::NotBijective {
            rank: f2core::rank(&pd),
            n,
        })?;
        Ok(Self {
            columns: inv.col_vectors(),
        })
    }

    /// Uses a caller-supplied map; checks it is a bijection.
    pub fn from_columns(columns: Vec<F2Vector>) -> Result<Self, GaugeError> {
        let n = columns.len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(GaugeError::Invalid("PD inverse must be square".into()));
        }
        let m = F2Matrix::from_cols(n, &columns)?;
        let rank = f2core::rank(&m);
        if rank != n {
            return Err(GaugeError::NotBijective { rank, n });
        }
        Ok(Self { columns })
    }

    #[must_use]
    pub fn of_edge(&self, e: usize) -> &F2Vector {
        &self.columns[e]
    }

    #[must_use]
    pub fn of_chain(&self, chain: &F2Vector) -> F2Vector {
        let mut out = F2Vector::zeros(self.columns.len());
        for e in chain.iter_ones() {
            out.add_assign(&self.columns[e]);
        }
        out
    }

    /// Largest column weight, the LDPC figure of merit.
    #[must_use]
    pub fn max_weight(&self) -> usize {
        self.columns.iter().map(F2Vector::weight).max().unwrap_or(0)
    }
}

/// For each vertex v, the pairs `(e, e')` with
/// `int_M v cup (PD^{-1}(e) cup e') = 1`.
fn swap_a_pairs(c: &ChainComplex, cp: &CupProduct, m: &F2Vector, pd: &PdInverse) -> Result<Vec<Vec<(usize, usize)>>, GaugeError> {
    let w = vertex_face_weights(cp, m);
    let n1 = c.n1();
    let mut sets: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); c.n0()];
    for e in 0..n1 {
        let x = pd.of_edge(e);
        let mut partners = BTreeSet::new();
        for i in x.iter_ones() {
            partners.extend(cp.with_first(1, 1, i).iter().map(|&(_, f)| f));
        }
        for f in partners {
            let faces = cp.cup(1, x, 1, &F2Vector::unit(n1, f))?;
            for p in faces.iter_ones() {
                for &v in &w[p] {
                    if !sets[v].remove(&(e, f)) {
                        sets[v].insert((e, f));
                    }
                }
            }
        }
    }
    Ok(sets.into_iter().map(|s| s.into_iter().collect()).collect())
}

fn bb_cc(layout: &CodeLayout, e: usize, x: bool) -> Pauli {
    let n = layout.total();
    let q = [layout.q(B, e), layout.q(C, e)];
    if x {
        Pauli::x_on(n, &q)
    } else {
        Pauli::z_on(n, &q)
    }
}

/// `U_SWAP` for a 0-cocycle `mu` on `[B | C]`.
pub fn build_uswap(c: &ChainComplex, cp: &CupProduct, m: &F2Vector, pd: &PdInverse, mu: &F2Vector) -> Result<CliffordOp, GaugeError> {
    let layout = bc_layout(c);
    let pairs = swap_a_pairs(c, cp, m, pd)?;
    let mut total: BTreeSet<(usize, usize)> = BTreeSet::new();
    for v in mu.iter_ones() {
        for &p in &pairs[v] {
            if !total.remove(&p) {
                total.insert(p);
            }
        }
    }
    let mut u = CliffordOp::identity(layout.total());
    for (e, f) in total {
        let g = CliffordOp::controlled_pauli(&bb_cc(&layout, f, false), &bb_cc(&layout, e, true))?;
        u = u.compose(&g)?;
    }
    Ok(u)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapSymmetryReport {
    pub checked: usize,
    /// Every commutator with an original stabilizer is a Pauli.
    pub residuals_pauli: bool,
    /// Every such Pauli commutes with all original stabilizers.
    pub residuals_commute: bool,
}

/// Commutators of `U_SWAP` with the B and C stabilizers, checked to be
/// Paulis commuting with every original stabilizer.
pub fn check_swap_symmetry(
    c: &ChainComplex,
    cp: &CupProduct,
    m: &F2Vector,
    pd: &PdInverse,
    mu: &F2Vector,
) -> Result<SwapSymmetryReport, GaugeError> {
    let layout = bc_layout(c);
    let u = build_uswap(c, cp, m, pd, mu)?;
    let uinv = u.inverse()?;
    let mut stabs: Vec<Pauli> = Vec::new();
    for s in [B, C] {
        for v in 0..c.n0() {
            stabs.push(Pauli::x_on(layout.total(), &c.coboundary_cell(0, v).iter().map(|&e| layout.q(s, e)).collect::<Vec<_>>()));
        }
        for p in 0..c.n2() {
            stabs.push(Pauli::z_on(layout.total(), &c.d2.col(p).iter_ones().map(|e| layout.q(s, e)).collect::<Vec<_>>()));
        }
    }
    let mut report = SwapSymmetryReport {
        checked: 0,
        residuals_pauli: true,
        residuals_commute: true,
    };
    for s in &stabs {
        let sc = CliffordOp::from_pauli(s);
        let comm = sc.compose(&uinv)?.compose(&sc)?.compose(&u)?;
        report.checked += 1;
        match comm.as_pauli() {
            Some(p) => {
                if !stabs.iter().all(|t| t.commutes(&p)) {
                    report.residuals_commute = false;
                }
            }
            None => report.residuals_pauli = false,
        }
    }
    Ok(report)
}

/// `X^B_{dv} X^C_{dv}`: the product of the B and C vertex generators at v,
/// whose controlled dressings cancel.
#[must_use]
pub fn swap_pauli_elements(c: &ChainComplex, layout: &CodeLayout) -> Vec<Pauli> {
    (0..c.n0())
        .map(|v| {
            let dv = c.coboundary_cell(0, v);
            let q: Vec<usize> = dv
                .iter()
                .flat_map(|&e| [layout.q(B, e), layout.q(C, e)])
                .collect();
            Pauli::x_on(layout.total(), &q)
        })
        .collect()
}

/// Gauges the transversal SWAP family `U_SWAP[mu]`.
pub fn gauge_swap(
    c: &ChainComplex,
    cp: &CupProduct,
    m: &FundamentalClass,
    m0: &FundamentalClass,
    pd: Option<PdInverse>,
) -> Result<GaugedCode, GaugeError> {
    let pd = match pd {
        Some(p) => p,
        None => PdInverse::from_class(c, cp, &m0.chain)?,
    };
    let layout = gauged_layout(c);
    let n = layout.total();
    let n1 = c.n1();
    let mc = &m.chain;

    // Dressed B and C vertex terms: C(X^B_e X^C_e, Z^A_{(PD^-1(e) cup v) cap M}).
    let mut x_type = Vec::new();
    let mut b_terms: Vec<Vec<(usize, F2Vector)>> = vec![Vec::new(); c.n0()];
    for e in 0..n1 {
        let x = pd.of_edge(e);
        for v in 0..c.n0() {
            let xv = cp.cup(1, x, 0, &F2Vector::unit(c.n0(), v))?;
            if xv.is_zero() {
                continue;
            }
            let s = cp.cap(1, &xv, mc)?;
            if !s.is_zero() {
                b_terms[v].push((e, s));
            }
        }
    }
    for sub in [B, C] {
        for v in 0..c.n0() {
            let dv = c.coboundary_cell(0, v);
            let p = Pauli::x_on(n, &dv.iter().map(|&e| layout.q(sub, e)).collect::<Vec<_>>());
            let mut op = CliffordOp::from_pauli(&p);
            for (e, s) in &b_terms[v] {
                let target = Pauli::z_on(n, &s.iter_ones().map(|i| layout.q(A, i)).collect::<Vec<_>>());
                op = op.compose(&CliffordOp::controlled_pauli(&bb_cc(&layout, *e, true), &target)?)?;
            }
            x_type.push(Operator::Clifford(op));
        }
    }
    // A vertex terms.
    let pairs = swap_a_pairs(c, cp, mc, &pd)?;
    let mut a_ops = Vec::new();
    for v in 0..c.n0() {
        let dv = c.coboundary_cell(0, v);
        let p = Pauli::x_on(n, &dv.iter().map(|&e| layout.q(A, e)).collect::<Vec<_>>());
        let mut op = CliffordOp::from_pauli(&p);
        for &(e, f) in &pairs[v] {
            op = op.compose(&CliffordOp::controlled_pauli(&bb_cc(&layout, f, false), &bb_cc(&layout, e, true))?)?;
        }
        a_ops.push(Operator::Clifford(op));
    }
    let mut all_x = a_ops;
    all_x.extend(x_type);

    // Plaquette terms with d v_p = PD^-1(boundary p).
    let d0 = c.d1.transpose();
    let mut z_type = Vec::new();
    let mut bad = Vec::new();
    let mut vps = Vec::with_capacity(c.n2());
    for p in 0..c.n2() {
        let target = pd.of_chain(&c.d2.col(p));
        match f2core::solve(&d0, &target)? {
            Some(vp) => vps.push(vp),
            None => {
                bad.push(p);
                vps.push(F2Vector::zeros(c.n0()));
            }
        }
    }
    if !bad.is_empty() {
        return Err(GaugeError::Unsolvable(bad));
    }
    for sub in [B, C] {
        for (p, vp) in vps.iter().enumerate() {
            let mut op = z_on(&layout, sub, &c.d2.col(p).support());
            if !vp.is_zero() {
                for f in 0..n1 {
                    let vf = cp.cup(0, vp, 1, &F2Vector::unit(n1, f))?;
                    if vf.is_zero() {
                        continue;
                    }
                    let s = cp.cap(1, &vf, mc)?;
                    for a in s.iter_ones() {
                        op.toggle_monomial(&[layout.q(A, a), layout.q(B, f)]);
                        op.toggle_monomial(&[layout.q(A, a), layout.q(C, f)]);
                    }
                }
            }
            z_type.push(op);
        }
    }
    z_type.extend(css_stabilizers(c, &layout, A).1);

    let mut g = GaugedCode::new(
        layout,
        all_x,
        z_type,
        mu_basis(c),
        GaugeMode::HomologicalSwap,
        vec![class_tag(m), class_tag(m0)],
        certified(cp),
    );
    g.pauli_elements = swap_pauli_elements(c, &g.layout);
    g.provenance.notes.push(format!("pd_inverse max weight {}", pd.max_weight()));
    let vp_map: BTreeMap<usize, Vec<usize>> = vps
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(p, v)| (p, v.support()))
        .collect();
    g.provenance.notes.push(format!("v_p {vp_map:?}"));
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexes::{build_alp, build_minimal_torus, build_toric, AlpIndex, ToricIndex};
    use crate::cup::{alp_strip_class, fundamental_classes, install_cup};

    fn toric(l: usize) -> (ChainComplex, CupProduct, FundamentalClass) {
        let c = build_toric(l).unwrap();
        let cp = install_cup(&c).unwrap();
        let m = fundamental_classes(&c).remove(0);
        (c, cp, m)
    }

    fn phase(op: &Operator) -> &PhasePolyOp {
        match op {
            Operator::Phase(p) => p,
            Operator::Clifford(_) => panic!("expected phase op"),
        }
    }

    #[test]
    fn toric_ucz_counts() {
        let (c, cp, m) = toric(2);
        let u = build_ucz(&c, &cp, &m).unwrap();
        assert_eq!(u.cz_count(), 8);
        assert_eq!(u.degree(), 2);
        let zero = FundamentalClass::new(&c, F2Vector::zeros(c.n2()), None).unwrap();
        assert!(build_ucz(&c, &cp, &zero).unwrap().is_identity());
        assert!(build_omega_cz(&c, &cp, &zero).unwrap().is_identity());
    }

    #[test]
    fn minimal_torus_ucz() {
        let c = build_minimal_torus();
        let cp = install_cup(&c).unwrap();
        let m = fundamental_classes(&c).remove(0);
        let u = build_ucz(&c, &cp, &m).unwrap();
        let l = bc_layout(&c);
        assert_eq!(u, PhasePolyOp::cz(4, l.q(B, 0), l.q(C, 1)));
        let g = gauge_cz(&c, &cp, &m).unwrap();
        // Boundary maps vanish, so dv is empty and only the CZ remains.
        let a = phase(&g.x_type[0]);
        assert_eq!(a.x_weight(), 0);
        assert_eq!(a.cz_count(), 1);
        assert!(a.monomials().contains(&crate::ops::Monomial::new(&[g.layout.q(B, 0), g.layout.q(C, 1)]).unwrap()));
    }

    #[test]
    fn enrichment_identity() {
        for l in [2, 3] {
            let (c, cp, m) = toric(l);
            let mus = mu_basis(&c);
            assert!(check_enrichment(&c, &cp, &m, &mus).unwrap().iter().all(|&b| b));
        }
        let c = build_alp(3, 3, 2).unwrap();
        let cp = install_cup(&c).unwrap();
        let m = alp_strip_class(&c, 1).unwrap();
        let mus = mu_basis(&c);
        assert_eq!(mus.len(), 3 + 3 - 1);
        assert!(check_enrichment(&c, &cp, &m, &mus).unwrap().iter().all(|&b| b));
    }

    #[test]
    fn omega_two_ccz_per_vertex() {
        let (c, cp, m) = toric(3);
        let o = build_omega_cz(&c, &cp, &m).unwrap();
        assert_eq!(o.count_degree(3), 2 * c.n0());
    }

    #[test]
    fn toric_symmetry_residuals() {
        let (c, cp, m) = toric(3);
        let layout = bc_layout(&c);
        let u = Operator::Phase(build_ucz(&c, &cp, &m).unwrap());
        let (xb, zb) = css_stabilizers(&c, &layout, B);
        let (xc, zc) = css_stabilizers(&c, &layout, C);
        let stabs: Vec<Operator> = xb.into_iter().chain(xc).map(Operator::Phase).collect();
        let diag: Vec<PhasePolyOp> = zb.into_iter().chain(zc).collect();
        let r = verify_symmetry(&u, &stabs, &diag).unwrap();
        assert!(r.all_in_group);
        let id = Operator::Phase(PhasePolyOp::identity(layout.total()));
        let r = verify_symmetry(&id, &stabs, &diag).unwrap();
        assert!(r.residuals.iter().all(|x| PhasePolyOp::from_file(&x.residual).unwrap().is_identity()));
    }

    #[test]
    fn toric_gauged_weights_and_closure() {
        for l in [2, 3, 4] {
            let (c, cp, m) = toric(l);
            let g = gauge_cz(&c, &cp, &m).unwrap();
            for op in &g.x_type {
                let p = phase(op);
                assert_eq!((p.x_weight(), p.cz_count(), p.degree()), (4, 2, 2), "L={l}");
            }
            assert!(g.audit_involution().unwrap().is_empty());
            let r = g.audit_closure().unwrap();
            assert!(r.ok(), "L={l}: {:?}", r.failures.first());
        }
    }

    #[test]
    fn toric_a_type_shape() {
        let (c, cp, m) = toric(3);
        let ix = ToricIndex { l: 3 };
        let g = gauge_cz(&c, &cp, &m).unwrap();
        let v = ix.v(1, 1);
        let a = phase(&g.x_type[v]);
        let mut x = a.x_part().support();
        x.sort_unstable();
        let mut want: Vec<usize> = [ix.h(1, 1), ix.h(0, 1), ix.u(1, 1), ix.u(1, 0)]
            .iter()
            .map(|&e| g.layout.q(A, e))
            .collect();
        want.sort_unstable();
        assert_eq!(x, want);
    }

    #[test]
    fn alp_dressing_localized() {
        let c = build_alp(3, 3, 3).unwrap();
        let cp = install_cup(&c).unwrap();
        let m = alp_strip_class(&c, 1).unwrap();
        let g = gauge_cz(&c, &cp, &m).unwrap();
        let ix = AlpIndex { lx: 3, ly: 3, lz: 3 };
        let mut dressed_rows = BTreeSet::new();
        for (k, op) in g.x_type.iter().enumerate() {
            let p = phase(op);
            if p.cz_count() > 0 {
                let (_, y, _) = ix.coords(0, k % c.n0());
                dressed_rows.insert(y);
            }
        }
        // Only vertices next to the two strip edges (y = 0 and y = 1) carry CZs.
        assert!(dressed_rows.iter().all(|&y| y == 0 || y == 1 || y == 2));
        assert!(!dressed_rows.is_empty());
        assert!(g.audit_closure().unwrap().ok());
    }

    #[test]
    fn toric_swap_gauging() {
        let (c, cp, m) = toric(3);
        let pd = PdInverse::from_class(&c, &cp, &m.chain).unwrap();
        assert_eq!(pd.max_weight(), 1);
        let mu = F2Vector::ones(c.n0());
        let r = check_swap_symmetry(&c, &cp, &m.chain, &pd, &mu).unwrap();
        assert!(r.residuals_pauli && r.residuals_commute, "{r:?}");
        let zero = build_uswap(&c, &cp, &m.chain, &pd, &F2Vector::zeros(c.n0())).unwrap();
        assert!(zero.moved_generators().is_empty());
        let g = gauge_swap(&c, &cp, &m, &m, Some(pd)).unwrap();
        assert!(g.audit_involution().unwrap().is_empty());
        let rep = g.audit_closure().unwrap();
        assert!(rep.ok(), "{:?}", rep.failures.first());
    }

    #[test]
    fn json_roundtrip() {
        let (c, cp, m) = toric(2);
        let g = gauge_cz(&c, &cp, &m).unwrap();
        let s = serde_json::to_string(&g.to_file()).unwrap();
        let back = GaugedCode::from_file(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back.x_type, g.x_type);
        assert_eq!(back.z_type, g.z_type);
        assert_eq!(back.provenance, g.provenance);
    }
}
