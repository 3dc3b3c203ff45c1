//! Dynamics on gauged codes: measurement-based preparation with
//! feedforward, dressed logical operators, single-charge parity, and the
//! gauge/ungauge sequence that measures a logical CZ.

use crate::complexes::{ChainComplex, Sublattice};
use crate::cup::{CupProduct, FundamentalClass};
use crate::f2core::{self, F2Matrix, F2Vector};
use crate::gauge_homological::{
    build_omega_cz, full_layout, gauged_layout, mu_basis, triples, GaugeError, GaugedCode, Triple,
};
use crate::gauge_graph::{AncillaGraph, PhiMap};
use crate::ops::{group_commutator, CliffordOp, Operator, Pauli, PhasePolyOp};
use crate::statevec::{qubit_budget, Basis, Gate, StateError};
use crate::StateVector64;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use Sublattice::{Gauge as A, Vertex as Va, B, C};

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    F2(#[from] f2core::F2Error),
    #[error(transparent)]
    Op(#[from] crate::ops::OpError),
    #[error(transparent)]
    Cup(#[from] crate::cup::CupError),
    #[error("{needed} qubits exceed the state-vector budget of {budget}; use the algebraic checks instead")]
    Budget { needed: usize, budget: usize },
    #[error("{0}")]
    Invalid(String),
}

fn sign(bit: bool) -> i8 {
    if bit {
        -1
    } else {
        1
    }
}

/// Per-trial generator: stream `k` of the ChaCha generator seeded by `seed`,
/// so trial `k` is reproducible on its own.
#[must_use]
pub fn trial_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k);
    r
}

// ============================================================================
// Basepoints and the b(v) chains
// ============================================================================

/// Leading vertex of each element of an RREF basis of H^0.
#[must_use]
pub fn basepoints(mus: &[F2Vector]) -> Vec<usize> {
    mus.iter().filter_map(F2Vector::first_one).collect()
}

/// `b(v)` with `boundary b(v) = v + sum_mu mu(v) v_mu`, for every vertex.
pub fn boundary_chains(c: &ChainComplex, mus: &[F2Vector]) -> Result<Vec<F2Vector>, ProtocolError> {
    let bps = basepoints(mus);
    let mut out = Vec::with_capacity(c.n0());
    for v in 0..c.n0() {
        let mut t = F2Vector::unit(c.n0(), v);
        for (mu, &vm) in mus.iter().zip(&bps) {
            if mu.get(v) {
                t.flip(vm);
            }
        }
        let b = f2core::solve(&c.d1, &t)?
            .ok_or_else(|| ProtocolError::Invalid(format!("no b(v) for vertex {v}")))?;
        out.push(b);
    }
    Ok(out)
}

// ============================================================================
// Preparation by measurement and feedforward
// ============================================================================

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub seed: u64,
    /// X outcome of each vertex ancilla.
    pub x_outcomes: Vec<i8>,
    /// `x_mu = prod_v x_v^{mu(v)}`, one per element of the H^0 basis.
    pub residual_mu_outcomes: Vec<i8>,
    /// Edges of the `Z^A` correction.
    pub correction: Vec<usize>,
    /// All vertex terms read +1 after correction, except the basepoints
    /// carrying `x_mu = -1`.
    pub corrected: bool,
}

/// Samples independent vertex outcomes, splits the syndrome into a boundary
/// part and an H^0 part, and corrects the boundary part with a `Z^A` string.
///
/// The first `ancilla.n0()` X-type generators of `g` must be the A-type
/// vertex terms; the correction is verified against them.
pub fn sample_and_correct(g: &GaugedCode, ancilla: &ChainComplex, seed: u64) -> Result<MeasurementRecord, ProtocolError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<bool> = (0..ancilla.n0()).map(|_| rng.gen::<bool>()).collect();
    correct_outcomes(g, ancilla, &bits, seed)
}

/// The decoder for a fixed outcome pattern (`true` = -1).
pub fn correct_outcomes(g: &GaugedCode, ancilla: &ChainComplex, bits: &[bool], seed: u64) -> Result<MeasurementRecord, ProtocolError> {
    let n0 = ancilla.n0();
    if bits.len() != n0 || g.x_type.len() < n0 {
        return Err(ProtocolError::Invalid("outcomes do not match the ancilla complex".into()));
    }
    let a_block = g
        .layout
        .block(A)
        .ok_or_else(|| ProtocolError::Invalid("gauged code has no A block".into()))?;
    if a_block.len != ancilla.n1() {
        return Err(ProtocolError::Invalid("A block does not match ancilla edges".into()));
    }
    let mus = mu_basis(ancilla);
    let bps = basepoints(&mus);
    let s = F2Vector::from_bools(bits);
    let x_mu: Vec<bool> = mus.iter().map(|m| m.dot(&s)).collect();
    let mut target = s.clone();
    for (&xm, &vm) in x_mu.iter().zip(&bps) {
        if xm {
            target.flip(vm);
        }
    }
    let corr = f2core::solve(&ancilla.d1, &target)?;
    assert!(corr.is_some(), "syndrome with trivial H^0 part must be a boundary");
    let corr = corr.unwrap_or_else(|| F2Vector::zeros(ancilla.n1()));

    // Final sign of each vertex term: outcome times the anticommutation with Z^A_corr.
    let n = g.n();
    let zc = Pauli::z_on(n, &corr.iter_ones().map(|e| g.layout.q(A, e)).collect::<Vec<_>>());
    let mut corrected = true;
    for v in 0..n0 {
        let cl = g.x_type[v].to_clifford()?;
        let flips = cl.conjugate_pauli(&zc) != zc;
        let negative = bits[v] ^ flips;
        let expected = bps
            .iter()
            .zip(&x_mu)
            .any(|(&vm, &xm)| vm == v && xm);
        if negative != expected {
            corrected = false;
        }
    }
    Ok(MeasurementRecord {
        seed,
        x_outcomes: bits.iter().map(|&b| sign(b)).collect(),
        residual_mu_outcomes: x_mu.into_iter().map(sign).collect(),
        correction: corr.support(),
        corrected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepStats {
    pub trials: usize,
    pub seed: u64,
    pub corrected: usize,
    /// Count of `x_mu = +1` per H^0 basis element.
    pub mu_plus: Vec<usize>,
    pub correction_weights: BTreeMap<usize, usize>,
}

/// Runs `trials` independent preparations; trial `k` uses stream `k`.
pub fn run_preparations(g: &GaugedCode, ancilla: &ChainComplex, trials: usize, seed: u64) -> Result<PrepStats, ProtocolError> {
    let mut st = PrepStats {
        trials,
        seed,
        corrected: 0,
        mu_plus: vec![0; mu_basis(ancilla).len()],
        correction_weights: BTreeMap::new(),
    };
    for k in 0..trials {
        let mut rng = trial_rng(seed, k as u64);
        let bits: Vec<bool> = (0..ancilla.n0()).map(|_| rng.gen::<bool>()).collect();
        let r = correct_outcomes(g, ancilla, &bits, seed)?;
        st.corrected += usize::from(r.corrected);
        for (c, &x) in st.mu_plus.iter_mut().zip(&r.residual_mu_outcomes) {
            *c += usize::from(x == 1);
        }
        *st.correction_weights.entry(r.correction.len()).or_default() += 1;
    }
    Ok(st)
}

// ============================================================================
// Dressed logicals
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogicalKind {
    XA,
    XB,
    XC,
    ZB,
    ZC,
}

#[derive(Debug, Clone)]
pub struct DressedLogical {
    pub kind: LogicalKind,
    /// The cocycle (X kinds) or cycle (Z kinds) carrying the bare logical.
    pub base: F2Vector,
    pub op: Operator,
    /// The same operator as a product of basis-state-permuting factors,
    /// applied left to right, for exact sign bookkeeping.
    pub factors: Vec<MonoGate>,
    pub basepoints: Vec<usize>,
}

impl DressedLogical {
    fn diagonal_form(kind: LogicalKind, base: F2Vector, op: PhasePolyOp, basepoints: Vec<usize>) -> Self {
        Self {
            kind,
            base,
            factors: vec![MonoGate::Phase(op.clone())],
            op: Operator::Phase(op),
            basepoints,
        }
    }
}

/// Gates that send each basis state to a phase times a basis state.
#[derive(Debug, Clone)]
pub enum MonoGate {
    Pauli(Pauli),
    /// Apply `target` when the Z-type `control` reads -1.
    ControlledPauli { control: Pauli, target: Pauli },
    Phase(PhasePolyOp),
}

/// Basis state with a phase `i^phase`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasedBasis {
    pub phase: u8,
    pub bits: F2Vector,
}

impl PhasedBasis {
    fn pauli(&mut self, p: &Pauli) {
        let mut ph = p.phase;
        if p.z.dot(&self.bits) {
            ph += 2;
        }
        self.phase = (self.phase + ph) % 4;
        self.bits.add_assign(&p.x);
    }

    pub fn apply(&mut self, g: &MonoGate) {
        match g {
            MonoGate::Pauli(p) => self.pauli(p),
            MonoGate::ControlledPauli { control, target } => {
                if control.z.dot(&self.bits) ^ (control.phase == 2) {
                    self.pauli(target);
                }
            }
            MonoGate::Phase(op) => {
                self.bits.add_assign(op.x_part());
                if op.phase_at(&self.bits) {
                    self.phase = (self.phase + 2) % 4;
                }
            }
        }
    }
}

/// `lambda` in `X Z X^-1 Z^-1 = lambda` for two involutive dressed
/// logicals, read off exactly on the basis state `bits`.
pub fn pairing_sign(x: &DressedLogical, z: &DressedLogical, bits: &F2Vector) -> Result<i8, ProtocolError> {
    let mut st = PhasedBasis { phase: 0, bits: bits.clone() };
    // Right to left: Z^-1, X^-1, Z, X; each factor is an involution.
    let seq = z
        .factors
        .iter()
        .rev()
        .chain(x.factors.iter().rev())
        .chain(z.factors.iter())
        .chain(x.factors.iter());
    for g in seq {
        st.apply(g);
    }
    if st.bits != *bits {
        return Err(ProtocolError::Invalid("commutator is not a scalar".into()));
    }
    match st.phase {
        0 => Ok(1),
        2 => Ok(-1),
        _ => Err(ProtocolError::Invalid("commutator is not +-1".into())),
    }
}

/// Dressed X logicals for a homological CZ gauging:
/// `X^B_g prod (Z^A_{b(v)})^{n^C_e int v cup (g cup e)}`,
/// `X^C_g prod (Z^A_{b(v)})^{n^B_e int v cup (e cup g)}` and
/// `X^A_g prod (Z^B_{b(v)})^{n^C_e int g cup (v cup e)}`.
pub fn dress_x_logical(
    c: &ChainComplex,
    cp: &CupProduct,
    m: &FundamentalClass,
    kind: LogicalKind,
    gamma: &F2Vector,
) -> Result<DressedLogical, ProtocolError> {
    let layout = gauged_layout(c);
    let mus = mu_basis(c);
    let bs = boundary_chains(c, &mus)?;
    let (bare, table, chain_sub, other_sub, pick_first) = match kind {
        LogicalKind::XB => (B, Triple::VEE, A, C, true),
        LogicalKind::XC => (C, Triple::VEE, A, B, false),
        LogicalKind::XA => (A, Triple::EVE, B, C, true),
        _ => return Err(ProtocolError::Invalid("not an X logical".into())),
    };
    let mut op = PhasePolyOp::x(
        layout.total(),
        &gamma.iter_ones().map(|e| layout.q(bare, e)).collect::<Vec<_>>(),
    );
    for (v, e, f) in triples(cp, &m.chain, table) {
        let (on_gamma, partner) = if pick_first { (e, f) } else { (f, e) };
        if !gamma.get(on_gamma) {
            continue;
        }
        for k in bs[v].iter_ones() {
            op.toggle_monomial(&[layout.q(chain_sub, k), layout.q(other_sub, partner)]);
        }
    }
    Ok(DressedLogical::diagonal_form(kind, gamma.clone(), op, basepoints(&mus)))
}

/// All dressed X logicals on the H^1 representatives, and the unchanged Z
/// logicals on the H_1 representatives.
pub fn dress_logicals(c: &ChainComplex, cp: &CupProduct, m: &FundamentalClass) -> Result<Vec<DressedLogical>, ProtocolError> {
    let h = c.homology().map_err(|e| ProtocolError::Invalid(e.to_string()))?;
    let layout = gauged_layout(c);
    let mut out = Vec::new();
    for gamma in &h.cocycle_reps {
        for kind in [LogicalKind::XB, LogicalKind::XC, LogicalKind::XA] {
            out.push(dress_x_logical(c, cp, m, kind, gamma)?);
        }
    }
    let bps = basepoints(&mu_basis(c));
    for eta in &h.cycle_reps {
        for (kind, sub) in [(LogicalKind::ZB, B), (LogicalKind::ZC, C)] {
            let q: Vec<usize> = eta.iter_ones().map(|e| layout.q(sub, e)).collect();
            out.push(DressedLogical::diagonal_form(
                kind,
                eta.clone(),
                PhasePolyOp::z(layout.total(), &q),
                bps.clone(),
            ));
        }
    }
    Ok(out)
}

/// Dressed logicals of a graph SWAP gauging, referenced to the graph
/// basepoint `v0`: `X^B_g prod_e C(Z^A_{<phi(e), v0>}, X^B_e X^C_e)` and
/// `Z^B_h prod_e (Z^B_e Z^C_e)^{n^A_{<phi(e), v0>}}`, likewise for C.
pub fn dress_logicals_swap(
    c: &ChainComplex,
    g: &GaugedCode,
    phi: &PhiMap,
    graph: &AncillaGraph,
) -> Result<Vec<DressedLogical>, ProtocolError> {
    let h = c.homology().map_err(|e| ProtocolError::Invalid(e.to_string()))?;
    let layout = &g.layout;
    let n = layout.total();
    let v0 = graph.basepoint;
    let string = |e: usize| -> Vec<usize> { graph.path(phi.phi[e], v0).iter().map(|&k| layout.q(A, k)).collect() };
    let mut out = Vec::new();
    for gamma in &h.cocycle_reps {
        for (kind, sub) in [(LogicalKind::XB, B), (LogicalKind::XC, C)] {
            let bare = Pauli::x_on(n, &gamma.iter_ones().map(|e| layout.q(sub, e)).collect::<Vec<_>>());
            let mut factors = vec![MonoGate::Pauli(bare.clone())];
            let mut op = CliffordOp::from_pauli(&bare);
            for e in gamma.iter_ones() {
                let s = string(e);
                if s.is_empty() {
                    continue;
                }
                let control = Pauli::z_on(n, &s);
                let target = Pauli::x_on(n, &[layout.q(B, e), layout.q(C, e)]);
                op = op.compose(&CliffordOp::controlled_pauli(&control, &target)?)?;
                factors.push(MonoGate::ControlledPauli { control, target });
            }
            out.push(DressedLogical {
                kind,
                base: gamma.clone(),
                op: Operator::Clifford(op),
                factors,
                basepoints: vec![v0],
            });
        }
    }
    for eta in &h.cycle_reps {
        for (kind, sub) in [(LogicalKind::ZB, B), (LogicalKind::ZC, C)] {
            let mut op = PhasePolyOp::z(n, &eta.iter_ones().map(|e| layout.q(sub, e)).collect::<Vec<_>>());
            for e in eta.iter_ones() {
                for k in string(e) {
                    op.toggle_monomial(&[k, layout.q(B, e)]);
                    op.toggle_monomial(&[k, layout.q(C, e)]);
                }
            }
            out.push(DressedLogical::diagonal_form(kind, eta.clone(), op, vec![v0]));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DressedCheck {
    /// Generators (x_type then z_type indices) whose commutator is neither
    /// a stabilizer nor a logical Pauli.
    pub failures: Vec<usize>,
    /// Generators whose commutator is a logical Pauli of the B and C codes:
    /// `(generator, qubits)`. These are the charges the operator carries.
    pub charges: Vec<(usize, Vec<usize>)>,
    /// Generators whose commutator is a stabilizer times `Z^A` on
    /// non-contractible cycles. These holonomies are +1 on every state
    /// produced by gauging but are not local generators.
    pub holonomy: Vec<usize>,
}

impl DressedCheck {
    #[must_use]
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    /// Commutes with every generator outright.
    #[must_use]
    pub fn strict(&self) -> bool {
        self.failures.is_empty() && self.charges.is_empty() && self.holonomy.is_empty()
    }
}

/// Commutes a dressed logical with every generator of a gauging of `c`
/// whose A sublattice lives on the edges of `ancilla`.
pub fn check_dressed(
    c: &ChainComplex,
    ancilla: &ChainComplex,
    g: &GaugedCode,
    logical: &DressedLogical,
) -> Result<DressedCheck, ProtocolError> {
    let group = g.diagonal_group()?;
    let cycles = ancilla.homology().map_err(|e| ProtocolError::Invalid(e.to_string()))?.cycle_reps;
    let mut extended = g.z_type.clone();
    for h in &cycles {
        extended.push(PhasePolyOp::z_vec(&g.layout.embed(A, h)));
    }
    let extended = crate::ops::DiagonalGroup::new(g.n(), &extended)?;
    let op = logical.op.clone();
    let mut out = DressedCheck {
        failures: Vec::new(),
        charges: Vec::new(),
        holonomy: Vec::new(),
    };
    let gens: Vec<Operator> = g
        .x_type
        .iter()
        .cloned()
        .chain(g.z_type.iter().cloned().map(Operator::Phase))
        .collect();
    for (k, s) in gens.iter().enumerate() {
        if s.support().is_disjoint(&op.support()) {
            continue;
        }
        if g.pair_residual(s, &op, &group)?.0.is_none() {
            continue;
        }
        if g.pair_residual(s, &op, &extended)?.0.is_none() {
            out.holonomy.push(k);
            continue;
        }
        match logical_pauli(c, g, s, &op)? {
            Some(q) => out.charges.push((k, q)),
            None => out.failures.push(k),
        }
    }
    Ok(out)
}

/// The commutator as a logical Pauli of the B and C codes: nothing on A,
/// X parts closed under the plaquette checks, Z parts closed under the
/// vertex checks. Returns its support.
fn logical_pauli(c: &ChainComplex, g: &GaugedCode, s: &Operator, op: &Operator) -> Result<Option<Vec<usize>>, ProtocolError> {
    let (sc, oc) = (s.to_clifford()?, op.to_clifford()?);
    let comm = sc.inverse()?.compose(&oc.inverse()?)?.compose(&sc)?.compose(&oc)?;
    let Some(p) = comm.as_pauli() else {
        return Ok(None);
    };
    let mut support = Vec::new();
    for sub in [B, C] {
        let mut x = F2Vector::zeros(c.n1());
        let mut z = F2Vector::zeros(c.n1());
        for e in 0..c.n1() {
            let q = g.layout.q(sub, e);
            x.set(e, p.x.get(q));
            z.set(e, p.z.get(q));
            if p.x.get(q) || p.z.get(q) {
                support.push(q);
            }
        }
        if !c.d2.transpose().mul_vec(&x)?.is_zero() || !c.boundary(1, &z).is_zero() {
            return Ok(None);
        }
    }
    let outside = p.x.iter_ones().chain(p.z.iter_ones()).any(|q| {
        !matches!(g.layout.locate(q), Some((B | C, _)))
    });
    if outside || support.is_empty() {
        return Ok(None);
    }
    support.sort_unstable();
    support.dedup();
    Ok(Some(support))
}

// ============================================================================
// Single unpaired charge
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnyonParity {
    /// `(-1)^{int_M mu cup (g cup g')}`.
    pub algebraic: i8,
    /// Sign from commuting `prod_{w in mu} A^A_w` through the dressed logicals.
    pub commutator: i8,
}

/// Charge of `A^A_mu` on `X~^B_g X~^C_g' |0>`, computed from the cup
/// integral and, independently, from operator commutators.
pub fn single_anyon_parity(
    c: &ChainComplex,
    g: &GaugedCode,
    cp: &CupProduct,
    m: &FundamentalClass,
    mu: &F2Vector,
    gamma: &F2Vector,
    gamma2: &F2Vector,
) -> Result<AnyonParity, ProtocolError> {
    let gg = cp.cup(1, gamma, 1, gamma2)?;
    let top = cp.cup(0, mu, 2, &gg)?;
    let algebraic = sign(top.dot(&m.chain));

    let xb = dress_x_logical(c, cp, m, LogicalKind::XB, gamma)?;
    let layout = &g.layout;
    let mut total = PhasePolyOp::identity(layout.total());
    for w in mu.iter_ones() {
        let Operator::Phase(aw) = &g.x_type[w] else {
            return Err(ProtocolError::Invalid("expected diagonal-dressed A terms".into()));
        };
        let Operator::Phase(xop) = &xb.op else {
            unreachable!("CZ dressing is diagonal-dressed");
        };
        total = total.mul(&group_commutator(aw, xop)?)?;
    }
    // Only Z^C in the accumulated commutator sees X~^C_g', whose X part is g' on C.
    let mut parity = false;
    for mono in total.monomials() {
        if mono.degree() == 1 {
            if let Some((C, e)) = layout.locate(mono.vars()[0]) {
                parity ^= gamma2.get(e);
            }
        }
    }
    Ok(AnyonParity {
        algebraic,
        commutator: sign(parity),
    })
}

// ============================================================================
// Gauge then ungauge: measuring a logical CZ
// ============================================================================

/// Logical input on the B and C codes: one of `0 1 + -` per logical qubit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalInput {
    pub b: String,
    pub c: String,
}

/// Logical X/Z representatives with `<x_i, z_j> = delta_ij`.
pub fn paired_logicals(c: &ChainComplex) -> Result<(Vec<F2Vector>, Vec<F2Vector>), ProtocolError> {
    let h = c.homology().map_err(|e| ProtocolError::Invalid(e.to_string()))?;
    let (xs, zs) = (h.cocycle_reps, h.cycle_reps);
    let k = xs.len();
    if zs.len() != k {
        return Err(ProtocolError::Invalid("unequal numbers of X and Z logicals".into()));
    }
    let mut pair = F2Matrix::zeros(k, k);
    for (i, x) in xs.iter().enumerate() {
        for (j, z) in zs.iter().enumerate() {
            pair.set(i, j, x.dot(z));
        }
    }
    let inv = f2core::inverse(&pair).ok_or_else(|| ProtocolError::Invalid("logicals do not pair".into()))?;
    // X'_i = sum_l inv^T[i][l] X_l gives <X'_i, Z_j> = delta_ij.
    let xs2 = (0..k)
        .map(|i| {
            let mut v = F2Vector::zeros(c.n1());
            for l in 0..k {
                if inv.get(l, i) {
                    v.add_assign(&xs[l]);
                }
            }
            v
        })
        .collect();
    Ok((xs2, zs))
}

fn project_pauli(psi: &StateVector64, p: &Pauli, minus: bool) -> Result<Option<StateVector64>, ProtocolError> {
    let mut q = psi.clone();
    q.apply_pauli(p)?;
    let s = if minus { -1.0 } else { 1.0 };
    let amps: Vec<Complex<f64>> = psi
        .amplitudes()
        .iter()
        .zip(q.amplitudes())
        .map(|(a, b)| (a + b * s) * 0.5)
        .collect();
    let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Ok(None);
    }
    Ok(Some(StateVector64::from_amplitudes(amps)?))
}

/// Code state on `[B | C]` (qubit offset 0) with the given logical labels,
/// obtained by projecting a seeded random state.
pub fn prepare_code_state(c: &ChainComplex, input: &LogicalInput, seed: u64) -> Result<StateVector64, ProtocolError> {
    let n1 = c.n1();
    let n = 2 * n1;
    let (xl, zl) = paired_logicals(c)?;
    let k = xl.len();
    if input.b.chars().count() != k || input.c.chars().count() != k {
        return Err(ProtocolError::Invalid(format!("expected {k} logical labels per code")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psi = StateVector64::random(n, &mut rng)?;
    let on = |off: usize, v: &F2Vector| v.iter_ones().map(|e| off + e).collect::<Vec<_>>();
    let mut projectors: Vec<(Pauli, bool)> = Vec::new();
    for off in [0, n1] {
        for v in 0..c.n0() {
            projectors.push((Pauli::x_on(n, &on(off, &F2Vector::from_indices(n1, &c.coboundary_cell(0, v)))), false));
        }
        for p in 0..c.n2() {
            projectors.push((Pauli::z_on(n, &on(off, &c.d2.col(p))), false));
        }
    }
    for (off, labels) in [(0, &input.b), (n1, &input.c)] {
        for (i, ch) in labels.chars().enumerate() {
            let (p, minus) = match ch {
                '0' => (Pauli::z_on(n, &on(off, &zl[i])), false),
                '1' => (Pauli::z_on(n, &on(off, &zl[i])), true),
                '+' => (Pauli::x_on(n, &on(off, &xl[i])), false),
                '-' => (Pauli::x_on(n, &on(off, &xl[i])), true),
                other => return Err(ProtocolError::Invalid(format!("bad logical label {other:?}"))),
            };
            projectors.push((p, minus));
        }
    }
    for (p, minus) in projectors {
        psi = project_pauli(&psi, &p, minus)?
            .ok_or_else(|| ProtocolError::Invalid("projection annihilated the state".into()))?;
    }
    Ok(psi)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CzMeasurement {
    pub x_outcomes: Vec<i8>,
    pub z_outcomes: Vec<i8>,
    pub mu_outcomes: Vec<i8>,
    /// Vertices `s0` with `d s0 = n`, whose CZ pattern was undone.
    pub feedforward: Vec<usize>,
    /// Overlap with the normalized `prod_mu (1 + x_mu U[M cap mu]) |Psi>`.
    pub fidelity: f64,
    /// Final state of the B and C qubits.
    #[serde(skip)]
    pub post_state: Option<StateVector64>,
}

/// The CZ pattern `prod (CZ_{B e, C e'})^{int_M s cup (e cup e')}` for a
/// vertex cochain `s`, on the given layout.
fn cz_pattern(cp: &CupProduct, m: &FundamentalClass, s: &F2Vector, layout: &crate::complexes::CodeLayout) -> PhasePolyOp {
    let mut op = PhasePolyOp::identity(layout.total());
    for (v, e, f) in triples(cp, &m.chain, Triple::VEE) {
        if s.get(v) {
            op.toggle_monomial(&[layout.q(B, e), layout.q(C, f)]);
        }
    }
    op
}

fn extract_block(psi: &StateVector64, lo: usize, width: usize, fixed: usize, fixed_mask: usize) -> Result<StateVector64, ProtocolError> {
    let amps: Vec<Complex<f64>> = (0..1usize << width)
        .map(|k| psi.amplitudes()[(k << lo) | fixed_mask & ((1 << fixed) - 1)])
        .collect();
    Ok(StateVector64::from_amplitudes(amps)?)
}

/// Runs the full gauge/ungauge sequence on the dense simulator:
/// cluster on `a | A`, `Omega`, X on `a`, Z on `A`, then undo the CZ
/// pattern of a vertex cochain `s0` with `d s0` equal to the Z record.
pub fn measure_logical_cz(
    c: &ChainComplex,
    cp: &CupProduct,
    m: &FundamentalClass,
    input: &LogicalInput,
    seed: u64,
) -> Result<CzMeasurement, ProtocolError> {
    let layout = full_layout(c);
    let n = layout.total();
    let budget = qubit_budget();
    if n > budget {
        return Err(ProtocolError::Budget { needed: n, budget });
    }
    let (n0, n1) = (c.n0(), c.n1());
    let code = prepare_code_state(c, input, seed)?;
    let off = layout.q(B, 0);

    // |+>_a |0>_A |Psi>_{BC}
    let mut amps = vec![Complex::new(0.0, 0.0); 1 << n];
    for (k, a) in code.amplitudes().iter().enumerate() {
        amps[k << off] = *a;
    }
    let mut psi = StateVector64::from_amplitudes(amps)?;
    for v in 0..n0 {
        psi.apply(Gate::H(layout.q(Va, v)))?;
    }
    for v in 0..n0 {
        for e in c.coboundary_cell(0, v) {
            psi.apply(Gate::Cnot { control: layout.q(Va, v), target: layout.q(A, e) })?;
        }
    }
    psi.apply_phase_poly(&build_omega_cz(c, cp, m)?)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut xs = Vec::with_capacity(n0);
    for v in 0..n0 {
        xs.push(psi.measure(Basis::X, layout.q(Va, v), &mut rng)?);
    }
    let mut zs = Vec::with_capacity(n1);
    for e in 0..n1 {
        zs.push(psi.measure(Basis::Z, layout.q(A, e), &mut rng)?);
    }
    let nz = F2Vector::from_bools(&zs.iter().map(|&z| z == -1).collect::<Vec<_>>());
    let s0 = f2core::solve(&c.d1.transpose(), &nz)?
        .ok_or_else(|| ProtocolError::Invalid("Z record is not a coboundary".into()))?;
    psi.apply_phase_poly(&cz_pattern(cp, m, &s0, &layout))?;

    // Rotate a back to the computational basis and read off the B|C block.
    for v in 0..n0 {
        psi.apply(Gate::H(layout.q(Va, v)))?;
    }
    let mut mask = 0usize;
    for (v, &x) in xs.iter().enumerate() {
        if x == -1 {
            mask |= 1 << layout.q(Va, v);
        }
    }
    for (e, &z) in zs.iter().enumerate() {
        if z == -1 {
            mask |= 1 << layout.q(A, e);
        }
    }
    let post = extract_block(&psi, off, 2 * n1, off, mask)?;

    // Oracle: normalized prod_mu (1 + x_mu U[mu]) |Psi>.
    let bc = crate::gauge_homological::bc_layout(c);
    let mus = mu_basis(c);
    let xbits = F2Vector::from_bools(&xs.iter().map(|&x| x == -1).collect::<Vec<_>>());
    let mut want = code.clone();
    let mut mu_out = Vec::new();
    for mu in &mus {
        let xm = mu.dot(&xbits);
        mu_out.push(sign(xm));
        let mut u = want.clone();
        u.apply_phase_poly(&cz_pattern(cp, m, mu, &bc))?;
        let s = if xm { -1.0 } else { 1.0 };
        let amps: Vec<Complex<f64>> = want
            .amplitudes()
            .iter()
            .zip(u.amplitudes())
            .map(|(a, b)| a + b * s)
            .collect();
        want = StateVector64::from_amplitudes(amps)?;
    }
    let fidelity = post.fidelity(&want)?;
    Ok(CzMeasurement {
        x_outcomes: xs,
        z_outcomes: zs,
        mu_outcomes: mu_out,
        feedforward: s0.support(),
        fidelity,
        post_state: Some(post),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzShotStats {
    pub shots: usize,
    pub seed: u64,
    /// Frequency of `x_mu = +1` for each H^0 basis element.
    pub mu_plus_frequency: Vec<f64>,
    pub min_fidelity: f64,
    pub feedforward_weights: BTreeMap<usize, usize>,
}

/// Repeats [`measure_logical_cz`] with per-shot seeds `seed + k`.
pub fn measure_cz_shots(
    c: &ChainComplex,
    cp: &CupProduct,
    m: &FundamentalClass,
    input: &LogicalInput,
    shots: usize,
    seed: u64,
) -> Result<CzShotStats, ProtocolError> {
    let k = mu_basis(c).len();
    let mut plus = vec![0usize; k];
    let mut min_fid = 1.0f64;
    let mut ff = BTreeMap::new();
    for s in 0..shots {
        let r = measure_logical_cz(c, cp, m, input, seed.wrapping_add(s as u64))?;
        for (p, &x) in plus.iter_mut().zip(&r.mu_outcomes) {
            *p += usize::from(x == 1);
        }
        min_fid = min_fid.min(r.fidelity);
        *ff.entry(r.feedforward.len()).or_default() += 1;
    }
    Ok(CzShotStats {
        shots,
        seed,
        mu_plus_frequency: plus.iter().map(|&p| p as f64 / shots.max(1) as f64).collect(),
        min_fidelity: min_fid,
        feedforward_weights: ff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexes::{build_minimal_torus, build_toric};
    use crate::cup::{fundamental_classes, install_cup};
    use crate::gauge_homological::gauge_cz;

    fn toric(l: usize) -> (ChainComplex, CupProduct, FundamentalClass, GaugedCode) {
        let c = build_toric(l).unwrap();
        let cp = install_cup(&c).unwrap();
        let m = fundamental_classes(&c).remove(0);
        let g = gauge_cz(&c, &cp, &m).unwrap();
        (c, cp, m, g)
    }

    fn minimal() -> (ChainComplex, CupProduct, FundamentalClass) {
        let c = build_minimal_torus();
        let cp = install_cup(&c).unwrap();
        let m = fundamental_classes(&c).remove(0);
        (c, cp, m)
    }

    #[test]
    fn all_plus_outcomes_need_no_correction() {
        let (c, _, _, g) = toric(3);
        let r = correct_outcomes(&g, &c, &vec![false; 9], 0).unwrap();
        assert!(r.correction.is_empty());
        assert!(r.corrected);
        assert_eq!(r.residual_mu_outcomes, vec![1]);
    }

    #[test]
    fn single_defect_moves_to_basepoint() {
        let (c, _, _, g) = toric(3);
        let mut bits = vec![false; 9];
        bits[4] = true;
        let r = correct_outcomes(&g, &c, &bits, 0).unwrap();
        assert_eq!(r.residual_mu_outcomes, vec![-1]);
        assert!(r.corrected);
        // The string runs from vertex 4 to the basepoint 0.
        let b = c.boundary(1, &F2Vector::from_indices(c.n1(), &r.correction));
        assert_eq!(b.support(), vec![0, 4]);
    }

    #[test]
    fn seeded_trials_all_correct() {
        let (c, _, _, g) = toric(3);
        let st = run_preparations(&g, &c, 200, 7).unwrap();
        assert_eq!(st.corrected, 200);
        let f = st.mu_plus[0] as f64 / 200.0;
        assert!((f - 0.5).abs() < 0.15, "{f}");
    }

    #[test]
    fn boundary_chains_decompose_vertices() {
        let (c, _, _, _) = toric(3);
        let mus = mu_basis(&c);
        let bs = boundary_chains(&c, &mus).unwrap();
        assert!(bs[0].is_zero());
        for (v, b) in bs.iter().enumerate().skip(1) {
            assert_eq!(c.boundary(1, b).support(), vec![0, v]);
        }
    }

    #[test]
    fn dressed_logicals_commute_away_from_basepoints() {
        let (c, cp, m, g) = toric(3);
        let n0 = c.n0();
        for dl in dress_logicals(&c, &cp, &m).unwrap() {
            let r = check_dressed(&c, &c, &g, &dl).unwrap();
            assert!(r.ok(), "{:?}: {:?}", dl.kind, r);
            match dl.kind {
                LogicalKind::ZB | LogicalKind::ZC => assert!(r.strict()),
                // Charges only at the A term of the basepoint.
                LogicalKind::XB | LogicalKind::XC => {
                    assert!(r.charges.iter().all(|(k, _)| dl.basepoints.contains(k)));
                }
                // Z^C charge at the B term of the basepoint.
                LogicalKind::XA => {
                    assert!(r.charges.iter().any(|(k, _)| dl.basepoints.iter().any(|&b| *k == n0 + b)));
                }
            }
        }
    }

    #[test]
    fn zero_cocycle_dresses_to_identity() {
        let (c, cp, m, _) = toric(2);
        let dl = dress_x_logical(&c, &cp, &m, LogicalKind::XB, &F2Vector::zeros(c.n1())).unwrap();
        let Operator::Phase(p) = dl.op else { panic!() };
        assert!(p.is_identity());
    }

    #[test]
    fn minimal_torus_dressing_is_bare() {
        let (c, cp, m) = minimal();
        let g1 = F2Vector::unit(2, 1);
        let dl = dress_x_logical(&c, &cp, &m, LogicalKind::XB, &g1).unwrap();
        // b(v) = 0 at the only vertex, so no Z^A factors survive.
        let Operator::Phase(p) = dl.op else { panic!() };
        assert_eq!((p.cz_count(), p.x_weight()), (0, 1));
    }

    #[test]
    fn anyon_parity_on_toric() {
        let (c, cp, m, g) = toric(3);
        let h = c.homology().unwrap();
        let mu = F2Vector::ones(c.n0());
        let (g1, g2) = (&h.cocycle_reps[0], &h.cocycle_reps[1]);
        let p = single_anyon_parity(&c, &g, &cp, &m, &mu, g1, g2).unwrap();
        assert_eq!((p.algebraic, p.commutator), (-1, -1));
        let z = F2Vector::zeros(c.n1());
        let p0 = single_anyon_parity(&c, &g, &cp, &m, &mu, g1, &z).unwrap();
        assert_eq!((p0.algebraic, p0.commutator), (1, 1));
    }

    #[test]
    fn minimal_torus_magic_state() {
        let (c, cp, m) = minimal();
        let input = LogicalInput { b: "+0".into(), c: "0+".into() };
        let mut seen_plus = false;
        for seed in 0..20 {
            let r = measure_logical_cz(&c, &cp, &m, &input, seed).unwrap();
            assert!((r.fidelity - 1.0).abs() < 1e-10, "{}", r.fidelity);
            if r.mu_outcomes[0] == 1 {
                seen_plus = true;
                // (|00> + |01> + |10>)/sqrt3 on (B0, C1); B1 = C0 = 0.
                let post = r.post_state.unwrap();
                let s = 1.0 / 3f64.sqrt();
                let idx = |b0: usize, c1: usize| b0 | (c1 << 3);
                for (k, a) in post.amplitudes().iter().enumerate() {
                    let want = if [idx(0, 0), idx(0, 1), idx(1, 0)].contains(&k) { s } else { 0.0 };
                    assert!((a.norm() - want).abs() < 1e-10, "{k}: {a}");
                }
            }
        }
        assert!(seen_plus);
    }

    #[test]
    fn cz_eigenstate_input_is_deterministic() {
        let (c, cp, m) = minimal();
        let input = LogicalInput { b: "00".into(), c: "00".into() };
        for seed in 0..5 {
            let r = measure_logical_cz(&c, &cp, &m, &input, seed).unwrap();
            assert_eq!(r.mu_outcomes, vec![1]);
            assert!((r.fidelity - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn budget_refusal() {
        let (c, cp, m, _) = toric(2);
        let input = LogicalInput { b: "00".into(), c: "00".into() };
        assert!(matches!(
            measure_logical_cz(&c, &cp, &m, &input, 0),
            Err(ProtocolError::Budget { .. })
        ));
    }

    #[test]
    fn swap_dressed_logicals_pair_and_charge_at_basepoint() {
        use crate::gauge_graph::{auto_graph, default_vp, gauge_swap_graph};
        let c = build_toric(2).unwrap();
        let phi = PhiMap::first_endpoint(&c).unwrap();
        let graph = auto_graph(&c, &phi).unwrap();
        let g = gauge_swap_graph(&c, &phi, &graph, &default_vp(&c)).unwrap();
        let anc = graph.complex().unwrap();
        let ls = dress_logicals_swap(&c, &g, &phi, &graph).unwrap();
        for dl in &ls {
            let r = check_dressed(&c, &anc, &g, dl).unwrap();
            assert!(r.ok(), "{:?} {r:?}", dl.kind);
            assert!(r.charges.iter().all(|(k, _)| *k == graph.basepoint));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bits = F2Vector::from_bools(&(0..g.n()).map(|_| rng.gen::<bool>()).collect::<Vec<_>>());
        for x in ls.iter().filter(|d| matches!(d.kind, LogicalKind::XB | LogicalKind::XC)) {
            for z in ls.iter().filter(|d| matches!(d.kind, LogicalKind::ZB | LogicalKind::ZC)) {
                let same = matches!((x.kind, z.kind), (LogicalKind::XB, LogicalKind::ZB) | (LogicalKind::XC, LogicalKind::ZC));
                let want = if same && x.base.dot(&z.base) { -1 } else { 1 };
                assert_eq!(pairing_sign(x, z, &bits).unwrap(), want);
            }
        }
    }
}
