//! Gauging a single transversal gate through an ancilla graph.
//!
//! Instead of a cluster state on the code's own complex, the ancillas live
//! on a connected graph: `a` on graph vertices, `A` on graph edges, with the
//! graph's 2-cells supplying the `Z^A` flux terms. Only the global symmetry
//! (the all-ones 0-cocycle) is gauged. Stabilizers live on `[A | B | C]`
//! with `A` sized by the graph's edge count.

use crate::complexes::{
    build_graph_cluster_complex, build_graph_complex_with_cells, AlpIndex, BbIndex, ChainComplex,
    CodeLayout, Family, Sublattice,
};
use crate::f2core::{F2Vector, Span};
use crate::gauge_homological::{
    bc_layout, swap_pauli_elements, x_on, z_on, GaugeError, GaugeMode, GaugedCode,
};
use crate::ops::{conjugate, CliffordOp, Operator, Pauli, PhasePolyOp};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use Sublattice::{Gauge as A, Vertex as Va, B, C};

// ============================================================================
// phi and the ancilla graph
// ============================================================================

/// Assigns each code edge to the ancilla vertex that controls it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiMap {
    pub phi: Vec<usize>,
    /// Declared bound on the length of `<phi(e), v>` strings.
    pub radius: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiFile {
    pub phi: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
}

impl PhiMap {
    /// `phi(e)` is the smaller endpoint of `e`.
    pub fn first_endpoint(c: &ChainComplex) -> Result<Self, GaugeError> {
        let mut phi = Vec::with_capacity(c.n1());
        for e in 0..c.n1() {
            let v = c.d1.col(e).first_one().ok_or_else(|| {
                GaugeError::Invalid(format!("edge {e} has empty boundary"))
            })?;
            phi.push(v);
        }
        Ok(Self { phi, radius: None })
    }

    pub fn from_file(f: &PhiFile, n1: usize) -> Result<Self, GaugeError> {
        let mut phi = vec![None; n1];
        for &(e, v) in &f.phi {
            let slot = phi
                .get_mut(e)
                .ok_or_else(|| GaugeError::Invalid(format!("phi names edge {e} of {n1}")))?;
            if slot.replace(v).is_some() {
                return Err(GaugeError::Invalid(format!("phi assigns edge {e} twice")));
            }
        }
        let phi = phi
            .into_iter()
            .enumerate()
            .map(|(e, v)| v.ok_or_else(|| GaugeError::Invalid(format!("phi misses edge {e}"))))
            .collect::<Result<_, _>>()?;
        Ok(Self { phi, radius: f.radius })
    }

    #[must_use]
    pub fn to_file(&self) -> PhiFile {
        PhiFile {
            phi: self.phi.iter().copied().enumerate().collect(),
            radius: self.radius,
        }
    }

    /// `phi^T(v)`: the edges controlled by each of `n` vertices.
    #[must_use]
    pub fn transpose(&self, n: usize) -> Vec<Vec<usize>> {
        let mut t = vec![Vec::new(); n];
        for (e, &v) in self.phi.iter().enumerate() {
            if v < n {
                t[v].push(e);
            }
        }
        t
    }
}

/// A connected simple graph with 2-cells.
#[derive(Debug, Clone)]
pub struct AncillaGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub basepoint: usize,
    /// 2-cells as edge lists. Defaults to the fundamental cycles of a BFS tree.
    pub cells: Vec<Vec<usize>>,
    /// Edges added only to make the graph connected.
    pub synthetic: Vec<usize>,
    adj: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    #[serde(default)]
    pub basepoint: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub synthetic: Vec<usize>,
}

impl AncillaGraph {
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize)>,
        basepoint: usize,
        cells: Option<Vec<Vec<usize>>>,
    ) -> Result<Self, GaugeError> {
        if basepoint >= n.max(1) {
            return Err(GaugeError::Invalid(format!("basepoint {basepoint} of {n}")));
        }
        let cells = match cells {
            Some(cs) => {
                build_graph_complex_with_cells(n, &edges, &cs)
                    .map_err(|e| GaugeError::Invalid(e.to_string()))?;
                cs
            }
            None => {
                let gc = build_graph_cluster_complex(n, &edges)
                    .map_err(|e| GaugeError::Invalid(e.to_string()))?;
                (0..gc.n2()).map(|p| gc.d2.col(p).support()).collect()
            }
        };
        let mut adj = vec![Vec::new(); n];
        for (k, &(u, w)) in edges.iter().enumerate() {
            adj[u].push((w, k));
            adj[w].push((u, k));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let g = Self {
            n,
            edges,
            basepoint,
            cells,
            synthetic: Vec::new(),
            adj,
        };
        if g.components().len() > 1 {
            return Err(GaugeError::Invalid("ancilla graph is disconnected".into()));
        }
        Ok(g)
    }

    pub fn from_file(f: &GraphFile) -> Result<Self, GaugeError> {
        let cells = (!f.cells.is_empty()).then(|| f.cells.clone());
        let mut g = Self::new(f.vertices, f.edges.clone(), f.basepoint, cells)?;
        g.synthetic = f.synthetic.clone();
        Ok(g)
    }

    #[must_use]
    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            vertices: self.n,
            edges: self.edges.clone(),
            basepoint: self.basepoint,
            cells: self.cells.clone(),
            synthetic: self.synthetic.clone(),
        }
    }

    fn components(&self) -> Vec<Vec<usize>> {
        components(self.n, &self.adj)
    }

    /// The cluster complex: vertices, edges and the 2-cells.
    pub fn complex(&self) -> Result<ChainComplex, GaugeError> {
        build_graph_complex_with_cells(self.n, &self.edges, &self.cells)
            .map_err(|e| GaugeError::Invalid(e.to_string()))
    }

    #[must_use]
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[u].iter().map(|&(w, _)| w)
    }

    #[must_use]
    pub fn incident_edges(&self, u: usize) -> Vec<usize> {
        self.adj[u].iter().map(|&(_, k)| k).collect()
    }

    /// Shortest edge path between `u` and `w`. The search starts at the
    /// smaller endpoint and visits neighbours in increasing order, so ties
    /// break deterministically.
    #[must_use]
    pub fn path(&self, u: usize, w: usize) -> Vec<usize> {
        if u == w {
            return Vec::new();
        }
        let (s, t) = (u.min(w), u.max(w));
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.n];
        let mut seen = vec![false; self.n];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            if x == t {
                break;
            }
            for &(y, k) in &self.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    prev[y] = Some((x, k));
                    q.push_back(y);
                }
            }
        }
        let mut out = Vec::new();
        let mut x = t;
        while let Some((p, k)) = prev[x] {
            out.push(k);
            x = p;
        }
        out.reverse();
        out
    }

    #[must_use]
    pub fn path_vector(&self, u: usize, w: usize) -> F2Vector {
        F2Vector::from_indices(self.edges.len(), &self.path(u, w))
    }

    /// Dimension of the cycle space, `|E| - |V| + 1`.
    #[must_use]
    pub fn cycle_rank(&self) -> usize {
        (self.edges.len() + 1).saturating_sub(self.n)
    }

    /// Longest shortest path from the basepoint.
    #[must_use]
    pub fn eccentricity(&self) -> usize {
        let mut dist = vec![usize::MAX; self.n];
        dist[self.basepoint] = 0;
        let mut q = VecDeque::from([self.basepoint]);
        while let Some(x) = q.pop_front() {
            for y in self.neighbors(x) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    q.push_back(y);
                }
            }
        }
        dist.into_iter().filter(|&d| d != usize::MAX).max().unwrap_or(0)
    }
}

fn components(n: usize, adj: &[Vec<(usize, usize)>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for r in 0..n {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        let mut comp = vec![r];
        let mut q = VecDeque::from([r]);
        while let Some(x) = q.pop_front() {
            for &(y, _) in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    comp.push(y);
                    q.push_back(y);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Smallest vertex in the closure of each 2-cell.
#[must_use]
pub fn default_vp(c: &ChainComplex) -> Vec<usize> {
    (0..c.n2())
        .map(|p| c.closure_vertices(2, p).first().copied().unwrap_or(0))
        .collect()
}

fn undirected(u: usize, w: usize) -> (usize, usize) {
    (u.min(w), u.max(w))
}

/// Graph on the code vertices with an edge `<phi(e), v>` for every `e` in
/// `dv` and `<phi(e), v(p)>` for every `e` in the boundary of `p`. Components
/// are joined by synthetic edges when needed.
pub fn auto_graph(c: &ChainComplex, phi: &PhiMap) -> Result<AncillaGraph, GaugeError> {
    if phi.phi.len() != c.n1() {
        return Err(GaugeError::Invalid(format!(
            "phi covers {} of {} edges",
            phi.phi.len(),
            c.n1()
        )));
    }
    let n = c.n0();
    if let Some(&v) = phi.phi.iter().find(|&&v| v >= n) {
        return Err(GaugeError::Invalid(format!("phi targets vertex {v} of {n}")));
    }
    let mut set = BTreeSet::new();
    for v in 0..n {
        for e in c.coboundary_cell(0, v) {
            if phi.phi[e] != v {
                set.insert(undirected(phi.phi[e], v));
            }
        }
    }
    for (p, vp) in default_vp(c).into_iter().enumerate() {
        for e in c.d2.col(p).iter_ones() {
            if phi.phi[e] != vp {
                set.insert(undirected(phi.phi[e], vp));
            }
        }
    }
    graph_with_spanning_edges(n, set.into_iter().collect())
}

fn graph_with_spanning_edges(n: usize, mut edges: Vec<(usize, usize)>) -> Result<AncillaGraph, GaugeError> {
    let mut adj = vec![Vec::new(); n];
    for (k, &(u, w)) in edges.iter().enumerate() {
        adj[u].push((w, k));
        adj[w].push((u, k));
    }
    let comps = components(n, &adj);
    let mut synthetic = Vec::new();
    for comp in comps.iter().skip(1) {
        synthetic.push(edges.len());
        edges.push(undirected(comps[0][0], comp[0]));
    }
    let mut g = AncillaGraph::new(n, edges, 0, None)?;
    g.synthetic = synthetic;
    Ok(g)
}

fn graph_layout(g: &AncillaGraph, c: &ChainComplex) -> CodeLayout {
    CodeLayout::new(&[(A, g.edges.len()), (B, c.n1()), (C, c.n1())])
}

fn z_a_cells(g: &AncillaGraph, layout: &CodeLayout) -> Vec<PhasePolyOp> {
    g.cells.iter().map(|cell| z_on(layout, A, cell)).collect()
}

fn graph_notes(g: &AncillaGraph) -> Vec<String> {
    let mut notes = vec![format!(
        "graph {} vertices, {} edges, cycle rank {}, {} cells",
        g.n,
        g.edges.len(),
        g.cycle_rank(),
        g.cells.len()
    )];
    if !g.synthetic.is_empty() {
        notes.push(format!("synthetic edges {:?}", g.synthetic));
    }
    notes
}

// ============================================================================
// Graph SWAP
// ============================================================================

/// Gauges the transversal SWAP between copies B and C.
///
/// Vertex terms `X^B_{dv} prod_e C(X^B_e X^C_e, Z^A_{<phi(e), v>})` (same for
/// C), `X^A_{d w} SWAP_{phi^T(w)}`, plaquette terms
/// `Z^B_{dp} prod_e (Z^A_{<phi(e), v(p)>})^{n^B_e + n^C_e}` (same for C), and
/// `Z^A` on the graph's 2-cells.
pub fn gauge_swap_graph(
    c: &ChainComplex,
    phi: &PhiMap,
    g: &AncillaGraph,
    vp: &[usize],
) -> Result<GaugedCode, GaugeError> {
    if phi.phi.len() != c.n1() || vp.len() != c.n2() {
        return Err(GaugeError::Invalid("phi or v(p) has the wrong length".into()));
    }
    if c.n0() > g.n || phi.phi.iter().any(|&v| v >= g.n) {
        return Err(GaugeError::Invalid("graph does not contain the required vertices".into()));
    }
    for (p, &v) in vp.iter().enumerate() {
        if !c.closure_vertices(2, p).contains(&v) {
            return Err(GaugeError::Invalid(format!("v(p) = {v} is not in the closure of {p}")));
        }
    }
    let layout = graph_layout(g, c);
    let n = layout.total();
    let mut longest = 0usize;

    let mut x_type = Vec::new();
    let phit = phi.transpose(g.n);
    for (w, ctrl) in phit.iter().enumerate() {
        let mut op = CliffordOp::from_pauli(&Pauli::x_on(
            n,
            &g.incident_edges(w).iter().map(|&k| layout.q(A, k)).collect::<Vec<_>>(),
        ));
        for &e in ctrl {
            op = op.compose(&CliffordOp::swap(n, layout.q(B, e), layout.q(C, e)))?;
        }
        x_type.push(Operator::Clifford(op));
    }
    for sub in [B, C] {
        for v in 0..c.n0() {
            let dv = c.coboundary_cell(0, v);
            let mut op = CliffordOp::from_pauli(&Pauli::x_on(
                n,
                &dv.iter().map(|&e| layout.q(sub, e)).collect::<Vec<_>>(),
            ));
            for &e in &dv {
                let path = g.path(phi.phi[e], v);
                if path.is_empty() {
                    continue;
                }
                longest = longest.max(path.len());
                let ctrl = Pauli::x_on(n, &[layout.q(B, e), layout.q(C, e)]);
                let target = Pauli::z_on(n, &path.iter().map(|&k| layout.q(A, k)).collect::<Vec<_>>());
                op = op.compose(&CliffordOp::controlled_pauli(&ctrl, &target)?)?;
            }
            x_type.push(Operator::Clifford(op));
        }
    }

    let mut z_type = Vec::new();
    for sub in [B, C] {
        for p in 0..c.n2() {
            let bd = c.d2.col(p).support();
            let mut op = z_on(&layout, sub, &bd);
            for &e in &bd {
                let path = g.path(phi.phi[e], vp[p]);
                longest = longest.max(path.len());
                for k in path {
                    op.toggle_monomial(&[layout.q(A, k), layout.q(B, e)]);
                    op.toggle_monomial(&[layout.q(A, k), layout.q(C, e)]);
                }
            }
            z_type.push(op);
        }
    }
    z_type.extend(z_a_cells(g, &layout));

    let mut out = GaugedCode::new(
        layout,
        x_type,
        z_type,
        vec![F2Vector::ones(g.n)],
        GaugeMode::GraphSwap,
        vec!["global".into()],
        true,
    );
    out.pauli_elements = swap_pauli_elements(c, &out.layout);
    out.provenance.notes.extend(graph_notes(g));
    out.provenance.notes.push(format!("longest A string {longest}"));
    if let Some(r) = phi.radius {
        if longest > r {
            out.provenance
                .notes
                .push(format!("locality audit failed: string length {longest} exceeds radius {r}"));
        }
    }
    Ok(out)
}

/// `Omega = prod_e CSWAP(a_{phi(e)}, B_e, C_e)` on `[a | B | C]`, and the
/// check that conjugating it by `prod_v X^a_v` yields the transversal SWAP.
/// Dense, so only for small codes.
pub fn check_swap_graph_enrichment(c: &ChainComplex, phi: &PhiMap, n_ancilla: usize) -> Result<bool, GaugeError> {
    use crate::statevec::Gate;
    use crate::StateVector64;
    let n = n_ancilla + 2 * c.n1();
    let omega: Vec<Gate> = phi
        .phi
        .iter()
        .enumerate()
        .map(|(e, &v)| Gate::Cswap {
            control: v,
            a: n_ancilla + e,
            b: n_ancilla + c.n1() + e,
        })
        .collect();
    let xs: Vec<Gate> = (0..n_ancilla).map(Gate::X).collect();
    let swaps: Vec<Gate> = (0..c.n1())
        .map(|e| Gate::Swap(n_ancilla + e, n_ancilla + c.n1() + e))
        .collect();
    let mut rng = <rand::rngs::StdRng as rand::SeedableRng>::seed_from_u64(7);
    for _ in 0..3 {
        let psi = StateVector64::random(n, &mut rng).map_err(|e| GaugeError::Invalid(e.to_string()))?;
        // Omega^dag = Omega; X Omega X Omega^dag acting on psi.
        let mut lhs = psi.clone();
        for seq in [&omega, &xs, &omega, &xs] {
            lhs.apply_all(seq).map_err(|e| GaugeError::Invalid(e.to_string()))?;
        }
        let mut rhs = psi;
        rhs.apply_all(&swaps).map_err(|e| GaugeError::Invalid(e.to_string()))?;
        if (lhs.fidelity(&rhs).map_err(|e| GaugeError::Invalid(e.to_string()))? - 1.0).abs() > 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

// ============================================================================
// Graph CZ
// ============================================================================

/// One enrichment term `CCZ(a_control, B_b, C_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CzTriple {
    pub control: usize,
    pub b: usize,
    pub c: usize,
}

/// The gauged gate `prod CZ(B_b, C_c)` on `[B | C]`.
#[must_use]
pub fn graph_cz_symmetry(c: &ChainComplex, triples: &[CzTriple]) -> PhasePolyOp {
    let layout = bc_layout(c);
    let mut op = PhasePolyOp::identity(layout.total());
    for t in triples {
        op.toggle_monomial(&[layout.q(B, t.b), layout.q(C, t.c)]);
    }
    op
}

/// Checks `X^a Omega X^a Omega^dag == prod CZ(B_b, C_c)` symbolically on
/// `[a | B | C]`.
pub fn check_graph_cz_enrichment(c: &ChainComplex, triples: &[CzTriple], n_ancilla: usize) -> Result<bool, GaugeError> {
    let layout = CodeLayout::new(&[(Va, n_ancilla), (B, c.n1()), (C, c.n1())]);
    let n = layout.total();
    let mut omega = PhasePolyOp::identity(n);
    let mut u = PhasePolyOp::identity(n);
    for t in triples {
        omega.toggle_monomial(&[layout.q(Va, t.control), layout.q(B, t.b), layout.q(C, t.c)]);
        u.toggle_monomial(&[layout.q(B, t.b), layout.q(C, t.c)]);
    }
    let xa = x_on(&layout, Va, &(0..n_ancilla).collect::<Vec<_>>());
    let lhs = conjugate(&xa, &omega)?.mul(&omega.inverse())?;
    Ok(lhs == u)
}

/// Dressing of one vertex term: the list of `(control, partner edge)`
/// pairs is rewritten as `CZ(partner, Z^A_{path(control, u)})` for a
/// reference vertex `u`. Returns the monomials and the chosen `u`.
fn dress(
    g: &AncillaGraph,
    terms: &[(usize, usize)],
) -> (BTreeMap<usize, F2Vector>, Option<usize>) {
    let mut best: Option<(usize, usize, BTreeMap<usize, F2Vector>)> = None;
    let mut candidates: BTreeSet<usize> = terms.iter().map(|&(w, _)| w).collect();
    let near: Vec<usize> = candidates.iter().flat_map(|&w| g.neighbors(w)).collect();
    candidates.extend(near);
    for &u in &candidates {
        let mut per: BTreeMap<usize, F2Vector> = BTreeMap::new();
        for &(w, f) in terms {
            let pv = g.path_vector(w, u);
            per.entry(f)
                .or_insert_with(|| F2Vector::zeros(g.edges.len()))
                .add_assign(&pv);
        }
        per.retain(|_, v| !v.is_zero());
        let cost: usize = per.values().map(F2Vector::weight).sum();
        if best.as_ref().map_or(true, |b| cost < b.0) {
            best = Some((cost, u, per));
        }
    }
    match best {
        Some((_, u, per)) => (per, Some(u)),
        None => (BTreeMap::new(), None),
    }
}

/// Gauges `prod CZ(B_b, C_c)` given its enrichment triples and a connected
/// ancilla graph on the controls.
///
/// Conjugating `X^B_{dv}` through Omega leaves `prod CZ(a_w, C_c)`; each
/// `Z^a_w` is traded for `Z^a_u Z^A_{path(w,u)}` and the remaining power of
/// `Z^a_u` is a product of `Z^C` plaquette terms, so it is dropped.
pub fn gauge_cz_graph(c: &ChainComplex, triples: &[CzTriple], g: &AncillaGraph) -> Result<GaugedCode, GaugeError> {
    if let Some(t) = triples.iter().find(|t| t.control >= g.n || t.b >= c.n1() || t.c >= c.n1()) {
        return Err(GaugeError::Invalid(format!("triple {t:?} out of range")));
    }
    let layout = graph_layout(g, c);
    let n = layout.total();
    let plaquettes = Span::from_vectors(c.n1(), &c.d2.col_vectors());

    let mut x_type = Vec::new();
    let mut by_control: Vec<Vec<&CzTriple>> = vec![Vec::new(); g.n];
    for t in triples {
        by_control[t.control].push(t);
    }
    for (w, ts) in by_control.iter().enumerate() {
        let mut op = x_on(&layout, A, &g.incident_edges(w));
        for t in ts {
            op.toggle_monomial(&[layout.q(B, t.b), layout.q(C, t.c)]);
        }
        x_type.push(Operator::Phase(op));
    }
    let mut refs = Vec::new();
    for (sub, other) in [(B, C), (C, B)] {
        let mut by_edge: Vec<Vec<(usize, usize)>> = vec![Vec::new(); c.n1()];
        for t in triples {
            let (mine, theirs) = if sub == B { (t.b, t.c) } else { (t.c, t.b) };
            by_edge[mine].push((t.control, theirs));
        }
        for v in 0..c.n0() {
            let dv = c.coboundary_cell(0, v);
            let terms: Vec<(usize, usize)> = dv.iter().flat_map(|&e| by_edge[e].iter().copied()).collect();
            let mut left = F2Vector::zeros(c.n1());
            for &(_, f) in &terms {
                left.flip(f);
            }
            if !plaquettes.contains(&left) {
                return Err(GaugeError::Invalid(format!(
                    "leftover Z^a at vertex {v} is not a product of plaquette terms"
                )));
            }
            let (per, u) = dress(g, &terms);
            refs.push(u);
            let mut op = x_on(&layout, sub, &dv);
            for (f, path) in per {
                for k in path.iter_ones() {
                    op.toggle_monomial(&[layout.q(A, k), layout.q(other, f)]);
                }
            }
            x_type.push(Operator::Phase(op));
        }
    }

    let mut z_type = z_a_cells(g, &layout);
    for sub in [B, C] {
        for p in 0..c.n2() {
            z_type.push(z_on(&layout, sub, &c.d2.col(p).support()));
        }
    }
    let mut out = GaugedCode::new(
        layout,
        x_type,
        z_type,
        vec![F2Vector::ones(g.n)],
        GaugeMode::GraphCz,
        vec!["global".into()],
        true,
    );
    out.provenance.notes.extend(graph_notes(g));
    let _ = n;
    Ok(out)
}

/// Enrichment triples of the ALP transversal CZ: the control at (x,y,z)
/// acts on `CZ(B zedge(x+1,y+1,z), C plaq(x,y,z))` and
/// `CZ(B plaq(x,y,z+1), C zedge(x,y,z))`.
pub fn alp_cz_triples(c: &ChainComplex) -> Result<Vec<CzTriple>, GaugeError> {
    let Family::Alp { lx, ly, lz } = c.family else {
        return Err(GaugeError::Invalid("expected an ALP complex".into()));
    };
    let ix = AlpIndex { lx, ly, lz };
    let mut out = Vec::new();
    for v in 0..c.n0() {
        let (x, y, z) = ix.coords(0, v);
        out.push(CzTriple { control: v, b: ix.zedge(x + 1, y + 1, z), c: ix.plaq(x, y, z) });
        out.push(CzTriple { control: v, b: ix.plaq(x, y, z + 1), c: ix.zedge(x, y, z) });
    }
    Ok(out)
}

/// Periodic cubic lattice on the ALP vertices, with the cube faces as 2-cells.
pub fn cubic_graph(lx: usize, ly: usize, lz: usize) -> Result<AncillaGraph, GaugeError> {
    if lx < 3 || ly < 3 || lz < 3 {
        return Err(GaugeError::Invalid("cubic graph needs every side at least 3".into()));
    }
    let ix = AlpIndex { lx, ly, lz };
    let n = lx * ly * lz;
    let dirs = [(1, 0, 0), (0, 1, 0), (0, 0, 1)];
    let mut edges = Vec::with_capacity(3 * n);
    let edge = |v: usize, d: usize| 3 * v + d;
    for v in 0..n {
        let (x, y, z) = ix.coords(0, v);
        for (dx, dy, dz) in dirs {
            edges.push((v, ix.vertex(x + dx, y + dy, z + dz)));
        }
    }
    let mut cells = Vec::with_capacity(3 * n);
    for v in 0..n {
        let (x, y, z) = ix.coords(0, v);
        for d1 in 0..3 {
            for d2 in d1 + 1..3 {
                let (a, b) = (dirs[d1], dirs[d2]);
                let va = ix.vertex(x + a.0, y + a.1, z + a.2);
                let vb = ix.vertex(x + b.0, y + b.1, z + b.2);
                cells.push(vec![edge(v, d1), edge(v, d2), edge(va, d2), edge(vb, d1)]);
            }
        }
    }
    AncillaGraph::new(n, edges, 0, Some(cells))
}

/// Graph gauging of the ALP transversal CZ on the cubic lattice.
pub fn gauge_cz_graph_fracton(c: &ChainComplex) -> Result<GaugedCode, GaugeError> {
    let Family::Alp { lx, ly, lz } = c.family else {
        return Err(GaugeError::Invalid("expected an ALP complex".into()));
    };
    let g = cubic_graph(lx, ly, lz)?;
    let t = alp_cz_triples(c)?;
    gauge_cz_graph(c, &t, &g)
}

/// Enrichment triples of the reflected BB CZ: the control at (i,j) acts on
/// `CZ(B H(i,j), C V(-i,-j))` and `CZ(B V(i,j), C H(-i,-j))`.
pub fn bb_cz_triples(c: &ChainComplex) -> Result<Vec<CzTriple>, GaugeError> {
    let Family::Bb { lx, ly, .. } = c.family else {
        return Err(GaugeError::Invalid("expected a BB complex".into()));
    };
    let ix = BbIndex { lx, ly };
    let mut out = Vec::new();
    for v in 0..lx * ly {
        let (i, j) = ix.ij(v);
        out.push(CzTriple { control: v, b: ix.h(i, j), c: ix.v(-i, -j) });
        out.push(CzTriple { control: v, b: ix.v(i, j), c: ix.h(-i, -j) });
    }
    Ok(out)
}

/// BB ancilla graph: (i,j) is joined to every site carrying a qubit of its
/// X check.
pub fn bb_graph(c: &ChainComplex) -> Result<AncillaGraph, GaugeError> {
    let Family::Bb { lx, ly, .. } = c.family else {
        return Err(GaugeError::Invalid("expected a BB complex".into()));
    };
    let ix = BbIndex { lx, ly };
    let mut set = BTreeSet::new();
    for v in 0..c.n0() {
        for e in c.coboundary_cell(0, v) {
            let (i, j) = ix.ij(e);
            let w = ix.site(i, j);
            if w != v {
                set.insert(undirected(v, w));
            }
        }
    }
    graph_with_spanning_edges(c.n0(), set.into_iter().collect())
}

/// Graph gauging of the reflected BB CZ. Uses [`bb_graph`] when no graph is given.
pub fn gauge_cz_graph_bb(c: &ChainComplex, g: Option<&AncillaGraph>) -> Result<GaugedCode, GaugeError> {
    let t = bb_cz_triples(c)?;
    let owned;
    let g = match g {
        Some(g) => g,
        None => {
            owned = bb_graph(c)?;
            &owned
        }
    };
    gauge_cz_graph(c, &t, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexes::{build_alp, build_bb_code, build_toric};
    use crate::gauge_homological::{css_stabilizers, verify_symmetry};

    fn bc_stabs(c: &ChainComplex) -> (Vec<Operator>, Vec<PhasePolyOp>) {
        let l = bc_layout(c);
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        for s in [B, C] {
            let (x, z) = css_stabilizers(c, &l, s);
            xs.extend(x.into_iter().map(Operator::Phase));
            zs.extend(z);
        }
        (xs, zs)
    }

    #[test]
    fn auto_graph_toric_is_lattice() {
        let c = build_toric(3).unwrap();
        let phi = PhiMap::first_endpoint(&c).unwrap();
        let g = auto_graph(&c, &phi).unwrap();
        assert_eq!(g.n, 9);
        assert!(g.synthetic.is_empty());
        assert!(g.edges.len() >= 18);
        let h0 = g.complex().unwrap().homology().unwrap();
        assert_eq!(h0.dims.0, 1);
    }

    #[test]
    fn disconnected_graph_refused() {
        assert!(AncillaGraph::new(4, vec![(0, 1), (2, 3)], 0, None).is_err());
        let g = graph_with_spanning_edges(4, vec![(0, 1), (2, 3)]).unwrap();
        assert_eq!(g.synthetic, vec![2]);
    }

    #[test]
    fn paths_have_matching_endpoints() {
        let g = cubic_graph(3, 3, 4).unwrap();
        let gc = g.complex().unwrap();
        for (u, w) in [(0, 35), (5, 17), (12, 12)] {
            let b = gc.boundary(1, &g.path_vector(u, w));
            let mut want = F2Vector::zeros(g.n);
            if u != w {
                want.flip(u);
                want.flip(w);
            }
            assert_eq!(b, want);
        }
    }

    #[test]
    fn swap_graph_toric_closes() {
        for l in [2, 3] {
            let c = build_toric(l).unwrap();
            let phi = PhiMap::first_endpoint(&c).unwrap();
            let g = auto_graph(&c, &phi).unwrap();
            let gc = gauge_swap_graph(&c, &phi, &g, &default_vp(&c)).unwrap();
            let r = gc.audit_closure().unwrap();
            assert!(r.ok(), "L={l}: {:?}", r.failures.first());
            assert!(gc.audit_involution().unwrap().is_empty());
            // B vertex terms carry at most four controlled strings.
            let nb = g.n;
            for op in &gc.x_type[nb..nb + c.n0()] {
                let cl = op.to_clifford().unwrap();
                assert!(cl.moved_generators().len() <= 4 + 4 * 2 + 4 * g.edges.len());
            }
        }
    }

    #[test]
    fn swap_graph_enrichment_dense() {
        // 3-cycle: 3 ancillas + 2 * 3 code qubits.
        let ring = crate::complexes::build_graph_cluster_complex(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let phi = PhiMap::first_endpoint(&ring).unwrap();
        assert!(check_swap_graph_enrichment(&ring, &phi, 3).unwrap());
    }

    #[test]
    fn empty_swap_gives_plain_x() {
        let c = build_toric(2).unwrap();
        let phi = PhiMap::first_endpoint(&c).unwrap();
        let g = auto_graph(&c, &phi).unwrap();
        let gc = gauge_swap_graph(&c, &phi, &g, &default_vp(&c)).unwrap();
        let phit = phi.transpose(g.n);
        for (w, es) in phit.iter().enumerate() {
            if es.is_empty() {
                assert!(gc.x_type[w].to_clifford().unwrap().is_pauli());
            }
        }
    }

    #[test]
    fn alp_triples_are_a_symmetry() {
        let c = build_alp(3, 3, 3).unwrap();
        let t = alp_cz_triples(&c).unwrap();
        let u = graph_cz_symmetry(&c, &t);
        let (xs, zs) = bc_stabs(&c);
        assert!(verify_symmetry(&Operator::Phase(u), &xs, &zs).unwrap().all_in_group);
        assert!(check_graph_cz_enrichment(&c, &t, c.n0()).unwrap());
    }

    #[test]
    fn fracton_graph_cz_closes() {
        let c = build_alp(3, 3, 3).unwrap();
        let gc = gauge_cz_graph_fracton(&c).unwrap();
        let a = &gc.x_type[0];
        let Operator::Phase(p) = a else { panic!() };
        assert_eq!(p.x_weight(), 6);
        assert_eq!(p.cz_count(), 2);
        let n0 = c.n0();
        for op in [&gc.x_type[n0], &gc.x_type[2 * n0]] {
            let Operator::Phase(p) = op else { panic!() };
            assert_eq!((p.x_weight(), p.cz_count()), (6, 5));
        }
        assert!(gc.audit_closure().unwrap().ok());
    }

    #[test]
    fn bb_triples_are_a_symmetry() {
        let f = [(0, 0), (1, 0), (-1, 1)];
        let g = [(0, 0), (0, 1), (-2, -1)];
        let c = build_bb_code(&f, &g, 6, 6).unwrap();
        let t = bb_cz_triples(&c).unwrap();
        let (xs, zs) = bc_stabs(&c);
        let u = graph_cz_symmetry(&c, &t);
        assert!(verify_symmetry(&Operator::Phase(u), &xs, &zs).unwrap().all_in_group);
    }

    #[test]
    fn bb_graph_cz_closes() {
        let f = [(0, 0), (1, 0), (-1, 1)];
        let g = [(0, 0), (0, 1), (-2, -1)];
        let c = build_bb_code(&f, &g, 6, 6).unwrap();
        let gc = gauge_cz_graph_bb(&c, None).unwrap();
        for op in &gc.x_type[c.n0()..] {
            let Operator::Phase(p) = op else { panic!() };
            assert_eq!((p.x_weight(), p.cz_count()), (6, 4));
        }
        assert!(gc.audit_closure().unwrap().ok());
    }

    #[test]
    fn bb_toric_limit_closes() {
        let c = build_bb_code(&[(0, 0), (1, 0)], &[(0, 0), (0, 1)], 4, 4).unwrap();
        let gc = gauge_cz_graph_bb(&c, None).unwrap();
        assert!(gc.audit_closure().unwrap().ok());
    }

    #[test]
    fn graph_files_roundtrip() {
        let c = build_toric(3).unwrap();
        let phi = PhiMap::first_endpoint(&c).unwrap();
        let f = phi.to_file();
        let s = serde_json::to_string(&f).unwrap();
        let back = PhiMap::from_file(&serde_json::from_str(&s).unwrap(), c.n1()).unwrap();
        assert_eq!(back, phi);
        let g = auto_graph(&c, &phi).unwrap();
        let s = serde_json::to_string(&g.to_file()).unwrap();
        let g2 = AncillaGraph::from_file(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(g2.edges, g.edges);
    }
}
