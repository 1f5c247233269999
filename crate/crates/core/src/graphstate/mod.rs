//! Graph states with a local Clifford frame per vertex.
//!
//! The represented state is `(⊗_v C_v) Π_{(u,w)∈E} CZ_uw |+⟩^{⊗n}`. Every operation keeps that
//! form exactly (up to global phase), so [`GraphState::to_statevector`] is a faithful oracle.

pub mod clifford;
pub mod io;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::growth::GateProbabilities;
use crate::qcore::{equal_up_to_global_phase, PureState, UnitaryOp};
use crate::rusgate::sample_index;

pub use clifford::{Clifford, Pauli, Sign};

/// Largest graph expanded into a dense vector.
pub const MAX_STATEVECTOR_VERTICES: usize = 12;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphState {
    adjacency: BTreeMap<usize, BTreeSet<usize>>,
    frame: BTreeMap<usize, Clifford>,
}

/// Outcome class of one entangling attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GateOutcome {
    Success,
    Insurance,
    Failure,
}

/// Result of bonding two vertices, insurance repeats included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BondOutcome {
    /// `Success` or `Failure`; insurance outcomes are retried.
    pub result: GateOutcome,
    pub attempts: usize,
}

/// Physical operation record, replayable on a state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhysicalOp {
    Measure {
        vertex: usize,
        pauli: Pauli,
        outcome: Sign,
    },
    Gate {
        vertex: usize,
        gate: Clifford,
    },
    Cz(usize, usize),
}

/// Supplies gate outcomes and measurement results.
pub trait OutcomeSource {
    fn gate(&mut self) -> GateOutcome;
    fn sign(&mut self) -> Sign;
}

/// Draws gate outcomes from `(p_s, p_i, p_f)` and fair measurement signs.
pub struct RandomOutcomes<'a, R: Rng + ?Sized> {
    probs: [f64; 3],
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> RandomOutcomes<'a, R> {
    pub fn new(probs: &GateProbabilities, rng: &'a mut R) -> Self {
        RandomOutcomes {
            probs: probs.as_f64(),
            rng,
        }
    }
}

impl<R: Rng + ?Sized> OutcomeSource for RandomOutcomes<'_, R> {
    fn gate(&mut self) -> GateOutcome {
        [GateOutcome::Success, GateOutcome::Insurance, GateOutcome::Failure]
            [sample_index(&self.probs, self.rng)]
    }

    fn sign(&mut self) -> Sign {
        if self.rng.random::<bool>() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl GraphState {
    pub fn new() -> Self {
        GraphState::default()
    }

    /// Path graph on vertices `1..=n`.
    pub fn new_plus_chain(n: usize) -> Self {
        GraphState::chain(1..=n)
    }

    /// Path graph through `ids` in order.
    pub fn chain(ids: impl IntoIterator<Item = usize>) -> Self {
        let mut g = GraphState::new();
        let mut prev = None;
        for id in ids {
            g.add_vertex(id).expect("chain ids are distinct");
            if let Some(p) = prev {
                g.toggle_edge(p, id).expect("both present");
            }
            prev = Some(id);
        }
        g
    }

    pub fn add_vertex(&mut self, v: usize) -> Result<()> {
        if self.adjacency.contains_key(&v) {
            return Err(Error::InvalidGraph(format!("vertex {v} already present")));
        }
        self.adjacency.insert(v, BTreeSet::new());
        self.frame.insert(v, Clifford::IDENTITY);
        Ok(())
    }

    /// Disjoint union; fails if any id is shared.
    pub fn merge(&mut self, other: &GraphState) -> Result<()> {
        if let Some(v) = other.vertices().find(|v| self.contains(*v)) {
            return Err(Error::InvalidGraph(format!("vertex {v} present in both graphs")));
        }
        self.adjacency.extend(other.adjacency.clone());
        self.frame.extend(other.frame.clone());
        Ok(())
    }

    pub fn contains(&self, v: usize) -> bool {
        self.adjacency.contains_key(&v)
    }

    fn check(&self, v: usize) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::MissingVertex(v))
        }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn neighbors(&self, v: usize) -> Result<&BTreeSet<usize>> {
        self.adjacency.get(&v).ok_or(Error::MissingVertex(v))
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency.get(&u).is_some_and(|n| n.contains(&v))
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .flat_map(|(&u, n)| n.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
            .collect()
    }

    pub fn vop(&self, v: usize) -> Result<Clifford> {
        self.frame.get(&v).copied().ok_or(Error::MissingVertex(v))
    }

    pub fn set_vop(&mut self, v: usize, c: Clifford) -> Result<()> {
        self.check(v)?;
        self.frame.insert(v, c);
        Ok(())
    }

    /// True when every frame entry is the identity.
    pub fn frame_is_trivial(&self) -> bool {
        self.frame.values().all(|&c| c == Clifford::IDENTITY)
    }

    /// Adds or removes an edge without touching the frame.
    pub fn toggle_edge(&mut self, u: usize, v: usize) -> Result<()> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop on {u}")));
        }
        let added = self.adjacency.get_mut(&u).expect("checked").insert(v);
        if added {
            self.adjacency.get_mut(&v).expect("checked").insert(u);
        } else {
            self.adjacency.get_mut(&u).expect("checked").remove(&v);
            self.adjacency.get_mut(&v).expect("checked").remove(&u);
        }
        Ok(())
    }

    fn right_multiply(&mut self, v: usize, c: Clifford) {
        let f = self.frame.get_mut(&v).expect("vertex present");
        *f = *f * c;
    }

    /// Applies a physical single-qubit Clifford: `C_v ← c · C_v`.
    pub fn apply_clifford(&mut self, v: usize, c: Clifford) -> Result<()> {
        self.check(v)?;
        let f = self.frame.get_mut(&v).expect("checked");
        *f = c * *f;
        Ok(())
    }

    pub fn hadamard(&mut self, v: usize) -> Result<()> {
        self.apply_clifford(v, Clifford::hadamard())
    }

    /// Local complementation at `a`, compensated in the frame so the state is unchanged.
    pub fn local_complement(&mut self, a: usize) -> Result<()> {
        let nbrs: Vec<usize> = self.neighbors(a)?.iter().copied().collect();
        for (i, &b) in nbrs.iter().enumerate() {
            for &c in &nbrs[i + 1..] {
                self.toggle_edge(b, c)?;
            }
        }
        self.right_multiply(a, Clifford::sqrt_x());
        for &b in &nbrs {
            self.right_multiply(b, Clifford::sqrt_z_inverse());
        }
        Ok(())
    }

    fn remove(&mut self, v: usize) {
        if let Some(nbrs) = self.adjacency.remove(&v) {
            for b in nbrs {
                self.adjacency
                    .get_mut(&b)
                    .expect("symmetric adjacency")
                    .remove(&v);
            }
        }
        self.frame.remove(&v);
    }

    /// Graph-level `Z` measurement on the bare graph state: deletes `v`.
    fn delete_with_z(&mut self, v: usize, outcome: Sign) {
        if outcome.is_minus() {
            let nbrs: Vec<usize> = self.adjacency[&v].iter().copied().collect();
            for b in nbrs {
                self.right_multiply(b, Clifford::pauli(Pauli::Z));
            }
        }
        self.remove(v);
    }

    /// Outcome forced by the state, if any.
    pub fn deterministic_outcome(&self, v: usize, p: Pauli) -> Result<Option<Sign>> {
        let (neg, q) = self.vop(v)?.conjugate(p);
        let isolated = self.neighbors(v)?.is_empty();
        Ok((isolated && q == Pauli::X).then_some(Sign::Plus.flip_if(neg)))
    }

    /// Projects `v` onto the `outcome` eigenspace of the physical Pauli `p` and removes it.
    /// `special` picks the neighbor used by the `X` rule (smallest neighbor by default).
    /// Returns the outcome probability.
    pub fn measure(&mut self, v: usize, p: Pauli, outcome: Sign, special: Option<usize>) -> Result<f64> {
        let (neg, q) = self.vop(v)?.conjugate(p);
        match q {
            Pauli::Z => {}
            Pauli::Y => self.local_complement(v)?,
            Pauli::X => {
                let nbrs = self.neighbors(v)?;
                let Some(&first) = nbrs.iter().next() else {
                    if outcome.flip_if(neg).is_minus() {
                        return Err(Error::ImpossibleOutcome { probability: 0.0 });
                    }
                    self.remove(v);
                    return Ok(1.0);
                };
                let b0 = special.unwrap_or(first);
                if !nbrs.contains(&b0) {
                    return Err(Error::InvalidGraph(format!("{b0} is not a neighbor of {v}")));
                }
                self.local_complement(b0)?;
                self.local_complement(v)?;
                self.local_complement(b0)?;
            }
        }
        let (neg, q) = self.vop(v)?.conjugate(p);
        debug_assert_eq!(q, Pauli::Z);
        self.delete_with_z(v, outcome.flip_if(neg));
        Ok(0.5)
    }

    pub fn measure_x(&mut self, v: usize, special: Option<usize>, outcome: Sign) -> Result<f64> {
        self.measure(v, Pauli::X, outcome, special)
    }

    pub fn measure_y(&mut self, v: usize, outcome: Sign) -> Result<f64> {
        self.measure(v, Pauli::Y, outcome, None)
    }

    pub fn measure_z(&mut self, v: usize, outcome: Sign) -> Result<f64> {
        self.measure(v, Pauli::Z, outcome, None)
    }

    /// Measures with a random (or forced) outcome and returns it.
    pub fn measure_with(
        &mut self,
        v: usize,
        p: Pauli,
        special: Option<usize>,
        source: &mut dyn OutcomeSource,
    ) -> Result<Sign> {
        let outcome = match self.deterministic_outcome(v, p)? {
            Some(s) => s,
            None => source.sign(),
        };
        self.measure(v, p, outcome, special)?;
        Ok(outcome)
    }

    /// Physical Pauli `P` whose measurement acts as `graph_pauli` on the bare graph, and
    /// whether outcome signs flip between the two.
    pub fn physical_pauli(&self, v: usize, graph_pauli: Pauli) -> Result<(Pauli, bool)> {
        let (neg, p) = self.vop(v)?.preimage(graph_pauli);
        Ok((p, neg))
    }

    fn has_other_neighbor(&self, a: usize, other: usize) -> bool {
        self.adjacency[&a].iter().any(|&c| c != other)
    }

    /// Local complementations at `a` and at a neighbor other than `avoid` until `C_a` is diagonal.
    fn remove_vop(&mut self, a: usize, avoid: usize) {
        // Breadth-first search over words in {τ_a, τ_c}; τ_a right-multiplies C_a by
        // exp(iπ/4 X), τ_c by exp(−iπ/4 Z).
        let start = self.frame[&a];
        let gens = [Clifford::sqrt_x(), Clifford::sqrt_z_inverse()];
        let mut parent: BTreeMap<Clifford, (Clifford, usize)> = BTreeMap::new();
        let mut queue = VecDeque::from([start]);
        let mut seen = BTreeSet::from([start]);
        let mut end = start;
        while let Some(c) = queue.pop_front() {
            if c.is_diagonal() {
                end = c;
                break;
            }
            for (k, g) in gens.iter().enumerate() {
                let n = c * *g;
                if seen.insert(n) {
                    parent.insert(n, (c, k));
                    queue.push_back(n);
                }
            }
        }
        let mut word = Vec::new();
        while end != start {
            let (p, k) = parent[&end];
            word.push(k);
            end = p;
        }
        for k in word.into_iter().rev() {
            if k == 0 {
                self.local_complement(a).expect("present");
            } else {
                let c = *self.adjacency[&a]
                    .iter()
                    .find(|&&c| c != avoid)
                    .expect("has another neighbor");
                self.local_complement(c).expect("present");
            }
        }
        debug_assert!(self.frame[&a].is_diagonal());
    }

    /// Controlled-Z between `u` and `v`, frames included.
    pub fn cz(&mut self, u: usize, v: usize) -> Result<()> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(Error::InvalidGraph(format!("controlled-Z of {u} with itself")));
        }
        loop {
            let mut changed = false;
            for (a, b) in [(u, v), (v, u)] {
                if !self.frame[&a].is_diagonal() && self.has_other_neighbor(a, b) {
                    self.remove_vop(a, b);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if self.frame[&u].is_diagonal() && self.frame[&v].is_diagonal() {
            return self.toggle_edge(u, v);
        }
        self.rewrite_pair(u, v)
    }

    /// Exhaustive two-vertex rewrite for a pair whose non-diagonal frames have no other neighbors.
    fn rewrite_pair(&mut self, u: usize, v: usize) -> Result<()> {
        let edge = self.has_edge(u, v);
        let (cu, cv) = (self.frame[&u], self.frame[&v]);
        let target = pair_state(cu, cv, edge, true);
        let candidates = |x: usize, other: usize, c: Clifford| -> Vec<Clifford> {
            if self.has_other_neighbor(x, other) {
                Clifford::all()
                    .filter(|d| d.is_diagonal())
                    .map(|d| c * d)
                    .collect()
            } else {
                Clifford::all().collect()
            }
        };
        let (cand_u, cand_v) = (candidates(u, v, cu), candidates(v, u, cv));
        for new_edge in [edge, !edge] {
            for &nu in &cand_u {
                for &nv in &cand_v {
                    if proportional(&pair_state(nu, nv, new_edge, false), &target) {
                        if new_edge != edge {
                            self.toggle_edge(u, v)?;
                        }
                        self.frame.insert(u, nu);
                        self.frame.insert(v, nv);
                        return Ok(());
                    }
                }
            }
        }
        Err(Error::InvalidGraph(format!(
            "no local rewrite for controlled-Z on ({u}, {v})"
        )))
    }

    /// Heralded failure: both qubits are measured in the computational basis.
    pub fn repair_after_failure(&mut self, u: usize, v: usize, outcomes: [Sign; 2]) -> Result<()> {
        self.check(u)?;
        self.check(v)?;
        self.measure(u, Pauli::Z, outcomes[0], None)?;
        self.measure(v, Pauli::Z, outcomes[1], None)?;
        Ok(())
    }

    /// Repeats the probabilistic CZ through insurance outcomes until success or failure.
    pub fn attempt_bond_with(
        &mut self,
        u: usize,
        v: usize,
        source: &mut dyn OutcomeSource,
        log: &mut Vec<PhysicalOp>,
    ) -> Result<BondOutcome> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(Error::InvalidGraph(format!("cannot bond {u} with itself")));
        }
        let mut attempts = 0;
        loop {
            attempts += 1;
            match source.gate() {
                GateOutcome::Insurance => continue,
                GateOutcome::Success => {
                    self.cz(u, v)?;
                    log.push(PhysicalOp::Cz(u, v));
                    return Ok(BondOutcome {
                        result: GateOutcome::Success,
                        attempts,
                    });
                }
                GateOutcome::Failure => {
                    for w in [u, v] {
                        let outcome = self.measure_with(w, Pauli::Z, None, source)?;
                        log.push(PhysicalOp::Measure {
                            vertex: w,
                            pauli: Pauli::Z,
                            outcome,
                        });
                    }
                    return Ok(BondOutcome {
                        result: GateOutcome::Failure,
                        attempts,
                    });
                }
            }
        }
    }

    pub fn attempt_bond<R: Rng + ?Sized>(
        &mut self,
        u: usize,
        v: usize,
        probs: &GateProbabilities,
        rng: &mut R,
    ) -> Result<BondOutcome> {
        let mut source = RandomOutcomes::new(probs, rng);
        self.attempt_bond_with(u, v, &mut source, &mut Vec::new())
    }

    /// Dense vector over the vertices in increasing id order.
    pub fn to_statevector(&self) -> Result<PureState> {
        let n = self.len();
        if n > MAX_STATEVECTOR_VERTICES {
            return Err(Error::TooManyVertices(n));
        }
        if n == 0 {
            return Ok(PureState::scalar());
        }
        let pos: BTreeMap<usize, usize> = self.vertices().enumerate().map(|(i, v)| (v, i)).collect();
        let amp = Complex64::new((0.5f64).powf(n as f64 / 2.0), 0.0);
        let mut amps = vec![amp; 1 << n];
        for (u, v) in self.edges() {
            let (bu, bv) = (n - 1 - pos[&u], n - 1 - pos[&v]);
            for (idx, a) in amps.iter_mut().enumerate() {
                if (idx >> bu) & 1 == 1 && (idx >> bv) & 1 == 1 {
                    *a = -*a;
                }
            }
        }
        let mut state = PureState::new(vec![2; n], amps)?;
        for (v, &c) in &self.frame {
            if c != Clifford::IDENTITY {
                state = state.apply(&c.op(), &[pos[v]])?;
            }
        }
        Ok(state)
    }

    /// Unique neighbor with a larger id, skipping `exclude`.
    pub fn right_neighbor(&self, v: usize, exclude: &[usize]) -> Result<Option<usize>> {
        let larger: Vec<usize> = self
            .neighbors(v)?
            .iter()
            .copied()
            .filter(|&w| w > v && !exclude.contains(&w))
            .collect();
        match larger.as_slice() {
            [] => Ok(None),
            [w] => Ok(Some(*w)),
            _ => Err(Error::InvalidGraph(format!(
                "vertex {v} has several right neighbors {larger:?}"
            ))),
        }
    }

    /// Measures the physical Pauli that acts as `graph_pauli` on the bare graph at `v`.
    fn measure_graph_pauli(
        &mut self,
        v: usize,
        graph_pauli: Pauli,
        special: Option<usize>,
        source: &mut dyn OutcomeSource,
        log: &mut Vec<PhysicalOp>,
    ) -> Result<()> {
        let (pauli, _) = self.physical_pauli(v, graph_pauli)?;
        let outcome = self.measure_with(v, pauli, special, source)?;
        log.push(PhysicalOp::Measure {
            vertex: v,
            pauli,
            outcome,
        });
        Ok(())
    }
}

fn proportional(a: &[Complex64], b: &[Complex64]) -> bool {
    let overlap: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    (overlap.norm() - 1.0).abs() < 1e-9
}

/// `CZ^{cz_after} (C_a ⊗ C_b) CZ^{edge} |++⟩`.
fn pair_state(ca: Clifford, cb: Clifford, edge: bool, cz_after: bool) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.5, 0.0); 4];
    if edge {
        v[3] = -v[3];
    }
    let v = ca.op().kron(&cb.op()).apply_to_vec(&v);
    let mut v = v;
    if cz_after {
        v[3] = -v[3];
    }
    v
}

/// Bookkeeping of one vertical bond.
#[derive(Debug, Clone, Default, Serialize)]
pub struct VerticalBond {
    /// Chain qubits used up on each side, including the bonded site itself.
    pub consumed: [usize; 2],
    /// Entangling attempts, insurance repeats included.
    pub attempts: usize,
    /// Attempts that ended in success or failure.
    pub definite_outcomes: usize,
    pub failures: usize,
    pub ops: Vec<PhysicalOp>,
}

/// Joins two chains with a vertical bond between `ua` and `ub` through dangling "cherry" qubits.
///
/// Each round takes the next two qubits to the right of the bond site on each chain: an `X`
/// measurement on the first (rotated so the second becomes a leaf on the bond site) and a
/// Hadamard on the second leave a cherry. Cherries are bonded; a failure deletes both and the
/// round repeats further along the chains. After success an `X` measurement on one cherry
/// links the two bond sites and the other cherry is removed.
pub fn forge_vertical_bond_with(
    chain_a: &GraphState,
    chain_b: &GraphState,
    ua: usize,
    ub: usize,
    source: &mut dyn OutcomeSource,
) -> Result<(GraphState, VerticalBond)> {
    let mut g = chain_a.clone();
    g.merge(chain_b)?;
    g.check(ua)?;
    g.check(ub)?;
    let mut record = VerticalBond::default();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut cherries = [0usize; 2];
        for (side, &site) in [ua, ub].iter().enumerate() {
            let first = g.right_neighbor(site, &[])?.ok_or(Error::Depleted { rounds })?;
            let second = g
                .right_neighbor(first, &[site])?
                .ok_or(Error::Depleted { rounds })?;
            g.measure_graph_pauli(first, Pauli::X, Some(second), source, &mut record.ops)?;
            g.hadamard(second)?;
            record.ops.push(PhysicalOp::Gate {
                vertex: second,
                gate: Clifford::hadamard(),
            });
            cherries[side] = second;
        }
        let outcome = g.attempt_bond_with(cherries[0], cherries[1], source, &mut record.ops)?;
        record.attempts += outcome.attempts;
        record.definite_outcomes += 1;
        for c in &mut record.consumed {
            *c += 2;
        }
        if outcome.result == GateOutcome::Success {
            g.measure_graph_pauli(cherries[0], Pauli::X, Some(cherries[1]), source, &mut record.ops)?;
            g.measure_graph_pauli(cherries[1], Pauli::Z, None, source, &mut record.ops)?;
            for c in &mut record.consumed {
                *c += 1;
            }
            return Ok((g, record));
        }
        record.failures += 1;
    }
}

pub fn forge_vertical_bond<R: Rng + ?Sized>(
    chain_a: &GraphState,
    chain_b: &GraphState,
    ua: usize,
    ub: usize,
    probs: &GateProbabilities,
    rng: &mut R,
) -> Result<(GraphState, VerticalBond)> {
    let mut source = RandomOutcomes::new(probs, rng);
    forge_vertical_bond_with(chain_a, chain_b, ua, ub, &mut source)
}

/// Dense-vector replay of physical operations, tracking which vertices remain.
#[derive(Debug, Clone)]
pub struct StatevectorOracle {
    ids: Vec<usize>,
    state: PureState,
}

impl StatevectorOracle {
    pub fn from_graph(g: &GraphState) -> Result<Self> {
        Ok(StatevectorOracle {
            ids: g.vertices().collect(),
            state: g.to_statevector()?,
        })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    fn position(&self, v: usize) -> Result<usize> {
        self.ids
            .iter()
            .position(|&x| x == v)
            .ok_or(Error::MissingVertex(v))
    }

    /// Applies one operation; returns the outcome probability (1 for gates).
    pub fn apply(&mut self, op: &PhysicalOp) -> Result<f64> {
        match *op {
            PhysicalOp::Gate { vertex, gate } => {
                let p = self.position(vertex)?;
                self.state = self.state.apply(&gate.op(), &[p])?;
                Ok(1.0)
            }
            PhysicalOp::Cz(u, v) => {
                let targets = [self.position(u)?, self.position(v)?];
                self.state = self.state.apply(&UnitaryOp::cz(), &targets)?;
                Ok(1.0)
            }
            PhysicalOp::Measure {
                vertex,
                pauli,
                outcome,
            } => {
                let p = self.position(vertex)?;
                let projected = self.state.project(&[p], &eigenvector(pauli, outcome))?;
                self.state = projected.post_state;
                self.ids.remove(p);
                Ok(projected.probability)
            }
        }
    }

    /// Same vertex set and the same state up to global phase.
    pub fn matches(&self, g: &GraphState, tol: f64) -> Result<bool> {
        let ids: Vec<usize> = g.vertices().collect();
        if ids != self.ids {
            return Ok(false);
        }
        Ok(equal_up_to_global_phase(&self.state, &g.to_statevector()?, tol))
    }
}

/// Eigenvector of `p` with eigenvalue `outcome`.
pub fn eigenvector(p: Pauli, outcome: Sign) -> PureState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = outcome.value();
    let (a, b) = match p {
        Pauli::X => (Complex64::new(h, 0.0), Complex64::new(s * h, 0.0)),
        Pauli::Y => (Complex64::new(h, 0.0), Complex64::new(0.0, s * h)),
        Pauli::Z => {
            if outcome.is_minus() {
                (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
            } else {
                (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
            }
        }
    };
    PureState::qubit(a, b).expect("unit vector")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> GraphState {
        let mut g = GraphState::new();
        for v in 0..n {
            g.add_vertex(v).unwrap();
        }
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<bool>() {
                    g.toggle_edge(u, v).unwrap();
                }
            }
        }
        for v in 0..n {
            g.set_vop(v, Clifford::from_index(rng.random_range(0..24)).unwrap())
                .unwrap();
        }
        g
    }

    #[test]
    fn chain_constructor() {
        let g = GraphState::new_plus_chain(3);
        assert_eq!(g.edges(), vec![(1, 2), (2, 3)]);
        assert!(GraphState::new_plus_chain(1).edges().is_empty());
        let two = GraphState::new_plus_chain(2).to_statevector().unwrap();
        let reference = PureState::plus()
            .tensor(&PureState::plus())
            .apply(&UnitaryOp::cz(), &[0, 1])
            .unwrap();
        assert!(equal_up_to_global_phase(&two, &reference, 1e-12));
        assert_eq!(GraphState::new().to_statevector().unwrap().dim(), 1);
    }

    #[test]
    fn local_complementation_preserves_the_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..30 {
            let mut g = random_graph(5, &mut rng);
            let before = g.to_statevector().unwrap();
            let a = rng.random_range(0..5);
            g.local_complement(a).unwrap();
            assert!(equal_up_to_global_phase(
                &before,
                &g.to_statevector().unwrap(),
                1e-10
            ));
        }
    }

    #[test]
    fn measurements_match_the_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let g = random_graph(5, &mut rng);
            let v = rng.random_range(0..5);
            for p in Pauli::ALL {
                for outcome in [Sign::Plus, Sign::Minus] {
                    let mut h = g.clone();
                    let mut oracle = StatevectorOracle::from_graph(&g).unwrap();
                    let op = PhysicalOp::Measure {
                        vertex: v,
                        pauli: p,
                        outcome,
                    };
                    match h.measure(v, p, outcome, None) {
                        Ok(prob) => {
                            let expected = oracle.apply(&op).unwrap();
                            assert!((prob - expected).abs() < 1e-9, "{prob} vs {expected}");
                            assert!(oracle.matches(&h, 1e-9).unwrap());
                        }
                        Err(Error::ImpossibleOutcome { .. }) => {
                            assert!(oracle.apply(&op).is_err());
                        }
                        Err(e) => panic!("{e}"),
                    }
                }
            }
        }
    }

    #[test]
    fn cz_matches_the_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=6 {
            for _ in 0..100 {
                let mut g = random_graph(n, &mut rng);
                let u = rng.random_range(0..n);
                let v = (u + rng.random_range(1..n)) % n;
                let mut oracle = StatevectorOracle::from_graph(&g).unwrap();
                g.cz(u, v).unwrap();
                oracle.apply(&PhysicalOp::Cz(u, v)).unwrap();
                assert!(oracle.matches(&g, 1e-9).unwrap());
            }
        }
    }

    #[test]
    fn textbook_measurement_shapes() {
        let mut g = GraphState::new_plus_chain(3);
        g.measure_z(2, Sign::Plus).unwrap();
        assert!(g.edges().is_empty());
        let mut g = GraphState::new_plus_chain(3);
        g.measure_y(2, Sign::Plus).unwrap();
        assert_eq!(g.edges(), vec![(1, 3)]);
        let mut g = GraphState::new_plus_chain(4);
        g.measure_x(2, Some(3), Sign::Plus).unwrap();
        assert_eq!(g.edges(), vec![(1, 3), (1, 4)]);
    }

    #[test]
    fn repair_deletes_the_pair() {
        let mut g = GraphState::new_plus_chain(4);
        g.repair_after_failure(4, 3, [Sign::Plus, Sign::Minus]).unwrap();
        assert_eq!(g.edges(), vec![(1, 2)]);
        let mut g = GraphState::new_plus_chain(2);
        g.repair_after_failure(1, 2, [Sign::Minus, Sign::Minus]).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn vertical_bond_shape_and_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let probs = GateProbabilities::from_f64(0.4, 0.3, 0.3).unwrap();
        let a = GraphState::chain(1..=5);
        let b = GraphState::chain(11..=15);
        for _ in 0..50 {
            match forge_vertical_bond(&a, &b, 1, 11, &probs, &mut rng) {
                Ok((g, rec)) => {
                    assert!(g.has_edge(1, 11));
                    assert_eq!(rec.consumed[0], 2 * rec.definite_outcomes + 1);
                    let mut initial = a.clone();
                    initial.merge(&b).unwrap();
                    let mut oracle = StatevectorOracle::from_graph(&initial).unwrap();
                    for op in &rec.ops {
                        oracle.apply(op).unwrap();
                    }
                    assert!(oracle.matches(&g, 1e-9).unwrap());
                }
                Err(Error::Depleted { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
}
