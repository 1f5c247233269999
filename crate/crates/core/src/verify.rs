//! Equivalence suites: graph-level rules against the state-vector oracle, and the optical
//! apparatuses against the abstract pair measurement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphstate::{
    forge_vertical_bond_with, Clifford, GateOutcome, GraphState, OutcomeSource, Pauli, PhysicalOp, Sign,
    StatevectorOracle,
};
use crate::optics::{PortAssignment, TransferTable};
use crate::qcore::{equal_up_to_global_phase, random_state_with, PureState};
use crate::rusgate::{condition_on, encode, photon_basis_from_angles, rus_pair_basis, AngleSet, PairBasis};

pub const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    /// Longest chain checked exhaustively.
    pub max_chain: usize,
    pub random_graphs: usize,
    pub max_random_vertices: usize,
    pub bond_trials: usize,
    pub optics_inputs: usize,
    pub seed: u64,
    /// Perturbs every compared state so the suites must fail.
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            max_chain: 5,
            random_graphs: 50,
            max_random_vertices: 7,
            bond_trials: 40,
            optics_inputs: 200,
            seed: 0,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        SuiteReport {
            name,
            cases: 0,
            failures: 0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(what());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }
}

/// Graph with vertices `0..n`, random edges and random frame entries.
pub fn random_graph<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GraphState {
    let mut g = GraphState::new();
    for v in 0..n {
        g.add_vertex(v).expect("fresh id");
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<bool>() {
                g.toggle_edge(u, v).expect("present");
            }
        }
    }
    for v in 0..n {
        let c = Clifford::from_index(rng.random_range(0..24)).expect("in range");
        g.set_vop(v, c).expect("present");
    }
    g
}

fn perturb(g: &mut GraphState, fault: bool) {
    if let Some(v) = fault.then(|| g.vertices().next()).flatten() {
        g.apply_clifford(v, Clifford::phase()).expect("present");
    }
}

/// Graph-level measurement agrees with projecting the oracle, probability included.
fn check_measurement(
    g: &GraphState,
    v: usize,
    p: Pauli,
    outcome: Sign,
    special: Option<usize>,
    fault: bool,
) -> Result<bool> {
    let mut h = g.clone();
    let mut oracle = StatevectorOracle::from_graph(g)?;
    let op = PhysicalOp::Measure {
        vertex: v,
        pauli: p,
        outcome,
    };
    match h.measure(v, p, outcome, special) {
        Ok(prob) => {
            let expected = oracle.apply(&op)?;
            perturb(&mut h, fault);
            Ok((prob - expected).abs() < ORACLE_TOL && oracle.matches(&h, ORACLE_TOL)?)
        }
        Err(Error::ImpossibleOutcome { .. }) => {
            Ok(matches!(oracle.apply(&op), Err(Error::ImpossibleOutcome { .. })) && !fault)
        }
        Err(e) => Err(e),
    }
}

fn measurement_cases(g: &GraphState, label: &str, fault: bool, report: &mut SuiteReport) -> Result<()> {
    for v in g.vertices().collect::<Vec<_>>() {
        let mut specials = vec![None];
        specials.extend(g.neighbors(v)?.iter().map(|&b| Some(b)));
        for p in Pauli::ALL {
            for outcome in [Sign::Plus, Sign::Minus] {
                let choices: &[Option<usize>] = if g.vop(v)?.conjugate(p).1 == Pauli::X {
                    &specials
                } else {
                    &[None]
                };
                for &special in choices {
                    let ok = check_measurement(g, v, p, outcome, special, fault)?;
                    report.record(ok, || {
                        format!("{label}: {p} on {v} outcome {outcome:?} special {special:?}")
                    });
                }
            }
        }
    }
    Ok(())
}

pub fn measurement_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("pauli-measurements");
    for n in 1..=cfg.max_chain {
        let g = GraphState::chain(0..n);
        measurement_cases(&g, &format!("{n}-chain"), cfg.inject_fault, &mut report)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for k in 0..cfg.random_graphs {
        let n = rng.random_range(1..=cfg.max_random_vertices);
        let g = random_graph(n, &mut rng);
        measurement_cases(&g, &format!("random graph {k}"), cfg.inject_fault, &mut report)?;
    }
    Ok(report)
}

fn check_ops(initial: &GraphState, ops: &[PhysicalOp], result: &GraphState, fault: bool) -> Result<bool> {
    let mut oracle = StatevectorOracle::from_graph(initial)?;
    for op in ops {
        if oracle.apply(op)? < crate::qcore::ZERO_PROBABILITY {
            return Ok(false);
        }
    }
    let mut result = result.clone();
    perturb(&mut result, fault);
    oracle.matches(&result, ORACLE_TOL)
}

/// The oracle assigns zero probability to the sequence.
fn oracle_rejects(initial: &GraphState, ops: &[PhysicalOp]) -> Result<bool> {
    let mut oracle = StatevectorOracle::from_graph(initial)?;
    for op in ops {
        match oracle.apply(op) {
            Ok(p) if p < crate::qcore::ZERO_PROBABILITY => return Ok(true),
            Ok(_) => {}
            Err(Error::ImpossibleOutcome { .. }) => return Ok(true),
            Err(e) => return Err(e),
        }
    }
    Ok(false)
}

fn repair_cases(g: &GraphState, label: &str, fault: bool, report: &mut SuiteReport) -> Result<()> {
    let ids: Vec<usize> = g.vertices().collect();
    for &u in &ids {
        for &v in &ids {
            if u == v {
                continue;
            }
            for signs in [
                [Sign::Plus, Sign::Plus],
                [Sign::Plus, Sign::Minus],
                [Sign::Minus, Sign::Plus],
                [Sign::Minus, Sign::Minus],
            ] {
                let mut h = g.clone();
                let ops = [
                    PhysicalOp::Measure {
                        vertex: u,
                        pauli: Pauli::Z,
                        outcome: signs[0],
                    },
                    PhysicalOp::Measure {
                        vertex: v,
                        pauli: Pauli::Z,
                        outcome: signs[1],
                    },
                ];
                let ok = match h.repair_after_failure(u, v, signs) {
                    Ok(()) => check_ops(g, &ops, &h, fault)?,
                    Err(Error::ImpossibleOutcome { .. }) => !fault && oracle_rejects(g, &ops)?,
                    Err(e) => return Err(e),
                };
                report.record(ok, || format!("{label}: repair ({u}, {v}) with {signs:?}"));
            }
        }
    }
    Ok(())
}

pub fn repair_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("failure-repair");
    for n in 2..=cfg.max_chain {
        repair_cases(
            &GraphState::chain(0..n),
            &format!("{n}-chain"),
            cfg.inject_fault,
            &mut report,
        )?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    for k in 0..cfg.random_graphs {
        let n = rng.random_range(2..=cfg.max_random_vertices);
        let g = random_graph(n, &mut rng);
        repair_cases(&g, &format!("random graph {k}"), cfg.inject_fault, &mut report)?;
    }
    Ok(report)
}

pub fn cz_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("controlled-z");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xc2);
    for k in 0..cfg.random_graphs {
        let n = rng.random_range(2..=cfg.max_random_vertices);
        let g = random_graph(n, &mut rng);
        for u in 0..n {
            for v in u + 1..n {
                let mut h = g.clone();
                h.cz(u, v)?;
                let ok = check_ops(&g, &[PhysicalOp::Cz(u, v)], &h, cfg.inject_fault)?;
                report.record(ok, || format!("random graph {k}: CZ({u}, {v})"));
            }
        }
    }
    Ok(report)
}

/// Replays a fixed script of gate outcomes; measurement signs come from the RNG.
struct Scripted {
    gates: Vec<GateOutcome>,
    next: usize,
    rng: ChaCha8Rng,
}

impl OutcomeSource for Scripted {
    fn gate(&mut self) -> GateOutcome {
        let g = self.gates.get(self.next).copied().unwrap_or(GateOutcome::Success);
        self.next += 1;
        g
    }

    fn sign(&mut self) -> Sign {
        if self.rng.random::<bool>() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// Every gate-outcome script that fits on chains of `len` qubits: `f` failures, each
/// optionally preceded by an insurance repeat, then success.
fn bond_scripts(len: usize) -> Vec<Vec<GateOutcome>> {
    let rounds = (len - 1) / 2;
    let mut scripts = Vec::new();
    for failures in 0..rounds {
        for insure in [false, true] {
            let mut s = Vec::new();
            for _ in 0..failures {
                if insure {
                    s.push(GateOutcome::Insurance);
                }
                s.push(GateOutcome::Failure);
            }
            if insure {
                s.push(GateOutcome::Insurance);
            }
            s.push(GateOutcome::Success);
            scripts.push(s);
        }
    }
    // runs out of qubits
    scripts.push(vec![GateOutcome::Failure; rounds + 1]);
    scripts
}

pub fn vertical_bond_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("vertical-bond");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xb0d);
    for len_a in 3..=cfg.max_chain {
        for len_b in 3..=cfg.max_chain {
            let a = GraphState::chain(0..len_a);
            let b = GraphState::chain(100..100 + len_b);
            let mut initial = a.clone();
            initial.merge(&b)?;
            for script in bond_scripts(len_a.min(len_b)) {
                for _ in 0..cfg.bond_trials.max(1) {
                    let mut source = Scripted {
                        gates: script.clone(),
                        next: 0,
                        rng: ChaCha8Rng::seed_from_u64(rng.random()),
                    };
                    let label = || format!("chains {len_a}+{len_b}, script {script:?}");
                    match forge_vertical_bond_with(&a, &b, 0, 100, &mut source) {
                        Ok((g, rec)) => {
                            let ok = g.has_edge(0, 100)
                                && rec.consumed == [2 * rec.definite_outcomes + 1; 2]
                                && check_ops(&initial, &rec.ops, &g, cfg.inject_fault)?;
                            report.record(ok, label);
                        }
                        Err(Error::Depleted { .. }) => {
                            let failures = script.iter().filter(|&&o| o == GateOutcome::Failure).count();
                            report.record(failures > (len_a.min(len_b) - 1) / 2 - 1, label);
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(report)
}

fn optics_case(psi: &PureState, basis: &PairBasis, tables: &[TransferTable; 2], fault: bool) -> Result<bool> {
    let encoded = encode(psi)?;
    for table in tables {
        for (occ, _) in table.distribution(psi)? {
            let herald = table.classify(&crate::optics::DetectionPattern::resolved(occ.clone()))?;
            let crate::optics::Herald::Outcome(k) = herald else {
                return Ok(false);
            };
            let k = if fault { k % 4 + 1 } else { k };
            let optical = table.condition(psi, &occ)?.post_state;
            let abstract_ = match condition_on(&encoded, basis, k) {
                Ok(p) => p.post_state,
                Err(Error::ImpossibleOutcome { .. }) => return Ok(false),
                Err(e) => return Err(e),
            };
            if !equal_up_to_global_phase(&optical, &abstract_, ORACLE_TOL) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn optics_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("optics-vs-pair-measurement");
    let pb = photon_basis_from_angles(&AngleSet::standard());
    let basis = rus_pair_basis(&pb)?;
    let tables = [
        TransferTable::multiport(&PortAssignment::standard())?,
        TransferTable::beamsplitter(&pb)?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0b71);
    for k in 0..cfg.optics_inputs {
        let psi = random_state_with(&[2, 2], &mut rng);
        let ok = optics_case(&psi, &basis, &tables, cfg.inject_fault)?;
        report.record(ok, || format!("random input {k}"));
    }
    Ok(report)
}

pub fn run_all(cfg: &VerifyConfig) -> Result<VerifyReport> {
    Ok(VerifyReport {
        suites: vec![
            measurement_suite(cfg)?,
            repair_suite(cfg)?,
            cz_suite(cfg)?,
            vertical_bond_suite(cfg)?,
            optics_suite(cfg)?,
        ],
    })
}
