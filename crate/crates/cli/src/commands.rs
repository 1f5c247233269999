use serde::Serialize;
use serde_json::json;

use rus_core::growth::{
    self, cost_report, expected_final_length, format_rational, mc_bond, mc_chain_growth, min_l0,
    slope_estimate, table1_parameters, table1_report, to_f64, BondConvention, CostReport, DestroyPolicy,
    GateProbabilities, Rational,
};
use rus_core::optics::{
    classify_multiport, multiport_apparatus, simulate_gate, DetectionPattern, GateApparatus, Herald,
    LossModel, PortAssignment,
};
use rus_core::qcore::concurrence;
use rus_core::rusgate::{
    bell_pair_states, is_mutually_unbiased, mub_constraint_holds, photon_basis_from_angles, rus_pair_basis,
    rus_pair_states, AngleSet, Branch, PairBasis, DEFAULT_MAX_ROUNDS,
};
use rus_core::verify::{run_all, VerifyConfig};

use crate::config::{Command, RunConfig};
use crate::output::Emission;
use crate::CliError;

const DEFAULT_TRIALS: usize = 10_000;

const COST_COLUMNS: [&str; 12] = [
    "p_s",
    "p_i",
    "p_f",
    "L0",
    "N0",
    "slope",
    "intercept",
    "M",
    "N_bond",
    "source",
    "trials",
    "stderr",
];

pub fn dispatch(cfg: &RunConfig) -> Result<Emission, CliError> {
    match cfg.command {
        Command::MubCheck => mub_check(cfg),
        Command::Gate => gate(cfg),
        Command::MultiportMap => multiport_map(),
        Command::Cost => cost(cfg),
        Command::Table1 => table1(cfg),
        Command::Grow => grow(cfg),
        Command::Bond => bond(cfg),
        Command::OracleVerify => oracle_verify(cfg),
    }
}

fn columns(extra: &[&str]) -> Vec<String> {
    COST_COLUMNS.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn probability_sets(cfg: &RunConfig) -> Result<Vec<GateProbabilities>, CliError> {
    match (&cfg.ps, &cfg.pi, &cfg.pf) {
        (None, None, None) => Ok(table1_parameters().to_vec()),
        (Some(s), Some(i), Some(f)) => Ok(vec![GateProbabilities::parse(s, i, f)?]),
        _ => Err(CliError::Usage("give all of --ps, --pi and --pf, or none".into())),
    }
}

fn convention(cfg: &RunConfig) -> BondConvention {
    if cfg.full_line {
        BondConvention::FullLine
    } else {
        BondConvention::SlopeOnly
    }
}

fn float(x: f64) -> String {
    format!("{x}")
}

fn probs_cells(p: &GateProbabilities) -> Vec<String> {
    [p.success(), p.insurance(), p.failure()]
        .iter()
        .map(|r| format_rational(r))
        .collect()
}

fn report_cells(r: &CostReport, source: &str) -> Vec<String> {
    let mut cells = probs_cells(&r.probs);
    cells.extend([
        r.l0.to_string(),
        r.n0.to_string(),
        r.slope.to_string(),
        r.intercept.to_string(),
        r.consumed_length.to_string(),
        r.bond_cost.to_string(),
        source.to_string(),
        String::new(),
        String::new(),
    ]);
    cells
}

fn angles(cfg: &RunConfig) -> AngleSet {
    let mut a = AngleSet::standard();
    if let Some(m) = cfg.mixing {
        a.mixing = m;
    }
    if let Some(r) = cfg.relative_phase {
        a.relative_phase = r;
    }
    if let Some(p) = cfg.partner_phase {
        a.partner_phase = p;
    }
    a
}

#[derive(Serialize)]
struct BasisState {
    outcome: usize,
    branch: Branch,
    concurrence: f64,
    /// `[re, im]` over `x0y0, x0y1, x1y0, x1y1`.
    amplitudes: Vec<[f64; 2]>,
}

fn mub_check(cfg: &RunConfig) -> Result<Emission, CliError> {
    let angles = angles(cfg);
    let pb = photon_basis_from_angles(&angles);
    let branches = [
        Branch::Insurance,
        Branch::Insurance,
        Branch::Success,
        Branch::Success,
    ];
    let bell = PairBasis::new(bell_pair_states(&pb), [Branch::Success; 4])?;
    let pair = PairBasis::new(rus_pair_states(&pb), branches)?;
    let closed_form = mub_constraint_holds(&angles);
    let bell_unbiased = is_mutually_unbiased(&bell);
    let pair_unbiased = is_mutually_unbiased(&pair);
    let corrections = rus_pair_basis(&pb).ok().and_then(|b| b.corrections().copied());
    let states = pair
        .states()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            Ok(BasisState {
                outcome: k + 1,
                branch: branches[k],
                concurrence: concurrence(s)?,
                amplitudes: s.amps().iter().map(|a| [a.re, a.im]).collect(),
            })
        })
        .collect::<Result<Vec<_>, rus_core::Error>>()?;
    let passed = pair_unbiased && closed_form == bell_unbiased && corrections.is_some();
    let result = json!({
        "angles": angles,
        "closed_form_unbiased": closed_form,
        "bell_basis_unbiased": bell_unbiased,
        "pair_basis_unbiased": pair_unbiased,
        "states": states,
        "corrections": corrections,
    });
    let mut e = Emission::new(
        result,
        &[
            "outcome",
            "branch",
            "concurrence",
            "amplitudes",
            "global_phase",
            "phase_a",
            "phase_b",
            "cz",
        ],
        passed,
    )?;
    for s in &states {
        let amps: Vec<String> = s
            .amplitudes
            .iter()
            .map(|[re, im]| format!("{re:.12}{im:+.12}i"))
            .collect();
        let mut row = vec![
            s.outcome.to_string(),
            format!("{:?}", s.branch).to_lowercase(),
            float(s.concurrence),
            amps.join(" "),
        ];
        match &corrections {
            Some(c) => {
                let c = c[s.outcome - 1];
                row.extend([
                    float(c.global_phase),
                    float(c.phase_a),
                    float(c.phase_b),
                    c.cz.to_string(),
                ]);
            }
            None => row.extend([String::new(), String::new(), String::new(), String::new()]),
        }
        e.row(row);
    }
    Ok(e)
}

fn gate(cfg: &RunConfig) -> Result<Emission, CliError> {
    let apparatus: GateApparatus = cfg.apparatus.as_deref().unwrap_or("ideal").parse()?;
    let loss = LossModel::new(cfg.eta.unwrap_or(1.0))?;
    if apparatus == GateApparatus::Ideal && loss.eta() < 1.0 {
        return Err(CliError::Usage(
            "--eta applies to the optical apparatuses only".into(),
        ));
    }
    let trials = cfg.trials.unwrap_or(DEFAULT_TRIALS);
    let stats = simulate_gate(
        apparatus,
        &loss,
        !cfg.threshold,
        trials,
        cfg.seed,
        DEFAULT_MAX_ROUNDS,
    )?;
    let passed = stats.completed == 0 || stats.min_fidelity >= 1.0 - 1e-9;
    let mut e = Emission::new(
        &stats,
        &[
            "apparatus",
            "eta",
            "resolving",
            "runs",
            "success_fraction",
            "insurance_fraction",
            "failure_fraction",
            "failure_stderr",
            "total_rounds",
            "mean_rounds",
            "mean_rounds_stderr",
            "completed",
            "failed",
            "timed_out",
            "mean_fidelity",
            "min_fidelity",
        ],
        passed,
    )?;
    e.row(vec![
        cfg.apparatus.clone().unwrap_or_else(|| "ideal".into()),
        float(stats.eta),
        stats.resolving.to_string(),
        stats.runs.to_string(),
        float(stats.success_fraction),
        float(stats.insurance_fraction),
        float(stats.failure_fraction),
        float(stats.failure_stderr),
        stats.total_rounds.to_string(),
        float(stats.mean_rounds),
        float(stats.mean_rounds_stderr),
        stats.completed.to_string(),
        stats.failed.to_string(),
        stats.timed_out.to_string(),
        float(stats.mean_fidelity),
        float(stats.min_fidelity),
    ]);
    Ok(e)
}

#[derive(Serialize)]
struct MapEntry {
    outcome: usize,
    occupation: String,
    amplitude: [f64; 2],
    classified: Option<usize>,
}

fn multiport_map() -> Result<Emission, CliError> {
    let pb = photon_basis_from_angles(&AngleSet::standard());
    let pa = PortAssignment::standard();
    let mut entries = Vec::new();
    for (k, state) in rus_pair_states(&pb).iter().enumerate() {
        let out = multiport_apparatus(state, &pa)?;
        for (occ, a) in out.terms() {
            if a.norm() < 1e-12 {
                continue;
            }
            let herald = classify_multiport(&DetectionPattern::resolved(occ.clone()))?;
            entries.push(MapEntry {
                outcome: k + 1,
                occupation: occ.iter().map(|n| n.to_string()).collect(),
                amplitude: [a.re, a.im],
                classified: match herald {
                    Herald::Outcome(j) => Some(j),
                    Herald::Failure => None,
                },
            });
        }
    }
    let passed = entries.iter().all(|m| m.classified == Some(m.outcome));
    let mut e = Emission::new(
        json!({ "entries": entries }),
        &[
            "outcome",
            "occupation",
            "amplitude_re",
            "amplitude_im",
            "classified",
        ],
        passed,
    )?;
    for m in &entries {
        e.row(vec![
            m.outcome.to_string(),
            m.occupation.clone(),
            float(m.amplitude[0]),
            float(m.amplitude[1]),
            m.classified.map(|j| j.to_string()).unwrap_or_default(),
        ]);
    }
    Ok(e)
}

fn cost(cfg: &RunConfig) -> Result<Emission, CliError> {
    let mut results = Vec::new();
    let mut e = Emission::new((), &columns(&["L", "N_L"]), true)?;
    for probs in probability_sets(cfg)? {
        let report = cost_report(&probs, cfg.l0, convention(cfg))?;
        let at_l = cfg.l.map(|l| {
            let line = growth::CostLine {
                slope: report.slope.0.clone(),
                intercept: report.intercept.0.clone(),
            };
            growth::Exact(line.at(&Rational::from_integer(l.into())))
        });
        let mut row = report_cells(&report, "analytic");
        row.push(cfg.l.map(|l| l.to_string()).unwrap_or_default());
        row.push(at_l.as_ref().map(|x| x.to_string()).unwrap_or_default());
        e.row(row);
        results.push(json!({ "report": report, "L": cfg.l, "N_L": at_l }));
    }
    e.result = json!({ "rows": results });
    Ok(e)
}

fn table1(cfg: &RunConfig) -> Result<Emission, CliError> {
    let rows = table1_report()?;
    let rows = if cfg.full_line {
        rows.into_iter()
            .map(|mut r| -> Result<_, CliError> {
                r.report = cost_report(&r.report.probs, Some(r.report.l0), BondConvention::FullLine)?;
                Ok(r)
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        rows
    };
    let mut e = Emission::new(&rows, &columns(&["discrepancy"]), true)?;
    for r in &rows {
        let mut computed = report_cells(&r.report, "analytic");
        computed.push(r.discrepancies.join("; "));
        e.row(computed);
        let mut printed = probs_cells(&r.report.probs);
        printed.extend([
            r.printed.l0.to_string(),
            r.printed.n0.to_string(),
            r.printed.slope.to_string(),
            String::new(),
            r.printed.consumed_length.to_string(),
            r.printed.bond_cost.to_string(),
            "printed".into(),
            String::new(),
            String::new(),
            if r.discrepancies.is_empty() {
                String::new()
            } else {
                "discrepancy".into()
            },
        ]);
        e.row(printed);
    }
    Ok(e)
}

fn doubling_rounds(l0: u64, l: u64) -> Result<u32, CliError> {
    if l < l0 || !l.is_multiple_of(l0) || !(l / l0).is_power_of_two() {
        return Err(CliError::Usage(format!(
            "--L {l} must be --L0 {l0} times a power of two"
        )));
    }
    Ok((l / l0).trailing_zeros())
}

fn grow(cfg: &RunConfig) -> Result<Emission, CliError> {
    let policy: DestroyPolicy = match &cfg.policy {
        Some(p) => p.parse()?,
        None => DestroyPolicy::SignedLength,
    };
    let trials = cfg.trials.unwrap_or(DEFAULT_TRIALS);
    let mut e = Emission::new(
        (),
        &columns(&[
            "L",
            "mean_length",
            "mean_attempts",
            "cost_per_qubit",
            "offset_stderr",
            "policy",
        ]),
        true,
    )?;
    let mut results = Vec::new();
    for probs in probability_sets(cfg)? {
        let l0 = match cfg.l0 {
            Some(l) => l,
            None => min_l0(&probs)?,
        };
        let l = cfg.l.unwrap_or(8 * l0);
        let rounds = doubling_rounds(l0, l)?;
        let report = cost_report(&probs, Some(l0), convention(cfg))?;
        let stats = mc_chain_growth(&probs, l0, rounds, policy, trials, cfg.seed)?;
        let mut analytic = report_cells(&report, "analytic");
        let expected_l = expected_final_length(&probs, l0, rounds)?;
        let expected_n = report.slope.0.clone() * &expected_l + &report.intercept.0;
        analytic.extend([
            l.to_string(),
            format_rational(&expected_l),
            format_rational(&expected_n),
            float(to_f64(&expected_n) / to_f64(&expected_l)),
            String::new(),
            String::new(),
        ]);
        e.row(analytic);
        let mut mc = probs_cells(&probs);
        let length = stats.final_length.expect("growth reports a length");
        mc.extend([
            l0.to_string(),
            String::new(),
            slope_estimate(&probs, &stats).map(float).unwrap_or_default(),
            stats.cost_offset.map(|o| float(o.mean)).unwrap_or_default(),
            String::new(),
            String::new(),
            "mc".into(),
            stats.trials.to_string(),
            float(stats.attempts.stderr),
            l.to_string(),
            float(length.mean),
            float(stats.attempts.mean),
            stats.cost_per_qubit().map(float).unwrap_or_default(),
            stats.cost_offset.map(|o| float(o.stderr)).unwrap_or_default(),
            serde_json::to_value(policy)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
        ]);
        e.row(mc);
        results.push(json!({
            "analytic": report,
            "L": l,
            "policy": policy,
            "mc": stats,
            "slope_estimate": slope_estimate(&probs, &stats),
        }));
    }
    e.result = json!({ "rows": results });
    Ok(e)
}

fn bond(cfg: &RunConfig) -> Result<Emission, CliError> {
    let trials = cfg.trials.unwrap_or(DEFAULT_TRIALS);
    let mut e = Emission::new(
        (),
        &columns(&["mean_attempts", "mean_definite", "depletions"]),
        true,
    )?;
    let mut results = Vec::new();
    for probs in probability_sets(cfg)? {
        let report = cost_report(&probs, cfg.l0, convention(cfg))?;
        let stats = mc_bond(&probs, trials, cfg.seed, cfg.chain_len)?;
        let mut analytic = report_cells(&report, "analytic");
        analytic.extend([String::new(), String::new(), String::new()]);
        e.row(analytic);
        let consumed = stats.consumed.expect("bond reports consumption");
        let mut mc = probs_cells(&probs);
        mc.extend([
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            float(consumed.mean),
            String::new(),
            "mc".into(),
            stats.trials.to_string(),
            float(consumed.stderr),
            float(stats.attempts.mean),
            float(stats.definite_outcomes.mean),
            stats.depletions.to_string(),
        ]);
        e.row(mc);
        results.push(json!({ "analytic": report, "mc": stats }));
    }
    e.result = json!({ "rows": results });
    Ok(e)
}

fn oracle_verify(cfg: &RunConfig) -> Result<Emission, CliError> {
    let vc = VerifyConfig {
        max_chain: cfg.max_n.unwrap_or(5),
        seed: cfg.seed,
        inject_fault: cfg.inject_fault,
        ..VerifyConfig::default()
    };
    if vc.max_chain > 6 {
        return Err(CliError::Usage(
            "--max-n is limited to 6 (two chains must fit the dense oracle)".into(),
        ));
    }
    let report = run_all(&vc)?;
    let mut e = Emission::new(
        &report,
        &["suite", "cases", "failures", "first_failure"],
        report.passed(),
    )?;
    for s in &report.suites {
        e.row(vec![
            s.name.to_string(),
            s.cases.to_string(),
            s.failures.to_string(),
            s.first_failure.clone().unwrap_or_default(),
        ]);
    }
    Ok(e)
}
