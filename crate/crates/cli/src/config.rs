use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "rus",
    version,
    about = "Repeat-until-success CZ gate and cluster-growth simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check the photon measurement basis built from the angle set.
    MubCheck,
    /// Run the gate on random inputs through an ideal or optical measurement.
    Gate,
    /// Scatter the four pair states through the multiport and classify every pattern.
    MultiportMap,
    /// Analytic overhead for one parameter set (all four published rows by default).
    Cost,
    /// The published cost table with discrepancy flags.
    Table1,
    /// Monte Carlo chain growth with the analytic overlay.
    Grow,
    /// Monte Carlo vertical bonds on the graph-state simulator.
    Bond,
    /// Graph-state and optics equivalence suites.
    OracleVerify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Default)]
pub struct Flags {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Per-photon detection efficiency.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Success probability per attempt, decimal or n/d.
    #[arg(long, global = true)]
    pub ps: Option<String>,
    /// Insurance probability per attempt.
    #[arg(long, global = true)]
    pub pi: Option<String>,
    /// Failure probability per attempt.
    #[arg(long, global = true)]
    pub pf: Option<String>,
    /// Length of the offline-built short chains (power of two).
    #[arg(long = "L0", global = true)]
    pub l0: Option<u64>,
    /// Target chain length.
    #[arg(long = "L", global = true)]
    pub l: Option<u64>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON file with default values for any of these flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// gate: ideal, multiport or beamsplitter.
    #[arg(long, global = true)]
    pub apparatus: Option<String>,
    /// gate: threshold (click) detectors instead of number-resolving ones.
    #[arg(long, global = true)]
    pub threshold: bool,
    /// grow: signed-length, stop or restart.
    #[arg(long, global = true)]
    pub policy: Option<String>,
    /// cost, table1, grow, bond: keep the intercept in N(M).
    #[arg(long, global = true)]
    pub full_line: bool,
    /// bond: qubits per chain.
    #[arg(long, global = true)]
    pub chain_len: Option<usize>,
    /// oracle-verify: longest chain checked exhaustively.
    #[arg(long, global = true)]
    pub max_n: Option<usize>,
    /// oracle-verify: perturb compared states so every suite must fail.
    #[arg(long, global = true)]
    pub inject_fault: bool,
    /// mub-check: θ₁,θ₂ (radians).
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub mixing: Option<Vec<f64>>,
    /// mub-check: ϑ₁,ϑ₂.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub relative_phase: Option<Vec<f64>>,
    /// mub-check: ξ₁,ξ₂.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub partner_phase: Option<Vec<f64>>,
}

/// Values read from `--config`; same names as the flags, in snake case.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    trials: Option<usize>,
    eta: Option<f64>,
    ps: Option<Value>,
    pi: Option<Value>,
    pf: Option<Value>,
    #[serde(alias = "L0")]
    l0: Option<u64>,
    #[serde(alias = "L")]
    l: Option<u64>,
    format: Option<Format>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    apparatus: Option<String>,
    threshold: Option<bool>,
    policy: Option<String>,
    full_line: Option<bool>,
    chain_len: Option<usize>,
    max_n: Option<usize>,
    inject_fault: Option<bool>,
    mixing: Option<[f64; 2]>,
    relative_phase: Option<[f64; 2]>,
    partner_phase: Option<[f64; 2]>,
}

/// Resolved settings; echoed into every output header.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ps: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pf: Option<String>,
    #[serde(rename = "L0", skip_serializing_if = "Option::is_none")]
    pub l0: Option<u64>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<u64>,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub apparatus: Option<String>,
    pub threshold: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    pub full_line: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_n: Option<usize>,
    pub inject_fault: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixing: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_phase: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partner_phase: Option<[f64; 2]>,
}

fn number_text(v: Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(CliError::Usage(format!("expected a probability, got {other}"))),
    }
}

fn pair(v: Option<Vec<f64>>) -> Result<Option<[f64; 2]>, CliError> {
    match v.as_deref() {
        None => Ok(None),
        Some(&[a, b]) => Ok(Some([a, b])),
        Some(other) => Err(CliError::Usage(format!(
            "expected two comma-separated angles, got {other:?}"
        ))),
    }
}

impl RunConfig {
    pub fn resolve(command: Command, flags: Flags) -> Result<RunConfig, CliError> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let text = |flag: Option<String>, file: Option<Value>| -> Result<Option<String>, CliError> {
            match flag {
                Some(s) => Ok(Some(s)),
                None => file.map(number_text).transpose(),
            }
        };
        let default_format = match command {
            Command::Cost | Command::Table1 | Command::Grow | Command::Bond => Format::Csv,
            _ => Format::Json,
        };
        Ok(RunConfig {
            command,
            seed: flags.seed.or(file.seed).unwrap_or(1),
            trials: flags.trials.or(file.trials),
            eta: flags.eta.or(file.eta),
            ps: text(flags.ps, file.ps)?,
            pi: text(flags.pi, file.pi)?,
            pf: text(flags.pf, file.pf)?,
            l0: flags.l0.or(file.l0),
            l: flags.l.or(file.l),
            format: flags.format.or(file.format).unwrap_or(default_format),
            out: flags.out.or(file.out),
            threads: flags.threads.or(file.threads),
            apparatus: flags.apparatus.or(file.apparatus),
            threshold: flags.threshold || file.threshold.unwrap_or(false),
            policy: flags.policy.or(file.policy),
            full_line: flags.full_line || file.full_line.unwrap_or(false),
            chain_len: flags.chain_len.or(file.chain_len),
            max_n: flags.max_n.or(file.max_n),
            inject_fault: flags.inject_fault
                || file.inject_fault.unwrap_or(false)
                || cfg!(feature = "inject-fault"),
            mixing: pair(flags.mixing)?.or(file.mixing),
            relative_phase: pair(flags.relative_phase)?.or(file.relative_phase),
            partner_phase: pair(flags.partner_phase)?.or(file.partner_phase),
        })
    }
}
