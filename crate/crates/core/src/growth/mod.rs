//! Overhead of growing linear clusters and forging vertical bonds with a probabilistic CZ.
//!
//! Analytic quantities are exact rationals; the [`montecarlo`] module samples the same
//! protocols.

pub mod montecarlo;

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub use montecarlo::{
    bond_chain_length, mc_bond, mc_chain_growth, mc_one_round, slope_estimate, DestroyPolicy, Estimate,
    SimStats,
};

pub type Rational = BigRational;

fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"3"`, `"-0.25"`, `"1.5e-3"` or `"17/3"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (whole, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let negative = whole.starts_with('-');
    let whole = whole.trim_start_matches(['-', '+']);
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let scale = exponent - frac.len() as i32;
    let ten = int(10);
    let mut r = Rational::from_integer(n);
    if scale >= 0 {
        r *= Pow::pow(&ten, scale as u32);
    } else {
        r /= Pow::pow(&ten, (-scale) as u32);
    }
    Ok(if negative { -r } else { r })
}

/// Exact value of the shortest decimal that round-trips to `x`.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::InvalidProbabilities(format!("{x} is not finite")));
    }
    parse_rational(&format!("{x}"))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `"n/d"` (or `"n"` for integers).
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serialized as `{"exact": "n/d", "value": float}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exact(pub Rational);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Exact", 2)?;
        st.serialize_field("exact", &format_rational(&self.0))?;
        st.serialize_field("value", &to_f64(&self.0))?;
        st.end()
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

/// Per-attempt success, insurance and failure probabilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateProbabilities {
    success: Rational,
    insurance: Rational,
    failure: Rational,
}

impl GateProbabilities {
    /// Each in `[0, 1]` and summing to exactly 1.
    pub fn new(success: Rational, insurance: Rational, failure: Rational) -> Result<Self> {
        for (name, p) in [("p_s", &success), ("p_i", &insurance), ("p_f", &failure)] {
            if p.is_negative() || *p > Rational::one() {
                return Err(Error::InvalidProbabilities(format!(
                    "{name} = {} outside [0, 1]",
                    format_rational(p)
                )));
            }
        }
        let total = &success + &insurance + &failure;
        if !total.is_one() {
            return Err(Error::InvalidProbabilities(format!(
                "p_s + p_i + p_f = {} != 1",
                format_rational(&total)
            )));
        }
        Ok(GateProbabilities {
            success,
            insurance,
            failure,
        })
    }

    /// Floats are read as their shortest decimal representation, so `0.2` means `1/5`.
    pub fn from_f64(success: f64, insurance: f64, failure: f64) -> Result<Self> {
        GateProbabilities::new(
            rational_from_f64(success)?,
            rational_from_f64(insurance)?,
            rational_from_f64(failure)?,
        )
    }

    pub fn parse(success: &str, insurance: &str, failure: &str) -> Result<Self> {
        GateProbabilities::new(
            parse_rational(success)?,
            parse_rational(insurance)?,
            parse_rational(failure)?,
        )
    }

    pub fn success(&self) -> &Rational {
        &self.success
    }

    pub fn insurance(&self) -> &Rational {
        &self.insurance
    }

    pub fn failure(&self) -> &Rational {
        &self.failure
    }

    /// `[p_s, p_i, p_f]`.
    pub fn as_f64(&self) -> [f64; 3] {
        [
            to_f64(&self.success),
            to_f64(&self.insurance),
            to_f64(&self.failure),
        ]
    }

    fn require_success(&self) -> Result<()> {
        if self.success.is_zero() {
            return Err(Error::InvalidProbabilities("p_s must be positive".into()));
        }
        Ok(())
    }
}

impl fmt::Display for GateProbabilities {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(p_s, p_i, p_f) = ({}, {}, {})",
            format_rational(&self.success),
            format_rational(&self.insurance),
            format_rational(&self.failure)
        )
    }
}

/// Probabilities per definite outcome, insurance repeats absorbed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedProbabilities {
    /// `p_s / (1 − p_i)`
    pub success: Rational,
    /// `p_f / (1 − p_i)`
    pub failure: Rational,
    /// Mean attempts per definite outcome, `1 / (1 − p_i)`.
    pub attempts: Rational,
}

pub fn derived(probs: &GateProbabilities) -> Result<DerivedProbabilities> {
    let rest = Rational::one() - &probs.insurance;
    if rest.is_zero() {
        return Err(Error::CertainInsurance);
    }
    Ok(DerivedProbabilities {
        success: &probs.success / &rest,
        failure: &probs.failure / &rest,
        attempts: rest.recip(),
    })
}

/// `2 p_f / p_s`: the expected length lost per join.
pub fn growth_threshold(probs: &GateProbabilities) -> Result<Rational> {
    probs.require_success()?;
    Ok(int(2) * &probs.failure / &probs.success)
}

/// Smallest power of two strictly above `2 p_f / p_s`.
pub fn min_l0(probs: &GateProbabilities) -> Result<u64> {
    let threshold = growth_threshold(probs)?;
    let mut l = 1u64;
    while int(l as i64) <= threshold {
        l = l
            .checked_mul(2)
            .ok_or_else(|| Error::InvalidProbabilities("growth threshold exceeds 2^63".into()))?;
    }
    Ok(l)
}

fn log2_exact(l0: u64) -> Result<u32> {
    if l0 == 0 || !l0.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(l0));
    }
    Ok(l0.trailing_zeros())
}

/// Expected attempts to build a length-`l0` chain by pairwise joins, discarding both halves on
/// failure: `N_av Σ_{i=1}^{log₂ l0} 2^{i−1} / P_s^i`.
pub fn offline_cost(probs: &GateProbabilities, l0: u64) -> Result<Rational> {
    let rounds = log2_exact(l0)?;
    probs.require_success()?;
    let d = derived(probs)?;
    let mut sum = Rational::zero();
    for i in 1..=rounds {
        sum += int(1i64 << (i - 1)) / Pow::pow(&d.success, i);
    }
    Ok(d.attempts * sum)
}

/// Same quantity by iterating `n_k = (2 n_{k−1} + N_av) / P_s` from `n_0 = 0`.
pub fn offline_cost_by_recursion(probs: &GateProbabilities, rounds: u32) -> Result<Rational> {
    probs.require_success()?;
    let d = derived(probs)?;
    let mut n = Rational::zero();
    for _ in 0..rounds {
        n = (int(2) * n + &d.attempts) / &d.success;
    }
    Ok(n)
}

/// `N(L) = slope · L + intercept`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostLine {
    pub slope: Rational,
    pub intercept: Rational,
}

impl CostLine {
    pub fn at(&self, length: &Rational) -> Rational {
        &self.slope * length + &self.intercept
    }
}

/// Expected attempts for a chain of length `L` grown by doubling from length-`l0` chains,
/// each failed join shortening both chains by one.
pub fn total_cost(probs: &GateProbabilities, l0: u64) -> Result<CostLine> {
    let threshold = growth_threshold(probs)?;
    let l0r = int(l0 as i64);
    if l0r <= threshold {
        return Err(Error::InfeasibleGrowth {
            l0,
            threshold: to_f64(&threshold),
        });
    }
    let per_join = probs.success.recip();
    let n0 = offline_cost(probs, l0)?;
    let slope = (n0 + &per_join) / (l0r - &threshold);
    let intercept = -(&slope * &threshold) - per_join;
    Ok(CostLine { slope, intercept })
}

/// Mean length after `rounds` doublings from length `l0` when failed joins shorten both
/// chains by one: `2^rounds (l0 − c) + c` with `c = 2 p_f / p_s`.
pub fn expected_final_length(probs: &GateProbabilities, l0: u64, rounds: u32) -> Result<Rational> {
    let c = growth_threshold(probs)?;
    let scale = int(1i64 << rounds);
    Ok(scale * (int(l0 as i64) - &c) + c)
}

/// Expected chain length consumed per vertical bond: `2(1 − p_i)/p_s + 1`.
pub fn consumed_length(probs: &GateProbabilities) -> Result<Rational> {
    probs.require_success()?;
    Ok(int(2) * (Rational::one() - &probs.insurance) / &probs.success + Rational::one())
}

/// How `N(M)` enters the bond cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BondConvention {
    /// `N(M) = slope · M`: the asymptotic per-qubit cost.
    #[default]
    SlopeOnly,
    /// `N(M) = slope · M + intercept`.
    FullLine,
}

/// `2 N(M) + (1 − p_i)/p_s` entangling operations per vertical bond.
pub fn bond_cost(probs: &GateProbabilities, l0: u64, convention: BondConvention) -> Result<Rational> {
    let line = total_cost(probs, l0)?;
    let m = consumed_length(probs)?;
    let n_m = match convention {
        BondConvention::SlopeOnly => &line.slope * &m,
        BondConvention::FullLine => line.at(&m),
    };
    Ok(int(2) * n_m + (Rational::one() - &probs.insurance) / &probs.success)
}

/// Expected length after one join of two length-`l` chains that stops when both are used
/// up: `Σ_{i=0}^{l} 2(l − i) P_s P_f^i`.
pub fn one_round_expected_length(probs: &GateProbabilities, l: u64) -> Result<Rational> {
    let d = derived(probs)?;
    let mut sum = Rational::zero();
    let mut pf_pow = Rational::one();
    for i in 0..=l {
        sum += int(2 * (l - i) as i64) * &d.success * &pf_pow;
        pf_pow *= &d.failure;
    }
    Ok(sum)
}

#[derive(Debug, Clone, Serialize)]
pub struct CostReport {
    #[serde(serialize_with = "ser_probs")]
    pub probs: GateProbabilities,
    pub l0: u64,
    pub n0: Exact,
    pub slope: Exact,
    pub intercept: Exact,
    pub consumed_length: Exact,
    pub bond_cost: Exact,
    pub convention: BondConvention,
    pub growth_feasible: bool,
}

fn ser_probs<S: Serializer>(p: &GateProbabilities, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("GateProbabilities", 3)?;
    st.serialize_field("p_s", &Exact(p.success.clone()))?;
    st.serialize_field("p_i", &Exact(p.insurance.clone()))?;
    st.serialize_field("p_f", &Exact(p.failure.clone()))?;
    st.end()
}

/// Full analytic report; `l0` defaults to [`min_l0`].
pub fn cost_report(
    probs: &GateProbabilities,
    l0: Option<u64>,
    convention: BondConvention,
) -> Result<CostReport> {
    let l0 = match l0 {
        Some(l) => l,
        None => min_l0(probs)?,
    };
    let line = total_cost(probs, l0)?;
    Ok(CostReport {
        probs: probs.clone(),
        l0,
        n0: Exact(offline_cost(probs, l0)?),
        slope: Exact(line.slope),
        intercept: Exact(line.intercept),
        consumed_length: Exact(consumed_length(probs)?),
        bond_cost: Exact(bond_cost(probs, l0, convention)?),
        convention,
        growth_feasible: true,
    })
}

/// Values as printed in the published cost table.
#[derive(Debug, Clone, Serialize)]
pub struct PrintedRow {
    pub l0: u64,
    pub n0: Exact,
    pub slope: Exact,
    pub consumed_length: Exact,
    pub bond_cost: Exact,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Row {
    pub report: CostReport,
    pub printed: PrintedRow,
    /// Printed fields that differ from the computed ones.
    pub discrepancies: Vec<String>,
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// The four published parameter sets `(p_s, p_i, p_f)`.
pub fn table1_parameters() -> [GateProbabilities; 4] {
    [
        (q(1, 5), q(1, 5), q(3, 5)),
        (q(3, 10), q(3, 10), q(2, 5)),
        (q(2, 5), q(2, 5), q(1, 5)),
        (q(1, 2), q(0, 1), q(1, 2)),
    ]
    .map(|(s, i, f)| GateProbabilities::new(s, i, f).expect("published rows are distributions"))
}

fn table1_printed() -> [PrintedRow; 4] {
    let row = |l0, n0: Rational, slope: Rational, m: Rational, nb: Rational| PrintedRow {
        l0,
        n0: Exact(n0),
        slope: Exact(slope),
        consumed_length: Exact(m),
        bond_cost: Exact(nb),
    };
    [
        row(8, q(365, 1), q(185, 1), q(9, 1), q(3334, 1)),
        row(4, q(170, 9), q(50, 3), q(17, 3), q(1721, 9)),
        row(2, q(5, 2), q(5, 1), q(3, 1), q(65, 2)),
        row(4, q(10, 1), q(6, 1), q(5, 1), q(62, 1)),
    ]
}

/// Computes every published row and lists where the printed values disagree.
pub fn table1_report() -> Result<Vec<Table1Row>> {
    table1_parameters()
        .iter()
        .zip(table1_printed())
        .map(|(probs, printed)| {
            let report = cost_report(probs, Some(printed.l0), BondConvention::SlopeOnly)?;
            let mut discrepancies = Vec::new();
            let fields = [
                ("N0", &report.n0, &printed.n0),
                ("slope", &report.slope, &printed.slope),
                ("M", &report.consumed_length, &printed.consumed_length),
                ("N_bond", &report.bond_cost, &printed.bond_cost),
            ];
            for (name, computed, shown) in fields {
                if computed != shown {
                    discrepancies.push(format!("{name}: computed {computed}, printed {shown}"));
                }
            }
            if min_l0(probs)? != printed.l0 {
                discrepancies.push(format!("L0: computed {}, printed {}", min_l0(probs)?, printed.l0));
            }
            Ok(Table1Row {
                report,
                printed,
                discrepancies,
            })
        })
        .collect()
}
