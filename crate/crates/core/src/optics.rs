//! Linear-optics pair measurements: Fock states of at most two photons, mode unitaries,
//! the polarizing beam-splitter and 4×4 multiport apparatuses, and heralded loss.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::{ProjectionOutcome, PureState, UnitaryOp, NORM_TOL, ZERO_PROBABILITY};
use crate::rusgate::{sample_index, PhotonBasis};

/// Occupation numbers per mode.
pub type Occupation = Vec<u8>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A superposition of Fock basis states with at most two photons in total.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    modes: usize,
    terms: BTreeMap<Occupation, Complex64>,
}

impl FockState {
    pub fn vacuum(modes: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![0; modes], Complex64::new(1.0, 0.0));
        FockState { modes, terms }
    }

    /// Validates occupation lengths, the two-photon cap and the norm.
    pub fn new(modes: usize, terms: BTreeMap<Occupation, Complex64>) -> Result<Self> {
        for occ in terms.keys() {
            if occ.len() != modes {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    actual: occ.len(),
                });
            }
            if photon_count(occ) > 2 {
                return Err(Error::TooManyPhotons(photon_count(occ) as usize));
            }
        }
        let s = FockState { modes, terms };
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(s)
    }

    /// `Π a†_{m} |vac⟩` for the listed modes (repeats allowed), normalized with bosonic factors.
    pub fn from_creations(modes: usize, created: &[usize]) -> Result<Self> {
        if created.len() > 2 {
            return Err(Error::TooManyPhotons(created.len()));
        }
        let mut poly = Polynomial::unit();
        for &m in created {
            if m >= modes {
                return Err(Error::InvalidSubsystem {
                    index: m,
                    count: modes,
                });
            }
            poly = poly.times_linear(&single(modes, m));
        }
        let mut f = poly.to_fock(modes);
        let norm = f.norm();
        for a in f.terms.values_mut() {
            *a /= norm;
        }
        Ok(f)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn terms(&self) -> &BTreeMap<Occupation, Complex64> {
        &self.terms
    }

    pub fn amplitude(&self, occ: &[u8]) -> Complex64 {
        self.terms.get(occ).copied().unwrap_or(ZERO)
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Photon-number-resolved outcome distribution, zero-probability terms dropped.
    pub fn distribution(&self) -> Vec<(Occupation, f64)> {
        self.terms
            .iter()
            .map(|(o, a)| (o.clone(), a.norm_sqr()))
            .filter(|(_, p)| *p > ZERO_PROBABILITY)
            .collect()
    }

    /// Largest amplitude difference against another state over the union of supports.
    pub fn distance(&self, other: &FockState) -> f64 {
        self.terms
            .keys()
            .chain(other.terms.keys())
            .map(|o| (self.amplitude(o) - other.amplitude(o)).norm())
            .fold(0.0, f64::max)
    }
}

fn photon_count(occ: &[u8]) -> u32 {
    occ.iter().map(|&n| n as u32).sum()
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).product::<u32>() as f64
}

fn single(modes: usize, m: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; modes];
    v[m] = Complex64::new(1.0, 0.0);
    v
}

/// Polynomial in creation operators; keys are occupation exponents.
struct Polynomial {
    terms: BTreeMap<Occupation, Complex64>,
}

impl Polynomial {
    fn unit() -> Self {
        Polynomial {
            terms: BTreeMap::new(),
        }
        .with_constant()
    }

    fn with_constant(mut self) -> Self {
        self.terms.insert(Vec::new(), Complex64::new(1.0, 0.0));
        self
    }

    /// Multiplies by `Σ_m coeffs[m] b†_m`.
    fn times_linear(&self, coeffs: &[Complex64]) -> Self {
        let modes = coeffs.len();
        let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (exp, &c) in &self.terms {
            let base = if exp.is_empty() {
                vec![0; modes]
            } else {
                exp.clone()
            };
            for (m, &u) in coeffs.iter().enumerate() {
                if u == ZERO {
                    continue;
                }
                let mut e = base.clone();
                e[m] += 1;
                *out.entry(e).or_insert(ZERO) += c * u;
            }
        }
        Polynomial { terms: out }
    }

    /// `Π (b†_m)^{n_m} |vac⟩ = Π √(n_m!) |n⟩`.
    fn to_fock(&self, modes: usize) -> FockState {
        let mut terms = BTreeMap::new();
        for (exp, &c) in &self.terms {
            let occ = if exp.is_empty() {
                vec![0; modes]
            } else {
                exp.clone()
            };
            let factor: f64 = occ.iter().map(|&n| factorial(n).sqrt()).product();
            let a = c * factor;
            if a.norm() > 1e-15 {
                terms.insert(occ, a);
            }
        }
        FockState { modes, terms }
    }
}

/// A unitary acting on optical modes by `a†_n → Σ_m U_mn b†_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary(UnitaryOp);

impl ModeUnitary {
    pub fn new(op: UnitaryOp) -> Self {
        ModeUnitary(op)
    }

    pub fn modes(&self) -> usize {
        self.0.dim()
    }

    pub fn op(&self) -> &UnitaryOp {
        &self.0
    }

    /// Column `n`: the image of input mode `n`.
    fn column(&self, n: usize) -> Vec<Complex64> {
        (0..self.modes()).map(|m| self.0.entry(m, n)).collect()
    }
}

/// Balanced 4×4 multiport, `U_mn = ½ i^{(n−1)(m−1)}` (1-based ports).
pub fn dft4() -> ModeUnitary {
    let i_pow = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    let mut m = Vec::with_capacity(16);
    for r in 0..4 {
        for c in 0..4 {
            m.push(i_pow[(r * c) % 4] * 0.5);
        }
    }
    ModeUnitary(UnitaryOp::new(4, m).expect("DFT is unitary"))
}

/// Substitutes each creation operator by its image and re-expands.
pub fn scatter(f: &FockState, u: &ModeUnitary) -> Result<FockState> {
    if f.modes != u.modes() {
        return Err(Error::DimensionMismatch {
            expected: u.modes(),
            actual: f.modes,
        });
    }
    let modes = f.modes;
    let columns: Vec<Vec<Complex64>> = (0..modes).map(|n| u.column(n)).collect();
    let mut total: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    for (occ, &amp) in &f.terms {
        // |n⟩ = Π (a†)^{n} / √(n!) |vac⟩
        let norm: f64 = occ.iter().map(|&n| factorial(n).sqrt()).product();
        let mut poly = Polynomial::unit();
        for (mode, &n) in occ.iter().enumerate() {
            for _ in 0..n {
                poly = poly.times_linear(&columns[mode]);
            }
        }
        for (o, a) in poly.to_fock(modes).terms {
            *total.entry(o).or_insert(ZERO) += a * amp / norm;
        }
    }
    total.retain(|_, a| a.norm() > 1e-15);
    Ok(FockState { modes, terms: total })
}

/// Input port (0-based) of each photon label: `[x0, x1, y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PortAssignment {
    pub x: [usize; 2],
    pub y: [usize; 2],
}

impl PortAssignment {
    /// `x0 → 1, y0 → 2, x1 → 3, y1 → 4` in 1-based port numbers.
    pub fn standard() -> Self {
        PortAssignment { x: [0, 2], y: [1, 3] }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = [false; 4];
        for &p in self.x.iter().chain(&self.y) {
            if p >= 4 || seen[p] {
                return Err(Error::InvalidPorts(format!(
                    "{self:?} is not a bijection onto four ports"
                )));
            }
            seen[p] = true;
        }
        Ok(())
    }
}

/// `|x_i y_j⟩ → a†_{port(x_i)} a†_{port(y_j)} |vac⟩`, linearly extended.
pub fn dualrail_input(pair_state: &PureState, pa: &PortAssignment) -> Result<FockState> {
    pa.validate()?;
    photon_pair_input(pair_state, 4, pa.x, pa.y)
}

fn photon_pair_input(
    pair_state: &PureState,
    modes: usize,
    x: [usize; 2],
    y: [usize; 2],
) -> Result<FockState> {
    if pair_state.dims() != [2, 2] {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: pair_state.dim(),
        });
    }
    let mut terms = BTreeMap::new();
    for (ij, &a) in pair_state.amps().iter().enumerate() {
        if a == ZERO {
            continue;
        }
        let mut occ = vec![0u8; modes];
        occ[x[ij >> 1]] += 1;
        occ[y[ij & 1]] += 1;
        *terms.entry(occ).or_insert(ZERO) += a;
    }
    FockState::new(modes, terms)
}

/// Polarization modes of the beam-splitter apparatus.
pub mod bs_modes {
    pub const PORT1_H: usize = 0;
    pub const PORT1_V: usize = 1;
    pub const PORT2_H: usize = 2;
    pub const PORT2_V: usize = 3;
}

/// Rotation taking `basis[0] → h` and `basis[1] → v` for one photon.
fn polarizer(basis: &[PureState; 2]) -> UnitaryOp {
    let m = vec![
        basis[0].amps()[0].conj(),
        basis[0].amps()[1].conj(),
        basis[1].amps()[0].conj(),
        basis[1].amps()[1].conj(),
    ];
    UnitaryOp::new(2, m).expect("orthonormal single-photon basis")
}

/// Mode map of the beam-splitter apparatus on `[port1-h, port1-v, port2-h, port2-v]`:
/// rotate each photon's polarization, then mix the spatial ports 50:50.
pub fn beamsplitter_modes(pb: &PhotonBasis) -> ModeUnitary {
    let rotations = direct_sum(&polarizer(&pb.a), &polarizer(&pb.b));
    let h = FRAC_1_SQRT_2;
    let mut bs = vec![ZERO; 16];
    // out1 = (in1 + in2)/√2, out2 = (in1 − in2)/√2, polarization untouched.
    for pol in 0..2 {
        let (p1, p2) = (pol, 2 + pol);
        bs[p1 * 4 + p1] = Complex64::new(h, 0.0);
        bs[p1 * 4 + p2] = Complex64::new(h, 0.0);
        bs[p2 * 4 + p1] = Complex64::new(h, 0.0);
        bs[p2 * 4 + p2] = Complex64::new(-h, 0.0);
    }
    let bs = UnitaryOp::new(4, bs).expect("50:50 mixer is unitary");
    ModeUnitary(bs.compose(&rotations).expect("4×4 operands"))
}

fn direct_sum(a: &UnitaryOp, b: &UnitaryOp) -> UnitaryOp {
    let (da, db) = (a.dim(), b.dim());
    let d = da + db;
    let mut m = vec![ZERO; d * d];
    for r in 0..da {
        for c in 0..da {
            m[r * d + c] = a.entry(r, c);
        }
    }
    for r in 0..db {
        for c in 0..db {
            m[(da + r) * d + da + c] = b.entry(r, c);
        }
    }
    UnitaryOp::new(d, m).expect("direct sum of unitaries")
}

/// Photon 1 in port 1 (`x0 ↦ h`, `x1 ↦ v`), photon 2 in port 2; after rotation and mixing.
pub fn beamsplitter_apparatus(pair_state: &PureState, pb: &PhotonBasis) -> Result<FockState> {
    let input = photon_pair_input(
        pair_state,
        4,
        [bs_modes::PORT1_H, bs_modes::PORT1_V],
        [bs_modes::PORT2_H, bs_modes::PORT2_V],
    )?;
    scatter(&input, &beamsplitter_modes(pb))
}

/// Dual-rail encoding followed by the DFT multiport.
pub fn multiport_apparatus(pair_state: &PureState, pa: &PortAssignment) -> Result<FockState> {
    scatter(&dualrail_input(pair_state, pa)?, &dft4())
}

/// Detector record. Threshold detectors report 0/1 per mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DetectionPattern {
    pub counts: Vec<u8>,
    pub resolving: bool,
}

impl DetectionPattern {
    pub fn resolved(counts: Vec<u8>) -> Self {
        DetectionPattern {
            counts,
            resolving: true,
        }
    }

    pub fn clicks(counts: Vec<u8>) -> Self {
        DetectionPattern {
            counts: counts.into_iter().map(|n| n.min(1)).collect(),
            resolving: false,
        }
    }

    /// Photons (resolving) or clicks (threshold).
    pub fn total(&self) -> u32 {
        photon_count(&self.counts)
    }

    /// Modes listed once per registered photon or click.
    fn hits(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(m, &n)| std::iter::repeat_n(m, n as usize))
            .collect()
    }
}

/// Heralded interpretation of a detection record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Herald {
    /// Outcome index 1..=4.
    Outcome(usize),
    Failure,
}

/// Multiport outputs: bunched in 1 or 3 → Φ₁, in 2 or 4 → Φ₂, `{1,4}`/`{2,3}` → Φ₃,
/// `{1,2}`/`{3,4}` → Φ₄ (1-based ports).
pub fn classify_multiport(pattern: &DetectionPattern) -> Result<Herald> {
    if pattern.counts.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: pattern.counts.len(),
        });
    }
    let hits = pattern.hits();
    match hits.as_slice() {
        [p, q] if p == q => Ok(Herald::Outcome(if p % 2 == 0 { 1 } else { 2 })),
        [0, 3] | [1, 2] => Ok(Herald::Outcome(3)),
        [0, 1] | [2, 3] => Ok(Herald::Outcome(4)),
        [_, _] => Err(Error::ImpossiblePattern(pattern.counts.clone())),
        h if h.len() < 2 => Ok(Herald::Failure),
        _ => Err(Error::ImpossiblePattern(pattern.counts.clone())),
    }
}

/// Beam-splitter outputs: `hh` → Φ₁, `vv` → Φ₂, `hv` in one port → Φ₃, in different ports → Φ₄.
pub fn classify_bs(pattern: &DetectionPattern) -> Result<Herald> {
    if pattern.counts.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: pattern.counts.len(),
        });
    }
    let hits = pattern.hits();
    let port = |m: usize| m / 2;
    let vertical = |m: usize| m % 2 == 1;
    match hits.as_slice() {
        [p, q] => Ok(Herald::Outcome(match (vertical(*p), vertical(*q)) {
            (false, false) => 1,
            (true, true) => 2,
            _ if port(*p) == port(*q) => 3,
            _ => 4,
        })),
        h if h.len() < 2 => Ok(Herald::Failure),
        _ => Err(Error::ImpossiblePattern(pattern.counts.clone())),
    }
}

/// Per-photon end-to-end survival probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossModel {
    eta: f64,
}

impl LossModel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidProbabilities(format!(
                "efficiency {eta} outside [0, 1]"
            )));
        }
        Ok(LossModel { eta })
    }

    pub fn lossless() -> Self {
        LossModel { eta: 1.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Independent survival of each photon.
    pub fn thin<R: Rng + ?Sized>(&self, occ: &[u8], rng: &mut R) -> Occupation {
        occ.iter()
            .map(|&n| {
                if n == 0 || self.eta >= 1.0 {
                    n
                } else {
                    Binomial::new(n as u64, self.eta)
                        .expect("valid binomial")
                        .sample(rng) as u8
                }
            })
            .collect()
    }
}

/// Born-rule occupation outcome, then loss, then detector response.
pub fn sample_detection<R: Rng + ?Sized>(
    f: &FockState,
    loss: &LossModel,
    resolving: bool,
    rng: &mut R,
) -> DetectionPattern {
    let dist = f.distribution();
    let probs: Vec<f64> = dist.iter().map(|(_, p)| *p).collect();
    let occ = &dist[sample_index(&probs, rng)].0;
    detect(loss.thin(occ, rng), resolving)
}

fn detect(counts: Occupation, resolving: bool) -> DetectionPattern {
    if resolving {
        DetectionPattern::resolved(counts)
    } else {
        DetectionPattern::clicks(counts)
    }
}

/// Success, insurance and failure probabilities of the unbiased basis under loss.
pub fn effective_probabilities(loss: &LossModel) -> [f64; 3] {
    let both = loss.eta * loss.eta;
    [both / 2.0, both / 2.0, 1.0 - both]
}

/// Which apparatus turns photon pairs into detector clicks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Apparatus {
    Multiport,
    BeamSplitter,
}

/// Joint amplitudes of the encoded sources and the optical output: for each output
/// occupation `o`, the row `⟨o|F_ij⟩` where `F_ij` is the optical image of `|x_i y_j⟩`.
#[derive(Debug, Clone)]
pub struct TransferTable {
    apparatus: Apparatus,
    rows: BTreeMap<Occupation, [Complex64; 4]>,
}

impl TransferTable {
    pub fn multiport(pa: &PortAssignment) -> Result<Self> {
        Self::build(Apparatus::Multiport, |s| multiport_apparatus(s, pa))
    }

    pub fn beamsplitter(pb: &PhotonBasis) -> Result<Self> {
        Self::build(Apparatus::BeamSplitter, |s| beamsplitter_apparatus(s, pb))
    }

    fn build<F>(apparatus: Apparatus, optics: F) -> Result<Self>
    where
        F: Fn(&PureState) -> Result<FockState>,
    {
        let mut rows: BTreeMap<Occupation, [Complex64; 4]> = BTreeMap::new();
        for ij in 0..4 {
            let out = optics(&PureState::basis(vec![2, 2], ij)?)?;
            for (occ, &a) in out.terms() {
                rows.entry(occ.clone()).or_insert([ZERO; 4])[ij] = a;
            }
        }
        Ok(TransferTable { apparatus, rows })
    }

    pub fn apparatus(&self) -> Apparatus {
        self.apparatus
    }

    pub fn rows(&self) -> &BTreeMap<Occupation, [Complex64; 4]> {
        &self.rows
    }

    pub fn classify(&self, pattern: &DetectionPattern) -> Result<Herald> {
        match self.apparatus {
            Apparatus::Multiport => classify_multiport(pattern),
            Apparatus::BeamSplitter => classify_bs(pattern),
        }
    }

    /// Unnormalized source amplitudes after observing the full occupation `occ`.
    fn conditional(&self, psi: &PureState, occ: &[u8]) -> Vec<Complex64> {
        let row = self.rows.get(occ).copied().unwrap_or([ZERO; 4]);
        psi.amps().iter().zip(row).map(|(a, r)| a * r).collect()
    }

    /// Source state conditioned on a lossless occupation outcome.
    pub fn condition(&self, psi: &PureState, occ: &[u8]) -> Result<ProjectionOutcome> {
        check_sources(psi)?;
        let v = self.conditional(psi, occ);
        let probability: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        if probability < ZERO_PROBABILITY {
            return Err(Error::ImpossibleOutcome { probability });
        }
        Ok(ProjectionOutcome {
            probability,
            post_state: PureState::normalized(vec![2, 2], v)?,
        })
    }

    /// Occupation outcome distribution for source state `psi` (before loss).
    pub fn distribution(&self, psi: &PureState) -> Result<Vec<(Occupation, f64)>> {
        check_sources(psi)?;
        Ok(self
            .rows
            .keys()
            .map(|o| {
                let p = self.conditional(psi, o).iter().map(|a| a.norm_sqr()).sum();
                (o.clone(), p)
            })
            .filter(|(_, p)| *p > ZERO_PROBABILITY)
            .collect())
    }

    /// Samples one heralded attempt. When both photons are registered the source state is
    /// conditioned on the exact occupation; otherwise the sources are left as they were
    /// before measurement (a failure leaves them unrecoverable in practice).
    pub fn sample<R: Rng + ?Sized>(
        &self,
        psi: &PureState,
        loss: &LossModel,
        resolving: bool,
        rng: &mut R,
    ) -> Result<Detection> {
        let dist = self.distribution(psi)?;
        let probs: Vec<f64> = dist.iter().map(|(_, p)| *p).collect();
        let occ = dist[sample_index(&probs, rng)].0.clone();
        let survived = loss.thin(&occ, rng);
        let pattern = detect(survived.clone(), resolving);
        let herald = self.classify(&pattern)?;
        let post_state = if photon_count(&survived) == 2 {
            Some(self.condition(psi, &occ)?.post_state)
        } else {
            None
        };
        Ok(Detection {
            pattern,
            herald,
            post_state,
        })
    }
}

fn check_sources(psi: &PureState) -> Result<()> {
    if psi.dims() != [2, 2] {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: psi.dim(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub pattern: DetectionPattern,
    pub herald: Herald,
    /// Conditioned source state when both photons were registered.
    pub post_state: Option<PureState>,
}

/// For each basis state, its optical image; every output occupation must trace back to
/// exactly one basis state. Returns the occupation → outcome (1-based) map.
pub fn outcome_map<F>(states: &[PureState; 4], optics: F) -> Result<BTreeMap<Occupation, usize>>
where
    F: Fn(&PureState) -> Result<FockState>,
{
    let mut map = BTreeMap::new();
    for (k, s) in states.iter().enumerate() {
        for (occ, a) in optics(s)?.terms() {
            if a.norm() < 1e-12 {
                continue;
            }
            if let Some(prev) = map.insert(occ.clone(), k + 1) {
                if prev != k + 1 {
                    return Err(Error::ImpossiblePattern(occ.clone()));
                }
            }
        }
    }
    Ok(map)
}

/// Which measurement realizes the pair measurement in [`simulate_gate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateApparatus {
    /// Abstract projective measurement, no optics and no loss.
    Ideal,
    Multiport,
    BeamSplitter,
}

impl std::str::FromStr for GateApparatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(GateApparatus::Ideal),
            "multiport" => Ok(GateApparatus::Multiport),
            "beamsplitter" | "beam-splitter" => Ok(GateApparatus::BeamSplitter),
            other => Err(Error::Parse(format!("unknown apparatus {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunEnd {
    Success,
    /// A photon was lost or the pattern was ambiguous; the sources are unrecoverable.
    Failure,
    /// The round budget ran out.
    TimedOut,
}

/// One repeat-until-success run through an optical apparatus.
#[derive(Debug, Clone)]
pub struct GateRun {
    pub end: RunEnd,
    pub rounds: usize,
    pub successes: usize,
    pub insurances: usize,
    pub failures: usize,
    /// Corrected source state after a success.
    pub post_state: Option<PureState>,
}

/// Repeats heralded attempts on `src` until success, failure or `max_rounds`.
pub fn optical_rus_execute<R: Rng + ?Sized>(
    src: &PureState,
    basis: &crate::rusgate::PairBasis,
    table: &TransferTable,
    loss: &LossModel,
    resolving: bool,
    max_rounds: usize,
    rng: &mut R,
) -> Result<GateRun> {
    let corrections = basis.corrections().ok_or(Error::Biased)?;
    let mut run = GateRun {
        end: RunEnd::TimedOut,
        rounds: 0,
        successes: 0,
        insurances: 0,
        failures: 0,
        post_state: None,
    };
    let mut current = src.clone();
    while run.rounds < max_rounds {
        run.rounds += 1;
        let detection = table.sample(&current, loss, resolving, rng)?;
        let (Herald::Outcome(k), Some(post)) = (detection.herald, detection.post_state) else {
            run.failures += 1;
            run.end = RunEnd::Failure;
            return Ok(run);
        };
        let restored = corrections[k - 1].undo_local(&post)?;
        match basis.branch(k) {
            crate::rusgate::Branch::Insurance => {
                run.insurances += 1;
                current = restored;
            }
            crate::rusgate::Branch::Success => {
                run.successes += 1;
                run.end = RunEnd::Success;
                run.post_state = Some(restored);
                return Ok(run);
            }
        }
    }
    Ok(run)
}

#[derive(Debug, Clone, Serialize)]
pub struct GateStats {
    pub apparatus: GateApparatus,
    pub eta: f64,
    pub resolving: bool,
    pub runs: usize,
    /// Per-round outcome fractions.
    pub success_fraction: f64,
    pub insurance_fraction: f64,
    pub failure_fraction: f64,
    /// Standard error of the per-round failure fraction.
    pub failure_stderr: f64,
    pub total_rounds: usize,
    /// Mean rounds per run that ended in success.
    pub mean_rounds: f64,
    pub mean_rounds_stderr: f64,
    pub completed: usize,
    pub failed: usize,
    pub timed_out: usize,
    /// Over successful runs, `|⟨CZ ψ|ψ_out⟩|²`.
    pub mean_fidelity: f64,
    pub min_fidelity: f64,
}

/// Runs the gate on `runs` random inputs; run `t` draws from ChaCha8 stream `t` of `seed`.
pub fn simulate_gate(
    apparatus: GateApparatus,
    loss: &LossModel,
    resolving: bool,
    runs: usize,
    seed: u64,
    max_rounds: usize,
) -> Result<GateStats> {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rayon::prelude::*;

    use crate::rusgate::{photon_basis_from_angles, rus_execute, rus_pair_basis, AngleSet};

    if runs == 0 {
        return Err(Error::NoTrials);
    }
    let pb = photon_basis_from_angles(&AngleSet::standard());
    let basis = rus_pair_basis(&pb)?;
    let table = match apparatus {
        GateApparatus::Ideal => None,
        GateApparatus::Multiport => Some(TransferTable::multiport(&PortAssignment::standard())?),
        GateApparatus::BeamSplitter => Some(TransferTable::beamsplitter(&pb)?),
    };
    let results: Vec<Result<(GateRun, f64)>> = (0..runs)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let src = crate::qcore::random_state_with(&[2, 2], &mut rng);
            let run = match &table {
                None => {
                    let rec = rus_execute(&src, &basis, &mut rng, max_rounds)?;
                    GateRun {
                        end: if rec.timed_out {
                            RunEnd::TimedOut
                        } else {
                            RunEnd::Success
                        },
                        rounds: rec.rounds_used,
                        successes: usize::from(!rec.timed_out),
                        insurances: rec.rounds_used - usize::from(!rec.timed_out),
                        failures: 0,
                        post_state: (!rec.timed_out).then_some(rec.post_state),
                    }
                }
                Some(table) => {
                    optical_rus_execute(&src, &basis, table, loss, resolving, max_rounds, &mut rng)?
                }
            };
            let fidelity = match &run.post_state {
                Some(out) => {
                    let target = src.apply(&UnitaryOp::cz(), &[0, 1])?;
                    target.inner(out)?.norm_sqr()
                }
                None => f64::NAN,
            };
            Ok((run, fidelity))
        })
        .collect();
    let mut runs_done = Vec::with_capacity(runs);
    for r in results {
        runs_done.push(r?);
    }
    let total_rounds: usize = runs_done.iter().map(|(r, _)| r.rounds).sum();
    let count = |f: fn(&GateRun) -> usize| runs_done.iter().map(|(r, _)| f(r)).sum::<usize>() as f64;
    let fraction = |n: f64| n / total_rounds as f64;
    let failure_fraction = fraction(count(|r| r.failures));
    let successful: Vec<&(GateRun, f64)> = runs_done
        .iter()
        .filter(|(r, _)| r.end == RunEnd::Success)
        .collect();
    let rounds: Vec<f64> = successful.iter().map(|(r, _)| r.rounds as f64).collect();
    let n = rounds.len().max(1) as f64;
    let mean_rounds = rounds.iter().sum::<f64>() / n;
    let var = rounds.iter().map(|x| (x - mean_rounds).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let fidelities: Vec<f64> = successful.iter().map(|(_, f)| *f).collect();
    Ok(GateStats {
        apparatus,
        eta: loss.eta(),
        resolving,
        runs,
        success_fraction: fraction(count(|r| r.successes)),
        insurance_fraction: fraction(count(|r| r.insurances)),
        failure_fraction,
        failure_stderr: (failure_fraction * (1.0 - failure_fraction) / total_rounds as f64).sqrt(),
        total_rounds,
        mean_rounds,
        mean_rounds_stderr: (var / n).sqrt(),
        completed: successful.len(),
        failed: runs_done.iter().filter(|(r, _)| r.end == RunEnd::Failure).count(),
        timed_out: runs_done
            .iter()
            .filter(|(r, _)| r.end == RunEnd::TimedOut)
            .count(),
        mean_fidelity: fidelities.iter().sum::<f64>() / fidelities.len().max(1) as f64,
        min_fidelity: fidelities.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{equal_up_to_global_phase, random_state};
    use crate::rusgate::{photon_basis_from_angles, rus_pair_states, AngleSet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fock(terms: &[(&[u8], Complex64)]) -> FockState {
        FockState::new(4, terms.iter().map(|(o, a)| (o.to_vec(), *a)).collect()).unwrap()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn dft_is_balanced_unitary() {
        let u = dft4();
        assert_eq!(u.op().entry(0, 0), re(0.5));
        assert!(u.op().unitarity_deviation() < 1e-15);
        assert!(u.op().matrix().iter().all(|a| (a.norm() - 0.5).abs() < 1e-15));
    }

    #[test]
    fn printed_multiport_exponent_is_not_unitary() {
        let m: Vec<Complex64> = (0..16)
            .map(|k| Complex64::from_polar(0.5, std::f64::consts::PI * ((k / 4) * (k % 4)) as f64))
            .collect();
        for c in 0..4 {
            assert!((m[c] - m[8 + c]).norm() < 1e-12);
        }
        assert!(matches!(UnitaryOp::new(4, m), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn creation_normalization() {
        let two = FockState::from_creations(4, &[0, 0]).unwrap();
        assert_eq!(two.amplitude(&[2, 0, 0, 0]), re(1.0));
        assert!(FockState::from_creations(4, &[0, 1, 2]).is_err());
    }

    #[test]
    fn identity_scatter_is_trivial() {
        let f = fock(&[
            (&[1, 1, 0, 0], re(FRAC_1_SQRT_2)),
            (&[0, 0, 2, 0], re(-FRAC_1_SQRT_2)),
        ]);
        let out = scatter(&f, &ModeUnitary::new(UnitaryOp::identity(4))).unwrap();
        assert!(out.distance(&f) < 1e-15);
    }

    #[test]
    fn dualrail_conversion() {
        let pa = PortAssignment::standard();
        let x0y0 = dualrail_input(&PureState::basis(vec![2, 2], 0).unwrap(), &pa).unwrap();
        assert_eq!(x0y0.amplitude(&[1, 1, 0, 0]), re(1.0));
        let x1y1 = dualrail_input(&PureState::basis(vec![2, 2], 3).unwrap(), &pa).unwrap();
        assert_eq!(x1y1.amplitude(&[0, 0, 1, 1]), re(1.0));
        let x1y0 = dualrail_input(&PureState::basis(vec![2, 2], 2).unwrap(), &pa).unwrap();
        assert_eq!(x1y0.amplitude(&[0, 1, 1, 0]), re(1.0));
    }

    #[test]
    fn multiport_maps_the_unbiased_basis() {
        let states = rus_pair_states(&photon_basis_from_angles(&AngleSet::standard()));
        let pa = PortAssignment::standard();
        let h = FRAC_1_SQRT_2;
        let expected = [
            fock(&[(&[2, 0, 0, 0], re(h)), (&[0, 0, 2, 0], re(-h))]),
            fock(&[(&[0, 2, 0, 0], re(-h)), (&[0, 0, 0, 2], re(h))]),
            fock(&[(&[1, 0, 0, 1], re(h)), (&[0, 1, 1, 0], re(-h))]),
            fock(&[(&[1, 1, 0, 0], re(-h)), (&[0, 0, 1, 1], re(h))]),
        ];
        for (s, e) in states.iter().zip(&expected) {
            let out = multiport_apparatus(s, &pa).unwrap();
            assert!(out.distance(e) < 1e-12, "{out:?}");
        }
    }

    #[test]
    fn antibunched_input_keeps_a_minus_sign() {
        // a₃†a₄† → contains −(1/√2)... weighted b₃†b₄† via the Φ₄ row
        let out = scatter(&FockState::from_creations(4, &[2, 3]).unwrap(), &dft4()).unwrap();
        assert!(out.amplitude(&[0, 0, 1, 1]).norm() > 0.0);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multiport_classifier() {
        let r = DetectionPattern::resolved;
        assert_eq!(
            classify_multiport(&r(vec![2, 0, 0, 0])).unwrap(),
            Herald::Outcome(1)
        );
        assert_eq!(
            classify_multiport(&r(vec![0, 0, 0, 2])).unwrap(),
            Herald::Outcome(2)
        );
        assert_eq!(
            classify_multiport(&r(vec![1, 0, 0, 1])).unwrap(),
            Herald::Outcome(3)
        );
        assert_eq!(
            classify_multiport(&r(vec![0, 0, 1, 1])).unwrap(),
            Herald::Outcome(4)
        );
        assert_eq!(classify_multiport(&r(vec![1, 0, 0, 0])).unwrap(), Herald::Failure);
        assert!(matches!(
            classify_multiport(&r(vec![1, 0, 1, 0])),
            Err(Error::ImpossiblePattern(_))
        ));
        assert!(classify_multiport(&r(vec![0, 1, 0, 1])).is_err());
    }

    #[test]
    fn beamsplitter_classifier() {
        let r = DetectionPattern::resolved;
        assert_eq!(classify_bs(&r(vec![1, 0, 1, 0])).unwrap(), Herald::Outcome(1));
        assert_eq!(classify_bs(&r(vec![0, 2, 0, 0])).unwrap(), Herald::Outcome(2));
        assert_eq!(classify_bs(&r(vec![1, 1, 0, 0])).unwrap(), Herald::Outcome(3));
        assert_eq!(classify_bs(&r(vec![1, 0, 0, 1])).unwrap(), Herald::Outcome(4));
        assert_eq!(classify_bs(&r(vec![0, 0, 0, 0])).unwrap(), Herald::Failure);
    }

    #[test]
    fn classifiers_agree_with_simulated_maps() {
        let pb = photon_basis_from_angles(&AngleSet::standard());
        let states = rus_pair_states(&pb);
        let pa = PortAssignment::standard();
        let mp = outcome_map(&states, |s| multiport_apparatus(s, &pa)).unwrap();
        for (occ, k) in &mp {
            let h = classify_multiport(&DetectionPattern::resolved(occ.clone())).unwrap();
            assert_eq!(h, Herald::Outcome(*k));
        }
        let bs = outcome_map(&states, |s| beamsplitter_apparatus(s, &pb)).unwrap();
        for (occ, k) in &bs {
            let h = classify_bs(&DetectionPattern::resolved(occ.clone())).unwrap();
            assert_eq!(h, Herald::Outcome(*k));
        }
    }

    #[test]
    fn singlet_antibunches_and_phi1_is_horizontal() {
        let pb = photon_basis_from_angles(&AngleSet::standard());
        let states = rus_pair_states(&pb);
        let out4 = beamsplitter_apparatus(&states[3], &pb).unwrap();
        for (occ, _) in out4.distribution() {
            assert_eq!(occ[0] + occ[1], 1);
        }
        let out1 = beamsplitter_apparatus(&states[0], &pb).unwrap();
        for (occ, _) in out1.distribution() {
            assert_eq!(occ[1] + occ[3], 0);
        }
    }

    #[test]
    fn apparatus_outputs_preserve_norm() {
        let pb = photon_basis_from_angles(&AngleSet::standard());
        for seed in 0..10 {
            let s = random_state(&[2, 2], seed);
            assert!((beamsplitter_apparatus(&s, &pb).unwrap().norm() - 1.0).abs() < 1e-10);
            let out = multiport_apparatus(&s, &PortAssignment::standard()).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn loss_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = FockState::from_creations(4, &[0, 0]).unwrap();
        let dark = LossModel::new(0.0).unwrap();
        for _ in 0..100 {
            let p = sample_detection(&f, &dark, true, &mut rng);
            assert_eq!(classify_multiport(&p).unwrap(), Herald::Failure);
        }
        assert!(LossModel::new(1.5).is_err());
        let [s, i, fail] = effective_probabilities(&LossModel::new(0.8f64.sqrt()).unwrap());
        assert!((s - 0.4).abs() < 1e-12 && (i - 0.4).abs() < 1e-12 && (fail - 0.2).abs() < 1e-12);
    }

    #[test]
    fn threshold_detectors_cannot_see_bunching() {
        let p = DetectionPattern::clicks(vec![2, 0, 0, 0]);
        assert_eq!(p.counts, vec![1, 0, 0, 0]);
        assert_eq!(classify_multiport(&p).unwrap(), Herald::Failure);
    }

    #[test]
    fn per_source_phases_only_change_the_global_phase() {
        let pa = PortAssignment::standard();
        let table = TransferTable::multiport(&pa).unwrap();
        // photon 1 enters ports 1 and 3, photon 2 ports 2 and 4
        let (d1, d2) = (0.7, -2.1);
        let delays = UnitaryOp::diagonal_phases(&[d1, d2, d1, d2]);
        let shifted_modes = ModeUnitary::new(dft4().op().compose(&delays).unwrap());
        let shifted = TransferTable::build(Apparatus::Multiport, |s| {
            scatter(&dualrail_input(s, &pa)?, &shifted_modes)
        })
        .unwrap();
        for seed in 0..5 {
            let psi = random_state(&[2, 2], seed);
            for (occ, _) in table.distribution(&psi).unwrap() {
                let a = table.condition(&psi, &occ).unwrap();
                let b = shifted.condition(&psi, &occ).unwrap();
                assert!((a.probability - b.probability).abs() < 1e-12);
                assert!(equal_up_to_global_phase(&a.post_state, &b.post_state, 1e-12));
            }
        }
    }
    #[test]
    fn ideal_gate_needs_two_rounds_on_average() {
        let stats = simulate_gate(GateApparatus::Ideal, &LossModel::lossless(), true, 20_000, 7, 64).unwrap();
        assert!((stats.mean_rounds - 2.0).abs() < 4.0 * stats.mean_rounds_stderr);
        assert!(stats.min_fidelity > 1.0 - 1e-9);
        assert_eq!(stats.failed, 0);
    }

    #[test]
    fn lossy_multiport_fails_per_round_with_one_minus_eta_squared() {
        let loss = LossModel::new(0.8).unwrap();
        let stats = simulate_gate(GateApparatus::Multiport, &loss, true, 20_000, 8, 64).unwrap();
        assert!((stats.failure_fraction - 0.36).abs() < 3.0 * stats.failure_stderr);
        assert!(stats.min_fidelity > 1.0 - 1e-9);
    }

    #[test]
    fn lossless_apparatuses_reproduce_the_ideal_gate() {
        for app in [GateApparatus::Multiport, GateApparatus::BeamSplitter] {
            let a = simulate_gate(app, &LossModel::lossless(), true, 2_000, 9, 64).unwrap();
            assert_eq!(a.failed, 0);
            assert!(a.min_fidelity > 1.0 - 1e-9);
        }
    }

    #[test]
    fn threshold_detectors_turn_insurance_into_failure_on_the_multiport() {
        let a = simulate_gate(
            GateApparatus::Multiport,
            &LossModel::lossless(),
            false,
            2_000,
            10,
            64,
        )
        .unwrap();
        assert!(a.failure_fraction > 0.4);
        assert_eq!(a.insurance_fraction, 0.0);
    }
}
