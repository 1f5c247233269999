//! Photon-pair measurement bases and the repeat-until-success CZ loop.
//!
//! Layout of an encoded state: source qubit 1, source qubit 2, photon 1 (`x`), photon 2 (`y`),
//! big-endian. Photon 1 carries the basis labels `{x0, x1}`, photon 2 `{y0, y1}`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::{concurrence, random_state_with, PureState, UnitaryOp, END_TO_END_TOL};

/// Amplitude-modulus tolerance for unbiasedness checks.
pub const UNBIASED_TOL: f64 = 1e-10;

pub const DEFAULT_MAX_ROUNDS: usize = 64;

const PHOTON_TARGETS: [usize; 2] = [2, 3];

/// Angles parameterizing the single-photon measurement states.
///
/// For photon `k` (`k = 0` is photon 1 over `x`, `k = 1` photon 2 over `y`):
/// `first = cos θ |0⟩ + e^{iϑ} sin θ |1⟩` and
/// `second = e^{-iξ}(e^{-iϑ} sin θ |0⟩ − cos θ |1⟩)`, where `θ = mixing[k]`,
/// `ϑ = relative_phase[k]`, `ξ = partner_phase[k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleSet {
    pub mixing: [f64; 2],
    pub relative_phase: [f64; 2],
    pub partner_phase: [f64; 2],
}

impl AngleSet {
    /// `θ₁ = θ₂ = π/4`, `ξ₂ = −π/2`, all other angles zero.
    pub fn standard() -> Self {
        AngleSet {
            mixing: [PI / 4.0, PI / 4.0],
            relative_phase: [0.0, 0.0],
            partner_phase: [0.0, -PI / 2.0],
        }
    }

    pub fn zero() -> Self {
        AngleSet {
            mixing: [0.0; 2],
            relative_phase: [0.0; 2],
            partner_phase: [0.0; 2],
        }
    }

    /// `ϑ₁ + ϑ₂ + ξ₁ + ξ₂`, the phase governing the `a₁b₁ ± a₂b₂` states.
    pub fn sum_phase(&self) -> f64 {
        self.relative_phase[0] + self.relative_phase[1] + self.partner_phase[0] + self.partner_phase[1]
    }

    /// `ϑ₁ − ϑ₂ + ξ₁ − ξ₂`, the phase governing the `a₁b₂ ± a₂b₁` states.
    pub fn difference_phase(&self) -> f64 {
        self.relative_phase[0] - self.relative_phase[1] + self.partner_phase[0] - self.partner_phase[1]
    }
}

/// Orthonormal single-photon states for each photon.
#[derive(Debug, Clone)]
pub struct PhotonBasis {
    /// States of photon 1 over `{x0, x1}`.
    pub a: [PureState; 2],
    /// States of photon 2 over `{y0, y1}`.
    pub b: [PureState; 2],
}

pub fn photon_basis_from_angles(angles: &AngleSet) -> PhotonBasis {
    let pair = |k: usize, label: &str| {
        let (s, c) = angles.mixing[k].sin_cos();
        let rel = angles.relative_phase[k];
        let partner = Complex64::from_polar(1.0, -angles.partner_phase[k]);
        let first = vec![Complex64::new(c, 0.0), Complex64::from_polar(s, rel)];
        let second = vec![
            partner * Complex64::from_polar(s, -rel),
            partner * Complex64::new(-c, 0.0),
        ];
        let labels = vec![vec![format!("{label}0"), format!("{label}1")]];
        [first, second].map(|amps| {
            PureState::new(vec![2], amps)
                .and_then(|s| s.with_labels(labels.clone()))
                .expect("rotation columns are unit vectors")
        })
    };
    PhotonBasis {
        a: pair(0, "x"),
        b: pair(1, "y"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Success,
    Insurance,
}

/// Local correction for one outcome.
///
/// Conditioning on the outcome maps `|ψ_in⟩` to
/// `e^{iγ} Z₁(φ_a) Z₂(φ_b) U_CZ^{cz} |ψ_in⟩`, with `Z(φ) = diag(1, e^{-iφ})`.
/// All angles are canonicalized to `(−π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correction {
    pub global_phase: f64,
    pub phase_a: f64,
    pub phase_b: f64,
    pub cz: bool,
}

impl Correction {
    /// The full conditional map `e^{iγ} Z₁(φ_a) Z₂(φ_b) U_CZ^{cz}` on the two sources.
    pub fn operator(&self) -> UnitaryOp {
        let g = self.global_phase;
        let last = if self.cz { PI } else { 0.0 };
        UnitaryOp::diagonal_phases(&[
            g,
            g - self.phase_b,
            g - self.phase_a,
            g - self.phase_a - self.phase_b + last,
        ])
    }

    /// Local part `e^{iγ} Z₁(φ_a) Z₂(φ_b)` only.
    pub fn local_operator(&self) -> UnitaryOp {
        let g = self.global_phase;
        UnitaryOp::diagonal_phases(&[
            g,
            g - self.phase_b,
            g - self.phase_a,
            g - self.phase_a - self.phase_b,
        ])
    }

    /// Removes the local phases from a conditioned source state, leaving
    /// `U_CZ^{cz}|ψ_in⟩`.
    pub fn undo_local(&self, post: &PureState) -> Result<PureState> {
        post.apply(&self.local_operator().adjoint(), &[0, 1])
    }
}

/// Four orthonormal two-photon states with their branch tags and (if unbiased) corrections.
#[derive(Debug, Clone)]
pub struct PairBasis {
    states: [PureState; 4],
    branches: [Branch; 4],
    corrections: Option<[Correction; 4]>,
}

impl PairBasis {
    /// Validates orthonormality only; no corrections are attached.
    pub fn new(states: [PureState; 4], branches: [Branch; 4]) -> Result<Self> {
        for s in &states {
            if s.dims() != [2, 2] {
                return Err(Error::DimensionMismatch {
                    expected: 4,
                    actual: s.dim(),
                });
            }
        }
        let mut deviation = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let g = states[i].inner(&states[j])?;
                let target = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((g - target).norm());
            }
        }
        if deviation > END_TO_END_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(PairBasis {
            states,
            branches,
            corrections: None,
        })
    }

    /// Attaches the derived correction table; fails for bases that leak amplitude information.
    pub fn with_corrections(mut self) -> Result<Self> {
        if !is_mutually_unbiased(&self) {
            return Err(Error::Biased);
        }
        for (s, b) in self.states.iter().zip(&self.branches) {
            let c = concurrence(s)?;
            let expected = match b {
                Branch::Success => 1.0,
                Branch::Insurance => 0.0,
            };
            if (c - expected).abs() > END_TO_END_TOL {
                return Err(Error::InvalidBasis(format!(
                    "branch tag {b:?} inconsistent with concurrence {c}"
                )));
            }
        }
        self.corrections = Some(derive_correction_table(&self)?);
        Ok(self)
    }

    pub fn states(&self) -> &[PureState; 4] {
        &self.states
    }

    pub fn state(&self, outcome: usize) -> &PureState {
        &self.states[outcome - 1]
    }

    pub fn branches(&self) -> &[Branch; 4] {
        &self.branches
    }

    pub fn branch(&self, outcome: usize) -> Branch {
        self.branches[outcome - 1]
    }

    pub fn corrections(&self) -> Option<&[Correction; 4]> {
        self.corrections.as_ref()
    }

    pub fn correction(&self, outcome: usize) -> Option<&Correction> {
        self.corrections.as_ref().map(|c| &c[outcome - 1])
    }

    pub fn has_success(&self) -> bool {
        self.branches.contains(&Branch::Success)
    }
}

fn product(a: &PureState, b: &PureState) -> Vec<Complex64> {
    a.tensor(b).amps().to_vec()
}

fn combine(x: &[Complex64], y: &[Complex64], sign: f64) -> PureState {
    let amps = x
        .iter()
        .zip(y)
        .map(|(p, q)| (p + q * sign) * FRAC_1_SQRT_2)
        .collect();
    PureState::new(vec![2, 2], amps).expect("orthogonal products combine to unit norm")
}

fn pair_state(amps: Vec<Complex64>) -> PureState {
    PureState::new(vec![2, 2], amps).expect("product of unit vectors")
}

/// `(a₁b₁ ± a₂b₂)/√2`, `(a₁b₂ ± a₂b₁)/√2`.
pub fn bell_pair_states(pb: &PhotonBasis) -> [PureState; 4] {
    let a1b1 = product(&pb.a[0], &pb.b[0]);
    let a2b2 = product(&pb.a[1], &pb.b[1]);
    let a1b2 = product(&pb.a[0], &pb.b[1]);
    let a2b1 = product(&pb.a[1], &pb.b[0]);
    [
        combine(&a1b1, &a2b2, 1.0),
        combine(&a1b1, &a2b2, -1.0),
        combine(&a1b2, &a2b1, 1.0),
        combine(&a1b2, &a2b1, -1.0),
    ]
}

/// `a₁b₁`, `a₂b₂`, `(a₁b₂ ± a₂b₁)/√2`.
pub fn rus_pair_states(pb: &PhotonBasis) -> [PureState; 4] {
    let a1b2 = product(&pb.a[0], &pb.b[1]);
    let a2b1 = product(&pb.a[1], &pb.b[0]);
    [
        pair_state(product(&pb.a[0], &pb.b[0])),
        pair_state(product(&pb.a[1], &pb.b[1])),
        combine(&a1b2, &a2b1, 1.0),
        combine(&a1b2, &a2b1, -1.0),
    ]
}

/// Complete Bell basis: every outcome completes a CZ up to local phases.
pub fn bell_pair_basis(pb: &PhotonBasis) -> Result<PairBasis> {
    PairBasis::new(bell_pair_states(pb), [Branch::Success; 4])?.with_corrections()
}

/// Two product (insurance) states and two Bell (success) states.
pub fn rus_pair_basis(pb: &PhotonBasis) -> Result<PairBasis> {
    PairBasis::new(
        rus_pair_states(pb),
        [
            Branch::Insurance,
            Branch::Insurance,
            Branch::Success,
            Branch::Success,
        ],
    )?
    .with_corrections()
}

/// Every amplitude of every basis state has modulus 1/2 in the `{x_i y_j}` basis.
pub fn is_mutually_unbiased(basis: &PairBasis) -> bool {
    basis
        .states
        .iter()
        .flat_map(|s| s.amps())
        .all(|a| (a.norm() - 0.5).abs() <= UNBIASED_TOL)
}

/// Closed-form unbiasedness condition for the Bell basis built from `angles`:
/// `cos 2θ₁ cos 2θ₂ = 0` and `cos(ϑ₁ ± ϑ₂ + ξ₁ ± ξ₂) = 0`, where the phase conditions
/// drop out when either `sin 2θ_k = 0`.
pub fn mub_constraint_holds(angles: &AngleSet) -> bool {
    let tol = UNBIASED_TOL;
    let c1 = (2.0 * angles.mixing[0]).cos();
    let c2 = (2.0 * angles.mixing[1]).cos();
    if (c1 * c2).abs() > tol {
        return false;
    }
    if (c1.abs() - 1.0).abs() <= tol || (c2.abs() - 1.0).abs() <= tol {
        return true;
    }
    angles.sum_phase().cos().abs() <= tol && angles.difference_phase().cos().abs() <= tol
}

/// Copies each source's computational state onto a fresh photon: `|ij⟩ ↦ |ij⟩|x_i y_j⟩`.
pub fn encode(src: &PureState) -> Result<PureState> {
    if src.dims() != [2, 2] {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: src.dim(),
        });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 16];
    for (ij, &a) in src.amps().iter().enumerate() {
        amps[ij * 4 + ij] = a;
    }
    let labels = vec![
        vec!["0".into(), "1".into()],
        vec!["0".into(), "1".into()],
        vec!["x0".into(), "x1".into()],
        vec!["y0".into(), "y1".into()],
    ];
    PureState::new(vec![2, 2, 2, 2], amps)?.with_labels(labels)
}

/// Wraps an angle into `(−π, π]`.
pub fn canonical_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(std::f64::consts::TAU);
    if y > PI {
        y -= std::f64::consts::TAU;
    }
    if (y + PI).abs() < 1e-12 {
        y = PI;
    }
    y
}

/// Solves, for each outcome, the local-phase recipe relating the conditioned source state
/// to `U_CZ^{cz}|ψ_in⟩`, then verifies it on 20 random inputs.
pub fn derive_correction_table(basis: &PairBasis) -> Result<[Correction; 4]> {
    let mut table = [Correction {
        global_phase: 0.0,
        phase_a: 0.0,
        phase_b: 0.0,
        cz: false,
    }; 4];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    let checks: Vec<PureState> = (0..20).map(|_| random_state_with(&[2, 2], &mut rng)).collect();

    for k in 1..=4 {
        let outcome = basis.state(k);
        // Phase picked up by each computational input |ij⟩.
        let mut chi = [0.0f64; 4];
        for (ij, slot) in chi.iter_mut().enumerate() {
            let input = PureState::basis(vec![2, 2], ij)?;
            let post = encode(&input)?.project(&PHOTON_TARGETS, outcome)?;
            *slot = post.post_state.amps()[ij].arg();
        }
        let global_phase = chi[0];
        let phase_b = chi[0] - chi[1];
        let phase_a = chi[0] - chi[2];
        let predicted = Complex64::from_polar(1.0, global_phase - phase_a - phase_b);
        let sign = Complex64::from_polar(1.0, chi[3]) / predicted;
        let cz = sign.re < 0.0;
        let residual = (sign - if cz { -1.0 } else { 1.0 }).norm();
        if residual > END_TO_END_TOL {
            return Err(Error::NoLocalEquivalent { outcome: k, residual });
        }
        let corr = Correction {
            global_phase: canonical_angle(global_phase),
            phase_a: canonical_angle(phase_a),
            phase_b: canonical_angle(phase_b),
            cz,
        };
        let op = corr.operator();
        for psi in &checks {
            let post = encode(psi)?.project(&PHOTON_TARGETS, outcome)?;
            let expected = psi.apply(&op, &[0, 1])?;
            let residual: f64 = post
                .post_state
                .amps()
                .iter()
                .zip(expected.amps())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if residual > END_TO_END_TOL {
                return Err(Error::NoLocalEquivalent { outcome: k, residual });
            }
        }
        table[k - 1] = corr;
    }
    Ok(table)
}

/// Probabilities of the four outcomes on an encoded state.
pub fn outcome_probabilities(encoded: &PureState, basis: &PairBasis) -> Result<[f64; 4]> {
    let mut p = [0.0; 4];
    for (k, slot) in p.iter_mut().enumerate() {
        *slot = encoded.outcome_probability(&PHOTON_TARGETS, &basis.states[k])?;
    }
    Ok(p)
}

/// Conditions the encoded state on outcome `k` (1-based); photons are removed.
pub fn condition_on(
    encoded: &PureState,
    basis: &PairBasis,
    outcome: usize,
) -> Result<crate::qcore::ProjectionOutcome> {
    check_encoded(encoded)?;
    encoded.project(&PHOTON_TARGETS, basis.state(outcome))
}

fn check_encoded(encoded: &PureState) -> Result<()> {
    if encoded.dims() != [2, 2, 2, 2] {
        return Err(Error::DimensionMismatch {
            expected: 16,
            actual: encoded.dim(),
        });
    }
    Ok(())
}

/// Samples an index from a discrete distribution.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut r = rng.random::<f64>() * total;
    for (i, &p) in probs.iter().enumerate() {
        if r < p {
            return i;
        }
        r -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Result of a measurement or of a full repeat-until-success run.
#[derive(Debug, Clone)]
pub struct OutcomeRecord {
    /// Outcome index, 1..=4.
    pub outcome: usize,
    pub branch: Branch,
    pub rounds_used: usize,
    /// Source-qubit state. Uncorrected from [`measure_pair`]; corrected from
    /// [`rus_execute`] (i.e. `U_CZ|ψ⟩` on success, `|ψ⟩` on timeout).
    pub post_state: PureState,
    /// True when the round budget ran out before a success outcome.
    pub timed_out: bool,
}

/// Absorbing measurement of the photon pair; corrections are not applied.
pub fn measure_pair<R: Rng + ?Sized>(
    encoded: &PureState,
    basis: &PairBasis,
    rng: &mut R,
) -> Result<OutcomeRecord> {
    check_encoded(encoded)?;
    let probs = outcome_probabilities(encoded, basis)?;
    let k = sample_index(&probs, rng) + 1;
    let post = condition_on(encoded, basis, k)?;
    Ok(OutcomeRecord {
        outcome: k,
        branch: basis.branch(k),
        rounds_used: 1,
        post_state: post.post_state,
        timed_out: false,
    })
}

/// Encode, measure and correct until a success outcome (or `max_rounds` attempts).
pub fn rus_execute<R: Rng + ?Sized>(
    src: &PureState,
    basis: &PairBasis,
    rng: &mut R,
    max_rounds: usize,
) -> Result<OutcomeRecord> {
    rus_execute_with(src, basis, max_rounds, |p| sample_index(p, rng) + 1)
}

/// As [`rus_execute`], with the outcome of each round chosen by `pick` from the
/// four outcome probabilities.
pub fn rus_execute_with<F>(
    src: &PureState,
    basis: &PairBasis,
    max_rounds: usize,
    mut pick: F,
) -> Result<OutcomeRecord>
where
    F: FnMut(&[f64; 4]) -> usize,
{
    if !basis.has_success() {
        return Err(Error::InvalidBasis("basis has no success outcome".into()));
    }
    let corrections = basis.corrections().ok_or(Error::Biased)?;
    let mut current = src.clone();
    let mut last = 1;
    for round in 1..=max_rounds {
        let encoded = encode(&current)?;
        let probs = outcome_probabilities(&encoded, basis)?;
        let k = pick(&probs);
        last = k;
        let post = condition_on(&encoded, basis, k)?.post_state;
        let restored = corrections[k - 1].undo_local(&post)?;
        match basis.branch(k) {
            Branch::Insurance => current = restored,
            Branch::Success => {
                return Ok(OutcomeRecord {
                    outcome: k,
                    branch: Branch::Success,
                    rounds_used: round,
                    post_state: restored,
                    timed_out: false,
                })
            }
        }
    }
    Ok(OutcomeRecord {
        outcome: last,
        branch: Branch::Insurance,
        rounds_used: max_rounds,
        post_state: current,
        timed_out: true,
    })
}

/// Relative phases of a two-photon state with all amplitude moduli 1/2:
/// `½[|x0y0⟩ + e^{iφ₁}|x0y1⟩ + e^{iφ₂}|x1y0⟩ + e^{iφ₃}|x1y1⟩]` up to global phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnbiasedForm {
    pub phases: [f64; 3],
    pub valid: bool,
}

impl UnbiasedForm {
    pub fn from_phases(phases: [f64; 3]) -> Self {
        UnbiasedForm {
            phases: phases.map(canonical_angle),
            valid: true,
        }
    }

    pub fn state(&self) -> PureState {
        let [p1, p2, p3] = self.phases;
        let amps = [0.0, p1, p2, p3]
            .iter()
            .map(|&p| Complex64::from_polar(0.5, p))
            .collect();
        PureState::new(vec![2, 2], amps).expect("four amplitudes of modulus 1/2")
    }

    /// `φ₃ − φ₁ − φ₂` wrapped into `(−π, π]`.
    pub fn excess_phase(&self) -> f64 {
        canonical_angle(self.phases[2] - self.phases[0] - self.phases[1])
    }
}

pub fn unbiased_form(state: &PureState) -> UnbiasedForm {
    if state.dims() != [2, 2] {
        return UnbiasedForm {
            phases: [0.0; 3],
            valid: false,
        };
    }
    let a = state.amps();
    let valid = a.iter().all(|x| (x.norm() - 0.5).abs() <= UNBIASED_TOL);
    let anchor = a[0].arg();
    UnbiasedForm {
        phases: [
            canonical_angle(a[1].arg() - anchor),
            canonical_angle(a[2].arg() - anchor),
            canonical_angle(a[3].arg() - anchor),
        ],
        valid,
    }
}

/// `φ₃ ≡ φ₁ + φ₂ + π (mod 2π)` within `tol`.
pub fn is_maximally_entangling(form: &UnbiasedForm, tol: f64) -> bool {
    form.valid && (form.excess_phase().abs() - PI).abs() <= tol
}

/// `φ₃ ≡ φ₁ + φ₂ (mod 2π)` within `tol`.
pub fn is_product_form(form: &UnbiasedForm, tol: f64) -> bool {
    form.valid && form.excess_phase().abs() <= tol
}
