use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::unitary::UnitaryOp;
use crate::error::{Error, Result};

/// Norm tolerance applied at construction.
pub const NORM_TOL: f64 = 1e-12;

/// Probabilities below this are treated as an impossible outcome rather than roundoff.
pub const ZERO_PROBABILITY: f64 = 1e-14;

/// A normalized pure state over an ordered tensor product of subsystems.
///
/// Basis indices are big-endian: the first subsystem is the most significant digit.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: Vec<Complex64>,
    labels: Option<Vec<Vec<String>>>,
}

/// Result of a rank-1 projection on a subset of subsystems.
#[derive(Debug, Clone)]
pub struct ProjectionOutcome {
    pub probability: f64,
    /// Collapsed state with the measured subsystems removed.
    pub post_state: PureState,
}

impl PureState {
    pub fn new(dims: Vec<usize>, amps: Vec<Complex64>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if amps.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: amps.len(),
            });
        }
        let norm = norm(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState {
            dims,
            amps,
            labels: None,
        })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(dims: Vec<usize>, mut amps: Vec<Complex64>) -> Result<Self> {
        let n = norm(&amps);
        if n < ZERO_PROBABILITY.sqrt() {
            return Err(Error::NotNormalized { norm: n });
        }
        for a in amps.iter_mut() {
            *a /= n;
        }
        PureState::new(dims, amps)
    }

    /// The empty tensor product (a single amplitude 1).
    pub fn scalar() -> Self {
        PureState {
            dims: Vec::new(),
            amps: vec![Complex64::new(1.0, 0.0)],
            labels: None,
        }
    }

    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        let n: usize = dims.iter().product();
        if index >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: index,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); n];
        amps[index] = Complex64::new(1.0, 0.0);
        PureState::new(dims, amps)
    }

    /// Single qubit `a0|0⟩ + a1|1⟩` (normalized on construction).
    pub fn qubit(a0: Complex64, a1: Complex64) -> Result<Self> {
        PureState::normalized(vec![2], vec![a0, a1])
    }

    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(vec![2], vec![Complex64::new(h, 0.0); 2]).expect("unit norm")
    }

    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Result<Self> {
        if labels.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                actual: labels.len(),
            });
        }
        for (l, &d) in labels.iter().zip(&self.dims) {
            if l.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: l.len(),
                });
            }
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn labels(&self) -> Option<&[Vec<String>]> {
        self.labels.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Multiplies every amplitude by `e^{iθ}`.
    pub fn with_global_phase(&self, theta: f64) -> PureState {
        let f = Complex64::from_polar(1.0, theta);
        PureState {
            dims: self.dims.clone(),
            amps: self.amps.iter().map(|a| a * f).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Kronecker product; subsystem lists concatenate.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let labels = match (&self.labels, &other.labels) {
            (Some(l), Some(r)) => Some(l.iter().chain(r).cloned().collect()),
            _ => None,
        };
        PureState { dims, amps, labels }
    }

    /// Applies `u` to the tensor product of `targets` (in the listed order), identity elsewhere.
    pub fn apply(&self, u: &UnitaryOp, targets: &[usize]) -> Result<PureState> {
        let layout = Layout::new(&self.dims, targets)?;
        if u.dim() != layout.sub_dim {
            return Err(Error::DimensionMismatch {
                expected: layout.sub_dim,
                actual: u.dim(),
            });
        }
        let mut out = self.amps.clone();
        let mut buf = vec![Complex64::new(0.0, 0.0); layout.sub_dim];
        for base in layout.bases() {
            for (t, off) in layout.offsets.iter().enumerate() {
                buf[t] = self.amps[base + off];
            }
            let res = u.apply_to_vec(&buf);
            for (t, off) in layout.offsets.iter().enumerate() {
                out[base + off] = res[t];
            }
        }
        Ok(PureState {
            dims: self.dims.clone(),
            amps: out,
            labels: self.labels.clone(),
        })
    }

    /// Projects `targets` onto `outcome` and removes them from the state.
    pub fn project(&self, targets: &[usize], outcome: &PureState) -> Result<ProjectionOutcome> {
        let (probability, amps, dims, labels) = self.project_raw(targets, outcome)?;
        if probability < ZERO_PROBABILITY {
            return Err(Error::ImpossibleOutcome { probability });
        }
        let n = probability.sqrt();
        let amps = amps.into_iter().map(|a| a / n).collect();
        Ok(ProjectionOutcome {
            probability,
            post_state: PureState { dims, amps, labels },
        })
    }

    /// Probability of the rank-1 outcome without collapsing.
    pub fn outcome_probability(&self, targets: &[usize], outcome: &PureState) -> Result<f64> {
        Ok(self.project_raw(targets, outcome)?.0)
    }

    #[allow(clippy::type_complexity)]
    fn project_raw(
        &self,
        targets: &[usize],
        outcome: &PureState,
    ) -> Result<(f64, Vec<Complex64>, Vec<usize>, Option<Vec<Vec<String>>>)> {
        let layout = Layout::new(&self.dims, targets)?;
        let target_dims: Vec<usize> = targets.iter().map(|&t| self.dims[t]).collect();
        if outcome.dims != target_dims {
            return Err(Error::DimensionMismatch {
                expected: layout.sub_dim,
                actual: outcome.dim(),
            });
        }
        let onorm = outcome.norm();
        if (onorm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm: onorm });
        }
        let mut amps = Vec::with_capacity(self.dim() / layout.sub_dim);
        for base in layout.bases() {
            let a: Complex64 = layout
                .offsets
                .iter()
                .zip(&outcome.amps)
                .map(|(off, o)| o.conj() * self.amps[base + off])
                .sum();
            amps.push(a);
        }
        let probability = amps.iter().map(|a| a.norm_sqr()).sum();
        let keep: Vec<usize> = (0..self.dims.len()).filter(|i| !targets.contains(i)).collect();
        let dims = keep.iter().map(|&i| self.dims[i]).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| keep.iter().map(|&i| l[i].clone()).collect());
        Ok((probability, amps, dims, labels))
    }
}

/// Index bookkeeping for operations on a subset of subsystems.
struct Layout {
    total: usize,
    sub_dim: usize,
    /// Offset of each target sub-index relative to a base index.
    offsets: Vec<usize>,
    target_strides: Vec<(usize, usize)>,
}

impl Layout {
    fn new(dims: &[usize], targets: &[usize]) -> Result<Self> {
        let count = dims.len();
        let mut strides = vec![1usize; count];
        for k in (0..count.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        for (i, &t) in targets.iter().enumerate() {
            if t >= count {
                return Err(Error::InvalidSubsystem { index: t, count });
            }
            if targets[..i].contains(&t) {
                return Err(Error::InvalidSubsystem { index: t, count });
            }
        }
        let sub_dim: usize = targets.iter().map(|&t| dims[t]).product();
        let mut offsets = Vec::with_capacity(sub_dim);
        for s in 0..sub_dim {
            let mut rem = s;
            let mut off = 0;
            for &t in targets.iter().rev() {
                off += (rem % dims[t]) * strides[t];
                rem /= dims[t];
            }
            offsets.push(off);
        }
        let target_strides = targets.iter().map(|&t| (strides[t], dims[t])).collect();
        Ok(Layout {
            total: dims.iter().product(),
            sub_dim,
            offsets,
            target_strides,
        })
    }

    /// Indices whose target digits are all zero, in increasing order.
    fn bases(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.total).filter(move |&idx| {
            self.target_strides
                .iter()
                .all(|&(stride, d)| (idx / stride) % d == 0)
        })
    }
}

fn norm(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// True iff some unit-modulus `λ` gives `‖a − λb‖ ≤ tol`.
///
/// `λ` is anchored at the largest-magnitude amplitude of `b`.
pub fn equal_up_to_global_phase(a: &PureState, b: &PureState, tol: f64) -> bool {
    if a.dims != b.dims {
        return false;
    }
    let Some((k, bk)) = b
        .amps
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm_sqr().total_cmp(&y.1.norm_sqr()))
    else {
        return true;
    };
    let ratio = a.amps[k] / bk;
    let lambda = if ratio.norm() > 0.0 {
        ratio / ratio.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let diff: f64 = a
        .amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| (x - lambda * y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    diff <= tol
}

/// Pure two-qubit concurrence `2|a00·a11 − a01·a10|`.
pub fn concurrence(s: &PureState) -> Result<f64> {
    if s.dims != [2, 2] {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: s.dim(),
        });
    }
    let a = &s.amps;
    Ok((2.0 * (a[0] * a[3] - a[1] * a[2]).norm()).min(1.0))
}

/// Gaussian-sampled normalized state, reproducible per seed.
pub fn random_state(dims: &[usize], seed: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_state_with(dims, &mut rng)
}

pub fn random_state_with<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> PureState {
    let n: usize = dims.iter().product();
    loop {
        let amps: Vec<Complex64> = (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        if let Ok(s) = PureState::normalized(dims.to_vec(), amps) {
            return s;
        }
    }
}

/// Haar-random single-qubit unitary.
pub fn random_unitary_2<R: Rng + ?Sized>(rng: &mut R) -> UnitaryOp {
    let col0 = random_state_with(&[2], rng);
    let (a, b) = (col0.amps[0], col0.amps[1]);
    let phase = Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
    UnitaryOp::new_unchecked(2, vec![a, -b.conj() * phase, b, a.conj() * phase])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn tensor_of_basis_states() {
        let zero = PureState::basis(vec![2], 0).unwrap();
        let s = zero.tensor(&zero);
        assert_eq!(s.dims(), &[2, 2]);
        assert_eq!(s.amps(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn tensor_of_plus_states_is_uniform() {
        let s = PureState::plus().tensor(&PureState::plus());
        for a in s.amps() {
            assert!((a - c(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn tensor_dimension_arithmetic() {
        let src = random_state(&[2, 2], 1);
        let photons = random_state(&[2, 2], 2);
        let s = src.tensor(&photons);
        assert_eq!(s.dim(), 16);
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cz_flips_sign_of_11() {
        let s = PureState::basis(vec![2, 2], 3).unwrap();
        let out = s.apply(&UnitaryOp::cz(), &[0, 1]).unwrap();
        assert_eq!(out.amps()[3], c(-1.0, 0.0));
    }

    #[test]
    fn z_pi_negates_one_component() {
        let s = PureState::qubit(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let out = s.apply(&UnitaryOp::z_phase(PI), &[0]).unwrap();
        assert!((out.amps()[0] - c(0.6, 0.0)).norm() < 1e-15);
        assert!((out.amps()[1] - c(0.0, -0.8)).norm() < 1e-15);
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let s = random_state(&[2, 3, 2], 9);
        let out = s.apply(&UnitaryOp::identity(6), &[2, 1]).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn apply_respects_target_order() {
        // X on subsystem 2 of |000⟩ gives |001⟩
        let s = PureState::basis(vec![2, 2, 2], 0).unwrap();
        let out = s.apply(&UnitaryOp::pauli_x(), &[2]).unwrap();
        assert_eq!(out.amps()[1], c(1.0, 0.0));
        // X⊗I on targets [2, 0] acts as X on subsystem 2
        let xi = UnitaryOp::pauli_x().kron(&UnitaryOp::identity(2));
        let out = s.apply(&xi, &[2, 0]).unwrap();
        assert_eq!(out.amps()[1], c(1.0, 0.0));
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let s = random_state(&[2, 2], 3);
        assert!(matches!(
            s.apply(&UnitaryOp::cz(), &[0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            s.apply(&UnitaryOp::pauli_x(), &[5]),
            Err(Error::InvalidSubsystem { .. })
        ));
        assert!(matches!(
            s.apply(&UnitaryOp::cz(), &[1, 1]),
            Err(Error::InvalidSubsystem { .. })
        ));
    }

    #[test]
    fn projection_removes_targets_and_renormalizes() {
        // |0⟩ ⊗ (|0⟩+|1⟩)/√2, project subsystem 1 onto |1⟩
        let s = PureState::basis(vec![2], 0).unwrap().tensor(&PureState::plus());
        let one = PureState::basis(vec![2], 1).unwrap();
        let out = s.project(&[1], &one).unwrap();
        assert!((out.probability - 0.5).abs() < 1e-15);
        assert_eq!(out.post_state.dims(), &[2]);
        assert!((out.post_state.amps()[0] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn impossible_outcome_is_signalled() {
        let s = PureState::basis(vec![2, 2], 0).unwrap();
        let one = PureState::basis(vec![2], 1).unwrap();
        assert!(matches!(
            s.project(&[0], &one),
            Err(Error::ImpossibleOutcome { .. })
        ));
    }

    #[test]
    fn projection_completeness_on_bell_basis() {
        let h = FRAC_1_SQRT_2;
        let bell = [
            vec![c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)],
            vec![c(h, 0.), c(0., 0.), c(0., 0.), c(-h, 0.)],
            vec![c(0., 0.), c(h, 0.), c(h, 0.), c(0., 0.)],
            vec![c(0., 0.), c(h, 0.), c(-h, 0.), c(0., 0.)],
        ];
        let s = random_state(&[2, 2, 2], 5);
        let total: f64 = bell
            .iter()
            .map(|b| {
                let o = PureState::new(vec![2, 2], b.clone()).unwrap();
                s.outcome_probability(&[0, 2], &o).unwrap()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn global_phase_equality() {
        let s = random_state(&[2, 2], 11);
        assert!(equal_up_to_global_phase(
            &s.with_global_phase(PI / 4.0),
            &s,
            1e-12
        ));
        let zero = PureState::basis(vec![2], 0).unwrap();
        let one = PureState::basis(vec![2], 1).unwrap();
        assert!(!equal_up_to_global_phase(&zero, &one, 1e-6));
        assert!(!equal_up_to_global_phase(&zero, &s, 1e-6));
    }

    #[test]
    fn concurrence_of_reference_states() {
        let h = FRAC_1_SQRT_2;
        let bell = PureState::new(vec![2, 2], vec![c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)]).unwrap();
        assert!((concurrence(&bell).unwrap() - 1.0).abs() < 1e-15);
        let prod = PureState::basis(vec![2, 2], 1).unwrap();
        assert_eq!(concurrence(&prod).unwrap(), 0.0);
        assert!(concurrence(&random_state(&[2, 3], 1)).is_err());
    }

    #[test]
    fn random_state_is_reproducible() {
        let a = random_state(&[2, 2, 2], 42);
        let b = random_state(&[2, 2, 2], 42);
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        let c = random_state(&[2, 2, 2], 43);
        assert!(!equal_up_to_global_phase(&a, &c, 1e-3));
    }

    #[test]
    fn rejects_unnormalized_amplitudes() {
        assert!(matches!(
            PureState::new(vec![2], vec![c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            PureState::new(vec![2, 2], vec![c(1.0, 0.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
