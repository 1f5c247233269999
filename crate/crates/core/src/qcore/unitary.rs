use num_complex::Complex64;

use crate::error::{Error, Result};

/// Construction tolerance for unitarity checks.
pub const UNITARY_TOL: f64 = 1e-12;

/// A square unitary matrix acting on a `dim`-dimensional space, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOp {
    dim: usize,
    matrix: Vec<Complex64>,
}

impl UnitaryOp {
    /// Validates `U†U = I` entrywise within [`UNITARY_TOL`].
    pub fn new(dim: usize, matrix: Vec<Complex64>) -> Result<Self> {
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: matrix.len(),
            });
        }
        let u = UnitaryOp { dim, matrix };
        let deviation = u.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(u)
    }

    pub(crate) fn new_unchecked(dim: usize, matrix: Vec<Complex64>) -> Self {
        debug_assert_eq!(matrix.len(), dim * dim);
        UnitaryOp { dim, matrix }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            m[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        UnitaryOp::new_unchecked(dim, m)
    }

    /// Diagonal unitary with the given phases (radians).
    pub fn diagonal_phases(phases: &[f64]) -> Self {
        let dim = phases.len();
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (i, &p) in phases.iter().enumerate() {
            m[i * dim + i] = Complex64::from_polar(1.0, p);
        }
        UnitaryOp::new_unchecked(dim, m)
    }

    /// Controlled phase: `diag(1, 1, 1, -1)`.
    pub fn cz() -> Self {
        let mut m = real(&[0.0; 16]);
        for (i, d) in [1.0, 1.0, 1.0, -1.0].into_iter().enumerate() {
            m[i * 5] = Complex64::new(d, 0.0);
        }
        UnitaryOp::new_unchecked(4, m)
    }

    /// Local phase gate `|0⟩⟨0| + e^{-iφ}|1⟩⟨1|`.
    pub fn z_phase(phi: f64) -> Self {
        UnitaryOp::diagonal_phases(&[0.0, -phi])
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        UnitaryOp::new_unchecked(2, real(&[h, h, h, -h]))
    }

    pub fn pauli_x() -> Self {
        UnitaryOp::new_unchecked(2, real(&[0.0, 1.0, 1.0, 0.0]))
    }

    pub fn pauli_y() -> Self {
        let z = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        UnitaryOp::new_unchecked(2, vec![z, -i, i, z])
    }

    pub fn pauli_z() -> Self {
        UnitaryOp::new_unchecked(2, real(&[1.0, 0.0, 0.0, -1.0]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim + col]
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                m[c * d + r] = self.matrix[r * d + c].conj();
            }
        }
        UnitaryOp::new_unchecked(d, m)
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &UnitaryOp) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: rhs.dim,
            });
        }
        let d = self.dim;
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.matrix[r * d + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    m[r * d + c] += a * rhs.matrix[k * d + c];
                }
            }
        }
        Ok(UnitaryOp::new_unchecked(d, m))
    }

    /// Kronecker product `self ⊗ rhs`; `self` acts on the more significant factor.
    pub fn kron(&self, rhs: &UnitaryOp) -> Self {
        let (a, b) = (self.dim, rhs.dim);
        let d = a * b;
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for r1 in 0..a {
            for c1 in 0..a {
                let x = self.matrix[r1 * a + c1];
                for r2 in 0..b {
                    for c2 in 0..b {
                        m[(r1 * b + r2) * d + c1 * b + c2] = x * rhs.matrix[r2 * b + c2];
                    }
                }
            }
        }
        UnitaryOp::new_unchecked(d, m)
    }

    pub fn apply_to_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim;
        (0..d)
            .map(|r| (0..d).map(|c| self.matrix[r * d + c] * v[c]).sum())
            .collect()
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += self.matrix[k * d + r].conj() * self.matrix[k * d + c];
                }
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }
}

fn real(xs: &[f64]) -> Vec<Complex64> {
    xs.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_gates_are_unitary() {
        for u in [
            UnitaryOp::cz(),
            UnitaryOp::z_phase(0.3),
            UnitaryOp::hadamard(),
            UnitaryOp::pauli_x(),
            UnitaryOp::pauli_y(),
            UnitaryOp::pauli_z(),
        ] {
            assert!(u.unitarity_deviation() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_unitary() {
        let m = vec![Complex64::new(1.0, 0.0); 4];
        assert!(matches!(UnitaryOp::new(2, m), Err(Error::NotUnitary { .. })));
        assert!(matches!(
            UnitaryOp::new(2, vec![Complex64::new(1.0, 0.0); 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kron_orders_factors_big_endian() {
        let xz = UnitaryOp::pauli_x().kron(&UnitaryOp::pauli_z());
        // X⊗Z |00⟩ = |10⟩
        let out = xz.apply_to_vec(&real(&[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(out[2], Complex64::new(1.0, 0.0));
    }
}
