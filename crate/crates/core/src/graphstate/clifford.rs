//! The 24-element single-qubit Clifford group modulo global phase.

use std::collections::VecDeque;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::qcore::UnitaryOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> [Complex64; 4] {
        let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
        match self {
            Pauli::X => [o, l, l, o],
            Pauli::Y => [o, -i, i, o],
            Pauli::Z => [l, o, o, -l],
        }
    }

    pub fn op(self) -> UnitaryOp {
        match self {
            Pauli::X => UnitaryOp::pauli_x(),
            Pauli::Y => UnitaryOp::pauli_y(),
            Pauli::Z => UnitaryOp::pauli_z(),
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Measurement outcome `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip_if(self, negate: bool) -> Sign {
        if negate {
            self.flipped()
        } else {
            self
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }
}

type Mat = [Complex64; 4];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn adjoint(a: &Mat) -> Mat {
    [a[0].conj(), a[2].conj(), a[1].conj(), a[3].conj()]
}

/// Scales so that the first nonzero entry is real and positive.
fn canonical(a: &Mat) -> Mat {
    let lead = a.iter().find(|z| z.norm() > 1e-9).expect("nonzero matrix");
    let phase = lead.conj() / lead.norm();
    a.map(|z| z * phase)
}

fn close(a: &Mat, b: &Mat) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-9)
}

/// Equal up to a global phase.
fn proportional(a: &Mat, b: &Mat) -> bool {
    close(&canonical(a), &canonical(b))
}

struct Tables {
    mats: Vec<Mat>,
    names: Vec<String>,
    product: Vec<[u8; 24]>,
    inverse: Vec<u8>,
    /// `C† P C = sign · P'`: entry `(negative, P')`.
    conjugate: Vec<[(bool, Pauli); 3]>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(build_tables)
}

fn find(mats: &[Mat], m: &Mat) -> Option<usize> {
    let m = canonical(m);
    mats.iter().position(|x| close(x, &m))
}

fn build_tables() -> Tables {
    let h = FRAC_1_SQRT_2;
    let gens: [(&str, Mat); 2] = [
        ("H", [c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]),
        ("S", [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]),
    ];
    let identity = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
    let mut mats = vec![identity];
    let mut names = vec!["I".to_string()];
    let mut queue = VecDeque::from([0usize]);
    // Breadth-first closure; names are shortest generator words, applied right to left.
    while let Some(i) = queue.pop_front() {
        for (g, gm) in &gens {
            let m = canonical(&mul(gm, &mats[i]));
            if find(&mats, &m).is_none() {
                let name = if i == 0 {
                    g.to_string()
                } else {
                    format!("{g}{}", names[i])
                };
                mats.push(m);
                names.push(name);
                queue.push_back(mats.len() - 1);
            }
        }
    }
    assert_eq!(mats.len(), 24, "single-qubit Clifford group has 24 elements");

    let product = (0..24)
        .map(|a| {
            let mut row = [0u8; 24];
            for (b, slot) in row.iter_mut().enumerate() {
                *slot = find(&mats, &mul(&mats[a], &mats[b])).expect("group is closed") as u8;
            }
            row
        })
        .collect();
    let inverse = (0..24)
        .map(|a| find(&mats, &adjoint(&mats[a])).expect("group is closed") as u8)
        .collect();
    let conjugate = mats
        .iter()
        .map(|m| {
            Pauli::ALL.map(|p| {
                let q = mul(&adjoint(m), &mul(&p.matrix(), m));
                Pauli::ALL
                    .iter()
                    .find_map(|&r| {
                        let rm = r.matrix();
                        if close(&q, &rm) {
                            Some((false, r))
                        } else if close(&q, &rm.map(|z| -z)) {
                            Some((true, r))
                        } else {
                            None
                        }
                    })
                    .expect("Cliffords map Paulis to signed Paulis")
            })
        })
        .collect();
    Tables {
        mats,
        names,
        product,
        inverse,
        conjugate,
    }
}

/// An element of the single-qubit Clifford group, up to global phase.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Clifford(u8);

impl Clifford {
    pub const IDENTITY: Clifford = Clifford(0);

    pub fn all() -> impl Iterator<Item = Clifford> {
        (0..24u8).map(Clifford)
    }

    pub fn from_index(i: usize) -> Option<Clifford> {
        (i < 24).then_some(Clifford(i as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Looks up a 2×2 unitary; `None` if it is not Clifford.
    pub fn from_matrix(m: &[Complex64]) -> Option<Clifford> {
        let m: Mat = m.try_into().ok()?;
        let t = tables();
        t.mats
            .iter()
            .position(|x| proportional(x, &m))
            .map(|i| Clifford(i as u8))
    }

    fn named(m: Mat) -> Clifford {
        Clifford::from_matrix(&m).expect("Clifford matrix")
    }

    pub fn hadamard() -> Clifford {
        let h = FRAC_1_SQRT_2;
        Clifford::named([c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
    }

    pub fn phase() -> Clifford {
        Clifford::named([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)])
    }

    pub fn pauli(p: Pauli) -> Clifford {
        Clifford::named(p.matrix())
    }

    /// `exp(iπ/4 X)`.
    pub fn sqrt_x() -> Clifford {
        let h = FRAC_1_SQRT_2;
        Clifford::named([c(h, 0.0), c(0.0, h), c(0.0, h), c(h, 0.0)])
    }

    /// `exp(−iπ/4 Z)`.
    pub fn sqrt_z_inverse() -> Clifford {
        let h = FRAC_1_SQRT_2;
        Clifford::named([c(h, -h), c(0.0, 0.0), c(0.0, 0.0), c(h, h)])
    }

    pub fn name(self) -> &'static str {
        &tables().names[self.index()]
    }

    pub fn from_name(name: &str) -> Option<Clifford> {
        tables()
            .names
            .iter()
            .position(|n| n == name)
            .map(|i| Clifford(i as u8))
    }

    pub fn matrix(self) -> [Complex64; 4] {
        tables().mats[self.index()]
    }

    pub fn op(self) -> UnitaryOp {
        UnitaryOp::new_unchecked(2, self.matrix().to_vec())
    }

    /// `self · rhs`.
    pub fn compose(self, rhs: Clifford) -> Clifford {
        Clifford(tables().product[self.index()][rhs.index()])
    }

    pub fn inverse(self) -> Clifford {
        Clifford(tables().inverse[self.index()])
    }

    /// `C† P C = ±P'`; returns `(negative, P')`.
    pub fn conjugate(self, p: Pauli) -> (bool, Pauli) {
        tables().conjugate[self.index()][p.index()]
    }

    /// The Pauli `P` with `C† P C = ±target`, and the sign.
    pub fn preimage(self, target: Pauli) -> (bool, Pauli) {
        Pauli::ALL
            .iter()
            .find_map(|&p| {
                let (neg, q) = self.conjugate(p);
                (q == target).then_some((neg, p))
            })
            .expect("conjugation permutes the Paulis")
    }

    pub fn is_diagonal(self) -> bool {
        let m = self.matrix();
        m[1].norm() < 1e-9 && m[2].norm() < 1e-9
    }
}

impl std::ops::Mul for Clifford {
    type Output = Clifford;
    fn mul(self, rhs: Clifford) -> Clifford {
        self.compose(rhs)
    }
}

impl fmt::Debug for Clifford {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Clifford({})", self.name())
    }
}

impl fmt::Display for Clifford {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_structure() {
        let all: Vec<_> = Clifford::all().collect();
        assert_eq!(all.len(), 24);
        for &a in &all {
            assert_eq!(a * a.inverse(), Clifford::IDENTITY);
            for &b in &all {
                for &d in &all {
                    assert_eq!((a * b) * d, a * (b * d));
                }
            }
        }
        assert_eq!(all.iter().filter(|c| c.is_diagonal()).count(), 4);
    }

    #[test]
    fn names_roundtrip() {
        for c in Clifford::all() {
            assert_eq!(Clifford::from_name(c.name()), Some(c));
        }
        assert_eq!(Clifford::hadamard().name(), "H");
        assert_eq!(Clifford::IDENTITY.name(), "I");
    }

    #[test]
    fn hadamard_swaps_x_and_z() {
        let h = Clifford::hadamard();
        assert_eq!(h.conjugate(Pauli::X), (false, Pauli::Z));
        assert_eq!(h.conjugate(Pauli::Y), (true, Pauli::Y));
        assert_eq!(h.preimage(Pauli::Z), (false, Pauli::X));
    }

    #[test]
    fn generators_of_local_complementation() {
        // exp(iπ/4 X)² ∝ X, exp(−iπ/4 Z)² ∝ Z
        assert_eq!(Clifford::sqrt_x() * Clifford::sqrt_x(), Clifford::pauli(Pauli::X));
        assert_eq!(
            Clifford::sqrt_z_inverse() * Clifford::sqrt_z_inverse(),
            Clifford::pauli(Pauli::Z)
        );
        assert!(Clifford::sqrt_z_inverse().is_diagonal());
        assert_eq!(
            Clifford::from_matrix(UnitaryOp::hadamard().matrix()),
            Some(Clifford::hadamard())
        );
    }
}
