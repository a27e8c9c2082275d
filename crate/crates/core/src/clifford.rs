//! Exact 4x4 Dirac and 2x2 Pauli matrices over the Gaussian rationals.
//!
//! Everything is in the standard Dirac representation:
//!
//! ```text
//! beta = [[1, 0], [0, -1]]   alpha_i = [[0, s_i], [s_i, 0]]
//! gamma5 = [[0, 1], [1, 0]]  Sigma_i = [[s_i, 0], [0, s_i]] = gamma5 alpha_i
//! ```
//!
//! The operator algebra stores its matrix factor as a [`MatrixUnit`], one of
//! 16 named Dirac basis elements (or 4 Pauli ones) that are products of the
//! generators above. Products of units are a phase times another unit.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::coeff::GaussianRational;
use crate::error::AlgebraError;

type Q = GaussianRational;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiracMatrix {
    dim: usize,
    entries: Vec<Q>,
}

impl DiracMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 4, "matrix dimension must be 2 or 4");
        Self { dim, entries: vec![Q::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: &[&[Q]]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim);
            m.entries[i * dim..(i + 1) * dim].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Q {
        self.entries[row * self.dim + col]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Q::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim)
    }

    pub fn scale(&self, c: Q) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|&e| e * c).collect() }
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.entries[j * d + i] = self.get(i, j).conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Q {
        (0..self.dim).fold(Q::zero(), |acc, i| acc + self.get(i, i))
    }

    /// Embeds a 2x2 block matrix `[[tl, tr], [bl, br]]` into 4x4.
    fn blocks(tl: &Self, tr: &Self, bl: &Self, br: &Self) -> Self {
        let mut m = Self::zeros(4);
        for (block, (r0, c0)) in [(tl, (0, 0)), (tr, (0, 2)), (bl, (2, 0)), (br, (2, 2))] {
            for i in 0..2 {
                for j in 0..2 {
                    m.entries[(r0 + i) * 4 + c0 + j] = block.get(i, j);
                }
            }
        }
        m
    }

    fn check_dims(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.dim != other.dim {
            return Err(AlgebraError::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }
}

impl fmt::Display for DiracMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.dim {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.dim {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

/// Exact matrix product.
pub fn mat_mul(x: &DiracMatrix, y: &DiracMatrix) -> Result<DiracMatrix, AlgebraError> {
    x.check_dims(y)?;
    let d = x.dim;
    let mut out = DiracMatrix::zeros(d);
    for i in 0..d {
        for k in 0..d {
            let xik = x.get(i, k);
            if xik.is_zero() {
                continue;
            }
            for j in 0..d {
                let e = &mut out.entries[i * d + j];
                *e = *e + xik * y.get(k, j);
            }
        }
    }
    Ok(out)
}

fn mat_add(x: &DiracMatrix, y: &DiracMatrix, sign: Q) -> Result<DiracMatrix, AlgebraError> {
    x.check_dims(y)?;
    Ok(DiracMatrix {
        dim: x.dim,
        entries: x.entries.iter().zip(&y.entries).map(|(&a, &b)| a + sign * b).collect(),
    })
}

/// `xy - yx`
pub fn commutator(x: &DiracMatrix, y: &DiracMatrix) -> Result<DiracMatrix, AlgebraError> {
    mat_add(&mat_mul(x, y)?, &mat_mul(y, x)?, -Q::one())
}

/// `xy + yx`
pub fn anticommutator(x: &DiracMatrix, y: &DiracMatrix) -> Result<DiracMatrix, AlgebraError> {
    mat_add(&mat_mul(x, y)?, &mat_mul(y, x)?, Q::one())
}

impl Mul for &DiracMatrix {
    type Output = DiracMatrix;
    fn mul(self, o: &DiracMatrix) -> DiracMatrix {
        mat_mul(self, o).expect("matrix dimension mismatch")
    }
}

impl Add for &DiracMatrix {
    type Output = DiracMatrix;
    fn add(self, o: &DiracMatrix) -> DiracMatrix {
        mat_add(self, o, Q::one()).expect("matrix dimension mismatch")
    }
}

impl Sub for &DiracMatrix {
    type Output = DiracMatrix;
    fn sub(self, o: &DiracMatrix) -> DiracMatrix {
        mat_add(self, o, -Q::one()).expect("matrix dimension mismatch")
    }
}

impl Neg for &DiracMatrix {
    type Output = DiracMatrix;
    fn neg(self) -> DiracMatrix {
        self.scale(-Q::one())
    }
}

/// The named matrix generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    Id,
    Beta,
    Gamma5,
    Alpha(u8),
    SigmaBig(u8),
    PauliSigma(u8),
}

impl Generator {
    /// Looks a generator up by its grammar name (`beta`, `alpha_i`, `sigma_big_i`,
    /// `gamma5`, `id`, `pauli_sigma_i`), checking the index rule.
    pub fn from_name(name: &str, index: Option<u8>) -> Result<Self, AlgebraError> {
        let vector = |f: fn(u8) -> Generator| match index {
            None => Err(AlgebraError::MissingIndex(name.to_string())),
            Some(i @ 1..=3) => Ok(f(i)),
            Some(i) => Err(AlgebraError::IndexOutOfRange(i)),
        };
        let scalar = |g: Generator| match index {
            None => Ok(g),
            Some(_) => Err(AlgebraError::UnexpectedIndex(name.to_string())),
        };
        match name {
            "id" => scalar(Generator::Id),
            "beta" => scalar(Generator::Beta),
            "gamma5" => scalar(Generator::Gamma5),
            "alpha_i" | "alpha" => vector(Generator::Alpha),
            "sigma_big_i" | "Sigma" => vector(Generator::SigmaBig),
            "pauli_sigma_i" | "sigma" => vector(Generator::PauliSigma),
            _ => Err(AlgebraError::UnknownGenerator(name.to_string())),
        }
    }
}

fn pauli(i: u8) -> DiracMatrix {
    let (o, z, im) = (Q::one(), Q::zero(), Q::i());
    match i {
        1 => DiracMatrix::from_rows(&[&[z, o], &[o, z]]),
        2 => DiracMatrix::from_rows(&[&[z, -im], &[im, z]]),
        3 => DiracMatrix::from_rows(&[&[o, z], &[z, -o]]),
        _ => panic!("pauli index {i} out of range"),
    }
}

/// Builds a generator in the standard representation. `Id` is 4x4; use
/// [`DiracMatrix::identity`] for the 2x2 identity.
pub fn make_generator(g: Generator) -> DiracMatrix {
    let i2 = DiracMatrix::identity(2);
    let z2 = DiracMatrix::zeros(2);
    match g {
        Generator::Id => DiracMatrix::identity(4),
        Generator::Beta => DiracMatrix::blocks(&i2, &z2, &z2, &-&i2),
        Generator::Gamma5 => DiracMatrix::blocks(&z2, &i2, &i2, &z2),
        Generator::Alpha(i) => DiracMatrix::blocks(&z2, &pauli(i), &pauli(i), &z2),
        Generator::SigmaBig(i) => DiracMatrix::blocks(&pauli(i), &z2, &z2, &pauli(i)),
        Generator::PauliSigma(i) => pauli(i),
    }
}

/// Convenience wrapper over [`Generator::from_name`] and [`make_generator`].
pub fn make_named(name: &str, index: Option<u8>) -> Result<DiracMatrix, AlgebraError> {
    Ok(make_generator(Generator::from_name(name, index)?))
}

/// A named basis element of the matrix factor.
///
/// Dirac units are indexed 0..15 in the order
/// `beta, gamma5, beta*gamma5, alpha_1..3, Sigma_1..3, beta*alpha_1..3, beta*Sigma_1..3`.
/// `Id` is shared by both dimensions so scalar operators need no dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatrixUnit {
    Id,
    Dirac(u8),
    Pauli(u8),
}

const DIRAC_NAMES: [&str; 15] = [
    "beta",
    "gamma5",
    "beta*gamma5",
    "alpha_1",
    "alpha_2",
    "alpha_3",
    "Sigma_1",
    "Sigma_2",
    "Sigma_3",
    "beta*alpha_1",
    "beta*alpha_2",
    "beta*alpha_3",
    "beta*Sigma_1",
    "beta*Sigma_2",
    "beta*Sigma_3",
];

fn dirac_unit_matrix(k: u8) -> DiracMatrix {
    use Generator::*;
    let beta = make_generator(Beta);
    match k {
        0 => beta,
        1 => make_generator(Gamma5),
        2 => &beta * &make_generator(Gamma5),
        3..=5 => make_generator(Alpha(k - 2)),
        6..=8 => make_generator(SigmaBig(k - 5)),
        9..=11 => &beta * &make_generator(Alpha(k - 8)),
        12..=14 => &beta * &make_generator(SigmaBig(k - 11)),
        _ => panic!("dirac unit {k} out of range"),
    }
}

struct UnitTables {
    dirac: Vec<DiracMatrix>,
    dirac_products: Vec<(Q, MatrixUnit)>,
    pauli_products: Vec<(Q, MatrixUnit)>,
}

/// Finds the unit `u` and phase `c` with `m = c·u`, if `m` is proportional to one unit.
fn match_unit(m: &DiracMatrix, units: &[(MatrixUnit, DiracMatrix)]) -> Option<(Q, MatrixUnit)> {
    let d = Q::int(m.dim() as i64);
    for (u, b) in units {
        let c = mat_mul(&b.adjoint(), m).ok()?.trace() * d.inv()?;
        if !c.is_zero() && b.scale(c) == *m {
            return Some((c, *u));
        }
    }
    None
}

static TABLES: LazyLock<UnitTables> = LazyLock::new(|| {
    let dirac: Vec<DiracMatrix> = (0..15).map(dirac_unit_matrix).collect();
    let mut dirac_all = vec![(MatrixUnit::Id, DiracMatrix::identity(4))];
    dirac_all.extend(dirac.iter().enumerate().map(|(k, m)| (MatrixUnit::Dirac(k as u8), m.clone())));
    let mut dirac_products = Vec::with_capacity(225);
    for x in &dirac {
        for y in &dirac {
            dirac_products.push(match_unit(&(x * y), &dirac_all).expect("Dirac basis not closed"));
        }
    }
    let mut pauli_all = vec![(MatrixUnit::Id, DiracMatrix::identity(2))];
    pauli_all.extend((1..=3).map(|i| (MatrixUnit::Pauli(i), pauli(i))));
    let mut pauli_products = Vec::with_capacity(9);
    for i in 1..=3 {
        for j in 1..=3 {
            pauli_products.push(match_unit(&(&pauli(i) * &pauli(j)), &pauli_all).expect("Pauli basis not closed"));
        }
    }
    UnitTables { dirac, dirac_products, pauli_products }
});

impl MatrixUnit {
    pub fn beta() -> Self {
        MatrixUnit::Dirac(0)
    }

    pub fn gamma5() -> Self {
        MatrixUnit::Dirac(1)
    }

    pub fn alpha(i: u8) -> Self {
        MatrixUnit::Dirac(2 + i)
    }

    pub fn sigma_big(i: u8) -> Self {
        MatrixUnit::Dirac(5 + i)
    }

    pub fn pauli(i: u8) -> Self {
        MatrixUnit::Pauli(i)
    }

    pub fn from_generator(g: Generator) -> Self {
        match g {
            Generator::Id => MatrixUnit::Id,
            Generator::Beta => Self::beta(),
            Generator::Gamma5 => Self::gamma5(),
            Generator::Alpha(i) => Self::alpha(i),
            Generator::SigmaBig(i) => Self::sigma_big(i),
            Generator::PauliSigma(i) => Self::pauli(i),
        }
    }

    /// Matrix dimension, `None` for the dimension-agnostic identity.
    pub fn dim(self) -> Option<usize> {
        match self {
            MatrixUnit::Id => None,
            MatrixUnit::Dirac(_) => Some(4),
            MatrixUnit::Pauli(_) => Some(2),
        }
    }

    /// Commutes with `beta` (block-diagonal in the Dirac representation).
    pub fn is_block_diagonal(self) -> bool {
        match self {
            MatrixUnit::Dirac(k) => matches!(k, 0 | 6..=8 | 12..=14),
            _ => true,
        }
    }

    pub fn matrix(self, dim: usize) -> DiracMatrix {
        match self {
            MatrixUnit::Id => DiracMatrix::identity(dim),
            MatrixUnit::Dirac(k) => TABLES.dirac[k as usize].clone(),
            MatrixUnit::Pauli(i) => pauli(i),
        }
    }

    /// `self · other = phase · unit`
    pub fn mul(self, other: Self) -> Result<(Q, MatrixUnit), AlgebraError> {
        match (self, other) {
            (MatrixUnit::Id, u) | (u, MatrixUnit::Id) => Ok((Q::one(), u)),
            (MatrixUnit::Dirac(x), MatrixUnit::Dirac(y)) => Ok(TABLES.dirac_products[x as usize * 15 + y as usize]),
            (MatrixUnit::Pauli(x), MatrixUnit::Pauli(y)) => {
                Ok(TABLES.pauli_products[(x as usize - 1) * 3 + y as usize - 1])
            }
            (x, y) => Err(AlgebraError::DimensionMismatch(x.dim().unwrap_or(0), y.dim().unwrap_or(0))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MatrixUnit::Id => "1",
            MatrixUnit::Dirac(k) => DIRAC_NAMES[k as usize],
            MatrixUnit::Pauli(1) => "sigma_1",
            MatrixUnit::Pauli(2) => "sigma_2",
            MatrixUnit::Pauli(_) => "sigma_3",
        }
    }
}

impl fmt::Display for MatrixUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Generator::*;

    fn g(x: Generator) -> DiracMatrix {
        make_generator(x)
    }

    #[test]
    fn sigma_is_gamma5_alpha() {
        for i in 1..=3 {
            assert_eq!(&g(Gamma5) * &g(Alpha(i)), g(SigmaBig(i)));
        }
    }

    #[test]
    fn involutions() {
        let id = DiracMatrix::identity(4);
        assert_eq!(&g(Beta) * &g(Beta), id);
        assert_eq!(&g(Gamma5) * &g(Gamma5), id);
        for i in 1..=3 {
            assert_eq!(&g(Alpha(i)) * &g(Alpha(i)), id);
            assert_eq!(&g(SigmaBig(i)) * &g(SigmaBig(i)), id);
        }
    }

    #[test]
    fn pauli_and_spin_algebra() {
        assert_eq!(&g(PauliSigma(1)) * &g(PauliSigma(2)), g(PauliSigma(3)).scale(Q::i()));
        assert_eq!(&g(SigmaBig(1)) * &g(SigmaBig(2)), g(SigmaBig(3)).scale(Q::i()));
        assert_eq!(&DiracMatrix::identity(4) * &g(Alpha(2)), g(Alpha(2)));
    }

    #[test]
    fn beta_gamma5_anticommute() {
        let bg = &g(Beta) * &g(Gamma5);
        let gb = &g(Gamma5) * &g(Beta);
        assert_eq!(bg, -&gb);
        assert!(anticommutator(&g(Gamma5), &g(Beta)).unwrap().is_zero());
    }

    #[test]
    fn matrix_parts_of_k_properties() {
        for i in 1..=3 {
            assert!(commutator(&g(Beta), &g(SigmaBig(i))).unwrap().is_zero());
            assert!(commutator(&g(Gamma5), &g(SigmaBig(i))).unwrap().is_zero());
            assert!(anticommutator(&g(Beta), &g(Alpha(i))).unwrap().is_zero());
        }
    }

    #[test]
    fn clifford_relations() {
        for i in 1..=3 {
            for j in 1..=3 {
                let ac = anticommutator(&g(Alpha(i)), &g(Alpha(j))).unwrap();
                let expect = if i == j { DiracMatrix::identity(4).scale(Q::int(2)) } else { DiracMatrix::zeros(4) };
                assert_eq!(ac, expect, "alpha_{i}, alpha_{j}");
            }
        }
    }

    #[test]
    fn unit_direction_squares_to_one() {
        // n = (3/5, 4/5, 0) and n = (2/7, 3/7, 6/7)
        for n in [[Q::ratio(3, 5), Q::ratio(4, 5), Q::zero()], [Q::ratio(2, 7), Q::ratio(3, 7), Q::ratio(6, 7)]] {
            let mut s = DiracMatrix::zeros(4);
            for (i, c) in n.iter().enumerate() {
                s = &s + &g(SigmaBig(i as u8 + 1)).scale(*c);
            }
            assert!((&s * &s).is_identity());
        }
    }

    #[test]
    fn generator_lookup_errors() {
        assert!(matches!(Generator::from_name("delta", None), Err(AlgebraError::UnknownGenerator(_))));
        assert!(matches!(Generator::from_name("alpha_i", None), Err(AlgebraError::MissingIndex(_))));
        assert!(matches!(Generator::from_name("beta", Some(1)), Err(AlgebraError::UnexpectedIndex(_))));
        assert!(matches!(Generator::from_name("alpha_i", Some(4)), Err(AlgebraError::IndexOutOfRange(4))));
        assert!(mat_mul(&DiracMatrix::identity(2), &DiracMatrix::identity(4)).is_err());
    }

    #[test]
    fn unit_table_matches_matrices() {
        let units: Vec<MatrixUnit> = (0..15).map(MatrixUnit::Dirac).collect();
        for &x in &units {
            for &y in &units {
                let (c, u) = x.mul(y).unwrap();
                assert_eq!(&x.matrix(4) * &y.matrix(4), u.matrix(4).scale(c));
            }
        }
        let (c, u) = MatrixUnit::pauli(2).mul(MatrixUnit::pauli(3)).unwrap();
        assert_eq!((c, u), (Q::i(), MatrixUnit::pauli(1)));
        assert!(MatrixUnit::pauli(1).mul(MatrixUnit::beta()).is_err());
    }

    #[test]
    fn block_structure_flags() {
        assert!(MatrixUnit::beta().is_block_diagonal());
        assert!(MatrixUnit::sigma_big(2).is_block_diagonal());
        assert!(!MatrixUnit::gamma5().is_block_diagonal());
        assert!(!MatrixUnit::alpha(1).is_block_diagonal());
    }
}
