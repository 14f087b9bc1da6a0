//! Symplectic linear algebra on `R^{2m}`.
//!
//! Coordinates are interleaved, `(x1, y1, x2, y2, ...)`, so the standard
//! structure is block diagonal with `m` copies of `[[0, -1], [1, 0]]`.
//! A [`Structure`] may flip the sign of individual 2x2 blocks; the
//! extended-phase-space paths need `diag(J1, -J1)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymlinError {
    #[error("half-dimension must be at least 1")]
    ZeroDimension,
    #[error("matrix dimension {0} is not even")]
    OddDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("block sign must be +1 or -1, got {0}")]
    BadSign(i8),
    #[error("form declared nondegenerate has eigenvalue {0:e} within tolerance of zero")]
    Degenerate(f64),
    #[error("matrix is not symplectic (residual {0:e})")]
    NotSymplectic(f64),
    #[error("matrix has non-positive determinant {0:e}")]
    NegativeDeterminant(f64),
}

/// Complex structure `diag(s_1 J1, ..., s_m J1)` with `s_i = ±1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    signs: Vec<i8>,
}

/// The standard structure `J_m` and its form `omega_m(u, v) = u . J_m v`.
pub fn standard_structure(m: usize) -> Result<Structure, SymlinError> {
    if m == 0 {
        return Err(SymlinError::ZeroDimension);
    }
    Ok(Structure { signs: vec![1; m] })
}

impl Structure {
    pub fn with_signs(signs: Vec<i8>) -> Result<Self, SymlinError> {
        if signs.is_empty() {
            return Err(SymlinError::ZeroDimension);
        }
        if let Some(&s) = signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(SymlinError::BadSign(s));
        }
        Ok(Self { signs })
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn half_dim(&self) -> usize {
        self.signs.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.signs.len()
    }

    pub fn is_standard(&self) -> bool {
        self.signs.iter().all(|&s| s == 1)
    }

    pub fn matrix(&self) -> Mat {
        let d = self.dim();
        let mut j = Mat::zeros(d, d);
        for (b, &s) in self.signs.iter().enumerate() {
            let s = f64::from(s);
            j[(2 * b, 2 * b + 1)] = -s;
            j[(2 * b + 1, 2 * b)] = s;
        }
        j
    }

    /// `J v` without forming the matrix.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (b, &s) in self.signs.iter().enumerate() {
            let s = f64::from(s);
            let (x, y) = (v[2 * b], v[2 * b + 1]);
            out[2 * b] = -s * y;
            out[2 * b + 1] = s * x;
        }
    }

    pub fn omega(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut jv = vec![0.0; v.len()];
        self.apply(v, &mut jv);
        u.iter().zip(&jv).map(|(a, b)| a * b).sum()
    }

    pub fn direct_sum(&self, other: &Structure) -> Structure {
        let mut signs = self.signs.clone();
        signs.extend_from_slice(&other.signs);
        Structure { signs }
    }

    /// `cos(phi) I + sin(phi) J`, a symplectic rotation for this structure.
    pub fn rotation(&self, phi: f64) -> Mat {
        let d = self.dim();
        Mat::identity(d, d) * phi.cos() + self.matrix() * phi.sin()
    }

    /// `exp(t J S)` for symmetric `S`.
    pub fn hamiltonian_exp(&self, s: &Mat, t: f64) -> Mat {
        (self.matrix() * s * t).exp()
    }
}

/// Square matrix checked against a structure at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    entries: Mat,
    tol: f64,
}

impl SymplecticMatrix {
    pub fn new(entries: Mat, structure: &Structure, tol: f64) -> Result<Self, SymlinError> {
        let r = symplectic_residual(&entries, structure)?;
        if r > tol {
            return Err(SymlinError::NotSymplectic(r));
        }
        let det = entries.determinant();
        if det <= 0.0 {
            return Err(SymlinError::NegativeDeterminant(det));
        }
        Ok(Self { entries, tol })
    }

    pub fn entries(&self) -> &Mat {
        &self.entries
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn into_inner(self) -> Mat {
        self.entries
    }
}

/// Real symmetric matrix; symmetrized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricForm {
    entries: Mat,
}

impl SymmetricForm {
    pub fn new(m: Mat) -> Self {
        let entries = (&m + m.transpose()) * 0.5;
        Self { entries }
    }

    pub fn entries(&self) -> &Mat {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `A^T F A`.
    pub fn congruent(&self, a: &Mat) -> Self {
        Self::new(a.transpose() * &self.entries * a)
    }
}

/// `#(eigenvalues > tol) - #(eigenvalues < -tol)`.
pub fn signature(f: &SymmetricForm, tol: f64) -> i64 {
    f.eigenvalues().iter().fold(0, |acc, &e| {
        if e > tol {
            acc + 1
        } else if e < -tol {
            acc - 1
        } else {
            acc
        }
    })
}

/// Signature of a form the caller asserts is nondegenerate.
pub fn signature_strict(f: &SymmetricForm, tol: f64) -> Result<i64, SymlinError> {
    let ev = f.eigenvalues();
    if let Some(&e) = ev.iter().find(|e| e.abs() <= tol) {
        return Err(SymlinError::Degenerate(e));
    }
    Ok(ev.iter().map(|&e| if e > 0.0 { 1 } else { -1 }).sum())
}

/// `max |M^T J M - J|` entrywise.
pub fn symplectic_residual(m: &Mat, structure: &Structure) -> Result<f64, SymlinError> {
    if m.nrows() != m.ncols() || m.nrows() % 2 != 0 {
        return Err(SymlinError::OddDimension(m.nrows()));
    }
    if m.nrows() != structure.dim() {
        return Err(SymlinError::DimensionMismatch {
            expected: structure.dim(),
            got: m.nrows(),
        });
    }
    let j = structure.matrix();
    Ok((m.transpose() * &j * m - j).amax())
}

/// Symplecticity with respect to the standard `J_m`.
pub fn is_symplectic(m: &Mat, tol: f64) -> Result<bool, SymlinError> {
    if m.nrows() != m.ncols() || m.nrows() % 2 != 0 || m.nrows() == 0 {
        return Err(SymlinError::OddDimension(m.nrows()));
    }
    let s = standard_structure(m.nrows() / 2)?;
    Ok(symplectic_residual(m, &s)? <= tol)
}

pub fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let (p, q) = (a.nrows(), b.nrows());
    let mut m = Mat::zeros(p + q, p + q);
    m.view_mut((0, 0), (p, p)).copy_from(a);
    m.view_mut((p, p), (q, q)).copy_from(b);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j1_matches_block_form() {
        let j = standard_structure(1).unwrap().matrix();
        assert_eq!(j, Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
    }

    #[test]
    fn omega_of_basis_pair() {
        let s = standard_structure(1).unwrap();
        assert_eq!(s.omega(&[1.0, 0.0], &[0.0, 1.0]), -1.0);
        assert_eq!(s.omega(&[0.0, 1.0], &[1.0, 0.0]), 1.0);
    }

    #[test]
    fn j_squares_to_minus_identity() {
        for m in 1..5 {
            let j = standard_structure(m).unwrap().matrix();
            assert_eq!(&j * &j, -Mat::identity(2 * m, 2 * m));
        }
        let j = Structure::with_signs(vec![1, -1, -1]).unwrap().matrix();
        assert_eq!(&j * &j, -Mat::identity(6, 6));
    }

    #[test]
    fn zero_half_dimension_rejected() {
        assert_eq!(standard_structure(0), Err(SymlinError::ZeroDimension));
        assert!(Structure::with_signs(vec![1, 2]).is_err());
    }

    #[test]
    fn signature_examples() {
        let f = SymmetricForm::new(Mat::from_row_slice(2, 2, &[3.0, 2.0, 2.0, 0.0]));
        assert_eq!(signature(&f, 1e-9), 0);
        assert_eq!(signature(&SymmetricForm::new(Mat::identity(4, 4)), 1e-9), 4);
        let z = SymmetricForm::new(Mat::zeros(3, 3));
        assert_eq!(signature(&z, 1e-9), 0);
        assert!(matches!(signature_strict(&z, 1e-9), Err(SymlinError::Degenerate(_))));
    }

    #[test]
    fn symplectic_examples() {
        assert!(is_symplectic(&Mat::identity(2, 2), 1e-12).unwrap());
        let s = standard_structure(1).unwrap();
        for t in [0.3, 1.0, 2.5, -4.0] {
            assert!(is_symplectic(&s.rotation(t), 1e-12).unwrap());
        }
        assert!(!is_symplectic(&(Mat::identity(2, 2) * 2.0), 1e-9).unwrap());
        assert_eq!(
            is_symplectic(&Mat::identity(3, 3), 1e-9),
            Err(SymlinError::OddDimension(3))
        );
    }

    #[test]
    fn constructed_matrices_have_positive_determinant() {
        let s = Structure::with_signs(vec![1, -1]).unwrap();
        let a = Mat::from_fn(4, 4, |i, j| ((i + 2 * j) as f64).sin());
        let sym = (&a + a.transpose()) * 0.5;
        let m = s.hamiltonian_exp(&sym, 0.7);
        let sm = SymplecticMatrix::new(m, &s, 1e-10).unwrap();
        assert!(sm.entries().determinant() > 0.0);
        assert!(SymplecticMatrix::new(Mat::identity(4, 4) * 2.0, &s, 1e-9).is_err());
    }
}
