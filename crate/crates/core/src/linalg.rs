//! Thin wrappers over nalgebra's dense complex factorizations.
//!
//! Everything here works on `DMatrix<Complex<f64>>`. The wrappers add the
//! bits the physics layer keeps needing: sorted hermitian spectra, null
//! spaces from the SVD, rank-revealing column bases and a 1-norm condition
//! estimate attached to every LU solve.

use alloc::vec::Vec;

use nalgebra::linalg::{ColPivQR, Schur, SymmetricEigen, LU};
use nalgebra::Dyn;

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_vec(v: &CVector) -> f64 {
    v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Entrywise max deviation between two equally shaped matrices.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Maximum absolute column sum.
pub fn norm1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    libm::sqrt(m.iter().map(|z| z.norm_sqr()).sum())
}

/// `max |A - A^dagger|`, entrywise.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut d = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    d
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Eigen-decomposition of a hermitian matrix with eigenvalues sorted ascending.
///
/// Columns of the returned matrix are the matching orthonormal eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(m.clone(), 1e-15, 0)
        .ok_or(Error::Eigensolver("hermitian eigensolver did not converge"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Eigenvalues of a general complex matrix from its Schur form.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), 1e-15, 0)
        .ok_or(Error::Eigensolver("Schur iteration did not converge"))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|k| t[(k, k)]).collect())
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Orthonormal basis (as columns) of the `k` smallest right singular vectors.
///
/// Returns the basis together with the corresponding singular values, largest
/// of the selected ones last.
pub fn smallest_right_singular(m: &CMatrix, k: usize) -> (CMatrix, Vec<f64>) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let picked = &order[..k.min(order.len())];
    let basis = CMatrix::from_fn(n, picked.len(), |i, j| v_t[(picked[j], i)].conj());
    let sv = picked.iter().map(|&p| svd.singular_values[p]).collect();
    (basis, sv)
}

/// Orthonormal basis of the column space of `m`, rank decided by a
/// column-pivoted QR with relative tolerance `rel_tol` on `|R_kk|`.
pub fn column_space_basis(m: &CMatrix, rel_tol: f64) -> (CMatrix, usize) {
    let n = m.nrows();
    let qr = ColPivQR::new(m.clone());
    let r = qr.r();
    let q = qr.q();
    let diag_len = r.nrows().min(r.ncols());
    let lead = if diag_len > 0 { r[(0, 0)].norm() } else { 0.0 };
    let rank = if lead == 0.0 {
        0
    } else {
        (0..diag_len)
            .take_while(|&k| r[(k, k)].norm() > rel_tol * lead)
            .count()
    };
    (q.columns(0, rank).into_owned().resize(n, rank, ZERO), rank)
}

/// LU factorization of a square matrix together with its 1-norm condition number.
pub struct ConditionedLu {
    lu: LU<C64, Dyn, Dyn>,
    condition: f64,
}

impl ConditionedLu {
    /// Factorizes `a`. A singular matrix gets an infinite condition number.
    pub fn new(a: CMatrix) -> Self {
        let a_norm = norm1(&a);
        let lu = a.lu();
        let condition = match lu.try_inverse() {
            Some(inv) => {
                let c = a_norm * norm1(&inv);
                if c.is_finite() {
                    c
                } else {
                    f64::INFINITY
                }
            }
            None => f64::INFINITY,
        };
        Self { lu, condition }
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, b: &CMatrix) -> Option<CMatrix> {
        self.lu.solve(b)
    }

    pub fn solve_vec(&self, b: &CVector) -> Option<CVector> {
        self.lu.solve(b)
    }

    pub fn inverse(&self) -> Option<CMatrix> {
        self.lu.try_inverse()
    }
}

/// `z * I - a`.
pub fn shifted(a: &CMatrix, z: C64) -> CMatrix {
    let mut m = -a.clone();
    for k in 0..m.nrows() {
        m[(k, k)] += z;
    }
    m
}
