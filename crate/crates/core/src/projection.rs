//! Projector pair `P = Tr_E(·) ⊗ ρ_E`, `Q = 1 - P`, and the block
//! decomposition of the total Liouville.
//!
//! `P` is an oblique projector as soon as `ρ_E` is not maximally mixed, so the
//! Q-image is computed explicitly (rank-revealing QR of `Q`) instead of being
//! taken as the orthogonal complement of the P-image.

use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};
use crate::opspace::{unvec, vec, DensityOperator, Operator, SuperOperator};
use crate::{CMatrix, CVector};

/// Relative tolerance for every numerical rank decision in this module.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ProjectorPair {
    p: SuperOperator,
    q: SuperOperator,
    rho_env: DensityOperator,
    d_sys: usize,
    d_env: usize,
    embed: CMatrix,
    restrict: CMatrix,
}

/// Builds `P` column by column from the basis operators `|a⟩⟨b|`.
pub fn build_projector_pair(
    rho_env: &DensityOperator,
    d_sys: usize,
    d_env: usize,
) -> Result<ProjectorPair> {
    if d_sys == 0 || d_env == 0 {
        return Err(Error::InvalidParameter("dimensions must be positive".into()));
    }
    if rho_env.dim() != d_env {
        return Err(Error::DimensionMismatch {
            context: "environment state",
            expected: d_env,
            found: rho_env.dim(),
        });
    }
    let d = d_sys * d_env;
    let big = d * d;
    let small = d_sys * d_sys;
    let env = rho_env.operator().matrix();

    // restrict: vec(X) ↦ vec(Tr_E X)
    let mut restrict = CMatrix::zeros(small, big);
    for s in 0..d_sys {
        for t in 0..d_sys {
            for e in 0..d_env {
                let a = s * d_env + e;
                let b = t * d_env + e;
                restrict[(s * d_sys + t, a * d + b)] = ONE;
            }
        }
    }
    // embed: vec(ρ_S) ↦ vec(ρ_S ⊗ ρ_E)
    let mut embed = CMatrix::zeros(big, small);
    for s in 0..d_sys {
        for t in 0..d_sys {
            for e in 0..d_env {
                for f in 0..d_env {
                    let a = s * d_env + e;
                    let b = t * d_env + f;
                    embed[(a * d + b, s * d_sys + t)] = env[(e, f)];
                }
            }
        }
    }
    let p = &embed * &restrict;
    let q = CMatrix::identity(big, big) - &p;
    let (_, rank) = linalg::column_space_basis(&p, RANK_TOL);
    if rank != small {
        return Err(Error::RankDeficient {
            expected: small,
            found: rank,
        });
    }
    Ok(ProjectorPair {
        p: SuperOperator::new(p)?,
        q: SuperOperator::new(q)?,
        rho_env: rho_env.clone(),
        d_sys,
        d_env,
        embed,
        restrict,
    })
}

/// Entrywise defects of the projector algebra.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectorDefects {
    pub p_idempotent: f64,
    pub q_idempotent: f64,
    pub pq: f64,
    pub qp: f64,
    pub completeness: f64,
}

impl ProjectorDefects {
    pub fn max(&self) -> f64 {
        self.p_idempotent
            .max(self.q_idempotent)
            .max(self.pq)
            .max(self.qp)
            .max(self.completeness)
    }
}

impl ProjectorPair {
    pub fn p(&self) -> &SuperOperator {
        &self.p
    }
    pub fn q(&self) -> &SuperOperator {
        &self.q
    }
    pub fn rho_env(&self) -> &DensityOperator {
        &self.rho_env
    }
    pub fn d_sys(&self) -> usize {
        self.d_sys
    }
    pub fn d_env(&self) -> usize {
        self.d_env
    }
    /// Total Liouville-space dimension `D = (d_S d_E)²`.
    pub fn big_dim(&self) -> usize {
        self.p.dim()
    }
    /// System Liouville-space dimension `d_S²`.
    pub fn small_dim(&self) -> usize {
        self.d_sys * self.d_sys
    }
    /// `D x d_S²` matrix of `ρ_S ↦ ρ_S ⊗ ρ_E`.
    pub fn embed(&self) -> &CMatrix {
        &self.embed
    }
    /// `d_S² x D` matrix of `X ↦ Tr_E X`.
    pub fn restrict(&self) -> &CMatrix {
        &self.restrict
    }

    pub fn defects(&self) -> ProjectorDefects {
        let p = self.p.matrix();
        let q = self.q.matrix();
        let n = p.nrows();
        ProjectorDefects {
            p_idempotent: linalg::max_abs_diff(&(p * p), p),
            q_idempotent: linalg::max_abs_diff(&(q * q), q),
            pq: linalg::max_abs(&(p * q)),
            qp: linalg::max_abs(&(q * p)),
            completeness: linalg::max_abs_diff(&(p + q), &CMatrix::identity(n, n)),
        }
    }

    pub fn apply_p(&self, x: &Operator) -> Result<Operator> {
        self.p.apply(x)
    }

    pub fn apply_q(&self, x: &Operator) -> Result<Operator> {
        self.q.apply(x)
    }
}

/// The four blocks of `L_tot = L_P + L_PQ + L_QP + L_Q`.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub l_tot: CMatrix,
    pub l_p: CMatrix,
    pub l_pq: CMatrix,
    pub l_qp: CMatrix,
    pub l_q: CMatrix,
    pub embed: CMatrix,
    pub restrict: CMatrix,
    pub d_sys: usize,
    pub d_env: usize,
}

pub fn decompose_liouville(l_tot: &SuperOperator, pq: &ProjectorPair) -> Result<BlockDecomposition> {
    if l_tot.dim() != pq.big_dim() {
        return Err(Error::DimensionMismatch {
            context: "Liouville vs projector",
            expected: pq.big_dim(),
            found: l_tot.dim(),
        });
    }
    let l = l_tot.matrix();
    let p = pq.p().matrix();
    let q = pq.q().matrix();
    let lp = l * p;
    let lq = l * q;
    Ok(BlockDecomposition {
        l_tot: l.clone(),
        l_p: p * &lp,
        l_pq: p * &lq,
        l_qp: q * &lp,
        l_q: q * &lq,
        embed: pq.embed().clone(),
        restrict: pq.restrict().clone(),
        d_sys: pq.d_sys(),
        d_env: pq.d_env(),
    })
}

impl BlockDecomposition {
    /// `max |L_P + L_PQ + L_QP + L_Q - L_tot|`.
    pub fn reconstruction_defect(&self) -> f64 {
        let sum = &self.l_p + &self.l_pq + &self.l_qp + &self.l_q;
        linalg::max_abs_diff(&sum, &self.l_tot)
    }

    pub fn big_dim(&self) -> usize {
        self.l_tot.nrows()
    }

    pub fn small_dim(&self) -> usize {
        self.d_sys * self.d_sys
    }

    /// `L_P` in system coordinates: `restrict · L_tot · embed`.
    pub fn l_p_restricted(&self) -> CMatrix {
        &self.restrict * &self.l_tot * &self.embed
    }
}

/// Orthonormal basis of `image(Q)`, one column per basis vector.
#[derive(Clone, Debug)]
pub struct QImageBasis {
    basis: CMatrix,
}

pub fn q_image_basis(pq: &ProjectorPair) -> Result<QImageBasis> {
    let expected = pq.big_dim() - pq.small_dim();
    let (basis, rank) = linalg::column_space_basis(pq.q().matrix(), RANK_TOL);
    if rank != expected {
        return Err(Error::RankDeficient {
            expected,
            found: rank,
        });
    }
    Ok(QImageBasis { basis })
}

impl QImageBasis {
    pub fn matrix(&self) -> &CMatrix {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.ncols() == 0
    }

    /// `max |B† B - 1|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.basis.ncols();
        linalg::max_abs_diff(&(self.basis.adjoint() * &self.basis), &CMatrix::identity(n, n))
    }

    /// Largest `|Q b - b|` over the columns.
    pub fn image_defect(&self, pq: &ProjectorPair) -> f64 {
        let qb = pq.q().matrix() * &self.basis;
        qb.column_iter()
            .zip(self.basis.column_iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Coordinates `B† y` of a Q-space vector.
    pub fn coordinates(&self, y: &CVector) -> CVector {
        self.basis.adjoint() * y
    }

    pub fn expand(&self, c: &CVector) -> CVector {
        &self.basis * c
    }
}

/// `ρ_tot0 ↦ (Tr_E ρ_tot0, Q vec(ρ_tot0))`.
pub fn split_initial(rho_tot0: &DensityOperator, pq: &ProjectorPair) -> Result<(Operator, CVector)> {
    let d = pq.d_sys() * pq.d_env();
    if rho_tot0.dim() != d {
        return Err(Error::DimensionMismatch {
            context: "initial total state",
            expected: d,
            found: rho_tot0.dim(),
        });
    }
    let v = vec(rho_tot0.operator());
    let rho0 = unvec(&(pq.restrict() * &v), pq.d_sys())?;
    let delta = pq.q().matrix() * &v;
    Ok((rho0, delta))
}

pub(crate) fn vec_identity(d: usize) -> CVector {
    CVector::from_fn(d * d, |k, _| if k / d == k % d { ONE } else { ZERO })
}
