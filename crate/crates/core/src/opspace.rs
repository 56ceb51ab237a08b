//! Operators, density operators and superoperators.
//!
//! Vectorization is row-major: the entry `(i, j)` of a `d x d` operator goes
//! to position `i * d + j`. With this convention
//! `vec(A X B) = (A ⊗ Bᵀ) vec(X)` and the commutator `[H, ·]` is the matrix
//! `H ⊗ 1 - 1 ⊗ Hᵀ`. Composite spaces are always ordered system ⊗ environment.

use crate::error::{Error, Result};
use crate::linalg::{self, ZERO};
use crate::{CMatrix, CVector, C64};

/// A square complex matrix acting on a `dim`-dimensional Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: CMatrix,
}

impl Operator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        Ok(Self { m })
    }

    /// Builds a `d x d` operator from row-major entries.
    pub fn from_row_slice(d: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                context: "operator entries",
                expected: d * d,
                found: entries.len(),
            });
        }
        Ok(Self {
            m: CMatrix::from_row_slice(d, d, entries),
        })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self {
            m: CMatrix::from_fn(d, d, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO }),
        }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            m: CMatrix::zeros(d, d),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            m: CMatrix::identity(d, d),
        }
    }

    /// `|i⟩⟨j|` in dimension `d`.
    pub fn basis(d: usize, i: usize, j: usize) -> Self {
        let mut m = CMatrix::zeros(d, d);
        m[(i, j)] = C64::new(1.0, 0.0);
        Self { m }
    }

    /// `|psi⟩⟨psi|`.
    pub fn pure(psi: &CVector) -> Self {
        Self {
            m: psi * psi.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.m)
    }

    pub fn hermitian_defect(&self) -> f64 {
        linalg::hermitian_defect(&self.m)
    }

    /// Hermitian within `rel_tol * max|A|` (entrywise).
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermitian_defect() <= rel_tol * self.max_abs()
    }

    /// Returns `self` unchanged if it is hermitian to `1e-12` relative, else an error.
    pub fn require_hermitian(self, what: &'static str) -> Result<Self> {
        let defect = self.hermitian_defect();
        if defect > 1e-12 * self.max_abs() {
            return Err(Error::NotHermitian { what, defect });
        }
        Ok(self)
    }

    /// `(A + A†) / 2`.
    pub fn hermitized(&self) -> Self {
        Self {
            m: (&self.m + self.m.adjoint()).scale(0.5),
        }
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        Operator {
            m: linalg::kron(&self.m, &other.m),
        }
    }

    pub fn scale(&self, s: f64) -> Operator {
        Operator { m: self.m.scale(s) }
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        same_dim(self, other, "operator sum")?;
        Ok(Operator { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        same_dim(self, other, "operator difference")?;
        Ok(Operator { m: &self.m - &other.m })
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        same_dim(self, other, "operator product")?;
        Ok(Operator { m: &self.m * &other.m })
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        same_dim(self, other, "commutator")?;
        Ok(Operator {
            m: &self.m * &other.m - &other.m * &self.m,
        })
    }

    /// Eigenvalues of the hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<alloc::vec::Vec<f64>> {
        Ok(linalg::hermitian_eigen(&self.hermitized().m)?.0)
    }
}

fn same_dim(a: &Operator, b: &Operator, context: &'static str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            context,
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

pub const DEFAULT_TRACE_TOL: f64 = 1e-10;
pub const DEFAULT_PSD_TOL: f64 = 1e-10;

/// A validated density operator: unit trace, hermitian and positive semidefinite
/// within the stored tolerances.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    op: Operator,
    trace_tol: f64,
    psd_tol: f64,
}

impl DensityOperator {
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerances(op, DEFAULT_TRACE_TOL, DEFAULT_PSD_TOL)
    }

    pub fn with_tolerances(op: Operator, trace_tol: f64, psd_tol: f64) -> Result<Self> {
        let trace = op.trace();
        let defect = op.hermitian_defect();
        if defect > psd_tol {
            return Err(Error::NotHermitian {
                what: "density operator",
                defect,
            });
        }
        let min_eigenvalue = op
            .hermitian_eigenvalues()?
            .first()
            .copied()
            .unwrap_or(0.0);
        if (trace - C64::new(1.0, 0.0)).norm() > trace_tol || min_eigenvalue < -psd_tol {
            return Err(Error::InvalidDensity {
                trace: trace.re,
                min_eigenvalue,
            });
        }
        Ok(Self {
            op,
            trace_tol,
            psd_tol,
        })
    }

    /// Maximally mixed state `1/d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            op: Operator::identity(d).scale(1.0 / d as f64),
            trace_tol: DEFAULT_TRACE_TOL,
            psd_tol: DEFAULT_PSD_TOL,
        }
    }

    /// Gibbs state `exp(-beta H) / Tr exp(-beta H)` of a hermitian `H`.
    pub fn gibbs(h: &Operator, beta: f64) -> Result<Self> {
        let h = h.clone().require_hermitian("Gibbs Hamiltonian")?;
        let (vals, vecs) = linalg::hermitian_eigen(h.matrix())?;
        let e_min = vals.first().copied().unwrap_or(0.0);
        let weights: alloc::vec::Vec<f64> =
            vals.iter().map(|e| libm::exp(-beta * (e - e_min))).collect();
        let z: f64 = weights.iter().sum();
        let d = h.dim();
        let diag = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(weights[i] / z, 0.0)
            } else {
                ZERO
            }
        });
        let m = &vecs * diag * vecs.adjoint();
        // exact hermiticity
        Self::new(Operator::new(m)?.hermitized())
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace_tol(&self) -> f64 {
        self.trace_tol
    }

    pub fn psd_tol(&self) -> f64 {
        self.psd_tol
    }

    pub fn purity(&self) -> f64 {
        (self.op.matrix() * self.op.matrix()).trace().re
    }
}

/// A `D x D` matrix acting on vectorized operators of dimension `d`, `D = d²`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOperator {
    m: CMatrix,
    op_dim: usize,
}

impl SuperOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let op_dim = exact_sqrt(m.nrows()).ok_or(Error::NotPerfectSquare { len: m.nrows() })?;
        Ok(Self { m, op_dim })
    }

    pub fn zeros(op_dim: usize) -> Self {
        Self {
            m: CMatrix::zeros(op_dim * op_dim, op_dim * op_dim),
            op_dim,
        }
    }

    pub fn identity(op_dim: usize) -> Self {
        let n = op_dim * op_dim;
        Self {
            m: CMatrix::identity(n, n),
            op_dim,
        }
    }

    /// Dimension `D = d²` of the matrix.
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Dimension `d` of the underlying operators.
    pub fn op_dim(&self) -> usize {
        self.op_dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        if x.dim() != self.op_dim {
            return Err(Error::DimensionMismatch {
                context: "superoperator action",
                expected: self.op_dim,
                found: x.dim(),
            });
        }
        unvec(&(&self.m * vec(x)), self.op_dim)
    }

    pub fn compose(&self, other: &SuperOperator) -> Result<SuperOperator> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "superoperator composition",
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(SuperOperator {
            m: &self.m * &other.m,
            op_dim: self.op_dim,
        })
    }
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = libm::round(libm::sqrt(n as f64)) as usize;
    (r * r == n).then_some(r)
}

/// Row-major vectorization.
pub fn vec(x: &Operator) -> CVector {
    let d = x.dim();
    CVector::from_fn(d * d, |k, _| x.m[(k / d, k % d)])
}

/// Inverse of [`vec`].
pub fn unvec(v: &CVector, d: usize) -> Result<Operator> {
    if v.len() != d * d {
        return Err(Error::DimensionMismatch {
            context: "unvec",
            expected: d * d,
            found: v.len(),
        });
    }
    Ok(Operator {
        m: CMatrix::from_fn(d, d, |i, j| v[i * d + j]),
    })
}

/// Inverse of [`vec`] that infers `d` from the length.
pub fn unvec_square(v: &CVector) -> Result<Operator> {
    let d = exact_sqrt(v.len()).ok_or(Error::NotPerfectSquare { len: v.len() })?;
    unvec(v, d)
}

/// Hilbert-Schmidt inner product `Tr(A† B)`, conjugate-linear in `a`.
pub fn hs_inner(a: &Operator, b: &Operator) -> Result<C64> {
    same_dim(a, b, "Hilbert-Schmidt product")?;
    Ok(a.m.iter().zip(b.m.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// `Tr_E X` for `X` on `d_sys * d_env` with system ⊗ environment ordering.
pub fn partial_trace_env(x: &Operator, d_sys: usize, d_env: usize) -> Result<Operator> {
    if d_sys == 0 || d_env == 0 || x.dim() != d_sys * d_env {
        return Err(Error::NotFactorizable {
            total: x.dim(),
            d_sys,
            d_env,
        });
    }
    let m = CMatrix::from_fn(d_sys, d_sys, |s, t| {
        (0..d_env).map(|e| x.m[(s * d_env + e, t * d_env + e)]).sum()
    });
    Ok(Operator { m })
}

/// `ρ_S ⊗ ρ_E`.
pub fn embed_with_env(rho_sys: &Operator, rho_env: &DensityOperator) -> Operator {
    rho_sys.kron(rho_env.operator())
}

/// Matrix of `X ↦ [H, X]`. Rejects non-hermitian `H`.
pub fn commutator_superop(h: &Operator) -> Result<SuperOperator> {
    let h = h.clone().require_hermitian("Liouville generator Hamiltonian")?;
    Ok(commutator_superop_unchecked(&h))
}

/// Same as [`commutator_superop`] without the hermiticity check.
pub fn commutator_superop_unchecked(h: &Operator) -> SuperOperator {
    let d = h.dim();
    let id = CMatrix::identity(d, d);
    let m = linalg::kron(h.matrix(), &id) - linalg::kron(&id, &h.matrix().transpose());
    SuperOperator { m, op_dim: d }
}
