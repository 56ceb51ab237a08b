use alloc::string::String;

use crate::C64;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("vector of length {len} is not the vectorization of a square operator")]
    NotPerfectSquare { len: usize },

    #[error("dimension {total} does not factor as {d_sys} x {d_env}")]
    NotFactorizable {
        total: usize,
        d_sys: usize,
        d_env: usize,
    },

    #[error("{what} is not hermitian (defect {defect:.3e})")]
    NotHermitian { what: &'static str, defect: f64 },

    #[error("invalid density operator: trace {trace:.12}, min eigenvalue {min_eigenvalue:.3e}")]
    InvalidDensity { trace: f64, min_eigenvalue: f64 },

    #[error("correlation operator is not in Q-space (|P delta| = {residual:.3e})")]
    NotInQSpace { residual: f64 },

    #[error("correlation operator is not traceless (|tr| = {trace:.3e})")]
    NotTraceless { trace: f64 },

    #[error("unknown catalog model '{0}'")]
    UnknownModel(String),

    #[error("frequency {z} violates Im z >= {min_im:e}")]
    BelowRealAxis { z: C64, min_im: f64 },

    #[error("near pole at z = {z}: condition estimate {condition:.3e}")]
    NearPole { z: C64, condition: f64 },

    #[error("rank deficiency: expected rank {expected}, found {found}")]
    RankDeficient { expected: usize, found: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(&'static str),

    #[error("zero-mode cluster is empty (smallest |lambda| = {smallest:.3e})")]
    EmptyZeroCluster { smallest: f64 },

    #[error("zero-mode cluster is defective")]
    DefectiveCluster,

    #[error("contour has {n_points} nodes but the time window needs at least {required}")]
    NyquistViolation { n_points: usize, required: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time grids differ")]
    GridMismatch,

    #[error("model could not be generated without degeneracies after {attempts} attempts")]
    DegenerateDraw { attempts: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
