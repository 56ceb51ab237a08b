//! Exact frequency-domain equation of motion for an open quantum system
//! coupled to a finite environment.
//!
//! The crate is `no_std` (it needs `alloc`). Starting from a composite model
//! `H_tot = H_S ⊗ 1 + 1 ⊗ H_E + Σ S_k ⊗ E_k` it builds the projector pair
//! `P = Tr_E(·) ⊗ ρ_E`, `Q = 1 - P`, the four Liouville blocks and from them
//!
//! * the effective Liouville `L(z) = L_P + L_PQ [z - L_Q]⁻¹ L_QP`,
//! * the correlated initial shift `Δρ₀(z) = L_PQ [z - L_Q]⁻¹ Q ρ_tot0`,
//! * the reduced Laplace-domain state `ρ(z) = i [z - L(z)]⁻¹ (ρ_0 + Δρ₀(z))`,
//!
//! cross-checks them against the full closed-system resolvent, inverts the
//! Laplace transform on a horizontal contour, and extracts long-time limits
//! from the zero modes of `L(z)`.
//!
//! Units: `ħ = 1`, all energies and frequencies dimensionless.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod effective;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod longtime;
pub mod model;
pub mod opspace;
pub mod projection;
pub mod timedomain;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex<f64>;
pub type CMatrix = nalgebra::DMatrix<C64>;
pub type CVector = nalgebra::DVector<C64>;

pub use effective::{ComplexFrequency, EffectiveLiouvilleEval, EffectiveSystem, FrequencyState};
pub use longtime::{SpectralData, TimescaleDiagnostics, ZeroModeProjector};
pub use model::{CompositeModel, Coupling, EigenCache, InitialStateSpec};
pub use opspace::{DensityOperator, Operator, SuperOperator};
pub use projection::{BlockDecomposition, ProjectorPair, QImageBasis};
pub use timedomain::{ContourSpec, TimeGrid, Trajectory};
