//! Seeded random matrices.
//!
//! All draws go through `ChaCha8Rng::seed_from_u64`, so a seed reproduces the
//! same matrices on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{CMatrix, C64};

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Gaussian hermitian matrix: `g_ii` on the diagonal, `(g_ij + i h_ij)/√2` above it.
pub fn gaussian_hermitian(d: usize, rng: &mut Rng) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    let s = core::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        m[(i, i)] = C64::new(normal(rng), 0.0);
        for j in (i + 1)..d {
            let z = C64::new(normal(rng) * s, normal(rng) * s);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(normal(rng), normal(rng)))
}

/// Random full-rank density matrix `G G† / Tr(G G†)` from a Ginibre draw.
pub fn random_density(d: usize, rng: &mut Rng) -> CMatrix {
    let g = gaussian_matrix(d, d, rng);
    let m = &g * g.adjoint();
    let tr: C64 = (0..d).map(|i| m[(i, i)]).sum();
    let h = m / tr;
    (&h + h.adjoint()) * C64::new(0.5, 0.0)
}
