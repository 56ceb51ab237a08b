use crate::ensemble;
use crate::CMatrix;

pub(crate) fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    ensemble::gaussian_matrix(rows, cols, &mut ensemble::rng(seed))
}

pub(crate) fn random_hermitian(d: usize, seed: u64) -> CMatrix {
    ensemble::gaussian_hermitian(d, &mut ensemble::rng(seed))
}
