#![allow(dead_code)]

use nalgebra::DMatrix;
use nml_pca::{svd, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, n: usize, m: usize) -> Matrix {
    Matrix::from_fn(n, m, |_, _| rng.sample(StandardNormal))
}

pub fn to_na(x: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(x.rows(), x.cols(), x.as_slice())
}

pub fn from_na(x: &DMatrix<f64>) -> Matrix {
    Matrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)])
}

/// `m x k` matrix with orthonormal columns, from the QR factorization of a
/// Gaussian matrix (computed by nalgebra, independent of the crate's SVD).
pub fn random_orthonormal(rng: &mut impl Rng, m: usize, k: usize) -> Matrix {
    let g = to_na(&gaussian(rng, m, k));
    from_na(&g.qr().q())
}

/// Rank-`r` product of Gaussian factors plus i.i.d. noise with standard
/// deviation `rel_noise * λ_r` of the clean matrix.
pub fn low_rank_plus_noise(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    r: usize,
    rel_noise: f64,
) -> Matrix {
    let a = gaussian(rng, n, r);
    let b = gaussian(rng, r, m);
    let clean = a.matmul(&b).unwrap();
    let lam_r = svd(&clean).unwrap().singular_values()[r - 1];
    let sigma = rel_noise * lam_r;
    Matrix::from_fn(n, m, |i, j| {
        let z: f64 = rng.sample(StandardNormal);
        clean.get(i, j) + sigma * z
    })
}
