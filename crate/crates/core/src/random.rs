//! Seeded generators for vectors, unitaries and Hermitian matrices.
//!
//! Everything draws from [`ChaCha8Rng`] so results are reproducible from a
//! single `u64` seed across platforms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{inner_unchecked, CMat, CVec};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex Gaussian vector (not normalized).
pub fn gaussian_vector(rng: &mut impl Rng, dim: usize) -> CVec {
    CVec::new((0..dim).map(|_| gaussian(rng)).collect()).expect("dim >= 1")
}

/// Haar-random unit vector.
pub fn unit_vector(rng: &mut impl Rng, dim: usize) -> CVec {
    loop {
        if let Ok(v) = gaussian_vector(rng, dim).normalized() {
            return v;
        }
    }
}

/// Random Hermitian matrix (G + G†)/2 with Gaussian G.
pub fn hermitian(rng: &mut impl Rng, dim: usize) -> CMat {
    let mut m = CMat::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = Complex64::new(rng.sample(StandardNormal), 0.0);
        for j in (i + 1)..dim {
            let z = gaussian(rng) * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Orthonormal basis whose first element is `first` (normalized), completed
/// by Gram-Schmidt against Gaussian draws.
pub fn complete_basis(rng: &mut impl Rng, first: &CVec) -> Vec<CVec> {
    let dim = first.dim();
    let mut basis = vec![first.normalized().expect("nonzero first vector")];
    while basis.len() < dim {
        let mut v = gaussian_vector(rng, dim);
        // two passes keep the residual orthogonality near machine precision
        for _ in 0..2 {
            for b in &basis {
                let c = inner_unchecked(b, &v);
                v = v.sub(&b.scale(c)).expect("same dim");
            }
        }
        if v.norm() > 1e-6 {
            basis.push(v.normalized().expect("nonzero"));
        }
    }
    basis
}

/// Haar-random orthonormal basis.
pub fn orthonormal_basis(rng: &mut impl Rng, dim: usize) -> Vec<CVec> {
    let first = unit_vector(rng, dim);
    complete_basis(rng, &first)
}

/// Haar-random unitary (columns form an orthonormal basis).
pub fn unitary(rng: &mut impl Rng, dim: usize) -> CMat {
    CMat::from_columns(&orthonormal_basis(rng, dim)).expect("dim >= 1")
}
