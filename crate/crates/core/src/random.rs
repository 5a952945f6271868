//! Seeded random matrices for spot checks and tests.

use num_complex::Complex64;
use rand::Rng;

use crate::eig::unitary_from_generator;
use crate::linalg::ComplexMatrix;

fn entry<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| entry(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    random_matrix(dim, dim, rng).hermitian_part()
}

/// `G G^dagger / Tr(G G^dagger)` for a full-rank random `G`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = random_matrix(dim, dim, rng);
    let rho = g.matmul(&g.adjoint());
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr).hermitian_part()
}

pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim).map(|_| entry(rng)).collect();
    let n = crate::linalg::norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    unitary_from_generator(&random_hermitian(dim, rng), 3.0).expect("Hermitian generator")
}
