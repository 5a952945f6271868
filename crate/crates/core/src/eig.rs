//! Hermitian eigendecomposition by cyclic complex Jacobi rotations, and the
//! spectral functions built on it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ONE, ZERO};

pub const MAX_DIM: usize = 256;
pub const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_RTOL: f64 = 1e-13;

/// Default relative Hermiticity tolerance used by the convenience wrappers.
pub const DEFAULT_HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are the orthonormal eigenvectors, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }

    /// `V f(Lambda) V^dagger`.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let fl: Vec<Complex64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |r, c| {
            (0..n).map(|k| v[(r, k)] * fl[k] * v[(c, k)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|l| Complex64::new(l, 0.0))
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

pub(crate) fn check_hermitian(a: &ComplexMatrix, tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidShape(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let residual = a.hermiticity_residual();
    if residual > tol * a.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Cyclic Jacobi sweeps run until every off-diagonal magnitude is below
/// `1e-13 * ||A||_F`, or fail after [`MAX_SWEEPS`].
pub fn hermitian_eig(a: &ComplexMatrix, tol: f64) -> Result<HermitianEig> {
    check_hermitian(a, tol)?;
    let n = a.dim();
    if n > MAX_DIM {
        return Err(Error::InvalidShape(format!("dimension {n} exceeds {MAX_DIM}")));
    }
    let mut w = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let threshold = OFF_DIAGONAL_RTOL * a.frobenius_norm();

    let mut sweeps = 0;
    while max_off_diagonal(&w) > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off: max_off_diagonal(&w),
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut w, &mut v, p, q);
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].re.total_cmp(&w[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| w[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

fn max_off_diagonal(w: &ComplexMatrix) -> f64 {
    let n = w.dim();
    let mut m = 0.0f64;
    for p in 0..n {
        for q in p + 1..n {
            m = m.max(w[(p, q)].norm());
        }
    }
    m
}

/// Annihilates `w[p][q]` with `J = diag(1, conj(e)) * [[c, s], [-s, c]]`,
/// where `e` is the phase of `w[p][q]`; then `w <- J^dagger w J`, `v <- v J`.
fn rotate(w: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = w[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let theta = (w[(q, q)].re - w[(p, p)].re) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let j00 = Complex64::new(c, 0.0);
    let j01 = Complex64::new(s, 0.0);
    let j10 = -phase.conj() * s;
    let j11 = phase.conj() * c;

    let n = w.dim();
    for k in 0..n {
        let akp = w[(k, p)];
        let akq = w[(k, q)];
        w[(k, p)] = akp * j00 + akq * j10;
        w[(k, q)] = akp * j01 + akq * j11;
    }
    for k in 0..n {
        let apk = w[(p, k)];
        let aqk = w[(q, k)];
        w[(p, k)] = j00.conj() * apk + j10.conj() * aqk;
        w[(q, k)] = j01.conj() * apk + j11.conj() * aqk;
    }
    w[(p, q)] = ZERO;
    w[(q, p)] = ZERO;
    w[(p, p)] = Complex64::new(w[(p, p)].re, 0.0);
    w[(q, q)] = Complex64::new(w[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * j00 + vkq * j10;
        v[(k, q)] = vkp * j01 + vkq * j11;
    }
}

/// `exp(i * angle * A)` for Hermitian `A`.
pub fn unitary_from_generator(a: &ComplexMatrix, angle: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a, DEFAULT_HERMITIAN_TOL)?;
    Ok(eig.apply(|l| Complex64::from_polar(1.0, angle * l)))
}

/// Number of eigenvalues with `|lambda| > tol`.
pub fn rank_tol(a: &ComplexMatrix, tol: f64) -> Result<usize> {
    let eig = hermitian_eig(a, DEFAULT_HERMITIAN_TOL)?;
    Ok(eig.eigenvalues.iter().filter(|l| l.abs() > tol).count())
}

/// [`rank_tol`] with the default cutoff `1e-9 * max(1, ||A||_F)`.
pub fn rank(a: &ComplexMatrix) -> Result<usize> {
    rank_tol(a, 1e-9 * a.frobenius_norm().max(1.0))
}

pub fn min_eigenvalue(a: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eig(a, DEFAULT_HERMITIAN_TOL)?.min())
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_operator_norm(a: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eig(a, DEFAULT_HERMITIAN_TOL)?;
    Ok(eig.min().abs().max(eig.max().abs()))
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped to zero).
pub fn project_psd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a, DEFAULT_HERMITIAN_TOL)?;
    Ok(eig.apply(|l| Complex64::new(l.max(0.0), 0.0)))
}

/// `A^(-1/2)` for a positive definite `A`.
pub fn inverse_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a, DEFAULT_HERMITIAN_TOL)?;
    if eig.min() <= 0.0 {
        return Err(Error::NotPsd { min_eig: eig.min() });
    }
    Ok(eig.apply(|l| ONE / l.sqrt()))
}
