//! Squash existence as a convex feasibility problem on the Choi matrix.
//!
//! The Choi matrix of a map with Kraus operators `F_c` (each `2 x d`) lives on
//! `C^2 (x) C^d` (output first) and is `J = sum_c vec(F_c) vec(F_c)^dagger`
//! with `vec(F)[a * d + i] = F[a][i]`. A squash exists iff some Hermitian `J`
//! is PSD and satisfies the affine conditions
//! `Tr_out[(s (x) I) J] = T_s` for `(s, T_s)` in
//! `{(I, I), (sigma_z, M_z^T), (sigma_x, M_x^T)}`.
//! The search alternates between the affine set and the PSD cone.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::eig::{hermitian_eig, inverse_sqrt, project_psd};
use crate::error::{Error, Result};
use crate::linalg::{pauli, ComplexMatrix, Keep};
use crate::povm::{Basis, Bb84Povm, Observable};
use crate::squash::{verify_squash, SquashMap};

pub const DEFAULT_MAX_ITER: usize = 20_000;
pub const DEFAULT_GAP_TOL: f64 = 1e-8;
pub const DEFAULT_WITNESS_GRID: usize = 720;
/// A witness value above `1 + WITNESS_MARGIN` certifies infeasibility.
pub const WITNESS_MARGIN: f64 = 1e-9;
/// Tolerance at which a FEASIBLE verdict's squash map is verified.
pub const FEASIBLE_VERIFY_TOL: f64 = 1e-6;
const KRAUS_CUTOFF: f64 = 1e-10;
const GS_DROP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    in_dim: usize,
    j: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn new(in_dim: usize, j: ComplexMatrix) -> Result<Self> {
        if !j.is_square() || j.rows() != 2 * in_dim {
            return Err(Error::DimensionMismatch {
                expected: 2 * in_dim,
                got: j.rows(),
            });
        }
        let residual = j.hermiticity_residual();
        if residual > 1e-9 * j.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian { residual });
        }
        Ok(ChoiMatrix { in_dim, j })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.j
    }

    /// `||Tr_out J - I||_F`.
    pub fn trace_residual(&self) -> f64 {
        let pt = self
            .j
            .partial_trace((2, self.in_dim), Keep::Second)
            .expect("shape checked on construction");
        (&pt - &ComplexMatrix::identity(self.in_dim)).frobenius_norm()
    }
}

pub fn choi_from_squash(f: &SquashMap) -> ChoiMatrix {
    let d = f.in_dim();
    let mut j = ComplexMatrix::zeros(2 * d, 2 * d);
    for k in f.kraus() {
        // row-major entries of a 2 x d operator are exactly vec(F)
        let v = k.entries();
        j = &j + &ComplexMatrix::outer(v, v);
    }
    ChoiMatrix { in_dim: d, j }
}

pub fn squash_from_choi(c: &ChoiMatrix) -> Result<SquashMap> {
    let eig = hermitian_eig(&c.j, 1e-9)?;
    if eig.min() < -1e-8 {
        return Err(Error::NotPsd { min_eig: eig.min() });
    }
    let residual = c.trace_residual();
    if residual > 1e-6 {
        return Err(Error::NotTracePreserving { residual });
    }
    let d = c.in_dim;
    let kraus: Vec<ComplexMatrix> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l >= KRAUS_CUTOFF)
        .map(|(k, &l)| {
            let u = eig.vector(k);
            let s = l.sqrt();
            ComplexMatrix::from_fn(2, d, |a, i| u[a * d + i] * s)
        })
        .collect();
    if kraus.is_empty() {
        return Err(Error::NotTracePreserving { residual });
    }
    SquashMap::new(kraus)
}

/// Orthonormal basis of `d x d` Hermitian matrices under `Re Tr(A^dagger B)`.
fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut e = ComplexMatrix::zeros(d, d);
        e[(i, i)] = Complex64::new(1.0, 0.0);
        out.push(e);
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut re = ComplexMatrix::zeros(d, d);
            re[(i, j)] = Complex64::new(h, 0.0);
            re[(j, i)] = Complex64::new(h, 0.0);
            out.push(re);
            let mut im = ComplexMatrix::zeros(d, d);
            im[(i, j)] = Complex64::new(0.0, -h);
            im[(j, i)] = Complex64::new(0.0, h);
            out.push(im);
        }
    }
    out
}

/// The affine set `{J : <A_k, J> = c_k}` stored as an orthonormalized system.
#[derive(Debug, Clone)]
pub struct AffineConstraints {
    in_dim: usize,
    basis: Vec<ComplexMatrix>,
    values: Vec<f64>,
}

impl AffineConstraints {
    /// Orthonormalizes the functionals by modified Gram-Schmidt; dependent
    /// functionals are dropped.
    pub fn from_functionals(in_dim: usize, functionals: Vec<(ComplexMatrix, f64)>) -> Self {
        let mut basis: Vec<ComplexMatrix> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for (mut a, mut c) in functionals {
            for (q, &cq) in basis.iter().zip(&values) {
                let r = q.hs_inner(&a);
                a = &a - &q.scale_real(r);
                c -= r * cq;
            }
            let n = a.frobenius_norm();
            if n > GS_DROP {
                basis.push(a.scale_real(1.0 / n));
                values.push(c / n);
            }
        }
        AffineConstraints {
            in_dim,
            basis,
            values,
        }
    }

    /// Trace preservation plus `F^dagger(sigma_r) = M_r` for both bases.
    pub fn for_povm(p: &Bb84Povm) -> Self {
        let d = p.dim();
        let targets = [
            (ComplexMatrix::identity(2), ComplexMatrix::identity(d)),
            (pauli::z(), p.observable_unchecked(Basis::Z).transpose()),
            (pauli::x(), p.observable_unchecked(Basis::X).transpose()),
        ];
        let herm = hermitian_basis(d);
        let mut functionals = Vec::with_capacity(3 * d * d);
        for (sigma, target) in &targets {
            for b in &herm {
                let value = b.matmul(target).trace().re;
                functionals.push((sigma.kron(b), value));
            }
        }
        Self::from_functionals(d, functionals)
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn project(&self, j: &ComplexMatrix) -> ComplexMatrix {
        let mut out = j.clone();
        for (q, &c) in self.basis.iter().zip(&self.values) {
            let r = q.hs_inner(j) - c;
            if r != 0.0 {
                for (o, qv) in out.data_mut().iter_mut().zip(q.entries()) {
                    *o -= qv * r;
                }
            }
        }
        out
    }

    /// Frobenius distance from `j` to the affine set.
    pub fn residual(&self, j: &ComplexMatrix) -> f64 {
        self.basis
            .iter()
            .zip(&self.values)
            .map(|(q, &c)| (q.hs_inner(j) - c).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Feasible,
    Infeasible,
    Undecided,
}

/// A direction `theta` and state maximizing `<cos(theta) M_z + sin(theta) M_x>`.
/// Any squash would need an output Bloch vector of length `value`, so
/// `value > 1` rules one out.
#[derive(Debug, Clone)]
pub struct Witness {
    pub theta: f64,
    pub vector: Vec<Complex64>,
    pub value: f64,
}

impl Witness {
    pub fn state(&self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.vector)
    }

    pub fn certifies_infeasibility(&self) -> bool {
        self.value > 1.0 + WITNESS_MARGIN
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub verdict: Verdict,
    pub squash: Option<SquashMap>,
    pub witness: Option<Witness>,
    pub gap: f64,
    pub iterations: usize,
}

fn directional_max(mz: &ComplexMatrix, mx: &ComplexMatrix, theta: f64) -> (f64, Vec<Complex64>) {
    let a = &mz.scale_real(theta.cos()) + &mx.scale_real(theta.sin());
    let eig = hermitian_eig(&a, 1e-9).expect("observables are Hermitian");
    let top = eig.eigenvalues.len() - 1;
    (eig.max(), eig.vector(top))
}

/// Maximizes `lambda_max(cos(theta) M_z + sin(theta) M_x)` over a `grid`-point
/// sweep of `[0, 2 pi)`, then refines around the best point by golden section.
pub fn bloch_witness(mz: &Observable, mx: &Observable, grid: usize) -> Witness {
    let grid = grid.max(8);
    let step = 2.0 * PI / grid as f64;
    let (a, b) = (&mz.matrix, &mx.matrix);
    let mut best_theta = 0.0;
    let mut best_value = f64::NEG_INFINITY;
    for k in 0..grid {
        let theta = k as f64 * step;
        let (value, _) = directional_max(a, b, theta);
        // ties keep the earliest angle
        if value > best_value + 1e-12 {
            best_value = value;
            best_theta = theta;
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best_theta - step, best_theta + step);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = directional_max(a, b, x1).0;
    let mut f2 = directional_max(a, b, x2).0;
    while hi - lo > 1e-10 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = directional_max(a, b, x2).0;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = directional_max(a, b, x1).0;
        }
    }
    let refined = 0.5 * (lo + hi);
    let (refined_value, refined_vec) = directional_max(a, b, refined);
    let (theta, value, vector) = if refined_value >= best_value {
        (refined, refined_value, refined_vec)
    } else {
        let (v, vec) = directional_max(a, b, best_theta);
        (best_theta, v, vec)
    };
    Witness {
        theta: theta.rem_euclid(2.0 * PI),
        vector,
        value,
    }
}

/// Alternating projections between the affine constraint set and the PSD cone.
pub fn find_squash(p: &Bb84Povm, max_iter: usize, tol: f64) -> Result<FeasibilityReport> {
    p.ensure_valid(crate::povm::PSD_TOL)?;
    let mz = p.observable(Basis::Z)?;
    let mx = p.observable(Basis::X)?;
    let witness = bloch_witness(&mz, &mx, DEFAULT_WITNESS_GRID);
    if witness.certifies_infeasibility() {
        return Ok(FeasibilityReport {
            verdict: Verdict::Infeasible,
            squash: None,
            witness: Some(witness),
            gap: f64::INFINITY,
            iterations: 0,
        });
    }

    let d = p.dim();
    let constraints = AffineConstraints::for_povm(p);
    let mut x = ComplexMatrix::identity(2 * d).scale_real(0.5);
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let y = constraints.project(&x);
        let z = project_psd(&y)?;
        gap = (&y - &z).frobenius_norm();
        x = z;
        if gap <= tol {
            break;
        }
    }
    if gap <= tol {
        if let Some(squash) = extract_verified(&x, d, p) {
            return Ok(FeasibilityReport {
                verdict: Verdict::Feasible,
                squash: Some(squash),
                witness: Some(witness),
                gap,
                iterations,
            });
        }
    }
    Ok(FeasibilityReport {
        verdict: Verdict::Undecided,
        squash: None,
        witness: Some(witness),
        gap,
        iterations,
    })
}

/// Kraus operators from a PSD iterate, renormalized to be exactly trace
/// preserving (`F_c <- F_c G^(-1/2)` with `G = sum F^dagger F`), then verified.
fn extract_verified(j: &ComplexMatrix, d: usize, p: &Bb84Povm) -> Option<SquashMap> {
    let choi = ChoiMatrix::new(d, j.hermitian_part()).ok()?;
    let raw = squash_from_choi(&choi).ok()?;
    let g_inv_sqrt = inverse_sqrt(&raw.gram().hermitian_part()).ok()?;
    let squash = SquashMap::new(raw.kraus().iter().map(|f| f.matmul(&g_inv_sqrt)).collect()).ok()?;
    let report = verify_squash(&squash, p, FEASIBLE_VERIFY_TOL).ok()?;
    report.passed.then_some(squash)
}
