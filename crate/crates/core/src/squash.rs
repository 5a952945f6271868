//! Squash maps and the analytic construction for C4-symmetric rank-two POVMs.
//!
//! A squash map `F` sends states of the detector space to a qubit such that
//! measuring `sigma_z` / `sigma_x` on the output reproduces `M_z` / `M_x`:
//! `sum_c F_c^dagger sigma_r F_c = M_r` and `sum_c F_c^dagger F_c = I`.
//!
//! The construction runs
//! `phase_normalize -> extract_rank2 -> mu_decompose -> kraus_core -> complete_trace_preserving`
//! and verifies the result.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eig::hermitian_eig;
use crate::error::{Error, Result, Stage};
use crate::group::{c4_eigenprojectors, check_definition1, i_pow, phase_normalize, C4Symmetry};
use crate::linalg::{inner, norm, pauli, ComplexMatrix};
use crate::povm::{Basis, Bb84Povm, Observable};
use crate::random::random_density;

/// Default tolerance of the analytic pipeline and its final verification.
pub const CONSTRUCTION_TOL: f64 = 1e-9;
/// Eigenvalues of the trace deficiency below this are dropped by the completion.
pub const COMPLETION_CUTOFF: f64 = 1e-12;
const SPOT_CHECK_STATES: usize = 20;
const SPOT_CHECK_SEED: u64 = 0x5157_4153;
const ZERO_COMPONENT: f64 = 1e-12;

/// A CP map from `C^in_dim` to a qubit in operator-sum form; each Kraus
/// operator is `2 x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquashMap {
    in_dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl SquashMap {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidShape("a squash map needs at least one Kraus operator".into()))?;
        let in_dim = first.cols();
        for k in &kraus {
            if k.rows() != 2 || k.cols() != in_dim {
                return Err(Error::InvalidShape(format!(
                    "Kraus operator is {}x{}, expected 2x{in_dim}",
                    k.rows(),
                    k.cols()
                )));
            }
        }
        Ok(SquashMap { in_dim, kraus })
    }

    /// The identity channel on a qubit.
    pub fn identity() -> Self {
        SquashMap {
            in_dim: 2,
            kraus: vec![ComplexMatrix::identity(2)],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        2
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `F(rho) = sum_c F_c rho F_c^dagger`.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.kraus
            .iter()
            .fold(ComplexMatrix::zeros(2, 2), |acc, f| &acc + &f.conjugate(rho))
    }

    /// `F^dagger(X) = sum_c F_c^dagger X F_c`.
    pub fn adjoint_apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.kraus.iter().fold(
            ComplexMatrix::zeros(self.in_dim, self.in_dim),
            |acc, f| &acc + &f.adjoint().matmul(x).matmul(f),
        )
    }

    /// `sum_c F_c^dagger F_c`.
    pub fn gram(&self) -> ComplexMatrix {
        self.adjoint_apply(&ComplexMatrix::identity(2))
    }

    /// Post-composes with a qubit unitary: `rho -> W F(rho) W^dagger`.
    pub fn then_unitary(&self, w: &ComplexMatrix) -> SquashMap {
        SquashMap {
            in_dim: self.in_dim,
            kraus: self.kraus.iter().map(|f| w.matmul(f)).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub z_residual: f64,
    pub x_residual: f64,
    pub trace_residual: f64,
    /// Largest `|Tr(F(rho) sigma_r) - Tr(rho M_r)|` over the random spot-check states.
    pub spot_check_max: f64,
    pub tol: f64,
    pub passed: bool,
}

impl VerificationReport {
    pub fn max_residual(&self) -> f64 {
        self.z_residual
            .max(self.x_residual)
            .max(self.trace_residual)
            .max(self.spot_check_max)
    }
}

/// Checks `F^dagger(sigma_r) = M_r` for both bases, trace preservation, and
/// the defining expectation-value identity on random mixed states.
pub fn verify_squash(f: &SquashMap, p: &Bb84Povm, tol: f64) -> Result<VerificationReport> {
    if f.in_dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: f.in_dim(),
        });
    }
    let mz = p.observable_unchecked(Basis::Z);
    let mx = p.observable_unchecked(Basis::X);
    let z_residual = (&f.adjoint_apply(&pauli::z()) - &mz).frobenius_norm();
    let x_residual = (&f.adjoint_apply(&pauli::x()) - &mx).frobenius_norm();
    let trace_residual = (&f.gram() - &ComplexMatrix::identity(p.dim())).frobenius_norm();

    let mut rng = ChaCha8Rng::seed_from_u64(SPOT_CHECK_SEED);
    let mut spot_check_max: f64 = 0.0;
    for _ in 0..SPOT_CHECK_STATES {
        let rho = random_density(p.dim(), &mut rng);
        let out = f.apply(&rho);
        for (sigma, m) in [(pauli::z(), &mz), (pauli::x(), &mx)] {
            let lhs = out.matmul(&sigma).trace().re;
            let rhs = rho.matmul(m).trace().re;
            spot_check_max = spot_check_max.max((lhs - rhs).abs());
        }
    }
    let passed = [z_residual, x_residual, trace_residual, spot_check_max]
        .iter()
        .all(|&r| r <= tol);
    Ok(VerificationReport {
        z_residual,
        x_residual,
        trace_residual,
        spot_check_max,
        tol,
        passed,
    })
}

/// `M_z = lambda (|v><v| - U^2|v><v|U^dagger^2)`.
#[derive(Debug, Clone)]
pub struct Rank2 {
    pub lambda: f64,
    pub v: Vec<Complex64>,
    pub residual: f64,
}

/// Splits a rank-two observable into its `+lambda` eigenvector and checks the
/// `-lambda` partner is `U^2 |v>`.
pub fn extract_rank2(mz: &Observable, sym: &C4Symmetry, tol: f64) -> Result<Rank2> {
    let m = &mz.matrix;
    if sym.dim() != m.rows() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            got: sym.dim(),
        });
    }
    let eig = hermitian_eig(m, tol)?;
    let cutoff = 1e-9 * m.frobenius_norm().max(1.0);
    let rank = eig.eigenvalues.iter().filter(|l| l.abs() > cutoff).count();
    if rank != 2 {
        return Err(Error::RankNotTwo { rank });
    }
    let (lo, hi) = (eig.min(), eig.max());
    if hi <= cutoff || lo >= -cutoff {
        return Err(Error::SpectrumAsymmetric(format!(
            "nonzero eigenvalues {lo} and {hi} have the same sign"
        )));
    }
    if (hi + lo).abs() > tol {
        return Err(Error::SpectrumAsymmetric(format!(
            "eigenvalues {lo} and {hi} are not a +-lambda pair"
        )));
    }
    if hi > 1.0 + tol {
        return Err(Error::SpectrumAsymmetric(format!("lambda = {hi} exceeds 1")));
    }
    let lambda = hi;
    let v = eig.vector(eig.eigenvalues.len() - 1);
    let u2 = sym.unitary().pow(2);
    let u2v = u2.matvec(&v);
    let model = (&ComplexMatrix::projector(&v) - &ComplexMatrix::projector(&u2v)).scale_real(lambda);
    let residual = (m - &model).frobenius_norm();
    Ok(Rank2 {
        lambda,
        v,
        residual,
    })
}

/// `|v> = sum_c mu_c |v_c>` with `U|v_c> = i^c |v_c>` and `mu_c >= 0`.
#[derive(Debug, Clone)]
pub struct MuDecomposition {
    pub lambda: f64,
    pub v: Vec<Complex64>,
    /// `None` where `mu_c` vanishes.
    pub components: [Option<Vec<Complex64>>; 4],
    pub mu: [f64; 4],
}

impl MuDecomposition {
    /// `|sum mu_c^2 - 1|`, `|mu_0^2 + mu_2^2 - 1/2|`, `|mu_1^2 + mu_3^2 - 1/2|`.
    pub fn mu_residuals(&self) -> [f64; 3] {
        let sq = self.mu.map(|m| m * m);
        [
            (sq.iter().sum::<f64>() - 1.0).abs(),
            (sq[0] + sq[2] - 0.5).abs(),
            (sq[1] + sq[3] - 0.5).abs(),
        ]
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }
}

/// `|<v|U^2|v>|`: orthogonality of the `+lambda` and `-lambda` eigenvectors.
pub fn orthogonality_residual(v: &[Complex64], sym: &C4Symmetry) -> f64 {
    let u2v = sym.unitary().pow(2).matvec(v);
    inner(v, &u2v).norm()
}

/// Decomposes `v` along the eigenspaces of a `k = 1` symmetry.
pub fn mu_decompose(
    lambda: f64,
    v: &[Complex64],
    sym: &C4Symmetry,
    tol: f64,
) -> Result<MuDecomposition> {
    if sym.dim() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: sym.dim(),
        });
    }
    let ortho = orthogonality_residual(v, sym);
    if ortho > tol {
        return Err(Error::SpectrumAsymmetric(format!(
            "<v|U^2|v> = {ortho:.3e}, the +-lambda eigenvectors are not related by U^2"
        )));
    }
    let projectors = c4_eigenprojectors(sym)?;
    let mut mu = [0.0; 4];
    let mut components: [Option<Vec<Complex64>>; 4] = Default::default();
    for (c, p) in projectors.iter().enumerate() {
        let w = p.matvec(v);
        let m = norm(&w);
        mu[c] = m;
        if m > ZERO_COMPONENT {
            components[c] = Some(w.into_iter().map(|z| z / m).collect());
        }
    }
    let dec = MuDecomposition {
        lambda,
        v: v.to_vec(),
        components,
        mu,
    };
    let worst = dec.mu_residuals().into_iter().fold(0.0, f64::max);
    if worst > tol {
        return Err(Error::SpectrumAsymmetric(format!(
            "mu coefficients violate the half-weight relation by {worst:.3e}"
        )));
    }
    Ok(dec)
}

/// `F_c = sqrt(2 lambda) (mu_(c+1) |0_y><v_c| + mu_c |1_y><v_(c+1)|)` for
/// every `c` with `mu_c mu_(c+1) != 0`.
pub fn kraus_core(dec: &MuDecomposition) -> Vec<ComplexMatrix> {
    let y0 = pauli::y_eigenvector(0);
    let y1 = pauli::y_eigenvector(1);
    let s = (2.0 * dec.lambda).sqrt();
    (0..4)
        .filter_map(|c| {
            let next = (c + 1) % 4;
            match (&dec.components[c], &dec.components[next]) {
                (Some(vc), Some(vn)) => {
                    let a = ComplexMatrix::outer(&y0, vc).scale_real(s * dec.mu[next]);
                    let b = ComplexMatrix::outer(&y1, vn).scale_real(s * dec.mu[c]);
                    Some(&a + &b)
                }
                _ => None,
            }
        })
        .collect()
}

/// Appends `sqrt(d_j) |0_y><e_j|` for each eigenpair of `I - sum F_c^dagger F_c`.
///
/// The added operators only output `|0_y>`, which has zero `sigma_z` and
/// `sigma_x` expectation, so `F^dagger(sigma_r)` is unchanged.
pub fn complete_trace_preserving(core: Vec<ComplexMatrix>, dim: usize) -> Result<SquashMap> {
    let mut gram = ComplexMatrix::zeros(dim, dim);
    for k in &core {
        if k.rows() != 2 || k.cols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: k.cols(),
            });
        }
        gram = &gram + &k.adjoint().matmul(k);
    }
    let deficiency = (&ComplexMatrix::identity(dim) - &gram).hermitian_part();
    let eig = hermitian_eig(&deficiency, 1e-9)?;
    if eig.min() < -1e-9 {
        return Err(Error::DeficiencyNotPsd { min_eig: eig.min() });
    }
    let y0 = pauli::y_eigenvector(0);
    let mut kraus = core;
    for (j, &d) in eig.eigenvalues.iter().enumerate() {
        if d >= COMPLETION_CUTOFF {
            kraus.push(ComplexMatrix::outer(&y0, &eig.vector(j)).scale_real(d.sqrt()));
        }
    }
    if kraus.is_empty() {
        // only reachable for dim = 0 deficiency with an empty core
        kraus.push(ComplexMatrix::zeros(2, dim));
    }
    SquashMap::new(kraus)
}

/// Intermediate values of one run of the analytic construction.
#[derive(Debug, Clone)]
pub struct Theorem1Trace {
    pub symmetry: C4Symmetry,
    pub rank2: Rank2,
    pub decomposition: MuDecomposition,
    pub core_len: usize,
    pub squash: SquashMap,
    pub report: VerificationReport,
}

impl Theorem1Trace {
    pub fn orthogonality_residual(&self) -> f64 {
        orthogonality_residual(&self.decomposition.v, &self.symmetry)
    }
}

/// The two halves of the midpoint identity for `F^dagger(sigma_z + i sigma_x)`:
/// `||4 lambda sum mu_c mu_(c+1) |v_c><v_(c+1)| - lambda sum i^c U^c|v><v|U^dagger^c||`
/// and `||lambda sum i^c U^c|v><v|U^dagger^c - (M_z + i M_x)||`.
pub fn midpoint_residuals(
    dec: &MuDecomposition,
    sym: &C4Symmetry,
    mz: &ComplexMatrix,
    mx: &ComplexMatrix,
) -> (f64, f64) {
    let d = dec.dim();
    let mut left = ComplexMatrix::zeros(d, d);
    for c in 0..4 {
        let next = (c + 1) % 4;
        if let (Some(vc), Some(vn)) = (&dec.components[c], &dec.components[next]) {
            left = &left
                + &ComplexMatrix::outer(vc, vn).scale_real(4.0 * dec.lambda * dec.mu[c] * dec.mu[next]);
        }
    }
    let u = sym.unitary();
    let mut middle = ComplexMatrix::zeros(d, d);
    let mut ucv = dec.v.clone();
    for c in 0..4 {
        middle = &middle + &ComplexMatrix::projector(&ucv).scale(i_pow(c) * dec.lambda);
        ucv = u.matvec(&ucv);
    }
    let right = mz + &mx.scale(Complex64::new(0.0, 1.0));
    ((&left - &middle).frobenius_norm(), (&middle - &right).frobenius_norm())
}

/// Runs the full analytic construction and keeps every intermediate.
pub fn theorem1_pipeline(p: &Bb84Povm, sym: &C4Symmetry, tol: f64) -> Result<Theorem1Trace> {
    p.ensure_valid(tol).map_err(|e| e.at(Stage::Validation))?;
    let report = check_definition1(sym, p, tol).map_err(|e| e.at(Stage::Symmetry))?;
    if !report.passed {
        return Err(Error::NotC4Symmetric {
            residual: report.max_residual,
        }
        .at(Stage::Symmetry));
    }
    let symmetry = phase_normalize(sym).map_err(|e| e.at(Stage::PhaseNormalization))?;
    if symmetry.k() != 1 {
        return Err(Error::KNotOne { k: symmetry.k() }.at(Stage::PhaseNormalization));
    }
    let mz = p.observable(Basis::Z).map_err(|e| e.at(Stage::Validation))?;
    let rank2 = extract_rank2(&mz, &symmetry, tol).map_err(|e| e.at(Stage::Rank2Extraction))?;
    let decomposition = mu_decompose(rank2.lambda, &rank2.v, &symmetry, tol)
        .map_err(|e| e.at(Stage::MuDecomposition))?;
    let core = kraus_core(&decomposition);
    let core_len = core.len();
    let squash =
        complete_trace_preserving(core, p.dim()).map_err(|e| e.at(Stage::Completion))?;
    let report = verify_squash(&squash, p, tol).map_err(|e| e.at(Stage::Verification))?;
    if !report.passed {
        return Err(Error::VerificationFailed {
            residual: report.max_residual(),
        }
        .at(Stage::Verification));
    }
    Ok(Theorem1Trace {
        symmetry,
        rank2,
        decomposition,
        core_len,
        squash,
        report,
    })
}

/// Squash map for a C4-symmetric BB84 POVM whose observable `M_z` has rank two.
pub fn construct_theorem1(p: &Bb84Povm, sym: &C4Symmetry) -> Result<SquashMap> {
    theorem1_pipeline(p, sym, CONSTRUCTION_TOL).map(|t| t.squash)
}
