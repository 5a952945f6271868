//! BB84-type measurements: four POVM elements `M_(r,b)` with `r in {z, x}`,
//! `b in {0, 1}`, complete per basis.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::eig::{hermitian_eig, hermitian_operator_norm, min_eigenvalue};
use crate::error::{Error, Result};
use crate::linalg::{pauli, ComplexMatrix};

pub const PSD_TOL: f64 = 1e-9;
pub const COMPLETENESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::Z, Basis::X];

    pub fn name(self) -> &'static str {
        match self {
            Basis::Z => "z",
            Basis::X => "x",
        }
    }

    pub fn pauli(self) -> ComplexMatrix {
        match self {
            Basis::Z => pauli::z(),
            Basis::X => pauli::x(),
        }
    }
}

/// One of the four outcome labels `(r, b)`.
///
/// Labels are indexed by their position `c` in the cycle
/// `L_0 = (z,0), L_1 = (x,0), L_2 = (z,1), L_3 = (x,1)`, so `L_(2b) = M_(z,b)`
/// and `L_(2b+1) = M_(x,b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub basis: Basis,
    pub bit: u8,
}

impl Label {
    /// All labels in cycle order.
    pub const CYCLE: [Label; 4] = [
        Label::new(Basis::Z, 0),
        Label::new(Basis::X, 0),
        Label::new(Basis::Z, 1),
        Label::new(Basis::X, 1),
    ];

    pub const fn new(basis: Basis, bit: u8) -> Self {
        Label { basis, bit }
    }

    pub fn cycle_index(self) -> usize {
        let r = match self.basis {
            Basis::Z => 0,
            Basis::X => 1,
        };
        2 * self.bit as usize + r
    }

    pub fn from_cycle_index(c: usize) -> Label {
        Label::CYCLE[c % 4]
    }

    pub fn flipped(self) -> Label {
        Label::new(self.basis, 1 - self.bit)
    }

    pub fn name(self) -> &'static str {
        ["z0", "x0", "z1", "x1"][self.cycle_index()]
    }

    pub fn parse(s: &str) -> Option<Label> {
        Label::CYCLE.into_iter().find(|l| l.name() == s)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bb84Povm {
    dim: usize,
    /// Indexed by [`Label::cycle_index`].
    elements: [ComplexMatrix; 4],
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    /// Minimum eigenvalue of each element, in cycle order.
    pub psd_margins: [f64; 4],
    pub hermiticity_residuals: [f64; 4],
    /// `||M_(r,0) + M_(r,1) - I||_F` for z then x.
    pub completeness_residuals: [f64; 2],
    pub tol: f64,
    pub passed: bool,
}

impl ValidationReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (c, (&m, &h)) in self
            .psd_margins
            .iter()
            .zip(&self.hermiticity_residuals)
            .enumerate()
        {
            let label = Label::from_cycle_index(c);
            if h > self.tol {
                out.push(format!("{label} not Hermitian ({h:.3e})"));
            }
            if m < -self.tol {
                out.push(format!("{label} not PSD (min eigenvalue {m:.3e})"));
            }
        }
        for (b, &r) in Basis::BOTH.iter().zip(&self.completeness_residuals) {
            if r > self.tol {
                out.push(format!("{} basis incomplete (residual {r:.3e})", b.name()));
            }
        }
        out
    }
}

/// `M_r = M_(r,0) - M_(r,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub basis: Basis,
    pub matrix: ComplexMatrix,
}

impl Bb84Povm {
    /// Builds a POVM from `M_(z,0), M_(z,1), M_(x,0), M_(x,1)`. Only shapes are
    /// checked here; use [`Bb84Povm::validate`] for the POVM axioms.
    pub fn new(
        z0: ComplexMatrix,
        z1: ComplexMatrix,
        x0: ComplexMatrix,
        x1: ComplexMatrix,
    ) -> Result<Self> {
        let dim = z0.rows();
        for m in [&z0, &z1, &x0, &x1] {
            if !m.is_square() {
                return Err(Error::InvalidShape(format!(
                    "POVM element is {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            if m.rows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.rows(),
                });
            }
            if !m.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(Bb84Povm {
            dim,
            elements: [z0, x0, z1, x1],
        })
    }

    /// Builds a POVM from elements given in cycle order `L_0..L_3`.
    pub fn from_cycle(elements: [ComplexMatrix; 4]) -> Result<Self> {
        let [l0, l1, l2, l3] = elements;
        Self::new(l0, l2, l1, l3)
    }

    /// The ideal qubit measurement `M_(z,b) = (I +- sigma_z)/2`, `M_(x,b) = (I +- sigma_x)/2`.
    pub fn ideal_qubit() -> Self {
        let id = ComplexMatrix::identity(2);
        let half = |s: f64, p: &ComplexMatrix| (&id + &p.scale_real(s)).scale_real(0.5);
        let (z, x) = (pauli::z(), pauli::x());
        Self::new(half(1.0, &z), half(-1.0, &z), half(1.0, &x), half(-1.0, &x))
            .expect("fixed qubit POVM")
    }

    /// Every element `I/2`: outcomes are pure coin flips.
    pub fn maximally_noisy(dim: usize) -> Self {
        let h = ComplexMatrix::identity(dim).scale_real(0.5);
        Self::new(h.clone(), h.clone(), h.clone(), h).expect("uniform POVM")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn element(&self, label: Label) -> &ComplexMatrix {
        &self.elements[label.cycle_index()]
    }

    /// `L_c`, with `c` taken mod 4.
    pub fn cycle_element(&self, c: usize) -> &ComplexMatrix {
        &self.elements[c % 4]
    }

    pub fn cycle_elements(&self) -> &[ComplexMatrix; 4] {
        &self.elements
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        let mut psd_margins = [0.0; 4];
        let mut hermiticity_residuals = [0.0; 4];
        for (c, m) in self.elements.iter().enumerate() {
            hermiticity_residuals[c] = m.hermiticity_residual();
            psd_margins[c] = min_eigenvalue(&m.hermitian_part()).unwrap_or(f64::NEG_INFINITY);
        }
        let id = ComplexMatrix::identity(self.dim);
        let completeness_residuals = Basis::BOTH.map(|r| {
            let sum = self.element(Label::new(r, 0)) + self.element(Label::new(r, 1));
            (&sum - &id).frobenius_norm()
        });
        let passed = hermiticity_residuals.iter().all(|&h| h <= tol)
            && psd_margins.iter().all(|&m| m >= -tol)
            && completeness_residuals.iter().all(|&r| r <= tol);
        ValidationReport {
            psd_margins,
            hermiticity_residuals,
            completeness_residuals,
            tol,
            passed,
        }
    }

    pub fn ensure_valid(&self, tol: f64) -> Result<()> {
        let report = self.validate(tol);
        if report.passed {
            Ok(())
        } else {
            Err(Error::InvalidPovm(report.failures().join("; ")))
        }
    }

    /// Difference of the two elements of basis `r`, without validation.
    pub(crate) fn observable_unchecked(&self, r: Basis) -> ComplexMatrix {
        self.element(Label::new(r, 0)) - self.element(Label::new(r, 1))
    }

    pub fn observable(&self, r: Basis) -> Result<Observable> {
        self.ensure_valid(PSD_TOL)?;
        let matrix = self.observable_unchecked(r);
        let norm = hermitian_operator_norm(&matrix)?;
        if norm > 1.0 + PSD_TOL {
            return Err(Error::InvalidPovm(format!(
                "observable {} has norm {norm}",
                r.name()
            )));
        }
        Ok(Observable { basis: r, matrix })
    }

    /// `Tr(rho M_(r,b))`, clamped into `[0, 1]`.
    pub fn outcome_probability(&self, rho: &ComplexMatrix, label: Label) -> Result<f64> {
        check_state(rho, self.dim, PSD_TOL)?;
        let p = rho.matmul(self.element(label)).trace().re;
        Ok(p.clamp(0.0, 1.0))
    }
}

/// Checks that `rho` is a density matrix of dimension `dim`.
pub fn check_state(rho: &ComplexMatrix, dim: usize, tol: f64) -> Result<()> {
    if !rho.is_square() || rho.rows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: rho.rows(),
        });
    }
    let tr = rho.trace();
    if (tr - Complex64::new(1.0, 0.0)).norm() > tol {
        return Err(Error::NotAState(format!("trace {tr}")));
    }
    let eig = hermitian_eig(rho, tol).map_err(|e| Error::NotAState(e.to_string()))?;
    if eig.min() < -tol {
        return Err(Error::NotAState(format!("min eigenvalue {:.3e}", eig.min())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::basis_vector;

    #[test]
    fn cycle_indexing() {
        for (c, l) in Label::CYCLE.iter().enumerate() {
            assert_eq!(l.cycle_index(), c);
            assert_eq!(Label::parse(l.name()), Some(*l));
        }
        assert_eq!(Label::new(Basis::Z, 1).cycle_index(), 2);
        assert_eq!(Label::new(Basis::X, 1).cycle_index(), 3);
    }

    #[test]
    fn ideal_qubit_is_valid() {
        let p = Bb84Povm::ideal_qubit();
        assert!(p.validate(1e-12).passed);
        assert_eq!(p.observable(Basis::Z).unwrap().matrix, pauli::z());
        assert_eq!(p.observable(Basis::X).unwrap().matrix, pauli::x());
    }

    #[test]
    fn double_identity_fails_completeness() {
        let id = ComplexMatrix::identity(2);
        let h = id.scale_real(0.5);
        let p = Bb84Povm::new(id.clone(), id.clone(), h.clone(), h).unwrap();
        let report = p.validate(1e-9);
        assert!(!report.passed);
        assert!((report.completeness_residuals[0] - id.frobenius_norm()).abs() < 1e-15);
        assert!(report.completeness_residuals[1] < 1e-15);
        assert!(matches!(p.observable(Basis::Z), Err(Error::InvalidPovm(_))));
    }

    #[test]
    fn negative_element_fails_psd() {
        let id = ComplexMatrix::identity(2);
        let a = ComplexMatrix::diag_real(&[1.5, 0.5]);
        let b = &id - &a;
        let p = Bb84Povm::new(a.clone(), b.clone(), a, b).unwrap();
        let report = p.validate(1e-9);
        assert!(!report.passed);
        assert!((report.psd_margins[2] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn uniform_povm_observable_is_zero() {
        let p = Bb84Povm::maximally_noisy(3);
        assert_eq!(p.observable(Basis::X).unwrap().matrix, ComplexMatrix::zeros(3, 3));
    }

    #[test]
    fn probabilities() {
        let p = Bb84Povm::ideal_qubit();
        let rho = ComplexMatrix::projector(&basis_vector(2, 0));
        assert_eq!(p.outcome_probability(&rho, Label::new(Basis::Z, 0)).unwrap(), 1.0);
        let px = p.outcome_probability(&rho, Label::new(Basis::X, 0)).unwrap();
        assert!((px - 0.5).abs() < 1e-15);
    }

    #[test]
    fn probability_rejects_non_states() {
        let p = Bb84Povm::ideal_qubit();
        let l = Label::new(Basis::Z, 0);
        let not_normalized = ComplexMatrix::identity(2);
        assert!(matches!(p.outcome_probability(&not_normalized, l), Err(Error::NotAState(_))));
        let negative = ComplexMatrix::diag_real(&[1.5, -0.5]);
        assert!(matches!(p.outcome_probability(&negative, l), Err(Error::NotAState(_))));
        let wrong_dim = ComplexMatrix::diag_real(&[1.0, 0.0, 0.0]);
        assert!(matches!(
            p.outcome_probability(&wrong_dim, l),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
