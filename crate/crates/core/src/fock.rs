//! Multi-mode threshold detectors restricted to a fixed photon-number sector.
//!
//! A sector `N = (n_1, ..., n_m)` fixes the photon count of each propagation
//! mode. Within mode `i` a configuration is the split of `n_i` photons into
//! the two z polarizations; the sector space is the tensor product of the
//! per-mode spaces. Basis vectors are ordered lexicographically with the
//! number of z0 photons descending, so the first basis vector has every photon
//! in z0 and the last has every photon in z1.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::eig::unitary_from_generator;
use crate::error::{Error, Result};
use crate::group::{check_definition1, phase_normalize, C4Symmetry, SymmetryReport};
use crate::linalg::{kron_vec, ComplexMatrix, ZERO};
use crate::povm::{Basis, Bb84Povm, Label};

/// Rotation angle of `U_N = exp(i * angle * G)` with
/// `G = sum_i (n_iy0 - n_iy1)`; a quarter turn that maps z labels onto x labels.
pub const U_N_ANGLE: f64 = -PI / 4.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockSector {
    photons: Vec<usize>,
}

impl FockSector {
    pub fn new(photons: Vec<usize>) -> Result<Self> {
        if photons.is_empty() {
            return Err(Error::InvalidSector("at least one mode is required".into()));
        }
        if photons.iter().sum::<usize>() == 0 {
            return Err(Error::InvalidSector("the vacuum sector is not modelled".into()));
        }
        let dim = photons
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n + 1))
            .filter(|&d| d <= crate::eig::MAX_DIM);
        if dim.is_none() {
            return Err(Error::InvalidSector(format!(
                "sector {photons:?} exceeds dimension {}",
                crate::eig::MAX_DIM
            )));
        }
        Ok(FockSector { photons })
    }

    pub fn single_mode(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn photons(&self) -> &[usize] {
        &self.photons
    }

    pub fn modes(&self) -> usize {
        self.photons.len()
    }

    pub fn total_photons(&self) -> usize {
        self.photons.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.photons.iter().map(|n| n + 1).product()
    }

    /// Configurations `(j_1, ..., j_m)` (z0 photon counts) in basis order.
    pub fn basis(&self) -> Vec<Vec<usize>> {
        (0..self.dim()).map(|i| self.configuration(i)).collect()
    }

    pub fn configuration(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.modes()];
        for (slot, &n) in out.iter_mut().zip(&self.photons).rev() {
            let k = index % (n + 1);
            index /= n + 1;
            *slot = n - k;
        }
        out
    }

    pub fn index_of(&self, config: &[usize]) -> Option<usize> {
        if config.len() != self.modes() {
            return None;
        }
        let mut index = 0;
        for (&j, &n) in config.iter().zip(&self.photons) {
            if j > n {
                return None;
            }
            index = index * (n + 1) + (n - j);
        }
        Some(index)
    }

    /// Hermitian generator `sum_i (n_iy0 - n_iy1)` written in the sector basis.
    pub fn y_generator(&self) -> ComplexMatrix {
        let dim = self.dim();
        let mut g = ComplexMatrix::zeros(dim, dim);
        for (i, &n) in self.photons.iter().enumerate() {
            let mut term = ComplexMatrix::identity(1);
            for (l, &nl) in self.photons.iter().enumerate() {
                let factor = if l == i {
                    mode_y_generator(n)
                } else {
                    ComplexMatrix::identity(nl + 1)
                };
                term = term.kron(&factor);
            }
            g = &g + &term;
        }
        g
    }
}

/// Single-mode `n_y0 - n_y1 = i (a_z1^dagger a_z0 - a_z0^dagger a_z1)` on
/// the `n`-photon space, local index `k` = photons in z1.
fn mode_y_generator(n: usize) -> ComplexMatrix {
    let mut g = ComplexMatrix::zeros(n + 1, n + 1);
    for k in 0..n {
        // a_z1^dagger a_z0 moves one photon from z0 (n-k of them) to z1 (k of them)
        let amp = (((n - k) * (k + 1)) as f64).sqrt();
        g[(k + 1, k)] = Complex64::new(0.0, amp);
        g[(k, k + 1)] = Complex64::new(0.0, -amp);
    }
    g
}

/// Normalized amplitudes of `(a_rb^dagger)^n |0>` for one mode, local index
/// `k` = photons in z1.
fn mode_state(n: usize, label: Label) -> Vec<Complex64> {
    let mut v = vec![ZERO; n + 1];
    match label.basis {
        Basis::Z => {
            let k = if label.bit == 0 { 0 } else { n };
            v[k] = Complex64::new(1.0, 0.0);
        }
        Basis::X => {
            // 2^{-n/2} sqrt(C(n, k)) (-1)^{b k}
            let scale = 0.5f64.powf(n as f64 / 2.0);
            let mut binom = 1.0f64;
            for (k, slot) in v.iter_mut().enumerate() {
                let sign = if label.bit == 1 && k % 2 == 1 { -1.0 } else { 1.0 };
                *slot = Complex64::new(sign * scale * binom.sqrt(), 0.0);
                binom = binom * (n - k) as f64 / (k + 1) as f64;
            }
        }
    }
    v
}

/// `|N; r, b>`: every photon of every mode created in polarization `(r, b)`.
pub fn state_nrb(sector: &FockSector, label: Label) -> Vec<Complex64> {
    sector
        .photons()
        .iter()
        .fold(vec![Complex64::new(1.0, 0.0)], |acc, &n| {
            kron_vec(&acc, &mode_state(n, label))
        })
}

#[derive(Debug, Clone)]
pub struct DetectorModel {
    pub sector: FockSector,
    pub povm: Bb84Povm,
    pub u_n: ComplexMatrix,
    /// `|N; r, b>` in cycle order.
    pub states: [Vec<Complex64>; 4],
}

impl DetectorModel {
    pub fn state(&self, label: Label) -> &[Complex64] {
        &self.states[label.cycle_index()]
    }

    pub fn observable(&self, r: Basis) -> ComplexMatrix {
        self.povm.observable_unchecked(r)
    }

    /// `U_N` with `k` = 1 for even photon number and 2 for odd.
    pub fn symmetry(&self) -> Result<C4Symmetry> {
        let k = if self.sector.total_photons() % 2 == 0 { 1 } else { 2 };
        C4Symmetry::new(self.u_n.clone(), k)
    }
}

/// Threshold detector POVM on a sector; double clicks output a uniformly random bit.
pub fn build_detector(sector: &FockSector) -> Result<DetectorModel> {
    let dim = sector.dim();
    let id = ComplexMatrix::identity(dim);
    let states = Label::CYCLE.map(|l| state_nrb(sector, l));
    let element = |r: Basis| {
        let p0 = ComplexMatrix::projector(&states[Label::new(r, 0).cycle_index()]);
        let p1 = ComplexMatrix::projector(&states[Label::new(r, 1).cycle_index()]);
        let double_click = &(&id - &p0) - &p1;
        let m0 = &p0 + &double_click.scale_real(0.5);
        let m1 = &id - &m0;
        (m0, m1)
    };
    let (z0, z1) = element(Basis::Z);
    let (x0, x1) = element(Basis::X);
    let povm = Bb84Povm::new(z0, z1, x0, x1)?;
    let u_n = build_u_n(sector)?;
    Ok(DetectorModel {
        sector: sector.clone(),
        povm,
        u_n,
        states,
    })
}

/// `U_N`: exponential of the y-polarization number difference, built spectrally.
pub fn build_u_n(sector: &FockSector) -> Result<ComplexMatrix> {
    unitary_from_generator(&sector.y_generator(), U_N_ANGLE)
}

/// Phase-normalizes `U_N` and checks both C4 relations against the detector POVM.
pub fn verify_sector_symmetry(model: &DetectorModel, tol: f64) -> Result<SymmetryReport> {
    let sym = phase_normalize(&model.symmetry()?)?;
    check_definition1(&sym, &model.povm, tol)
}

/// All sectors with `modes` modes and `1 <= sum n_i <= max_total`, each
/// `n_i >= min_per_mode`, in lexicographic order of `N`.
pub fn enumerate_sectors(modes: usize, max_total: usize, min_per_mode: usize) -> Vec<FockSector> {
    fn rec(
        prefix: &mut Vec<usize>,
        modes: usize,
        remaining: usize,
        min: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if prefix.len() == modes {
            out.push(prefix.clone());
            return;
        }
        for n in min..=remaining {
            prefix.push(n);
            rec(prefix, modes, remaining - n, min, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    if modes > 0 {
        rec(&mut Vec::new(), modes, max_total, min_per_mode, &mut raw);
    }
    raw.into_iter()
        .filter_map(|n| FockSector::new(n).ok())
        .collect()
}
