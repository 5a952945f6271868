//! Group symmetrization of BB84 POVMs, squash pullback, the `M_0`
//! counterexample and the BBM92 zero-error attack.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eig::unitary_from_generator;
use crate::error::{Error, Result};
use crate::group::{check_definition2, regular_representation, FiniteGroup, LabelAction, SymmetryReport};
use crate::linalg::{basis_vector, pauli, ComplexMatrix};
use crate::povm::{Basis, Bb84Povm, Label};
use crate::random::random_density;
use crate::squash::{verify_squash, SquashMap};

pub const PULLBACK_TOL: f64 = 1e-8;

/// `M~_c = sum_g M_(g^-1 c) (x) |g><g|` on `C^d (x) C^|G|`, with the symmetry
/// `V~(g) = I_d (x) R(g)`.
#[derive(Debug, Clone)]
pub struct SymmetrizedPovm {
    pub base: Bb84Povm,
    pub group: FiniteGroup,
    pub action: LabelAction,
    pub tilde: Bb84Povm,
    pub rep: Vec<ComplexMatrix>,
}

impl SymmetrizedPovm {
    pub fn check_definition2(&self, tol: f64) -> Result<SymmetryReport> {
        check_definition2(&self.rep, &self.action, &self.tilde, tol)
    }

    /// Embeds `C^d` into the symmetrized space via `|psi> -> |psi>|e>`.
    pub fn embedding(&self) -> ComplexMatrix {
        let n = self.group.order();
        let e = self.group.identity();
        ComplexMatrix::identity(self.base.dim()).kron(&ComplexMatrix::from_vec(
            n,
            1,
            basis_vector(n, e),
        )
        .expect("column vector"))
    }
}

pub fn symmetrize(p: &Bb84Povm, group: &FiniteGroup, action: &LabelAction) -> Result<SymmetrizedPovm> {
    let action = LabelAction::new(group, action.perms().to_vec())?;
    let d = p.dim();
    let n = group.order();
    let inverse: Vec<usize> = (0..n).map(|g| group.inverse(g)).collect();
    let elements: [ComplexMatrix; 4] = std::array::from_fn(|c| {
        let mut m = ComplexMatrix::zeros(d * n, d * n);
        for (g, &gi) in inverse.iter().enumerate() {
            let block = p.cycle_element(action.perms()[gi][c]);
            for a in 0..d {
                for b in 0..d {
                    m[(a * n + g, b * n + g)] = block[(a, b)];
                }
            }
        }
        m
    });
    let tilde = Bb84Povm::from_cycle(elements)?;
    let id = ComplexMatrix::identity(d);
    let rep = regular_representation(group)
        .iter()
        .map(|r| id.kron(r))
        .collect();
    Ok(SymmetrizedPovm {
        base: p.clone(),
        group: group.clone(),
        action,
        tilde,
        rep,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceIdentityReport {
    pub samples: usize,
    pub max_deviation: f64,
}

/// Compares `Tr(M_r rho)` with `Tr(M~_r (rho (x) |e><e|))` on random states.
pub fn verify_trace_identity(s: &SymmetrizedPovm, samples: usize, seed: u64) -> TraceIdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = s.group.order();
    let e = s.group.identity();
    let mut e_proj = ComplexMatrix::zeros(n, n);
    e_proj[(e, e)] = Complex64::new(1.0, 0.0);
    let observables = Basis::BOTH.map(|r| {
        (
            s.base.observable_unchecked(r),
            s.tilde.observable_unchecked(r),
        )
    });
    let mut max_deviation: f64 = 0.0;
    for _ in 0..samples {
        let rho = random_density(s.base.dim(), &mut rng);
        let lifted = rho.kron(&e_proj);
        for (m, mt) in &observables {
            let lhs = m.matmul(&rho).trace().re;
            let rhs = mt.matmul(&lifted).trace().re;
            max_deviation = max_deviation.max((lhs - rhs).abs());
        }
    }
    TraceIdentityReport {
        samples,
        max_deviation,
    }
}

/// `rho -> F~(rho (x) |e><e|)`, with Kraus operators `F~_c (I_d (x) |e>)`.
pub fn pullback_squash(s: &SymmetrizedPovm, f_tilde: &SquashMap, tol: f64) -> Result<SquashMap> {
    let report = verify_squash(f_tilde, &s.tilde, tol)?;
    if !report.passed {
        return Err(Error::TildeNotVerified {
            residual: report.max_residual(),
        });
    }
    let embed = s.embedding();
    let kraus: Vec<ComplexMatrix> = f_tilde
        .kraus()
        .iter()
        .map(|f| f.matmul(&embed))
        .filter(|f| f.max_abs() > 0.0)
        .collect();
    SquashMap::new(kraus)
}

fn qubit_candidates() -> Vec<ComplexMatrix> {
    let u = unitary_from_generator(&pauli::y(), -std::f64::consts::FRAC_PI_4)
        .expect("sigma_y is Hermitian");
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = ComplexMatrix::from_real_rows(&[&[h, h], &[h, -h]]);
    let mut out = Vec::with_capacity(8);
    for flip in [ComplexMatrix::identity(2), hadamard] {
        let mut w = flip;
        for _ in 0..4 {
            out.push(w.clone());
            w = w.matmul(&u);
        }
    }
    out
}

/// A qubit unitary `W` with `W^dagger sigma_r W = O_r`, where `O_r` is the
/// observable of the relabeled POVM `c -> M_(perm[c])` expressed on an ideal
/// qubit. `None` when the relabeling does not map bases to bases.
pub fn qubit_relabeling(perm: &[usize; 4]) -> Option<ComplexMatrix> {
    let relabeled = Bb84Povm::from_cycle(std::array::from_fn(|c| {
        Bb84Povm::ideal_qubit().cycle_element(perm[c]).clone()
    }))
    .ok()?;
    let targets = Basis::BOTH.map(|r| relabeled.observable_unchecked(r));
    qubit_candidates().into_iter().find(|w| {
        Basis::BOTH.iter().zip(&targets).all(|(r, t)| {
            (&w.adjoint().matmul(&r.pauli()).matmul(w) - t).frobenius_norm() < 1e-12
        })
    })
}

/// Builds a squash for `s.tilde` from a squash `f` of the base POVM: block `g`
/// applies `f` followed by the qubit relabeling for `g^-1`'s action.
pub fn blockwise_tilde(s: &SymmetrizedPovm, f: &SquashMap) -> Option<SquashMap> {
    let n = s.group.order();
    let d = s.base.dim();
    if f.in_dim() != d {
        return None;
    }
    let mut kraus = Vec::with_capacity(n * f.kraus().len());
    for g in 0..n {
        let w = qubit_relabeling(&s.action.perms()[s.group.inverse(g)])?;
        for k in f.kraus() {
            let wk = w.matmul(k);
            let mut big = ComplexMatrix::zeros(2, d * n);
            for a in 0..2 {
                for i in 0..d {
                    big[(a, i * n + g)] = wk[(a, i)];
                }
            }
            kraus.push(big);
        }
    }
    SquashMap::new(kraus).ok()
}

/// The qubit POVM with `M_(z,b) = M_(x,b) = (I + (-1)^b sigma_z) / 2`.
pub fn counterexample_m0() -> Bb84Povm {
    let q = Bb84Povm::ideal_qubit();
    let z0 = q.element(Label::new(Basis::Z, 0)).clone();
    let z1 = q.element(Label::new(Basis::Z, 1)).clone();
    Bb84Povm::new(z0.clone(), z1.clone(), z0, z1).expect("valid qubit POVM")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackRates {
    pub qber: f64,
    pub eve_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackResult {
    pub qber: f64,
    pub eve_accuracy: f64,
    pub trials: usize,
    pub degenerate: bool,
    pub analytic: AttackRates,
}

/// Eve sends `|b_z>|b_z>` for a uniform bit `b`; Alice measures the ideal
/// qubit POVM and Bob measures `p`, both in the z basis.
pub fn bbm92_attack(p: &Bb84Povm, trials: usize, seed: u64) -> Result<AttackResult> {
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: p.dim(),
        });
    }
    let alice = Bb84Povm::ideal_qubit();
    let z0 = Label::new(Basis::Z, 0);
    // probability of outcome 0 given Eve's bit
    let mut pa = [0.0; 2];
    let mut pb = [0.0; 2];
    for b in 0..2 {
        let rho = ComplexMatrix::projector(&basis_vector(2, b));
        pa[b] = alice.outcome_probability(&rho, z0)?;
        pb[b] = p.outcome_probability(&rho, z0)?;
    }
    let analytic = AttackRates {
        qber: 0.5
            * (0..2)
                .map(|b| pa[b] * (1.0 - pb[b]) + (1.0 - pa[b]) * pb[b])
                .sum::<f64>(),
        eve_accuracy: 0.5 * (pa[0] + (1.0 - pa[1])),
    };
    if trials == 0 {
        return Ok(AttackResult {
            qber: 0.0,
            eve_accuracy: 1.0,
            trials,
            degenerate: true,
            analytic,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = 0usize;
    let mut known = 0usize;
    for _ in 0..trials {
        let b = rng.gen_range(0..2usize);
        let a_bit = usize::from(rng.gen::<f64>() >= pa[b]);
        let b_bit = usize::from(rng.gen::<f64>() >= pb[b]);
        errors += usize::from(a_bit != b_bit);
        known += usize::from(a_bit == b);
    }
    Ok(AttackResult {
        qber: errors as f64 / trials as f64,
        eve_accuracy: known as f64 / trials as f64,
        trials,
        degenerate: false,
        analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_detector, FockSector};
    use crate::squash::construct_theorem1;

    fn c4_sym(p: &Bb84Povm) -> SymmetrizedPovm {
        let g = FiniteGroup::cyclic(4).unwrap();
        let a = LabelAction::canonical_c4(&g).unwrap();
        symmetrize(p, &g, &a).unwrap()
    }

    #[test]
    fn trivial_group_is_identity() {
        let p = Bb84Povm::ideal_qubit();
        let g = FiniteGroup::trivial();
        let s = symmetrize(&p, &g, &LabelAction::trivial(&g)).unwrap();
        assert_eq!(s.tilde.dim(), 2);
        for c in 0..4 {
            assert_eq!(s.tilde.cycle_element(c), p.cycle_element(c));
        }
        assert_eq!(verify_trace_identity(&s, 20, 1).max_deviation, 0.0);
        let f = SquashMap::identity();
        let back = pullback_squash(&s, &f, PULLBACK_TOL).unwrap();
        assert_eq!(back.kraus(), f.kraus());
    }

    #[test]
    fn m0_c4_is_symmetric() {
        let s = c4_sym(&counterexample_m0());
        assert_eq!(s.tilde.dim(), 8);
        assert!(s.tilde.validate(1e-9).passed);
        assert!(s.check_definition2(1e-9).unwrap().passed);
        assert!(verify_trace_identity(&s, 100, 3).max_deviation <= 1e-10);
    }

    #[test]
    fn blocks_are_exact_copies() {
        let p = build_detector(&FockSector::single_mode(2).unwrap()).unwrap().povm;
        let s = c4_sym(&p);
        let n = 4;
        for c in 0..4 {
            for g in 0..n {
                let src = p.cycle_element((c + 4 - g) % 4);
                for a in 0..3 {
                    for b in 0..3 {
                        assert_eq!(s.tilde.cycle_element(c)[(a * n + g, b * n + g)], src[(a, b)]);
                    }
                }
            }
        }
    }

    #[test]
    fn ideal_qubit_c2_swap() {
        let g = FiniteGroup::cyclic(2).unwrap();
        let a = LabelAction::basis_swap_c2(&g).unwrap();
        let s = symmetrize(&Bb84Povm::ideal_qubit(), &g, &a).unwrap();
        assert_eq!(s.tilde.dim(), 4);
        assert!(s.check_definition2(1e-9).unwrap().passed);
        let f = blockwise_tilde(&s, &SquashMap::identity()).unwrap();
        assert!(verify_squash(&f, &s.tilde, 1e-12).unwrap().passed);
    }

    #[test]
    fn action_from_wrong_group_is_rejected() {
        let c4 = FiniteGroup::cyclic(4).unwrap();
        let a = LabelAction::canonical_c4(&c4).unwrap();
        let err = symmetrize(&Bb84Povm::ideal_qubit(), &FiniteGroup::cyclic(2).unwrap(), &a);
        assert!(matches!(err, Err(Error::InvalidAction(_))));
    }

    #[test]
    fn relabeling_unitaries() {
        assert_eq!(qubit_relabeling(&[0, 1, 2, 3]).unwrap(), ComplexMatrix::identity(2));
        for perm in [[1, 2, 3, 0], [2, 3, 0, 1], [3, 0, 1, 2], [1, 0, 3, 2]] {
            assert!(qubit_relabeling(&perm).is_some(), "{perm:?}");
        }
        // z0 and x0 both sent to z0 is not a relabeling of bases
        assert!(qubit_relabeling(&[0, 0, 2, 2]).is_none());
    }

    #[test]
    fn pullback_of_blockwise_sector_squash() {
        let model = build_detector(&FockSector::single_mode(2).unwrap()).unwrap();
        let f = construct_theorem1(&model.povm, &model.symmetry().unwrap()).unwrap();
        let s = c4_sym(&model.povm);
        let ft = blockwise_tilde(&s, &f).unwrap();
        let back = pullback_squash(&s, &ft, PULLBACK_TOL).unwrap();
        let r = verify_squash(&back, &model.povm, 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
        let rt = verify_squash(&ft, &s.tilde, 1.0).unwrap();
        assert!(r.max_residual() <= rt.max_residual() + 1e-10);
    }

    #[test]
    fn pullback_rejects_unverified_tilde() {
        let s = c4_sym(&Bb84Povm::ideal_qubit());
        let kraus = (0..8)
            .map(|j| ComplexMatrix::outer(&basis_vector(2, 0), &basis_vector(8, j)))
            .collect();
        let bad = SquashMap::new(kraus).unwrap();
        assert!(matches!(
            pullback_squash(&s, &bad, PULLBACK_TOL),
            Err(Error::TildeNotVerified { .. })
        ));
    }

    #[test]
    fn m0_observables_coincide() {
        let p = counterexample_m0();
        assert!(p.validate(1e-12).passed);
        assert_eq!(p.observable(Basis::Z).unwrap().matrix, pauli::z());
        assert_eq!(p.observable(Basis::X).unwrap().matrix, pauli::z());
    }

    #[test]
    fn attack_on_m0_and_ideal() {
        for p in [counterexample_m0(), Bb84Povm::ideal_qubit()] {
            let r = bbm92_attack(&p, 10_000, 7).unwrap();
            assert_eq!(r.qber, 0.0);
            assert_eq!(r.eve_accuracy, 1.0);
            assert_eq!(r.analytic, AttackRates { qber: 0.0, eve_accuracy: 1.0 });
            assert!(!r.degenerate);
        }
    }

    #[test]
    fn attack_degenerate_and_dimension() {
        let r = bbm92_attack(&counterexample_m0(), 0, 1).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.qber, r.eve_accuracy), (0.0, 1.0));
        let p3 = Bb84Povm::maximally_noisy(3);
        assert!(matches!(bbm92_attack(&p3, 10, 1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn attack_on_noisy_detector_matches_analytic() {
        let r = bbm92_attack(&Bb84Povm::maximally_noisy(2), 20_000, 11).unwrap();
        assert_eq!(r.analytic.qber, 0.5);
        assert!((r.qber - 0.5).abs() < 0.02);
        assert_eq!(r.eve_accuracy, 1.0);
    }
}
