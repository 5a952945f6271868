//! Finite groups acting on POVM labels, their unitary representations, and
//! the symmetry checks used by the constructive and no-go parts of the crate.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ONE};
use crate::povm::{Basis, Bb84Povm, Label};

pub const UNITARY_TOL: f64 = 1e-9;
pub const PERIOD_TOL: f64 = 1e-8;

/// A finite group given by its Cayley table: `cayley[g][h] = g * h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    cayley: Vec<Vec<usize>>,
    identity: usize,
}

impl FiniteGroup {
    pub fn new(cayley: Vec<Vec<usize>>, identity: usize) -> Result<Self> {
        let order = cayley.len();
        if order == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        if identity >= order {
            return Err(Error::InvalidGroup(format!("identity {identity} out of range")));
        }
        for row in &cayley {
            if row.len() != order {
                return Err(Error::InvalidGroup("table is not square".into()));
            }
            if !is_permutation(row) {
                return Err(Error::InvalidGroup("row is not a permutation".into()));
            }
        }
        for c in 0..order {
            let col: Vec<usize> = cayley.iter().map(|row| row[c]).collect();
            if !is_permutation(&col) {
                return Err(Error::InvalidGroup("column is not a permutation".into()));
            }
        }
        for g in 0..order {
            if cayley[identity][g] != g || cayley[g][identity] != g {
                return Err(Error::InvalidGroup(format!(
                    "element {identity} is not a two-sided identity"
                )));
            }
        }
        for a in 0..order {
            for b in 0..order {
                for c in 0..order {
                    if cayley[cayley[a][b]][c] != cayley[a][cayley[b][c]] {
                        return Err(Error::InvalidGroup(format!(
                            "not associative at ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }
        Ok(FiniteGroup {
            order,
            cayley,
            identity,
        })
    }

    /// Cyclic group `C_n`; element `j` is the `j`-th power of the generator.
    pub fn cyclic(n: usize) -> Result<Self> {
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::new(table, 0)
    }

    pub fn trivial() -> Self {
        Self::cyclic(1).expect("trivial group")
    }

    /// Symmetric group on three points; elements are the permutations of
    /// `[0, 1, 2]` in lexicographic order, composed as functions.
    pub fn s3() -> Self {
        let perms: Vec<[usize; 3]> = vec![
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).expect("closed");
        let table = perms
            .iter()
            .map(|g| {
                perms
                    .iter()
                    .map(|h| index([g[h[0]], g[h[1]], g[h[2]]]))
                    .collect()
            })
            .collect();
        Self::new(table, 0).expect("S3 table")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn cayley(&self) -> &[Vec<usize>] {
        &self.cayley
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.cayley[g][h]
    }

    /// Inverse by row search.
    pub fn inverse(&self, g: usize) -> usize {
        self.cayley[g]
            .iter()
            .position(|&p| p == self.identity)
            .expect("Latin square row contains the identity")
    }
}

fn is_permutation(xs: &[usize]) -> bool {
    let mut seen = vec![false; xs.len()];
    for &x in xs {
        if x >= xs.len() || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

/// A homomorphism from a group into permutations of the four labels.
///
/// `perms[g][c]` is the cycle index of `g(L_c)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelAction {
    perms: Vec<[usize; 4]>,
}

impl LabelAction {
    pub fn new(group: &FiniteGroup, perms: Vec<[usize; 4]>) -> Result<Self> {
        if perms.len() != group.order() {
            return Err(Error::InvalidAction(format!(
                "{} permutations for a group of order {}",
                perms.len(),
                group.order()
            )));
        }
        if let Some(g) = perms.iter().position(|p| !is_permutation(p)) {
            return Err(Error::InvalidAction(format!("element {g} is not a permutation")));
        }
        if perms[group.identity()] != [0, 1, 2, 3] {
            return Err(Error::InvalidAction("identity acts non-trivially".into()));
        }
        for g in 0..group.order() {
            for h in 0..group.order() {
                let gh = group.mul(g, h);
                for c in 0..4 {
                    if perms[gh][c] != perms[g][perms[h][c]] {
                        return Err(Error::InvalidAction(format!(
                            "not a homomorphism at ({g}, {h})"
                        )));
                    }
                }
            }
        }
        Ok(LabelAction { perms })
    }

    pub fn trivial(group: &FiniteGroup) -> Self {
        LabelAction {
            perms: vec![[0, 1, 2, 3]; group.order()],
        }
    }

    /// The canonical C4 action on `C_4`: element `j` sends `L_c` to `L_(c+j)`,
    /// i.e. the 4-cycle `(z,0) -> (x,0) -> (z,1) -> (x,1)`.
    pub fn canonical_c4(group: &FiniteGroup) -> Result<Self> {
        if *group != FiniteGroup::cyclic(4)? {
            return Err(Error::InvalidAction("canonical C4 action needs the C4 table".into()));
        }
        let perms = (0..4).map(|j| [j % 4, (1 + j) % 4, (2 + j) % 4, (3 + j) % 4]).collect();
        Self::new(group, perms)
    }

    /// On `C_2`: the generator swaps the bases, `(z,b) <-> (x,b)`.
    pub fn basis_swap_c2(group: &FiniteGroup) -> Result<Self> {
        if *group != FiniteGroup::cyclic(2)? {
            return Err(Error::InvalidAction("basis swap needs the C2 table".into()));
        }
        Self::new(group, vec![[0, 1, 2, 3], [1, 0, 3, 2]])
    }

    pub fn apply(&self, g: usize, label: Label) -> Label {
        Label::from_cycle_index(self.perms[g][label.cycle_index()])
    }

    pub fn perms(&self) -> &[[usize; 4]] {
        &self.perms
    }
}

/// A unitary witnessing C4 symmetry, with `U^(4k) = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct C4Symmetry {
    u: ComplexMatrix,
    k: u32,
}

impl C4Symmetry {
    pub fn new(u: ComplexMatrix, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::BadPeriod {
                residual: f64::INFINITY,
            });
        }
        let residual = u.unitarity_residual();
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
        let period = (&u.pow(4 * k) - &ComplexMatrix::identity(u.dim())).frobenius_norm();
        if period > PERIOD_TOL {
            return Err(Error::BadPeriod { residual: period });
        }
        Ok(C4Symmetry { u, k })
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    /// `(relation, ||lhs - rhs||_F)`.
    pub residuals: Vec<(String, f64)>,
    pub max_residual: f64,
    pub total_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl SymmetryReport {
    fn from_residuals(residuals: Vec<(String, f64)>, tol: f64) -> Self {
        let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
        let total_residual = residuals.iter().map(|r| r.1).sum();
        SymmetryReport {
            passed: max_residual <= tol,
            residuals,
            max_residual,
            total_residual,
            tol,
        }
    }
}

/// Residuals of `U M_(z,b) U^dagger = M_(x,b)` and `U^2 M_(r,b) U^dagger^2 = M_(r,1-b)`.
pub fn check_definition1(sym: &C4Symmetry, p: &Bb84Povm, tol: f64) -> Result<SymmetryReport> {
    if sym.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: sym.dim(),
        });
    }
    let u = sym.unitary();
    let u2 = u.matmul(u);
    let mut residuals = Vec::with_capacity(6);
    for b in 0..2 {
        let z = Label::new(Basis::Z, b);
        let x = Label::new(Basis::X, b);
        let lhs = u.conjugate(p.element(z));
        residuals.push((format!("U M_{z} U† = M_{x}"), (&lhs - p.element(x)).frobenius_norm()));
    }
    for label in Label::CYCLE {
        let lhs = u2.conjugate(p.element(label));
        let rhs = p.element(label.flipped());
        residuals.push((
            format!("U² M_{label} U†² = M_{}", label.flipped()),
            (&lhs - rhs).frobenius_norm(),
        ));
    }
    Ok(SymmetryReport::from_residuals(residuals, tol))
}

/// Reduces `k` to 1 by removing the global phase of `U^4` when it is scalar.
pub fn phase_normalize(sym: &C4Symmetry) -> Result<C4Symmetry> {
    let u = sym.unitary();
    let residual = u.unitarity_residual();
    if residual > UNITARY_TOL {
        return Err(Error::NotUnitary { residual });
    }
    let d = u.dim();
    let u4 = u.pow(4);
    let eta = u4.trace() / d as f64;
    let id = ComplexMatrix::identity(d);
    if (&u4 - &id.scale(eta)).frobenius_norm() > PERIOD_TOL {
        return Ok(sym.clone());
    }
    if (&u4 - &id).frobenius_norm() <= PERIOD_TOL {
        return Ok(C4Symmetry {
            u: u.clone(),
            k: 1,
        });
    }
    // principal fourth root of eta^-1, with eta projected onto the unit circle
    let root = Complex64::from_polar(1.0, -eta.arg() / 4.0);
    Ok(C4Symmetry {
        u: u.scale(root),
        k: 1,
    })
}

/// `P_c = (1/4) sum_j i^(-cj) U^j`, the projectors onto the `i^c` eigenspaces of `U`.
pub fn c4_eigenprojectors(sym: &C4Symmetry) -> Result<[ComplexMatrix; 4]> {
    if sym.k() != 1 {
        return Err(Error::KNotOne { k: sym.k() });
    }
    let u = sym.unitary();
    let d = u.dim();
    let period = (&u.pow(4) - &ComplexMatrix::identity(d)).frobenius_norm();
    if period > PERIOD_TOL {
        return Err(Error::BadPeriod { residual: period });
    }
    let powers = [ComplexMatrix::identity(d), u.clone(), u.pow(2), u.pow(3)];
    Ok(std::array::from_fn(|c| {
        let mut acc = ComplexMatrix::zeros(d, d);
        for (j, uj) in powers.iter().enumerate() {
            acc = &acc + &uj.scale(i_pow(4 - (c * j) % 4));
        }
        acc.scale_real(0.25)
    }))
}

/// `i^n`, exact.
pub fn i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => ONE,
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `R(g)|h> = |gh>` as exact 0/1 permutation matrices, indexed by element.
pub fn regular_representation(group: &FiniteGroup) -> Vec<ComplexMatrix> {
    let n = group.order();
    (0..n)
        .map(|g| {
            let mut r = ComplexMatrix::zeros(n, n);
            for h in 0..n {
                r[(group.mul(g, h), h)] = ONE;
            }
            r
        })
        .collect()
}

/// Residuals of `V(g) M_(r,b) V(g)^dagger = M_(g(r,b))` for every element and label.
pub fn check_definition2(
    rep: &[ComplexMatrix],
    action: &LabelAction,
    p: &Bb84Povm,
    tol: f64,
) -> Result<SymmetryReport> {
    if rep.len() != action.perms().len() {
        return Err(Error::InvalidAction(format!(
            "{} representation matrices for {} group elements",
            rep.len(),
            action.perms().len()
        )));
    }
    let mut residuals = Vec::with_capacity(4 * rep.len());
    for (g, v) in rep.iter().enumerate() {
        if !v.is_square() || v.rows() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                got: v.rows(),
            });
        }
        for label in Label::CYCLE {
            let image = action.apply(g, label);
            let lhs = v.conjugate(p.element(label));
            residuals.push((
                format!("V({g}) M_{label} V†({g}) = M_{image}"),
                (&lhs - p.element(image)).frobenius_norm(),
            ));
        }
    }
    Ok(SymmetryReport::from_residuals(residuals, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::unitary_from_generator;
    use crate::linalg::pauli;
    use std::f64::consts::PI;

    /// `exp(-i (pi/4) sigma_y)`: rotates the Bloch vector by +90 degrees about y,
    /// taking z to x.
    fn qubit_rotation() -> ComplexMatrix {
        unitary_from_generator(&pauli::y(), -PI / 4.0).unwrap()
    }

    fn m0() -> Bb84Povm {
        let z = Bb84Povm::ideal_qubit();
        let z0 = z.element(Label::new(Basis::Z, 0)).clone();
        let z1 = z.element(Label::new(Basis::Z, 1)).clone();
        Bb84Povm::new(z0.clone(), z1.clone(), z0, z1).unwrap()
    }

    #[test]
    fn cayley_validation() {
        assert!(FiniteGroup::new(vec![vec![0, 1], vec![1, 1]], 0).is_err());
        assert!(FiniteGroup::new(vec![vec![1, 0], vec![0, 1]], 0).is_err());
        assert!(FiniteGroup::new(vec![], 0).is_err());
        // Latin square without associativity (a quasigroup with identity)
        let loop5 = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(matches!(FiniteGroup::new(loop5, 0), Err(Error::InvalidGroup(_))));
        let s3 = FiniteGroup::s3();
        assert_eq!(s3.order(), 6);
        for g in 0..6 {
            assert_eq!(s3.mul(g, s3.inverse(g)), 0);
        }
    }

    #[test]
    fn action_must_be_homomorphism() {
        let c4 = FiniteGroup::cyclic(4).unwrap();
        let bad = vec![[0, 1, 2, 3], [1, 0, 2, 3], [0, 1, 2, 3], [0, 1, 2, 3]];
        assert!(matches!(LabelAction::new(&c4, bad), Err(Error::InvalidAction(_))));
        let a = LabelAction::canonical_c4(&c4).unwrap();
        assert_eq!(a.apply(1, Label::new(Basis::Z, 0)), Label::new(Basis::X, 0));
        assert_eq!(a.apply(1, Label::new(Basis::X, 1)), Label::new(Basis::Z, 0));
    }

    #[test]
    fn definition1_uniform_povm_identity() {
        let sym = C4Symmetry::new(ComplexMatrix::identity(3), 1).unwrap();
        let r = check_definition1(&sym, &Bb84Povm::maximally_noisy(3), 1e-12).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn definition1_ideal_qubit_with_rotation() {
        let sym = C4Symmetry::new(qubit_rotation(), 2).unwrap();
        let r = check_definition1(&sym, &Bb84Povm::ideal_qubit(), 1e-12).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn definition1_opposite_rotation_runs_cycle_backwards() {
        let u = unitary_from_generator(&pauli::y(), PI / 4.0).unwrap();
        let sym = C4Symmetry::new(u, 2).unwrap();
        let r = check_definition1(&sym, &Bb84Povm::ideal_qubit(), 1e-9).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn definition1_dimension_mismatch() {
        let sym = C4Symmetry::new(ComplexMatrix::identity(3), 1).unwrap();
        assert!(matches!(
            check_definition1(&sym, &Bb84Povm::ideal_qubit(), 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    /// For M0, any qubit unitary leaves total residual >= 1: with Bloch vectors,
    /// |R n - n| + |R^2 n + n| >= sqrt 2 (attained by a quarter turn), and
    /// Frobenius distance between rank-one projectors is Bloch distance / sqrt 2.
    #[test]
    fn definition1_m0_fails_for_every_grid_unitary() {
        let p = m0();
        let steps = 12;
        let mut min_total = f64::INFINITY;
        for a in 0..steps {
            for b in 0..steps {
                for c in 0..steps {
                    let (ta, tb, tc) = (
                        2.0 * PI * a as f64 / steps as f64,
                        PI * b as f64 / steps as f64,
                        2.0 * PI * c as f64 / steps as f64,
                    );
                    // ZYZ Euler angles cover SU(2); a global phase is irrelevant
                    let u = unitary_from_generator(&pauli::z(), ta)
                        .unwrap()
                        .matmul(&unitary_from_generator(&pauli::y(), tb).unwrap())
                        .matmul(&unitary_from_generator(&pauli::z(), tc).unwrap());
                    let sym = C4Symmetry { u, k: 2 };
                    let r = check_definition1(&sym, &p, 1e-9).unwrap();
                    assert!(!r.passed);
                    min_total = min_total.min(r.total_residual);
                }
            }
        }
        assert!(min_total >= 1.0 - 1e-9, "min total residual {min_total}");
    }

    #[test]
    fn phase_normalize_examples() {
        let sym = C4Symmetry::new(ComplexMatrix::diag_real(&[1.0, -1.0]), 1).unwrap();
        assert_eq!(phase_normalize(&sym).unwrap(), sym);

        let sym = C4Symmetry::new(qubit_rotation(), 2).unwrap();
        assert!((&sym.unitary().pow(4) + &ComplexMatrix::identity(2)).frobenius_norm() < 1e-12);
        let n = phase_normalize(&sym).unwrap();
        assert_eq!(n.k(), 1);
        assert!((&n.unitary().pow(4) - &ComplexMatrix::identity(2)).frobenius_norm() < 1e-10);
        let p = Bb84Povm::ideal_qubit();
        let before = check_definition1(&sym, &p, 1e-9).unwrap();
        let after = check_definition1(&n, &p, 1e-9).unwrap();
        for (x, y) in before.residuals.iter().zip(&after.residuals) {
            assert!((x.1 - y.1).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_normalize_keeps_non_scalar_fourth_power() {
        // eigenphases e^{i pi/8} and 1: U^8 != I, but U^16 = I; U^4 = diag(i, 1)
        let u = ComplexMatrix::diag(&[Complex64::from_polar(1.0, PI / 8.0), ONE]);
        let sym = C4Symmetry::new(u, 4).unwrap();
        let n = phase_normalize(&sym).unwrap();
        assert_eq!(n.k(), 4);
        assert!(matches!(c4_eigenprojectors(&n), Err(Error::KNotOne { k: 4 })));
    }

    #[test]
    fn eigenprojectors_of_identity_and_diagonal() {
        let sym = C4Symmetry::new(ComplexMatrix::identity(2), 1).unwrap();
        let p = c4_eigenprojectors(&sym).unwrap();
        assert_eq!(p[0], ComplexMatrix::identity(2));
        for pc in &p[1..] {
            assert_eq!(*pc, ComplexMatrix::zeros(2, 2));
        }

        let u = ComplexMatrix::diag(&[i_pow(0), i_pow(1), i_pow(2), i_pow(3)]);
        let p = c4_eigenprojectors(&C4Symmetry::new(u, 1).unwrap()).unwrap();
        for (c, pc) in p.iter().enumerate() {
            let mut e = vec![0.0; 4];
            e[c] = 1.0;
            assert!((pc - &ComplexMatrix::diag_real(&e)).frobenius_norm() < 1e-15);
        }
    }

    #[test]
    fn regular_representation_small_groups() {
        let c2 = regular_representation(&FiniteGroup::cyclic(2).unwrap());
        assert_eq!(c2[0], ComplexMatrix::identity(2));
        assert_eq!(c2[1], pauli::x());

        let c4 = regular_representation(&FiniteGroup::cyclic(4).unwrap());
        // generator: |h> -> |h+1>
        for h in 0..4 {
            assert_eq!(c4[1][((h + 1) % 4, h)], ONE);
        }

        let s3 = FiniteGroup::s3();
        let r = regular_representation(&s3);
        for g in 0..6 {
            for h in 0..6 {
                assert_eq!(r[g].matmul(&r[h]), r[s3.mul(g, h)]);
            }
        }
        assert_eq!(r[s3.identity()], ComplexMatrix::identity(6));
    }

    #[test]
    fn definition2_examples() {
        let trivial = FiniteGroup::trivial();
        let rep = regular_representation(&trivial);
        let p = Bb84Povm::ideal_qubit();
        let rep_b: Vec<_> = rep.iter().map(|r| ComplexMatrix::identity(2).kron(r)).collect();
        let r = check_definition2(&rep_b, &LabelAction::trivial(&trivial), &p, 1e-12).unwrap();
        assert!(r.passed);

        let c4 = FiniteGroup::cyclic(4).unwrap();
        let action = LabelAction::canonical_c4(&c4).unwrap();
        let ids = vec![ComplexMatrix::identity(2); 4];
        let r = check_definition2(&ids, &action, &p, 1e-9).unwrap();
        assert!(!r.passed);
    }
}
