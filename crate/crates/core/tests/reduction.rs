use squashkit::finder::{find_squash, Verdict, DEFAULT_MAX_ITER};
use squashkit::fock::{build_detector, FockSector};
use squashkit::group::{FiniteGroup, LabelAction};
use squashkit::nogo::{counterexample_m0, pullback_squash, symmetrize, PULLBACK_TOL};
use squashkit::povm::Bb84Povm;
use squashkit::squash::verify_squash;

fn c4() -> (FiniteGroup, LabelAction) {
    let g = FiniteGroup::cyclic(4).unwrap();
    let a = LabelAction::canonical_c4(&g).unwrap();
    (g, a)
}

fn chain(p: &Bb84Povm, g: &FiniteGroup, a: &LabelAction) {
    let s = symmetrize(p, g, a).unwrap();
    assert!(s.check_definition2(1e-9).unwrap().passed);
    let r = find_squash(&s.tilde, DEFAULT_MAX_ITER, 1e-10).unwrap();
    assert_eq!(r.verdict, Verdict::Feasible, "gap {:e}", r.gap);
    let back = pullback_squash(&s, &r.squash.unwrap(), PULLBACK_TOL).unwrap();
    assert!(verify_squash(&back, p, 1e-8).unwrap().passed);
}

#[test]
fn finder_then_pullback_on_sectors() {
    let (g, a) = c4();
    for n in [1, 2] {
        let p = build_detector(&FockSector::single_mode(n).unwrap()).unwrap().povm;
        chain(&p, &g, &a);
    }
}

#[test]
fn finder_then_pullback_with_basis_swap() {
    let g = FiniteGroup::cyclic(2).unwrap();
    let a = LabelAction::basis_swap_c2(&g).unwrap();
    chain(&Bb84Povm::ideal_qubit(), &g, &a);
}

#[test]
fn finder_then_pullback_with_s3_trivial_action() {
    let g = FiniteGroup::s3();
    let p = build_detector(&FockSector::single_mode(1).unwrap()).unwrap().povm;
    chain(&p, &g, &LabelAction::trivial(&g));
}

#[test]
fn symmetrized_counterexample_stays_infeasible() {
    let (g, a) = c4();
    let s = symmetrize(&counterexample_m0(), &g, &a).unwrap();
    let r = find_squash(&s.tilde, DEFAULT_MAX_ITER, 1e-8).unwrap();
    assert_eq!(r.verdict, Verdict::Infeasible);
    assert!((r.witness.unwrap().value - 2f64.sqrt()).abs() < 1e-9);
}
