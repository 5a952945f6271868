use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use squashkit::eig::{hermitian_eig, inverse_sqrt};
use squashkit::finder::{choi_from_squash, squash_from_choi, AffineConstraints};
use squashkit::fock::{build_detector, FockSector};
use squashkit::group::C4Symmetry;
use squashkit::linalg::{ComplexMatrix, Keep};
use squashkit::povm::Bb84Povm;
use squashkit::random::{random_density, random_hermitian, random_matrix, random_unitary};
use squashkit::squash::{construct_theorem1, verify_squash, SquashMap};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_channel(d: usize, kraus: usize, rng: &mut ChaCha8Rng) -> SquashMap {
    let raw: Vec<ComplexMatrix> = (0..kraus).map(|_| random_matrix(2, d, rng)).collect();
    let gram = raw
        .iter()
        .fold(ComplexMatrix::zeros(d, d), |acc, k| &acc + &k.adjoint().matmul(k));
    let s = inverse_sqrt(&gram).unwrap();
    SquashMap::new(raw.iter().map(|k| k.matmul(&s)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eig_reconstructs(seed in any::<u64>(), n in 1usize..20) {
        let a = random_hermitian(n, &mut rng(seed));
        let e = hermitian_eig(&a, 1e-9).unwrap();
        let scale = a.frobenius_norm().max(1.0);
        prop_assert!((&e.reconstruct() - &a).frobenius_norm() <= 1e-11 * scale);
        let v = &e.eigenvectors;
        prop_assert!((&v.adjoint().matmul(v) - &ComplexMatrix::identity(n)).frobenius_norm() <= 1e-11);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn kron_mixed_product(seed in any::<u64>(), p in 1usize..4, q in 1usize..4, r in 1usize..4) {
        let mut g = rng(seed);
        let a = random_matrix(p, q, &mut g);
        let b = random_matrix(r, p, &mut g);
        let c = random_matrix(q, r, &mut g);
        let d = random_matrix(p, q, &mut g);
        let lhs = a.kron(&b).matmul(&c.kron(&d));
        let rhs = a.matmul(&c).kron(&b.matmul(&d));
        prop_assert!((&lhs - &rhs).frobenius_norm() <= 1e-12 * lhs.frobenius_norm().max(1.0));
        prop_assert_eq!(a.kron(&b).adjoint(), a.adjoint().kron(&b.adjoint()));
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), da in 1usize..5, db in 1usize..5) {
        let mut g = rng(seed);
        let a = random_matrix(da, da, &mut g);
        let b = random_matrix(db, db, &mut g);
        let ab = a.kron(&b);
        let first = ab.partial_trace((da, db), Keep::First).unwrap();
        let second = ab.partial_trace((da, db), Keep::Second).unwrap();
        prop_assert!((&first - &a.scale(b.trace())).frobenius_norm() <= 1e-12);
        prop_assert!((&second - &b.scale(a.trace())).frobenius_norm() <= 1e-12);
        let t: Complex64 = first.trace() - ab.trace();
        prop_assert!(t.norm() <= 1e-12);
    }

    #[test]
    fn choi_round_trip_preserves_action(seed in any::<u64>(), d in 1usize..5, extra in 0usize..3) {
        let mut g = rng(seed);
        let f = random_channel(d, d.div_ceil(2) + extra, &mut g);
        let c = choi_from_squash(&f);
        prop_assert!(c.trace_residual() < 1e-10);
        let back = squash_from_choi(&c).unwrap();
        let rho = random_density(d, &mut g);
        prop_assert!((&back.apply(&rho) - &f.apply(&rho)).frobenius_norm() < 1e-9);
    }

    #[test]
    fn construction_is_covariant(seed in any::<u64>(), n in 1usize..4) {
        // rotating the input space by W must not affect feasibility of the construction
        let model = build_detector(&FockSector::single_mode(n).unwrap()).unwrap();
        let w = random_unitary(n + 1, &mut rng(seed));
        let p = Bb84Povm::from_cycle(model.povm.cycle_elements().clone().map(|m| w.conjugate(&m))).unwrap();
        let u = w.conjugate(&model.u_n);
        let sym = C4Symmetry::new(u, model.symmetry().unwrap().k()).unwrap();
        let f = construct_theorem1(&p, &sym).unwrap();
        prop_assert!(verify_squash(&f, &p, 1e-9).unwrap().passed);
        let choi = choi_from_squash(&f);
        prop_assert!(AffineConstraints::for_povm(&p).residual(choi.matrix()) <= 1e-8);
    }
}
