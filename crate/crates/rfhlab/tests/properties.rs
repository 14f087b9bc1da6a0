use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rfhlab::gradflow::{action_extended, gradient_extended, ExtendedLoop};
use rfhlab::model::ModelSystem;
use rfhlab::rsindex::{block_diag, rs_index, rs_index_between, SymplecticPath, DEFAULT_TOL};
use rfhlab::symlin::{signature, standard_structure, Mat, SymmetricForm};
use rfhlab::z2complex::{
    conjugate, export_instance, parse_instance, phi_invert, random_complex, random_unit_triangular, verify_chain_map,
};

fn sym(m: usize, v: &[f64]) -> Mat {
    let a = Mat::from_fn(m, m, |i, j| v[(i * m + j) % v.len()]);
    (&a + a.transpose()) * 0.5
}

fn path_from(m: usize, v: &[f64]) -> SymplecticPath {
    SymplecticPath::constant_generator(standard_structure(m).unwrap(), sym(2 * m, v), 129)
}

fn entries(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, len)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn signature_is_congruence_invariant(v in entries(16), w in entries(16)) {
        let f = SymmetricForm::new(sym(4, &v));
        let a = Mat::identity(4, 4) * 2.0 + Mat::from_fn(4, 4, |i, j| w[i * 4 + j] * 0.2);
        prop_assume!(a.determinant().abs() > 1e-3);
        prop_assume!(f.eigenvalues().iter().all(|e| e.abs() > 1e-6));
        prop_assert_eq!(signature(&f.congruent(&a), 1e-12), signature(&f, 1e-12));
    }

    #[test]
    fn signature_flips_with_sign(v in entries(9)) {
        let f = SymmetricForm::new(sym(3, &v));
        let g = SymmetricForm::new(-f.entries().clone());
        prop_assert_eq!(signature(&g, 1e-12), -signature(&f, 1e-12));
    }

    #[test]
    fn index_is_conjugation_invariant(v in entries(16), w in entries(16)) {
        let p = path_from(2, &v);
        let s = standard_structure(2).unwrap();
        let psi = s.hamiltonian_exp(&(sym(4, &w) * 0.3), 1.0);
        let a = rs_index(&p, DEFAULT_TOL).unwrap();
        prop_assert_eq!(rs_index(&p.conjugate(&psi).unwrap(), DEFAULT_TOL).unwrap(), a);
    }

    #[test]
    fn index_is_additive_on_blocks(v in entries(4), w in entries(16)) {
        let (p, q) = (path_from(1, &v), path_from(2, &w));
        let (a, b) = (rs_index(&p, DEFAULT_TOL).unwrap(), rs_index(&q, DEFAULT_TOL).unwrap());
        prop_assert_eq!(rs_index(&block_diag(&p, &q), DEFAULT_TOL).unwrap(), a + b);
    }

    #[test]
    fn index_is_additive_under_catenation(v in entries(16), cut in 20usize..110) {
        let p = path_from(2, &v);
        let last = p.samples().len() - 1;
        let whole = rs_index(&p, DEFAULT_TOL).unwrap();
        let head = rs_index_between(&p, 0, cut, DEFAULT_TOL).unwrap();
        let tail = rs_index_between(&p, cut, last, DEFAULT_TOL).unwrap();
        prop_assert_eq!(head + tail, whole);
    }

    #[test]
    fn homology_is_conjugation_invariant(seed in any::<u64>(), size in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_complex(&mut rng, size, 4);
        let phi = random_unit_triangular(&mut rng, c.generators(), 0.3);
        let t = conjugate(&c, &phi).unwrap();
        prop_assert_eq!(verify_chain_map(&phi, &c, &t).unwrap(), None);
        prop_assert_eq!(t.homology().unwrap(), c.homology().unwrap());
    }

    #[test]
    fn phi_invert_is_involutive(seed in any::<u64>(), size in 1usize..64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_complex(&mut rng, size, 3);
        let phi = random_unit_triangular(&mut rng, c.generators(), 0.5);
        prop_assert_eq!(phi_invert(&phi_invert(&phi).unwrap()).unwrap(), phi);
    }

    #[test]
    fn instance_export_round_trips(seed in any::<u64>(), size in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_complex(&mut rng, size, 3);
        let phi = random_unit_triangular(&mut rng, c.generators(), 0.3);
        let text = export_instance(&c, Some(&phi));
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(export_instance(&back.complex().unwrap(), back.chain_map().unwrap().as_ref()), text);
    }

    #[test]
    fn extended_flow_is_zeta_shift_equivariant(
        x in entries(2 * 12),
        eta in entries(12),
        zeta in entries(12),
        c in -10.0..10.0f64,
    ) {
        let sys = ModelSystem::with_n(1).unwrap();
        let x: Vec<f64> = x.iter().map(|v| v * 0.4).collect();
        let l = ExtendedLoop::new(1, x, eta, zeta).unwrap();
        let s = l.shift_zeta(c);
        prop_assert!((action_extended(&sys, &s) - action_extended(&sys, &l)).abs() <= 1e-12 * (1.0 + c.abs()));
        let (g, gs) = (gradient_extended(&sys, &l), gradient_extended(&sys, &s));
        prop_assert_eq!(&g.x, &gs.x);
        for (a, b) in g.eta.iter().zip(&gs.eta).chain(g.zeta.iter().zip(&gs.zeta)) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + c.abs()));
        }
    }
}
