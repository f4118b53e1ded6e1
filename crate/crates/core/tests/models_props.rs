mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use spectrex::linalg::{self, CMat};
use spectrex::models::{self, random as gen, ChannelVariant, ChoiPoint, MappingConstraints, ModelDescriptor};
use spectrex::{decompose_extreme, AlgebraElement, AlgebraSpec, Field, Tolerances, Verdict};

fn agree(closed: Verdict, engine: Verdict) -> bool {
    closed == engine && closed != Verdict::Inconclusive
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn choi_criterion_matches_engine(seed in any::<u64>(), complex in any::<bool>(), d_in in 1usize..=3, d_out in 1usize..=3) {
        let tol = Tolerances::default();
        let f = field(complex);
        let mut r = rng(seed);
        let s = models::build_channel_like(d_in, d_out, f, &ChannelVariant::Channel).unwrap();
        let a = gen::mixed_member(&mut r, 2, |r| {
            let rank = r.random_range(1..=d_in * d_out);
            AlgebraElement::from_matrix(f, gen::random_channel_choi(r, d_in, d_out, rank, f))
        }).unwrap();
        let point = ChoiPoint::from_choi(d_in, d_out, f, a.block(0).clone(), &tol).unwrap();
        let closed = models::mapping_extreme_test(&point, &MappingConstraints::trace_preserving(d_in, d_out), &tol).unwrap();
        prop_assert!(agree(closed, s.is_extreme(&a, &tol).unwrap().verdict));
    }

    #[test]
    fn bistochastic_criterion_matches_engine(seed in any::<u64>(), complex in any::<bool>(), d in 2usize..=3, terms in 1usize..=3) {
        let tol = Tolerances::default();
        let f = field(complex);
        let mut r = rng(seed);
        let s = models::build_channel_like(d, d, f, &ChannelVariant::Bistochastic).unwrap();
        let a = AlgebraElement::from_matrix(f, gen::random_unitary_mixture(&mut r, d, terms, f)).unwrap();
        let point = ChoiPoint::from_choi(d, d, f, a.block(0).clone(), &tol).unwrap();
        let mc = ChannelVariant::Bistochastic.constraints(d, d).unwrap();
        let closed = models::mapping_extreme_test(&point, &mc, &tol).unwrap();
        prop_assert!(agree(closed, s.is_extreme(&a, &tol).unwrap().verdict));
    }

    #[test]
    fn correlation_criterion_matches_engine(seed in any::<u64>(), complex in any::<bool>(), n in 2usize..=4) {
        let tol = Tolerances::default();
        let f = field(complex);
        let mut r = rng(seed);
        let rank = r.random_range(1..=n);
        let xi = gen::random_correlation(&mut r, n, rank, f);
        let s = models::build_correlation(n, f).unwrap();
        let closed = models::corr_extreme_test(&xi, f, &tol).unwrap();
        let engine = s.is_extreme(&AlgebraElement::from_matrix(f, xi).unwrap(), &tol).unwrap().verdict;
        prop_assert!(agree(closed, engine));
    }

    #[test]
    fn povm_criterion_matches_engine(seed in any::<u64>(), complex in any::<bool>(), d in 2usize..=3, x in 1usize..=5) {
        let tol = Tolerances::default();
        let f = field(complex);
        let mut r = rng(seed);
        let s = models::build_povm_spectrahedron(f, d, x, &linalg::identity(d)).unwrap();
        let spec = s.spec().clone();
        let a = gen::mixed_member(&mut r, 2, |r| {
            let k = r.random_range(1..=2);
            AlgebraElement::new(&spec, gen::random_povm(r, d, x, k, f))
        }).unwrap();
        let closed = models::povm_extreme_test(&a, &tol).unwrap();
        prop_assert!(agree(closed, s.is_extreme(&a, &tol).unwrap().verdict));
    }

    #[test]
    fn instrument_criterion_matches_engine(seed in any::<u64>(), complex in any::<bool>(), x in 1usize..=3) {
        let tol = Tolerances::default();
        let f = field(complex);
        let mut r = rng(seed);
        let (d_in, d_out) = [(2, 2), (1, 2), (2, 3)][r.random_range(0..3)];
        let variant = models::InstrumentVariant::Plain;
        let s = models::build_instrument_spectrahedron(d_in, d_out, x, f, &variant).unwrap();
        let spec = s.spec().clone();
        let a = gen::mixed_member(&mut r, 2, |r| {
            let k = r.random_range(1..=2);
            AlgebraElement::new(&spec, gen::random_instrument(r, d_in, d_out, x, k, f))
        }).unwrap();
        let closed = models::instrument_extreme_test(&a, d_in, d_out, &variant, &tol).unwrap();
        prop_assert!(agree(closed, s.is_extreme(&a, &tol).unwrap().verdict));
    }

    #[test]
    fn comb_criterion_matches_engine(seed in any::<u64>(), complex in any::<bool>()) {
        let tol = Tolerances::default();
        let f = field(complex);
        let mut r = rng(seed);
        let steps = [(2, 2), (2, 2)];
        let s = models::build_comb(&steps, f).unwrap();
        let (dm, de) = (r.random_range(1..=2), r.random_range(1..=2));
        let c = gen::random_comb2(&mut r, steps, dm, de, f).unwrap();
        let closed = models::comb_extreme_test(&c, &steps, f, &tol).unwrap();
        let engine = s.is_extreme(&AlgebraElement::from_matrix(f, c).unwrap(), &tol).unwrap().verdict;
        prop_assert!(agree(closed, engine));
    }

    #[test]
    fn choi_kraus_round_trip(seed in any::<u64>(), complex in any::<bool>(), d_in in 1usize..=3, d_out in 1usize..=3) {
        let tol = Tolerances::default();
        let f = field(complex);
        let mut r = rng(seed);
        let rank = r.random_range(1..=d_in * d_out);
        let kraus = gen::random_channel_kraus(&mut r, d_in, d_out, rank, f);
        let choi = models::choi_of_kraus(&kraus, d_in, d_out);
        let point = ChoiPoint::from_choi(d_in, d_out, f, choi.clone(), &tol).unwrap();
        prop_assert!(point.rank() <= d_in * d_out);
        let back = models::choi_of_kraus(&point.kraus, d_in, d_out);
        prop_assert!((&back - &choi).norm() <= 1e-10 * (1.0 + choi.norm()));
        // Both Kraus families implement the same channel.
        let rho = gen::random_state(&mut r, d_in, d_in, f);
        let direct: CMat = kraus.iter().fold(CMat::zeros(d_out, d_out), |acc, k| acc + k * &rho * k.adjoint());
        prop_assert!((point.apply(&rho) - direct).norm() <= 1e-10);
    }

    #[test]
    fn small_correlation_extremes_are_rank_one(seed in any::<u64>(), complex in any::<bool>()) {
        let tol = Tolerances::default();
        let f = field(complex);
        let n = if complex { 3 } else { 2 };
        let mut r = rng(seed);
        let s = models::build_correlation(n, f).unwrap();
        let xi = gen::random_correlation(&mut r, n, n, f);
        let dec = decompose_extreme(&s, &AlgebraElement::from_matrix(f, xi).unwrap(), 32, &tol).unwrap();
        for c in &dec.components {
            prop_assert_eq!(c.report.verdict, Verdict::Extreme);
            prop_assert_eq!(&c.report.ranks, &vec![1]);
        }
    }

    #[test]
    fn descriptors_survive_json(complex in any::<bool>(), d_in in 1usize..=3, d_out in 1usize..=3, x in 1usize..=4) {
        let f = field(complex);
        let descs = [
            ModelDescriptor::Channel { field: f, d_in, d_out },
            ModelDescriptor::Povm { field: f, d: d_out, outcomes: x, normalizer: None },
            ModelDescriptor::Correlation { field: f, n: d_in + 1 },
            ModelDescriptor::Comb { field: f, steps: vec![(d_in, d_out), (d_out, d_in)] },
        ];
        for desc in descs {
            let back = ModelDescriptor::from_json(&desc.to_json()).unwrap();
            prop_assert_eq!(&back, &desc);
            let s = desc.build().unwrap();
            prop_assert!(back.build().unwrap() == s);
            let raw = s.to_descriptor().unwrap();
            prop_assert!(ModelDescriptor::from_json(&raw.to_json()).unwrap().build().unwrap() == s);
        }
    }
}

#[test]
fn four_pauli_constraints_make_a_rank_two_extreme_point() {
    // Tr ρ = 1 and vanishing X, Y, Z expectations: n = 4 real constraints.
    let tol = Tolerances::default();
    let s = models::build_state_expectations(
        Field::Complex,
        2,
        &[models::pauli_x(), models::pauli_y(), models::pauli_z()],
        &[0.0; 3],
    )
    .unwrap();
    assert_eq!(s.constraints().len(), 4);
    let half = AlgebraElement::identity(&AlgebraSpec::full(Field::Complex, 2)).scale(0.5);
    let rep = s.is_extreme(&half, &tol).unwrap();
    assert_eq!(rep.verdict, Verdict::Extreme);
    assert_eq!(rep.ranks, vec![2]);
    assert_eq!(rep.ranks[0] * rep.ranks[0], s.constraints().len());
    // With only three of the constraints I/2 is no longer extreme.
    let fewer = models::build_state_expectations(
        Field::Complex,
        2,
        &[models::pauli_x(), models::pauli_y()],
        &[0.0; 2],
    )
    .unwrap();
    assert_eq!(fewer.is_extreme(&half, &tol).unwrap().verdict, Verdict::NotExtreme);
}

#[test]
fn maximally_entangled_projector_is_an_extreme_marginal_point() {
    let tol = Tolerances::default();
    let mut phi = CMat::zeros(4, 1);
    phi[(0, 0)] = linalg::c64(0.5f64.sqrt(), 0.0);
    phi[(3, 0)] = linalg::c64(0.5f64.sqrt(), 0.0);
    let rho = &phi * phi.adjoint();
    let half = diag2(0.5, 0.5);
    let s = models::build_marginal_spectrahedron(Field::Complex, &[2, 2], &[vec![0], vec![1]], &[half.clone(), half]).unwrap();
    let rep = s.is_extreme(&AlgebraElement::from_matrix(Field::Complex, rho).unwrap(), &tol).unwrap();
    assert_eq!(rep.verdict, Verdict::Extreme);
}
