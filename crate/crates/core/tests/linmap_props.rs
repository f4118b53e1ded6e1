mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spectrex::algebra::herm_basis;
use spectrex::models::random as gen;
use spectrex::{AlgebraSpec, BlockSelection, ConstraintMap, Field};

fn subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.random_bool(0.5)).collect()
}

/// A random structured map on a tensor-product block.
fn random_map(rng: &mut ChaCha8Rng, field: Field) -> ConstraintMap {
    let factors: Vec<usize> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(1..=2)).collect();
    let d: usize = factors.iter().product();
    let n = factors.len();
    let spec = AlgebraSpec::new(field, &[(d, rng.random_range(1..=2))]).unwrap();
    match rng.random_range(0..7) {
        0 => ConstraintMap::full_trace(&AlgebraSpec::new(field, &[(d, 1), (2, 2)]).unwrap()),
        1 => ConstraintMap::partial_trace(&spec, BlockSelection::All, factors.clone(), subset(rng, n)).unwrap(),
        2 => {
            let keep = subset(rng, n);
            let dt: usize = (0..n).filter(|k| !keep.contains(k)).map(|k| factors[k]).product();
            let s = gen::random_state(rng, dt, dt, field);
            ConstraintMap::sandwich_trace(&spec, BlockSelection::All, s, factors.clone(), keep).unwrap()
        }
        3 => {
            let traced = subset(rng, n);
            let rest: Vec<usize> = (0..n).filter(|k| !traced.contains(k)).collect();
            let twirled: Vec<usize> = rest.into_iter().filter(|_| rng.random_bool(0.5)).collect();
            ConstraintMap::comb_causality(&spec, BlockSelection::All, factors.clone(), traced, twirled).unwrap()
        }
        4 => ConstraintMap::block_sum(&AlgebraSpec::uniform(field, d, 3)).unwrap(),
        5 => {
            let inner = ConstraintMap::partial_trace(&AlgebraSpec::full(field, d), BlockSelection::All, factors.clone(), subset(rng, n)).unwrap();
            ConstraintMap::sum_of_copies(2, inner).unwrap()
        }
        _ => {
            let cod = AlgebraSpec::full(field, 2);
            let m = random_matrix(rng, cod.herm_dim(), spec.herm_dim());
            ConstraintMap::matrix(&spec, &cod, m, true).unwrap()
        }
    }
}

fn coordinate_matrix(m: &ConstraintMap) -> spectrex::linalg::RMat {
    m.coordinate_matrix(&herm_basis(m.domain()), &herm_basis(m.codomain())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_matches_coordinate_matrix(seed in any::<u64>(), complex in any::<bool>()) {
        let mut r = rng(seed);
        let m = random_map(&mut r, field(complex));
        let cm = coordinate_matrix(&m);
        for _ in 0..50 {
            let h = random_hermitian(&mut r, m.domain());
            let out = m.apply(&h).unwrap();
            let x = nalgebra::DVector::from_vec(h.herm_coords());
            let y = &cm * x;
            let diff: f64 = y.iter().zip(out.herm_coords()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(diff <= 1e-10 * (1.0 + out.norm()));
        }
    }

    #[test]
    fn adjoint_is_an_involution(seed in any::<u64>(), complex in any::<bool>()) {
        let mut r = rng(seed);
        let m = random_map(&mut r, field(complex));
        let cm = coordinate_matrix(&m);
        let adj = coordinate_matrix(&m.adjoint());
        prop_assert!((&adj - cm.transpose()).norm() <= 1e-12 * (1.0 + cm.norm()));
        let twice = coordinate_matrix(&m.adjoint().adjoint());
        prop_assert!((&twice - &cm).norm() <= 1e-12 * (1.0 + cm.norm()));
    }

    #[test]
    fn hermitian_inputs_stay_hermitian(seed in any::<u64>(), complex in any::<bool>()) {
        let mut r = rng(seed);
        let m = random_map(&mut r, field(complex));
        prop_assert!(m.hermitian_preserving());
        let h = random_hermitian(&mut r, m.domain());
        let out = m.apply(&h).unwrap();
        prop_assert!(out.hermiticity_deviation() <= 1e-12 * out.norm().max(1e-300));
    }
}
