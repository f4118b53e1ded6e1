mod common;

use common::*;
use proptest::prelude::*;
use spectrex::algebra::{herm_basis, support};
use spectrex::{inner, AlgebraElement};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn herm_basis_is_orthonormal(seed in any::<u64>(), complex in any::<bool>()) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r, field(complex));
        let basis = herm_basis(&spec);
        let expected: usize = spec.blocks.iter().map(|b| spec.field.herm_dim(b.dim)).sum();
        prop_assert_eq!(basis.len(), expected);
        for (i, x) in basis.elements().iter().enumerate() {
            for (j, y) in basis.elements().iter().enumerate() {
                let g = inner(x, y).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g.re - want).abs() < 1e-12 && g.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn support_projection_reconstructs(seed in any::<u64>(), complex in any::<bool>()) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r, field(complex));
        let a = random_positive(&mut r, &spec);
        let proj = support(&a, 1e-9, 1e-9).unwrap();
        let back = proj.project(&a).unwrap();
        prop_assert!(back.distance(&a).unwrap() <= 10.0 * 1e-9 * a.norm());
        prop_assert_eq!(proj.ranks(), a.ranks(1e-9));
    }

    #[test]
    fn coordinates_round_trip(seed in any::<u64>(), complex in any::<bool>()) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r, field(complex));
        let h = random_hermitian(&mut r, &spec);
        let basis = herm_basis(&spec);
        let c = basis.coords(&h).unwrap();
        prop_assert!(basis.synthesize(&c).unwrap().distance(&h).unwrap() < 1e-12 * (1.0 + h.norm()));
        let again = AlgebraElement::from_herm_coords(&spec, &h.herm_coords()).unwrap();
        prop_assert!(again.distance(&h).unwrap() < 1e-12 * (1.0 + h.norm()));
    }
}
