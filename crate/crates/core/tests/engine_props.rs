mod common;

use common::*;
use proptest::prelude::*;
use spectrex::algebra::support;
use spectrex::{decompose_extreme, Tolerances, Verdict};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn engine_agrees_with_span_test(seed in any::<u64>(), complex in any::<bool>()) {
        let tol = Tolerances::default();
        let (s, a) = random_instance(&mut rng(seed), field(complex), false);
        prop_assert!(s.hermitian_defined());
        let engine = s.is_extreme(&a, &tol).unwrap();
        let span = s.span_test(&a, &tol).unwrap();
        prop_assert_eq!(engine.verdict, span.verdict);
        prop_assert_eq!(engine.kernel_dim, span.kernel_dim);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_directions_are_feasible(seed in any::<u64>(), complex in any::<bool>()) {
        let tol = Tolerances::default();
        let (s, a) = random_instance(&mut rng(seed), field(complex), false);
        let rep = s.is_extreme(&a, &tol).unwrap();
        for h in &rep.kernel_basis {
            let feasible = (1..60).map(|k| 0.5f64.powi(k)).any(|eps| {
                let plus = a.axpy(eps, h).unwrap();
                let minus = a.axpy(-eps, h).unwrap();
                s.membership(&plus, &tol).unwrap().member && s.membership(&minus, &tol).unwrap().member
            });
            prop_assert!(feasible);
        }
    }

    #[test]
    fn extreme_points_admit_no_feasible_direction(seed in any::<u64>(), complex in any::<bool>()) {
        let tol = Tolerances::default();
        let mut r = rng(seed);
        let (s, a) = random_instance(&mut r, field(complex), false);
        let rep = s.is_extreme(&a, &tol).unwrap();
        if rep.verdict == Verdict::Extreme {
            let proj = support(&a, tol.supp, tol.psd).unwrap();
            for _ in 0..500 {
                let h = proj.project(&random_hermitian(&mut r, s.spec())).unwrap();
                let n = h.norm();
                if n < 1e-12 {
                    continue;
                }
                let m: f64 = s.constraint_coords(&h).unwrap().iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!(m > rep.threshold * n);
            }
        }
    }

    #[test]
    fn certified_extremes_respect_the_bounds(seed in any::<u64>(), complex in any::<bool>()) {
        let tol = Tolerances::default();
        let (s, a) = random_instance(&mut rng(seed), field(complex), true);
        let dec = decompose_extreme(&s, &a, 64, &tol).unwrap();
        for c in dec.components.iter().filter(|c| c.report.verdict == Verdict::Extreme) {
            let audit = s.rank_bounds(&c.element, &tol).unwrap();
            prop_assert!(audit.all_satisfied(), "{:?}", audit);
            prop_assert!(audit.pataki.dim_va + s.dim_zs(&tol) <= s.spec().herm_dim());
            prop_assert_eq!(s.intersection_dim(&c.element, &tol).unwrap(), 0);
        }
    }

    #[test]
    fn intersection_dimension_is_the_kernel_dimension(seed in any::<u64>(), complex in any::<bool>()) {
        let tol = Tolerances::default();
        let (s, a) = random_instance(&mut rng(seed), field(complex), false);
        let rep = s.is_extreme(&a, &tol).unwrap();
        prop_assert_eq!(s.intersection_dim(&a, &tol).unwrap(), rep.kernel_dim);
    }

    #[test]
    fn decomposition_reconstructs(seed in any::<u64>(), complex in any::<bool>()) {
        let tol = Tolerances::default();
        let (s, a) = random_instance(&mut rng(seed), field(complex), true);
        let d = s.spec().herm_dim();
        let dec = decompose_extreme(&s, &a, 64, &tol).unwrap();
        prop_assert!(dec.reconstruction_error <= 1e-8 * a.norm());
        prop_assert!(dec.tree_depth <= d);
        prop_assert!(dec.components.len() <= d + 1);
        let total: f64 = dec.components.iter().map(|c| c.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        let top = s.is_extreme(&a, &tol).unwrap();
        for c in &dec.components {
            prop_assert!(c.weight > 0.0);
            prop_assert!(s.membership(&c.element, &tol).unwrap().member);
            if top.verdict == Verdict::NotExtreme {
                prop_assert!(c.report.dim_va < top.dim_va);
            }
        }
    }
}
