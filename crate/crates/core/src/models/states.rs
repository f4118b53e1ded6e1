//! Density matrices with prescribed expectation values or marginals.

use crate::algebra::{AlgebraElement, AlgebraSpec, Field};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::linmap::{BlockSelection, ConstraintMap};
use crate::spectra::{Constraint, Spectrahedron};

/// `{ρ ⪰ 0 : Tr ρ = 1, Tr[O_j ρ] = a_j}` on `K^d`.
pub fn build_state_expectations(field: Field, d: usize, observables: &[CMat], values: &[f64]) -> Result<Spectrahedron> {
    if observables.len() != values.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} observables but {} values",
            observables.len(),
            values.len()
        )));
    }
    let spec = AlgebraSpec::new(field, &[(d, 1)])?;
    let scalar = AlgebraSpec::full(field, 1);
    let mut cs = vec![Constraint::new(
        ConstraintMap::full_trace(&spec),
        AlgebraElement::identity(&scalar),
    )?];
    for (o, &a) in observables.iter().zip(values) {
        if o.shape() != (d, d) {
            return Err(Error::ShapeMismatch(format!("observable must be {d}x{d}")));
        }
        if linalg::hermiticity_deviation(o) > 1e-12 * linalg::max_abs(o).max(1.0) {
            return Err(Error::NotHermitianObservable);
        }
        if field == Field::Real && !linalg::is_real(o, 1e-12) {
            return Err(Error::FieldMismatch);
        }
        let map = ConstraintMap::sandwich_trace(&spec, BlockSelection::All, o.clone(), vec![d], vec![])?;
        cs.push(Constraint::new(map, AlgebraElement::identity(&scalar).scale(a))?);
    }
    Spectrahedron::new(&spec, cs)
}

/// States on `⊗_k K^{d_k}` whose marginal on each subset `S_j` is `ρ_{S_j}`.
pub fn build_marginal_spectrahedron(
    field: Field,
    factors: &[usize],
    subsets: &[Vec<usize>],
    marginals: &[CMat],
) -> Result<Spectrahedron> {
    if subsets.len() != marginals.len() {
        return Err(Error::ShapeMismatch("one marginal per subset is required".into()));
    }
    if factors.is_empty() || factors.contains(&0) {
        return Err(Error::BadDims("factor dimensions must be positive".into()));
    }
    let d: usize = factors.iter().product();
    let spec = AlgebraSpec::full(field, d);
    let mut cs = Vec::with_capacity(subsets.len());
    for (sub, rho) in subsets.iter().zip(marginals) {
        let mut keep = sub.clone();
        keep.sort_unstable();
        keep.dedup();
        let dk: usize = keep.iter().map(|&k| factors.get(k).copied().unwrap_or(0)).product();
        if rho.shape() != (dk, dk) || keep.iter().any(|&k| k >= factors.len()) {
            return Err(Error::ShapeMismatch(format!(
                "marginal on {keep:?} must be {dk}x{dk}, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let map = ConstraintMap::partial_trace(&spec, BlockSelection::All, factors.to_vec(), keep)?;
        cs.push(Constraint::new(map, AlgebraElement::from_matrix(field, rho.clone())?)?);
    }
    Spectrahedron::new(&spec, cs)
}

/// Inclusion–exclusion count of `dim Span{Herm(H_{S_j}) ⊗ I}` in units of
/// `herm_dim`: `Σ_j h(S_j) − Σ_{j<k} h(S_j ∩ S_k) + …` with `d_∅ = 1`.
pub fn inclusion_exclusion_bound(field: Field, factors: &[usize], subsets: &[Vec<usize>]) -> i64 {
    let n = subsets.len();
    let mut total: i64 = 0;
    for mask in 1u64..(1u64 << n) {
        let chosen: Vec<&Vec<usize>> = (0..n).filter(|j| mask >> j & 1 == 1).map(|j| &subsets[j]).collect();
        let common: Vec<usize> = (0..factors.len())
            .filter(|k| chosen.iter().all(|s| s.contains(k)))
            .collect();
        let dim: usize = common.iter().map(|&k| factors[k]).product();
        let term = field.herm_dim(dim) as i64;
        total += if chosen.len() % 2 == 1 { term } else { -term };
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::spectra::Verdict;
    use crate::Tolerances;

    #[test]
    fn bipartite_bounds() {
        let subsets = vec![vec![0], vec![1]];
        assert_eq!(inclusion_exclusion_bound(Field::Complex, &[2, 2], &subsets), 7);
        assert_eq!(inclusion_exclusion_bound(Field::Real, &[2, 2], &subsets), 5);
        // Overlapping subsets of three qubits.
        let three = vec![vec![0, 1], vec![1, 2]];
        assert_eq!(inclusion_exclusion_bound(Field::Complex, &[2, 2, 2], &three), 16 + 16 - 4);
    }

    #[test]
    fn exact_span_matches_bound_for_bipartite() {
        let half = linalg::identity(2).scale(0.5);
        let s = build_marginal_spectrahedron(Field::Complex, &[2, 2], &[vec![0], vec![1]], &[half.clone(), half]).unwrap();
        let tol = Tolerances::default();
        assert_eq!(s.spec().herm_dim() - s.dim_zs(&tol), 7);
    }

    #[test]
    fn bell_state_is_extreme_with_maximally_mixed_marginals() {
        let half = linalg::identity(2).scale(0.5);
        let s = build_marginal_spectrahedron(Field::Complex, &[2, 2], &[vec![0], vec![1]], &[half.clone(), half]).unwrap();
        let mut m = CMat::zeros(4, 4);
        for &i in &[0, 3] {
            for &j in &[0, 3] {
                m[(i, j)] = c64(0.5, 0.0);
            }
        }
        let tol = Tolerances::default();
        let a = AlgebraElement::from_matrix(Field::Complex, m).unwrap();
        assert_eq!(s.is_extreme(&a, &tol).unwrap().verdict, Verdict::Extreme);
        let mixed = AlgebraElement::identity(s.spec()).scale(0.25);
        assert_eq!(s.is_extreme(&mixed, &tol).unwrap().verdict, Verdict::NotExtreme);
    }

    #[test]
    fn full_marginal_pins_the_state() {
        let rho = CMat::from_row_slice(2, 2, &[c64(0.6, 0.0), c64(0.1, 0.1), c64(0.1, -0.1), c64(0.4, 0.0)]);
        let s = build_marginal_spectrahedron(Field::Complex, &[2], &[vec![0]], std::slice::from_ref(&rho)).unwrap();
        let a = AlgebraElement::from_matrix(Field::Complex, rho).unwrap();
        assert_eq!(s.is_extreme(&a, &Tolerances::default()).unwrap().verdict, Verdict::Extreme);
    }

    #[test]
    fn non_hermitian_observable_rejected() {
        let o = CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert_eq!(
            build_state_expectations(Field::Complex, 2, &[o], &[0.0]).err(),
            Some(Error::NotHermitianObservable)
        );
    }
}
