//! Correlation matrices (unit diagonal, positive semidefinite), which are
//! also the Choi-type data of Hadamard channels `A ↦ ξ ∘ A`.

use crate::algebra::{push_herm_coords, AlgebraElement, AlgebraSpec, Field};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat};
use crate::linmap::{BlockSelection, ConstraintMap};
use crate::spectra::{Constraint, Spectrahedron, Verdict};
use crate::Tolerances;

/// `{ξ ⪰ 0 : ξ_jj = 1}` on `K^n`.
pub fn build_correlation(n: usize, field: Field) -> Result<Spectrahedron> {
    let spec = AlgebraSpec::new(field, &[(n, 1)])?;
    let one = AlgebraElement::identity(&AlgebraSpec::full(field, 1));
    let cs = (0..n)
        .map(|j| {
            let mut e = CMat::zeros(n, n);
            e[(j, j)] = c64(1.0, 0.0);
            let map = ConstraintMap::sandwich_trace(&spec, BlockSelection::All, e, vec![n], vec![])?;
            Constraint::new(map, one.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Spectrahedron::new(&spec, cs)
}

/// Hadamard product `ξ ∘ A`.
pub fn hadamard(xi: &CMat, a: &CMat) -> CMat {
    xi.component_mul(a)
}

/// `ξ` is extreme iff the projectors `|x_j⟩⟨x_j|` onto the Gram vectors of a
/// factorisation `ξ = X†X` span `Herm(K^r)` over ℝ.
///
/// The factor columns are taken as `x_j = conj(V_{j,·})` with `V` the support
/// eigenvectors; this differs from the Gram vectors by the invertible
/// congruence `Λ^{1/2}`, which preserves the span dimension.
pub fn corr_extreme_test(xi: &CMat, field: Field, tol: &Tolerances) -> Result<Verdict> {
    let n = xi.nrows();
    if !xi.is_square() || n == 0 {
        return Err(Error::NotCorrelationMatrix("not a square matrix".into()));
    }
    if let Some(j) = (0..n).find(|&j| (xi[(j, j)] - c64(1.0, 0.0)).norm() > 1e-9) {
        return Err(Error::NotCorrelationMatrix(format!("diagonal entry {j} is {}", xi[(j, j)])));
    }
    let a = AlgebraElement::from_matrix(field, xi.clone())
        .map_err(|e| Error::NotCorrelationMatrix(e.to_string()))?;
    let proj = crate::algebra::support(&a, tol.supp, tol.psd)
        .map_err(|e| Error::NotCorrelationMatrix(e.to_string()))?;
    let v = proj.isometry(0);
    let r = v.ncols();
    let vectors: Vec<Vec<num_complex::Complex64>> = (0..n)
        .map(|j| {
            let x = CMat::from_fn(r, 1, |a, _| v[(j, a)].conj());
            let p = &x * x.adjoint();
            let mut c = Vec::with_capacity(field.herm_dim(r));
            push_herm_coords(&p, field, 1, &mut c);
            c.into_iter().map(|t| c64(t, 0.0)).collect()
        })
        .collect();
    let d = linalg::family_rank(&vectors, Field::Real, tol.ker, tol.gap);
    Ok(if d.inconclusive {
        Verdict::Inconclusive
    } else if d.rank == field.herm_dim(r) {
        Verdict::Extreme
    } else {
        Verdict::NotExtreme
    })
}

/// Rank-two extreme correlation matrices: a real 3×3 one and a complex 4×4
/// one.
pub fn li_tam_real() -> CMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_row_slice(3, 3, &[
        c64(1.0, 0.0), c64(0.0, 0.0), c64(h, 0.0),
        c64(0.0, 0.0), c64(1.0, 0.0), c64(h, 0.0),
        c64(h, 0.0), c64(h, 0.0), c64(1.0, 0.0),
    ])
}

pub fn li_tam_complex() -> CMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_row_slice(4, 4, &[
        c64(1.0, 0.0), c64(0.0, 0.0), c64(h, 0.0), c64(h, 0.0),
        c64(0.0, 0.0), c64(1.0, 0.0), c64(h, 0.0), c64(0.0, h),
        c64(h, 0.0), c64(h, 0.0), c64(1.0, 0.0), c64(0.5, 0.5),
        c64(h, 0.0), c64(0.0, -h), c64(0.5, -0.5), c64(1.0, 0.0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn li_tam_matrices_are_extreme() {
        let tol = Tolerances::default();
        for (xi, field) in [(li_tam_real(), Field::Real), (li_tam_complex(), Field::Complex)] {
            assert_eq!(corr_extreme_test(&xi, field, &tol).unwrap(), Verdict::Extreme);
            let s = build_correlation(xi.nrows(), field).unwrap();
            let a = AlgebraElement::from_matrix(field, xi.clone()).unwrap();
            let r = s.is_extreme(&a, &tol).unwrap();
            assert_eq!(r.verdict, Verdict::Extreme);
            assert_eq!(r.ranks, vec![2]);
        }
    }

    #[test]
    fn real_identity_two_by_two_is_not_extreme() {
        let tol = Tolerances::default();
        let id = linalg::identity(2);
        assert_eq!(corr_extreme_test(&id, Field::Real, &tol).unwrap(), Verdict::NotExtreme);
        let s = build_correlation(2, Field::Real).unwrap();
        let r = s.is_extreme(&AlgebraElement::from_matrix(Field::Real, id).unwrap(), &tol).unwrap();
        assert_eq!(r.kernel_dim, 1);
    }

    #[test]
    fn one_by_one_is_extreme() {
        let tol = Tolerances::default();
        assert_eq!(corr_extreme_test(&linalg::identity(1), Field::Real, &tol).unwrap(), Verdict::Extreme);
    }

    #[test]
    fn bad_diagonal_rejected() {
        let tol = Tolerances::default();
        let m = linalg::identity(2).scale(2.0);
        assert!(matches!(corr_extreme_test(&m, Field::Real, &tol), Err(Error::NotCorrelationMatrix(_))));
    }
}
