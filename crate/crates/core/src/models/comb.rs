//! Quantum combs with up to three steps. Tensor factors are interleaved as
//! `in_1, out_1, in_2, out_2, …`, so step `m` (0-based) owns sites `2m` and
//! `2m + 1`.

use crate::algebra::{herm_basis, support, AlgebraElement, AlgebraSpec, Field};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::linmap::{BlockSelection, ConstraintMap};
use crate::spectra::{Constraint, Spectrahedron, Verdict};
use crate::Tolerances;

pub const MAX_STEPS: usize = 3;

fn layout(steps: &[(usize, usize)]) -> Result<Vec<usize>> {
    if steps.is_empty() || steps.len() > MAX_STEPS {
        return Err(Error::BadDims(format!("combs need 1 to {MAX_STEPS} steps, got {}", steps.len())));
    }
    if steps.iter().any(|&(i, o)| i == 0 || o == 0) {
        return Err(Error::BadDims("step dimensions must be positive".into()));
    }
    Ok(steps.iter().flat_map(|&(i, o)| [i, o]).collect())
}

fn in_sites(n: usize, from: usize) -> Vec<usize> {
    (from..n).map(|m| 2 * m).collect()
}

fn out_sites(n: usize, from: usize) -> Vec<usize> {
    (from..n).map(|m| 2 * m + 1).collect()
}

/// `Tr_out C = I_in`, and for each `j < n` the causality constraint
/// `Tr_{out>j} C − I_{in>j}/d ⊗ Tr_{in>j, out>j} C = 0`.
pub fn build_comb(steps: &[(usize, usize)], field: Field) -> Result<Spectrahedron> {
    let dims = layout(steps)?;
    let n = steps.len();
    let d: usize = dims.iter().product();
    let spec = AlgebraSpec::full(field, d);
    let d_in: usize = steps.iter().map(|s| s.0).product();
    let mut cs = vec![Constraint::new(
        ConstraintMap::partial_trace(&spec, BlockSelection::All, dims.clone(), in_sites(n, 0))?,
        AlgebraElement::identity(&AlgebraSpec::full(field, d_in)),
    )?];
    for j in 1..n {
        let map = ConstraintMap::comb_causality(&spec, BlockSelection::All, dims.clone(), out_sites(n, j), in_sites(n, j))?;
        let zero = AlgebraElement::zeros(map.codomain());
        cs.push(Constraint::new(map, zero)?);
    }
    Spectrahedron::new(&spec, cs)
}

/// Reorders a Choi operator on `(in_1 ⊗ … ⊗ in_n) ⊗ (out_1 ⊗ … ⊗ out_n)`
/// into the interleaved comb layout.
pub fn interleave_choi(choi: &CMat, steps: &[(usize, usize)]) -> Result<CMat> {
    let n = steps.len();
    layout(steps)?;
    let dims: Vec<usize> = steps.iter().map(|s| s.0).chain(steps.iter().map(|s| s.1)).collect();
    let d: usize = dims.iter().product();
    if choi.shape() != (d, d) {
        return Err(Error::ShapeMismatch(format!("comb Choi must be {d}x{d}")));
    }
    let perm: Vec<usize> = (0..n).flat_map(|m| [m, n + m]).collect();
    Ok(linalg::permute_factors(choi, &dims, &perm))
}

/// The spanning family of the closed-form criterion: `I_out ⊗ Herm(in)`
/// together with, for each `j ≥ 1`, `I_{out>j} ⊗ (H − I_{in>j}/d ⊗ Tr_{in>j} H)`
/// for `H` ranging over `Herm(in ⊗ out≤j)`.
pub fn comb_span_family(steps: &[(usize, usize)], field: Field) -> Result<Vec<CMat>> {
    let dims = layout(steps)?;
    let n = steps.len();
    let mut family = Vec::new();
    let ins = in_sites(n, 0);
    let din: usize = ins.iter().map(|&s| dims[s]).product();
    for h in herm_basis(&AlgebraSpec::full(field, din)).elements() {
        family.push(linalg::embed(h.block(0), &dims, &ins));
    }
    for j in 1..n {
        let late_out = out_sites(n, j);
        let sites: Vec<usize> = (0..dims.len()).filter(|s| !late_out.contains(s)).collect();
        let sub_dims: Vec<usize> = sites.iter().map(|&s| dims[s]).collect();
        let late_in: Vec<usize> = sites
            .iter()
            .enumerate()
            .filter(|(_, s)| **s % 2 == 0 && **s / 2 >= j)
            .map(|(k, _)| k)
            .collect();
        let early: Vec<usize> = (0..sites.len()).filter(|k| !late_in.contains(k)).collect();
        let dw: usize = late_in.iter().map(|&k| sub_dims[k]).product();
        let dsub: usize = sub_dims.iter().product();
        for h in herm_basis(&AlgebraSpec::full(field, dsub)).elements() {
            let h = h.block(0);
            let reduced = linalg::partial_trace(h, &sub_dims, &early);
            let twirled = linalg::embed(&reduced, &sub_dims, &early).unscale(dw as f64);
            family.push(linalg::embed(&(h - twirled), &dims, &sites));
        }
    }
    Ok(family)
}

/// Closed-form comb test: `Π_C (span family) Π_C` must be all of
/// `Herm(Supp C)`.
pub fn comb_extreme_test(c: &CMat, steps: &[(usize, usize)], field: Field, tol: &Tolerances) -> Result<Verdict> {
    let s = build_comb(steps, field)?;
    let a = AlgebraElement::from_matrix(field, c.clone())?;
    let m = s.membership(&a, tol)?;
    if !m.member {
        return Err(Error::NotMember { residual: m.worst_residual(), min_eigenvalue: m.min_eigenvalue });
    }
    let proj = support(&a, tol.supp, tol.psd)?;
    let dim_va = proj.dim_va();
    let cols = comb_span_family(steps, field)?
        .into_iter()
        .map(|x| proj.va_coords(&AlgebraElement::from_matrix(field, x)?))
        .collect::<Result<Vec<_>>>()?;
    let span = linalg::columns_to_matrix(&cols, dim_va);
    let sv = linalg::singular_values(&span.transpose());
    let scale = sv.first().copied().unwrap_or(0.0).max(1.0);
    let d = linalg::decide_rank(sv, scale, tol.ker, tol.gap);
    Ok(if d.inconclusive {
        Verdict::Inconclusive
    } else if d.rank == dim_va {
        Verdict::Extreme
    } else {
        Verdict::NotExtreme
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::models::channels::choi_of_kraus;

    fn swap() -> CMat {
        let mut s = CMat::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                s[(2 * i + j, 2 * j + i)] = c64(1.0, 0.0);
            }
        }
        s
    }

    #[test]
    fn sequential_identity_is_an_extreme_comb() {
        let tol = Tolerances::default();
        let id = choi_of_kraus(&[linalg::identity(2)], 2, 2);
        let c = linalg::kron(&id, &id);
        let s = build_comb(&[(2, 2), (2, 2)], Field::Complex).unwrap();
        let a = AlgebraElement::from_matrix(Field::Complex, c.clone()).unwrap();
        assert!(s.membership(&a, &tol).unwrap().member);
        let engine = s.is_extreme(&a, &tol).unwrap().verdict;
        assert_eq!(engine, Verdict::Extreme);
        assert_eq!(comb_extreme_test(&c, &[(2, 2), (2, 2)], Field::Complex, &tol).unwrap(), engine);
    }

    #[test]
    fn swap_signals_backwards() {
        let tol = Tolerances::default();
        let steps = [(2, 2), (2, 2)];
        let choi = choi_of_kraus(&[swap()], 4, 4);
        let c = interleave_choi(&choi, &steps).unwrap();
        let s = build_comb(&steps, Field::Complex).unwrap();
        let a = AlgebraElement::from_matrix(Field::Complex, c).unwrap();
        let m = s.membership(&a, &tol).unwrap();
        assert!(!m.member);
        assert!(m.residuals[1] > 0.1);
    }

    #[test]
    fn one_step_comb_is_the_channel_set() {
        let tol = Tolerances::default();
        let s = build_comb(&[(2, 2)], Field::Complex).unwrap();
        assert_eq!(s.constraints().len(), 1);
        let c = choi_of_kraus(&[linalg::identity(2)], 2, 2);
        assert_eq!(comb_extreme_test(&c, &[(2, 2)], Field::Complex, &tol).unwrap(), Verdict::Extreme);
        let mixed = linalg::identity(4).scale(0.5);
        assert_eq!(comb_extreme_test(&mixed, &[(2, 2)], Field::Complex, &tol).unwrap(), Verdict::NotExtreme);
    }

    #[test]
    fn too_many_steps_rejected() {
        assert!(matches!(build_comb(&[(1, 1); 4], Field::Real), Err(Error::BadDims(_))));
    }

    #[test]
    fn span_family_matches_adjoint_images() {
        // The family spans the same space as the adjoints of the constraint maps.
        let steps = [(2, 1), (1, 2)];
        let s = build_comb(&steps, Field::Real).unwrap();
        let fam = comb_span_family(&steps, Field::Real).unwrap();
        let coords = |m: &CMat| AlgebraElement::from_matrix(Field::Real, m.clone()).unwrap().herm_coords();
        let mut adj = Vec::new();
        for c in s.constraints() {
            for k in herm_basis(c.map.codomain()).elements() {
                adj.push(c.map.apply_adjoint(k).unwrap().herm_coords());
            }
        }
        let d = s.spec().herm_dim();
        let f: Vec<Vec<f64>> = fam.iter().map(coords).collect();
        let rank = |cols: &[Vec<f64>]| {
            linalg::decide_rank(linalg::singular_values(&linalg::columns_to_matrix(cols, d)), 1.0, 1e-9, 100.0).rank
        };
        let mut both = f.clone();
        both.extend(adj.iter().cloned());
        assert_eq!(rank(&f), rank(&adj));
        assert_eq!(rank(&f), rank(&both));
    }
}
