//! Finite-outcome POVMs with a prescribed total (`Σ_x P_x = Γ`) and quantum
//! instruments (one Choi block per outcome).

use num_complex::Complex64;

use crate::algebra::{support, AlgebraElement, AlgebraSpec, Field};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::linmap::{BlockSelection, ConstraintMap};
use crate::models::channels::{
    independence_verdict, kraus_family_verdict, mapping_constraint_list, unvec_kraus, ChannelVariant,
    ChoiPoint, MappingConstraints,
};
use crate::spectra::{Constraint, Spectrahedron, Verdict};
use crate::Tolerances;

/// `{⊕_x P_x ⪰ 0 : Σ_x P_x = Γ}` over `outcomes` copies of `L(K^d)`.
/// `Γ = I` gives POVMs, `Γ = ρ` ensemble decompositions of `ρ`.
pub fn build_povm_spectrahedron(field: Field, d: usize, outcomes: usize, gamma: &CMat) -> Result<Spectrahedron> {
    if outcomes == 0 || d == 0 {
        return Err(Error::BadDims("need at least one outcome and a positive dimension".into()));
    }
    if gamma.shape() != (d, d) {
        return Err(Error::ShapeMismatch(format!("normaliser must be {d}x{d}")));
    }
    let g = AlgebraElement::from_matrix(field, gamma.clone())?;
    if g.check_positive(1e-9).is_err() {
        return Err(Error::NotPositiveTarget);
    }
    let spec = AlgebraSpec::uniform(field, d, outcomes);
    let map = ConstraintMap::block_sum(&spec)?;
    Spectrahedron::new(&spec, vec![Constraint::new(map, g)?])
}

/// Closed-form test for POVMs normalised by a block sum: the operators
/// `|ψ_a^x⟩⟨ψ_b^x|` (ψ a basis of `Supp(P_x)`) must be independent over ℂ,
/// or their symmetrisations over ℝ.
pub fn povm_extreme_test(p: &AlgebraElement, tol: &Tolerances) -> Result<Verdict> {
    let proj = support(p, tol.supp, tol.psd)?;
    let field = p.field();
    let mut vectors: Vec<Vec<Complex64>> = Vec::new();
    for v in proj.isometries() {
        let r = v.ncols();
        let op = |a: usize, b: usize| -> CMat { v.column(a) * v.column(b).adjoint() };
        for a in 0..r {
            let lo = if field == Field::Real { a } else { 0 };
            for b in lo..r {
                let o = match field {
                    Field::Complex => op(a, b),
                    Field::Real => (op(a, b) + op(b, a)).scale(0.5),
                };
                vectors.push(linalg::flatten(&o));
            }
        }
    }
    Ok(independence_verdict(&vectors, field, tol))
}

/// Number of blocks that are not numerically zero.
pub fn nonzero_outcomes(p: &AlgebraElement, tol: &Tolerances) -> usize {
    p.ranks(tol.supp).iter().filter(|&&r| r > 0).count()
}

#[derive(Clone, Debug, PartialEq)]
pub enum InstrumentVariant {
    /// `Σ_x 𝒞_x` trace preserving.
    Plain,
    /// `Σ_x 𝒞_x` trace and identity preserving.
    Bistochastic,
    /// `Σ_x 𝒞_x` trace preserving with `ρ_in ↦ ρ_out`.
    Gibbs { rho_in: CMat, rho_out: CMat },
    /// `Σ_x 𝒞_x†(Q_j) = P_j` for an input POVM `P` and output POVM `Q`.
    PovmMapping { input: Vec<CMat>, output: Vec<CMat> },
}

impl InstrumentVariant {
    pub fn constraints(&self, d_in: usize, d_out: usize) -> Result<MappingConstraints> {
        match self {
            InstrumentVariant::Plain => ChannelVariant::Channel.constraints(d_in, d_out),
            InstrumentVariant::Bistochastic => ChannelVariant::Bistochastic.constraints(d_in, d_out),
            InstrumentVariant::Gibbs { rho_in, rho_out } => ChannelVariant::GibbsPreserving {
                rho_in: rho_in.clone(),
                rho_out: rho_out.clone(),
            }
            .constraints(d_in, d_out),
            InstrumentVariant::PovmMapping { input, output } => {
                if input.len() != output.len() || input.is_empty() {
                    return Err(Error::BadDims("input and output POVMs need equal, non-zero length".into()));
                }
                MappingConstraints::new(
                    d_in,
                    d_out,
                    vec![],
                    output.iter().cloned().zip(input.iter().cloned()).collect(),
                )
            }
        }
    }
}

/// Instruments as the algebra `⊕_x L(H_in ⊗ H_out)` with the variant's
/// constraints on `Σ_x M_x`.
pub fn build_instrument_spectrahedron(
    d_in: usize,
    d_out: usize,
    outcomes: usize,
    field: Field,
    variant: &InstrumentVariant,
) -> Result<Spectrahedron> {
    if outcomes == 0 || d_in == 0 || d_out == 0 {
        return Err(Error::BadDims("dimensions and outcome count must be positive".into()));
    }
    let mc = variant.constraints(d_in, d_out)?;
    let spec = AlgebraSpec::uniform(field, d_in * d_out, outcomes);
    Spectrahedron::new(&spec, mapping_constraint_list(&spec, BlockSelection::All, &mc)?)
}

/// Closed-form instrument test: per outcome, Kraus operators from
/// orthonormal support vectors; all `O_ab^{(x)}` together must be
/// independent.
pub fn instrument_extreme_test(
    m: &AlgebraElement,
    d_in: usize,
    d_out: usize,
    variant: &InstrumentVariant,
    tol: &Tolerances,
) -> Result<Verdict> {
    let mc = variant.constraints(d_in, d_out)?;
    if m.spec().blocks.iter().any(|b| b.dim != d_in * d_out) {
        return Err(Error::BadDims("every block must be H_in ⊗ H_out".into()));
    }
    let total = m.blocks().iter().fold(CMat::zeros(d_in * d_out, d_in * d_out), |acc, b| acc + b);
    let sum = ChoiPoint::from_choi(d_in, d_out, m.field(), total, tol)?;
    let scale = 1.0 + sum.choi.norm();
    for (index, residual) in mc.residuals(&sum).into_iter().enumerate() {
        if residual > 1e-8 * scale {
            return Err(Error::ConstraintViolated { index, residual });
        }
    }
    let proj = support(m, tol.supp, tol.psd)?;
    let families: Vec<Vec<CMat>> = proj
        .isometries()
        .iter()
        .map(|v| {
            (0..v.ncols())
                .map(|k| {
                    let col: Vec<Complex64> = v.column(k).iter().copied().collect();
                    unvec_kraus(&col, d_in, d_out)
                })
                .collect()
        })
        .collect();
    Ok(kraus_family_verdict(&families, &mc, m.field(), tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    fn proj(v: &[Complex64]) -> CMat {
        let k = nalgebra::DVector::from_column_slice(v);
        &k * k.adjoint()
    }

    #[test]
    fn projective_measurement_is_extreme() {
        let tol = Tolerances::default();
        let s = build_povm_spectrahedron(Field::Complex, 2, 2, &linalg::identity(2)).unwrap();
        let p = AlgebraElement::new(
            s.spec(),
            vec![proj(&[c64(1.0, 0.0), c64(0.0, 0.0)]), proj(&[c64(0.0, 0.0), c64(1.0, 0.0)])],
        )
        .unwrap();
        assert_eq!(povm_extreme_test(&p, &tol).unwrap(), Verdict::Extreme);
        assert_eq!(s.is_extreme(&p, &tol).unwrap().verdict, Verdict::Extreme);
    }

    #[test]
    fn trine_is_extreme() {
        let tol = Tolerances::default();
        let s = build_povm_spectrahedron(Field::Complex, 2, 3, &linalg::identity(2)).unwrap();
        let blocks = (0..3)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                proj(&[c64((t / 2.0).cos(), 0.0), c64((t / 2.0).sin(), 0.0)]).scale(2.0 / 3.0)
            })
            .collect();
        let p = AlgebraElement::new(s.spec(), blocks).unwrap();
        assert!(s.membership(&p, &tol).unwrap().member);
        assert_eq!(povm_extreme_test(&p, &tol).unwrap(), Verdict::Extreme);
        assert_eq!(s.is_extreme(&p, &tol).unwrap().verdict, Verdict::Extreme);
    }

    #[test]
    fn negative_normaliser_rejected() {
        let g = linalg::identity(2).scale(-1.0);
        assert_eq!(
            build_povm_spectrahedron(Field::Complex, 2, 2, &g).err(),
            Some(Error::NotPositiveTarget)
        );
    }

    #[test]
    fn lueders_instrument_is_extreme() {
        let tol = Tolerances::default();
        let p0 = proj(&[c64(1.0, 0.0), c64(0.0, 0.0)]);
        let p1 = proj(&[c64(0.0, 0.0), c64(1.0, 0.0)]);
        let m0 = crate::models::channels::choi_of_kraus(&[p0], 2, 2);
        let m1 = crate::models::channels::choi_of_kraus(&[p1], 2, 2);
        let s = build_instrument_spectrahedron(2, 2, 2, Field::Complex, &InstrumentVariant::Plain).unwrap();
        let m = AlgebraElement::new(s.spec(), vec![m0, m1]).unwrap();
        assert_eq!(
            instrument_extreme_test(&m, 2, 2, &InstrumentVariant::Plain, &tol).unwrap(),
            Verdict::Extreme
        );
        assert_eq!(s.is_extreme(&m, &tol).unwrap().verdict, Verdict::Extreme);
    }

    #[test]
    fn split_channel_instrument_is_not_extreme() {
        let tol = Tolerances::default();
        let c = crate::models::channels::choi_of_kraus(&[linalg::identity(2)], 2, 2);
        let s = build_instrument_spectrahedron(2, 2, 2, Field::Complex, &InstrumentVariant::Plain).unwrap();
        let m = AlgebraElement::new(s.spec(), vec![c.scale(0.5), c.scale(0.5)]).unwrap();
        assert_eq!(
            instrument_extreme_test(&m, 2, 2, &InstrumentVariant::Plain, &tol).unwrap(),
            Verdict::NotExtreme
        );
        assert_eq!(s.is_extreme(&m, &tol).unwrap().verdict, Verdict::NotExtreme);
    }

    #[test]
    fn single_outcome_instrument_is_a_channel() {
        let tol = Tolerances::default();
        let c = crate::models::channels::choi_of_kraus(&[linalg::identity(2)], 2, 2);
        let s = build_instrument_spectrahedron(2, 2, 1, Field::Complex, &InstrumentVariant::Plain).unwrap();
        let m = AlgebraElement::new(s.spec(), vec![c]).unwrap();
        assert_eq!(
            instrument_extreme_test(&m, 2, 2, &InstrumentVariant::Plain, &tol).unwrap(),
            Verdict::Extreme
        );
    }
}
