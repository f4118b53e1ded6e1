//! Choi matrices, mapping-constrained CP maps and their closed-form
//! extremality test.
//!
//! Choi convention: `C = Σ_a |Γ_a⟩⟨Γ_a|` on `H_in ⊗ H_out` with
//! `|Γ_a⟩ = (I ⊗ C_a)|Φ⟩` and `|Φ⟩ = Σ_l |l⟩|l⟩`. Then `Tr_out C = (Σ C_a†C_a)^T`,
//! `Tr_in[(A^T ⊗ I) C] = 𝒞(A)` and `Tr_out[(I ⊗ B) C] = 𝒞†(B)^T`.

use num_complex::Complex64;

use crate::algebra::{AlgebraElement, AlgebraSpec, Field};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::linmap::{BlockSelection, ConstraintMap};
use crate::spectra::{Constraint, Spectrahedron, Verdict};
use crate::Tolerances;

/// Column-stacked `|Γ⟩` of a Kraus operator: entry `l * d_out + o` is `C[o, l]`.
pub fn vec_kraus(c: &CMat) -> Vec<Complex64> {
    let (d_out, d_in) = c.shape();
    let mut v = vec![Complex64::new(0.0, 0.0); d_in * d_out];
    for l in 0..d_in {
        for o in 0..d_out {
            v[l * d_out + o] = c[(o, l)];
        }
    }
    v
}

pub fn unvec_kraus(v: &[Complex64], d_in: usize, d_out: usize) -> CMat {
    CMat::from_fn(d_out, d_in, |o, l| v[l * d_out + o])
}

pub fn choi_of_kraus(kraus: &[CMat], d_in: usize, d_out: usize) -> CMat {
    let n = d_in * d_out;
    let mut choi = CMat::zeros(n, n);
    for c in kraus {
        let v = nalgebra::DVector::from_vec(vec_kraus(c));
        choi += &v * v.adjoint();
    }
    choi
}

/// A CP map given by its Choi matrix, with Kraus operators extracted from
/// the eigendecomposition.
#[derive(Clone, Debug)]
pub struct ChoiPoint {
    pub d_in: usize,
    pub d_out: usize,
    pub field: Field,
    pub choi: CMat,
    pub kraus: Vec<CMat>,
    /// Kraus operators built from orthonormal support vectors, without the
    /// eigenvalue weights. They span the same family as `kraus`.
    pub unit_kraus: Vec<CMat>,
}

impl ChoiPoint {
    pub fn from_choi(d_in: usize, d_out: usize, field: Field, choi: CMat, tol: &Tolerances) -> Result<Self> {
        if choi.shape() != (d_in * d_out, d_in * d_out) {
            return Err(Error::ShapeMismatch(format!(
                "Choi matrix must be {n}x{n}",
                n = d_in * d_out
            )));
        }
        let a = AlgebraElement::from_matrix(field, choi.clone())?;
        let proj = crate::algebra::support(&a, tol.supp, tol.psd)?;
        let v = proj.isometry(0);
        let ls = &proj.eigenvalues()[0];
        let mut kraus = Vec::with_capacity(v.ncols());
        let mut unit_kraus = Vec::with_capacity(v.ncols());
        // Largest eigenvalue first.
        for k in (0..v.ncols()).rev() {
            let col: Vec<Complex64> = v.column(k).iter().copied().collect();
            let u = unvec_kraus(&col, d_in, d_out);
            kraus.push(u.scale(ls[k].sqrt()));
            unit_kraus.push(u);
        }
        Ok(Self { d_in, d_out, field, choi, kraus, unit_kraus })
    }

    pub fn from_kraus(field: Field, kraus: &[CMat], tol: &Tolerances) -> Result<Self> {
        let (d_out, d_in) = kraus
            .first()
            .map(|c| c.shape())
            .ok_or_else(|| Error::BadDims("at least one Kraus operator is required".into()))?;
        if kraus.iter().any(|c| c.shape() != (d_out, d_in)) {
            return Err(Error::ShapeMismatch("Kraus operators differ in shape".into()));
        }
        Self::from_choi(d_in, d_out, field, choi_of_kraus(kraus, d_in, d_out), tol)
    }

    pub fn unitary(field: Field, u: &CMat, tol: &Tolerances) -> Result<Self> {
        Self::from_kraus(field, std::slice::from_ref(u), tol)
    }

    pub fn rank(&self) -> usize {
        self.kraus.len()
    }

    pub fn element(&self) -> AlgebraElement {
        AlgebraElement::from_matrix(self.field, self.choi.clone()).expect("square Choi matrix")
    }

    /// `𝒞(ρ) = Σ C_a ρ C_a†`.
    pub fn apply(&self, rho: &CMat) -> CMat {
        self.kraus.iter().fold(CMat::zeros(self.d_out, self.d_out), |acc, c| acc + c * rho * c.adjoint())
    }

    /// `𝒞†(B) = Σ C_a† B C_a`.
    pub fn apply_adjoint(&self, b: &CMat) -> CMat {
        self.kraus.iter().fold(CMat::zeros(self.d_in, self.d_in), |acc, c| acc + c.adjoint() * b * c)
    }
}

/// Hermitian mapping constraints: `𝒞(A_j) = B_j` for the forward pairs
/// `(A_j, B_j)` and `𝒞†(B_j) = A_j` for the adjoint pairs `(B_j, A_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MappingConstraints {
    pub d_in: usize,
    pub d_out: usize,
    pub forward: Vec<(CMat, CMat)>,
    pub adjoint: Vec<(CMat, CMat)>,
}

impl MappingConstraints {
    pub fn new(d_in: usize, d_out: usize, forward: Vec<(CMat, CMat)>, adjoint: Vec<(CMat, CMat)>) -> Result<Self> {
        for (a, b) in &forward {
            check_pair(a, d_in, b, d_out)?;
        }
        for (b, a) in &adjoint {
            check_pair(b, d_out, a, d_in)?;
        }
        Ok(Self { d_in, d_out, forward, adjoint })
    }

    pub fn trace_preserving(d_in: usize, d_out: usize) -> Self {
        Self {
            d_in,
            d_out,
            forward: vec![],
            adjoint: vec![(linalg::identity(d_out), linalg::identity(d_in))],
        }
    }

    /// Residual of every constraint at `point`, forward pairs first.
    pub fn residuals(&self, point: &ChoiPoint) -> Vec<f64> {
        let fw = self.forward.iter().map(|(a, b)| (point.apply(a) - b).norm());
        let bw = self.adjoint.iter().map(|(b, a)| (point.apply_adjoint(b) - a).norm());
        fw.chain(bw).collect()
    }
}

fn check_pair(x: &CMat, dx: usize, y: &CMat, dy: usize) -> Result<()> {
    if x.shape() != (dx, dx) || y.shape() != (dy, dy) {
        return Err(Error::ShapeMismatch("mapping constraint has the wrong dimensions".into()));
    }
    for m in [x, y] {
        let dev = linalg::hermiticity_deviation(m);
        if dev > 1e-12 * linalg::max_abs(m).max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChannelVariant {
    Channel,
    Bistochastic,
    GibbsPreserving { rho_in: CMat, rho_out: CMat },
    Mapping(MappingConstraints),
}

fn check_state(rho: &CMat, d: usize) -> Result<()> {
    if rho.shape() != (d, d) {
        return Err(Error::InvalidGibbsState(format!("expected a {d}x{d} matrix")));
    }
    if linalg::hermiticity_deviation(rho) > 1e-10 {
        return Err(Error::InvalidGibbsState("not Hermitian".into()));
    }
    if (rho.trace().re - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidGibbsState(format!("trace is {}", rho.trace().re)));
    }
    let min = linalg::herm_eigenvalues(rho, Field::Complex)[0];
    if min < -1e-10 {
        return Err(Error::InvalidGibbsState(format!("minimum eigenvalue {min:.3e}")));
    }
    Ok(())
}

impl ChannelVariant {
    pub fn constraints(&self, d_in: usize, d_out: usize) -> Result<MappingConstraints> {
        let tp = MappingConstraints::trace_preserving(d_in, d_out);
        match self {
            ChannelVariant::Channel => Ok(tp),
            ChannelVariant::Bistochastic => {
                if d_in != d_out {
                    return Err(Error::BadDims("bistochastic maps need d_in = d_out".into()));
                }
                MappingConstraints::new(
                    d_in,
                    d_out,
                    vec![(linalg::identity(d_in), linalg::identity(d_out))],
                    tp.adjoint,
                )
            }
            ChannelVariant::GibbsPreserving { rho_in, rho_out } => {
                check_state(rho_in, d_in)?;
                check_state(rho_out, d_out)?;
                MappingConstraints::new(d_in, d_out, vec![(rho_in.clone(), rho_out.clone())], tp.adjoint)
            }
            ChannelVariant::Mapping(mc) => {
                if (mc.d_in, mc.d_out) != (d_in, d_out) {
                    return Err(Error::BadDims("mapping constraints have other dimensions".into()));
                }
                Ok(mc.clone())
            }
        }
    }
}

fn is_identity(m: &CMat) -> bool {
    m.is_square() && (m - linalg::identity(m.nrows())).norm() == 0.0
}

/// Constraint maps for `mc` on the given blocks of `spec` (each block is
/// `H_in ⊗ H_out`), summed over the blocks.
pub(crate) fn mapping_constraint_list(
    spec: &AlgebraSpec,
    blocks: BlockSelection,
    mc: &MappingConstraints,
) -> Result<Vec<Constraint>> {
    let field = spec.field;
    let factors = vec![mc.d_in, mc.d_out];
    let mut out = Vec::new();
    for (a, b) in &mc.forward {
        // Tr_in[(A^T ⊗ I) C] = B
        let map = if is_identity(a) {
            ConstraintMap::partial_trace(spec, blocks.clone(), factors.clone(), vec![1])?
        } else {
            ConstraintMap::sandwich_trace(spec, blocks.clone(), a.transpose(), factors.clone(), vec![1])?
        };
        out.push(Constraint::new(map, AlgebraElement::from_matrix(field, b.clone())?)?);
    }
    for (b, a) in &mc.adjoint {
        // Tr_out[(I ⊗ B) C] = A^T
        let map = if is_identity(b) {
            ConstraintMap::partial_trace(spec, blocks.clone(), factors.clone(), vec![0])?
        } else {
            ConstraintMap::sandwich_trace(spec, blocks.clone(), b.clone(), factors.clone(), vec![0])?
        };
        out.push(Constraint::new(map, AlgebraElement::from_matrix(field, a.transpose())?)?);
    }
    Ok(out)
}

pub fn build_channel_like(d_in: usize, d_out: usize, field: Field, variant: &ChannelVariant) -> Result<Spectrahedron> {
    if d_in == 0 || d_out == 0 {
        return Err(Error::BadDims("dimensions must be positive".into()));
    }
    let mc = variant.constraints(d_in, d_out)?;
    let spec = AlgebraSpec::full(field, d_in * d_out);
    Spectrahedron::new(&spec, mapping_constraint_list(&spec, BlockSelection::All, &mc)?)
}

/// The operators `O_ab = [⊕_fw C_a A_j C_b†] ⊕ [⊕_adj C_a^T B_j^T C̄_b]`,
/// flattened, for one Kraus family.
fn mapping_operators(kraus: &[CMat], mc: &MappingConstraints, a: usize, b: usize) -> Vec<Complex64> {
    let (ca, cb) = (&kraus[a], &kraus[b]);
    let mut out = Vec::new();
    for (aj, _) in &mc.forward {
        out.extend(linalg::flatten(&(ca * aj * cb.adjoint())));
    }
    for (bj, _) in &mc.adjoint {
        out.extend(linalg::flatten(&(ca.transpose() * bj.transpose() * cb.conjugate())));
    }
    out
}

/// Closed-form independence test over several Kraus families (one per
/// outcome, all constrained through their sum). Over ℂ every `O_ab` must be
/// independent; over ℝ the symmetrised `(O_ab + O_ba)/2` for `a ≤ b`. Pairs
/// never mix Kraus operators of different outcomes.
pub(crate) fn kraus_family_verdict(
    families: &[Vec<CMat>],
    mc: &MappingConstraints,
    field: Field,
    tol: &Tolerances,
) -> Verdict {
    let mut vectors: Vec<Vec<Complex64>> = Vec::new();
    for kraus in families {
        let r = kraus.len();
        match field {
            Field::Complex => {
                for a in 0..r {
                    for b in 0..r {
                        vectors.push(mapping_operators(kraus, mc, a, b));
                    }
                }
            }
            Field::Real => {
                for a in 0..r {
                    for b in a..r {
                        let oab = mapping_operators(kraus, mc, a, b);
                        let oba = mapping_operators(kraus, mc, b, a);
                        vectors.push(oab.iter().zip(&oba).map(|(p, q)| (p + q) * 0.5).collect());
                    }
                }
            }
        }
    }
    independence_verdict(&vectors, field, tol)
}

pub(crate) fn independence_verdict(vectors: &[Vec<Complex64>], field: Field, tol: &Tolerances) -> Verdict {
    if vectors.is_empty() {
        return Verdict::Extreme;
    }
    let d = linalg::family_rank(vectors, field, tol.ker, tol.gap);
    if d.inconclusive {
        Verdict::Inconclusive
    } else if d.rank == vectors.len() {
        Verdict::Extreme
    } else {
        Verdict::NotExtreme
    }
}

/// Closed-form extremality test for CP maps under mapping constraints.
pub fn mapping_extreme_test(point: &ChoiPoint, mc: &MappingConstraints, tol: &Tolerances) -> Result<Verdict> {
    if (point.d_in, point.d_out) != (mc.d_in, mc.d_out) {
        return Err(Error::BadDims("point and constraints differ in dimensions".into()));
    }
    let scale = 1.0 + point.choi.norm();
    for (index, residual) in mc.residuals(point).into_iter().enumerate() {
        if residual > 1e-8 * scale {
            return Err(Error::ConstraintViolated { index, residual });
        }
    }
    Ok(kraus_family_verdict(
        std::slice::from_ref(&point.unit_kraus),
        mc,
        point.field,
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    fn pauli_z() -> CMat {
        CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)])
    }

    #[test]
    fn choi_identity_is_phi() {
        let tol = Tolerances::default();
        let p = ChoiPoint::unitary(Field::Complex, &linalg::identity(2), &tol).unwrap();
        assert_eq!(p.rank(), 1);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((p.choi[(i, j)].re - 1.0).abs() < 1e-15);
        }
        let tr_out = linalg::partial_trace(&p.choi, &[2, 2], &[0]);
        assert!((tr_out - linalg::identity(2)).norm() < 1e-14);
    }

    #[test]
    fn choi_conventions_match_kraus_action() {
        let tol = Tolerances::default();
        let c0 = CMat::from_row_slice(3, 2, &[
            c64(0.6, 0.1), c64(0.0, 0.2), c64(0.3, 0.0), c64(0.1, -0.4), c64(0.2, 0.2), c64(0.5, 0.0),
        ]);
        let c1 = CMat::from_row_slice(3, 2, &[
            c64(0.1, 0.0), c64(0.3, 0.0), c64(0.0, 0.5), c64(0.2, 0.0), c64(0.0, 0.0), c64(0.4, -0.1),
        ]);
        let p = ChoiPoint::from_kraus(Field::Complex, &[c0.clone(), c1.clone()], &tol).unwrap();
        let rho = CMat::from_row_slice(2, 2, &[c64(0.7, 0.0), c64(0.1, 0.2), c64(0.1, -0.2), c64(0.3, 0.0)]);
        let direct = &c0 * &rho * c0.adjoint() + &c1 * &rho * c1.adjoint();
        let via_choi = linalg::partial_trace(
            &(linalg::embed(&rho.transpose(), &[2, 3], &[0]) * &p.choi),
            &[2, 3],
            &[1],
        );
        assert!((&direct - via_choi).norm() < 1e-12);
        let b = CMat::from_row_slice(3, 3, &[
            c64(1.0, 0.0), c64(0.2, 0.1), c64(0.0, 0.0),
            c64(0.2, -0.1), c64(0.5, 0.0), c64(0.3, 0.0),
            c64(0.0, 0.0), c64(0.3, 0.0), c64(0.2, 0.0),
        ]);
        let adj = c0.adjoint() * &b * &c0 + c1.adjoint() * &b * &c1;
        let via = linalg::partial_trace(&(linalg::embed(&b, &[2, 3], &[1]) * &p.choi), &[2, 3], &[0]);
        assert!((adj.transpose() - via).norm() < 1e-12);
        assert!((p.apply(&rho) - &direct).norm() < 1e-12);
    }

    #[test]
    fn unitary_is_extreme_channel() {
        let tol = Tolerances::default();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = CMat::from_row_slice(2, 2, &[c64(h, 0.0), c64(h, 0.0), c64(h, 0.0), c64(-h, 0.0)]);
        let p = ChoiPoint::unitary(Field::Complex, &u, &tol).unwrap();
        let mc = MappingConstraints::trace_preserving(2, 2);
        assert_eq!(mapping_extreme_test(&p, &mc, &tol).unwrap(), Verdict::Extreme);
        let s = build_channel_like(2, 2, Field::Complex, &ChannelVariant::Channel).unwrap();
        assert_eq!(s.is_extreme(&p.element(), &tol).unwrap().verdict, Verdict::Extreme);
    }

    #[test]
    fn dephasing_is_not_extreme_bistochastic() {
        let tol = Tolerances::default();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let kraus = [linalg::identity(2).scale(h), pauli_z().scale(h)];
        let p = ChoiPoint::from_kraus(Field::Complex, &kraus, &tol).unwrap();
        let mc = ChannelVariant::Bistochastic.constraints(2, 2).unwrap();
        assert_eq!(mapping_extreme_test(&p, &mc, &tol).unwrap(), Verdict::NotExtreme);
        let s = build_channel_like(2, 2, Field::Complex, &ChannelVariant::Bistochastic).unwrap();
        assert_eq!(s.is_extreme(&p.element(), &tol).unwrap().verdict, Verdict::NotExtreme);
        // C_a†C_b ∈ {I/2, Z/2, Z/2, I/2}: dependent for plain channels too.
        let tp = MappingConstraints::trace_preserving(2, 2);
        assert_eq!(mapping_extreme_test(&p, &tp, &tol).unwrap(), Verdict::NotExtreme);
    }

    #[test]
    fn violated_constraint_is_reported() {
        let tol = Tolerances::default();
        let p = ChoiPoint::unitary(Field::Complex, &linalg::identity(2).scale(2.0), &tol).unwrap();
        let mc = MappingConstraints::trace_preserving(2, 2);
        assert!(matches!(
            mapping_extreme_test(&p, &mc, &tol),
            Err(Error::ConstraintViolated { index: 0, .. })
        ));
    }

    #[test]
    fn gibbs_state_is_validated() {
        let bad = linalg::identity(2);
        let v = ChannelVariant::GibbsPreserving { rho_in: bad.clone(), rho_out: bad };
        assert!(matches!(
            build_channel_like(2, 2, Field::Complex, &v),
            Err(Error::InvalidGibbsState(_))
        ));
    }
}
