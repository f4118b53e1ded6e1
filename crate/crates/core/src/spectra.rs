//! Spectrahedra, membership, and the extremality engine.
//!
//! For a member `A` let `V_A` be the Hermitian elements supported inside
//! `Supp(A)`. `A` is extreme exactly when the stacked constraint map
//! `𝓜 = ⊕_j L_j` is injective on `V_A`. The kernel test computes the
//! singular values of `𝓜` restricted to an orthonormal basis of `V_A`; the
//! span test builds the transpose from the adjoint maps instead.

use std::sync::OnceLock;

use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{herm_basis, support, AlgebraElement, AlgebraSpec, Field, SupportProjector};
use crate::error::{Error, Result};
use crate::linalg::{self, RankDecision, RMat};
use crate::linmap::ConstraintMap;
use crate::Tolerances;

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub map: ConstraintMap,
    pub target: AlgebraElement,
}

impl Constraint {
    pub fn new(map: ConstraintMap, target: AlgebraElement) -> Result<Self> {
        if target.spec() != map.codomain() {
            return Err(Error::ShapeMismatch(format!(
                "target lives on {:?}, map codomain is {:?}",
                target.spec().blocks,
                map.codomain().blocks
            )));
        }
        Ok(Self { map, target })
    }

    /// Real dimension of the codomain as seen by the engine.
    fn out_dim(&self) -> usize {
        if self.map.hermitian_preserving() {
            self.map.codomain().herm_dim()
        } else {
            self.map.codomain().real_dim()
        }
    }
}

/// Singular values of the full stacked map on `Herm(𝒜)`, computed once.
#[derive(Clone, Debug)]
struct FullMap {
    sigma: Vec<f64>,
    per_map_sigma: Vec<Vec<f64>>,
    matrix: RMat,
}

#[derive(Clone, Debug)]
pub struct Spectrahedron {
    spec: AlgebraSpec,
    constraints: Vec<Constraint>,
    hermitian_defined: bool,
    warnings: Vec<String>,
    full: OnceLock<FullMap>,
}

/// Two spectrahedra are equal when they have the same algebra and the same
/// constraints in the same order.
impl PartialEq for Spectrahedron {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.constraints == other.constraints
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Extreme,
    NotExtreme,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub hermitian: bool,
    pub min_eigenvalue: f64,
    /// `‖L_j(A) − B_j‖` per constraint.
    pub residuals: Vec<f64>,
}

impl Membership {
    pub fn worst_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimChain {
    pub dim_va: usize,
    pub rank_restricted: usize,
    pub rank_sum: usize,
    pub min_sum: usize,
    pub out_dim_sum: usize,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatakiCheck {
    pub dim_va: usize,
    pub herm_dim: usize,
    pub dim_zs: usize,
    pub satisfied: bool,
}

/// `Σ r_x²  ≤ Σ d_j²` over ℂ, `Σ r_x(r_x+1) ≤ Σ d_j(d_j+1)` over ℝ. Codomains
/// of maps that are not Hermitian-preserving count with their full real
/// dimension.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankSumCheck {
    pub lhs: usize,
    pub rhs: usize,
    pub ranks: Vec<usize>,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsAudit {
    pub dim: DimChain,
    pub pataki: PatakiCheck,
    pub rank_sum: RankSumCheck,
}

impl BoundsAudit {
    pub fn all_satisfied(&self) -> bool {
        self.dim.satisfied && self.pataki.satisfied && self.rank_sum.satisfied
    }
}

#[derive(Clone, Debug)]
pub struct ExtremalityReport {
    pub verdict: Verdict,
    pub kernel_dim: usize,
    /// Perturbations `H`, ordered from the smallest singular value up.
    pub kernel_basis: Vec<AlgebraElement>,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    pub gap_ratio: f64,
    pub dim_va: usize,
    pub ranks: Vec<usize>,
    pub bounds: BoundsAudit,
    pub tolerances: Tolerances,
}

impl ExtremalityReport {
    pub fn to_json(&self) -> Value {
        json!({
            "verdict": self.verdict,
            "kernel_dim": self.kernel_dim,
            "dim_VA": self.dim_va,
            "ranks": self.ranks,
            "singular_values": self.singular_values,
            "threshold": self.threshold,
            "bounds": self.bounds,
            "tolerances": self.tolerances,
        })
    }
}

impl Spectrahedron {
    pub fn new(spec: &AlgebraSpec, constraints: Vec<Constraint>) -> Result<Self> {
        let mut warnings = Vec::new();
        for (j, c) in constraints.iter().enumerate() {
            if c.map.domain() != spec {
                return Err(Error::SpecMismatch);
            }
            if c.map.hermitian_preserving() && !c.target.is_hermitian(1e-12) {
                warnings.push(format!(
                    "constraint {j}: Hermitian-preserving map with non-Hermitian target"
                ));
            }
        }
        let hermitian_defined = constraints.iter().all(|c| c.map.hermitian_preserving());
        Ok(Self {
            spec: spec.clone(),
            constraints,
            hermitian_defined,
            warnings,
            full: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn hermitian_defined(&self) -> bool {
        self.hermitian_defined
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Rows of `𝓜` applied to `h`: canonical Hermitian coordinates of
    /// `L_j(h)` for Hermitian-preserving maps, full real coordinates
    /// otherwise.
    pub fn constraint_coords(&self, h: &AlgebraElement) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for c in &self.constraints {
            let y = c.map.apply(h)?;
            if c.map.hermitian_preserving() {
                out.extend(y.herm_coords());
            } else {
                out.extend(y.real_coords());
            }
        }
        Ok(out)
    }

    fn rows(&self) -> usize {
        self.constraints.iter().map(Constraint::out_dim).sum()
    }

    fn stacked(&self, elements: &[AlgebraElement]) -> Result<RMat> {
        let rows = self.rows();
        let mut m = RMat::zeros(rows, elements.len());
        for (k, e) in elements.iter().enumerate() {
            let c = self.constraint_coords(e)?;
            m.column_mut(k).copy_from_slice(&c);
        }
        Ok(m)
    }

    fn full(&self) -> &FullMap {
        self.full.get_or_init(|| {
            let basis = herm_basis(&self.spec);
            let matrix = self
                .stacked(basis.elements())
                .expect("basis elements live on the spectrahedron's algebra");
            let sigma = linalg::singular_values(&matrix);
            let mut per_map_sigma = Vec::with_capacity(self.constraints.len());
            let mut row = 0;
            for c in &self.constraints {
                let n = c.out_dim();
                let sub = matrix.rows(row, n).into_owned();
                per_map_sigma.push(linalg::singular_values(&sub));
                row += n;
            }
            FullMap { sigma, per_map_sigma, matrix }
        })
    }

    /// Largest singular value of `𝓜` on `Herm(𝒜)`; the scale for every rank
    /// decision.
    pub fn sigma_ref(&self) -> f64 {
        self.full().sigma.first().copied().unwrap_or(0.0)
    }

    /// `dim Z_S`, the joint kernel of all constraint maps on `Herm(𝒜)`.
    pub fn dim_zs(&self, tol: &Tolerances) -> usize {
        let d = linalg::decide_rank(self.full().sigma.clone(), self.sigma_ref(), tol.ker, tol.gap);
        d.nullity()
    }

    pub fn membership(&self, a: &AlgebraElement, tol: &Tolerances) -> Result<Membership> {
        if a.spec() != &self.spec {
            return Err(Error::SpecMismatch);
        }
        let hermitian = a.is_hermitian(tol.psd.max(1e-12));
        let eig = a.hermitian_part().eigenvalues();
        let norm = eig.iter().flatten().fold(0.0, |acc: f64, l| acc.max(l.abs()));
        let min_eigenvalue = eig.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let mut residuals = Vec::with_capacity(self.constraints.len());
        let mut ok = hermitian && min_eigenvalue >= -tol.psd * norm;
        for c in &self.constraints {
            let r = c.map.apply(a)?.distance(&c.target)?;
            ok &= r <= tol.mem * (1.0 + c.target.norm());
            residuals.push(r);
        }
        Ok(Membership { member: ok, hermitian, min_eigenvalue, residuals })
    }

    fn require_member(&self, a: &AlgebraElement, tol: &Tolerances) -> Result<()> {
        let m = self.membership(a, tol)?;
        if m.member {
            Ok(())
        } else {
            Err(Error::NotMember {
                residual: m.worst_residual(),
                min_eigenvalue: m.min_eigenvalue,
            })
        }
    }

    fn support_of(&self, a: &AlgebraElement, tol: &Tolerances) -> Result<SupportProjector> {
        support(&a.hermitian_part(), tol.supp, tol.psd)
    }

    /// Kernel of `𝓜` on `V_A`, as algebra elements, plus the rank decision.
    pub fn perturbation_space(
        &self,
        a: &AlgebraElement,
        tol: &Tolerances,
    ) -> Result<(Vec<AlgebraElement>, RankDecision)> {
        self.require_member(a, tol)?;
        let proj = self.support_of(a, tol)?;
        self.kernel_on(&proj, tol)
    }

    fn kernel_on(&self, proj: &SupportProjector, tol: &Tolerances) -> Result<(Vec<AlgebraElement>, RankDecision)> {
        let m = self.stacked(&proj.va_basis())?;
        let ns = linalg::null_space(&m, self.sigma_ref(), tol.ker, tol.gap);
        let basis = ns
            .basis
            .iter()
            .map(|v| proj.from_va_coords(v.as_slice()))
            .collect::<Result<Vec<_>>>()?;
        Ok((basis, ns.decision))
    }

    pub fn is_extreme(&self, a: &AlgebraElement, tol: &Tolerances) -> Result<ExtremalityReport> {
        self.require_member(a, tol)?;
        let proj = self.support_of(a, tol)?;
        let (kernel_basis, decision) = self.kernel_on(&proj, tol)?;
        let bounds = self.audit(&proj, decision.rank, tol);
        Ok(self.report(&proj, kernel_basis, decision, bounds, tol))
    }

    /// Span test: `Π_A L_j†(Herm K_j) Π_A` must span `V_A`.
    pub fn span_test(&self, a: &AlgebraElement, tol: &Tolerances) -> Result<ExtremalityReport> {
        if !self.hermitian_defined {
            return Err(Error::NotHermitianDefined);
        }
        self.require_member(a, tol)?;
        let proj = self.support_of(a, tol)?;
        let dim_va = proj.dim_va();
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(self.rows());
        for c in &self.constraints {
            for k in herm_basis(c.map.codomain()).elements() {
                let x = c.map.apply_adjoint(k)?;
                cols.push(proj.va_coords(&x)?);
            }
        }
        let span = linalg::columns_to_matrix(&cols, dim_va);
        // Vectors of V_A orthogonal to the span are exactly the kernel of 𝓜.
        let ns = linalg::null_space(&span.transpose(), self.sigma_ref(), tol.ker, tol.gap);
        let kernel_basis = ns
            .basis
            .iter()
            .map(|v| proj.from_va_coords(v.as_slice()))
            .collect::<Result<Vec<_>>>()?;
        let bounds = self.audit(&proj, ns.decision.rank, tol);
        Ok(self.report(&proj, kernel_basis, ns.decision, bounds, tol))
    }

    fn report(
        &self,
        proj: &SupportProjector,
        kernel_basis: Vec<AlgebraElement>,
        decision: RankDecision,
        bounds: BoundsAudit,
        tol: &Tolerances,
    ) -> ExtremalityReport {
        let kernel_dim = decision.nullity();
        let verdict = if decision.inconclusive {
            Verdict::Inconclusive
        } else if kernel_dim == 0 {
            Verdict::Extreme
        } else {
            Verdict::NotExtreme
        };
        ExtremalityReport {
            verdict,
            kernel_dim,
            kernel_basis,
            singular_values: decision.singular_values,
            threshold: decision.threshold,
            gap_ratio: decision.gap_ratio,
            dim_va: proj.dim_va(),
            ranks: proj.ranks(),
            bounds,
            tolerances: *tol,
        }
    }

    pub fn rank_bounds(&self, a: &AlgebraElement, tol: &Tolerances) -> Result<BoundsAudit> {
        if a.spec() != &self.spec {
            return Err(Error::SpecMismatch);
        }
        let proj = self.support_of(a, tol)?;
        let m = self.stacked(&proj.va_basis())?;
        let s = linalg::singular_values(&m);
        let rank = linalg::decide_rank(s, self.sigma_ref(), tol.ker, tol.gap).rank;
        Ok(self.audit(&proj, rank, tol))
    }

    fn audit(&self, proj: &SupportProjector, rank_restricted: usize, tol: &Tolerances) -> BoundsAudit {
        let full = self.full();
        let d = self.spec.herm_dim();
        let dim_va = proj.dim_va();
        let per_rank: Vec<usize> = full
            .per_map_sigma
            .iter()
            .map(|s| linalg::decide_rank(s.clone(), self.sigma_ref(), tol.ker, tol.gap).rank)
            .collect();
        let rank_sum: usize = per_rank.iter().sum();
        let outs: Vec<usize> = self.constraints.iter().map(Constraint::out_dim).collect();
        let min_sum: usize = outs.iter().map(|&o| o.min(d)).sum();
        let out_dim_sum: usize = outs.iter().sum();
        let dim = DimChain {
            dim_va,
            rank_restricted,
            rank_sum,
            min_sum,
            out_dim_sum,
            satisfied: dim_va <= rank_restricted
                && rank_restricted <= rank_sum
                && rank_sum <= min_sum
                && min_sum <= out_dim_sum,
        };
        let dim_zs = self.dim_zs(tol);
        let pataki = PatakiCheck {
            dim_va,
            herm_dim: d,
            dim_zs,
            satisfied: dim_va + dim_zs <= d,
        };
        let unit = match self.spec.field {
            Field::Complex => 1,
            Field::Real => 2,
        };
        let ranks = proj.ranks();
        let lhs = unit * ranks.iter().map(|&r| self.spec.field.herm_dim(r)).sum::<usize>();
        let rhs = unit * out_dim_sum;
        BoundsAudit {
            dim,
            pataki,
            rank_sum: RankSumCheck { lhs, rhs, ranks, satisfied: lhs <= rhs },
        }
    }

    /// `dim(V_A ∩ Z_S)` computed from bases of both subspaces in canonical
    /// coordinates; an independent check of the kernel dimension.
    pub fn intersection_dim(&self, a: &AlgebraElement, tol: &Tolerances) -> Result<usize> {
        self.require_member(a, tol)?;
        let proj = self.support_of(a, tol)?;
        let full = self.full();
        let d = self.spec.herm_dim();
        let ns = linalg::null_space(&full.matrix, self.sigma_ref(), tol.ker, tol.gap);
        let z: Vec<DVector<f64>> = ns.basis;
        let va: Vec<Vec<f64>> = proj.va_basis().iter().map(|e| e.herm_coords()).collect();
        let mut cols: Vec<Vec<f64>> = va;
        cols.extend(z.iter().map(|v| v.as_slice().to_vec()));
        let joint = linalg::columns_to_matrix(&cols, d);
        let s = linalg::singular_values(&joint);
        let sum_rank = linalg::decide_rank(s, 1.0, 1e-7, tol.gap).rank;
        Ok(proj.dim_va() + z.len() - sum_rank)
    }
}
