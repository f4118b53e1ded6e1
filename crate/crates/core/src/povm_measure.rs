//! POVMs on finite grids of outcomes whose total `P(Ω)` lies in a
//! normalising spectrahedron `S`.
//!
//! A grid POVM stores `P({ω_i}) = μ_i M_i` with scalar weights `μ_i` and
//! densities `M_i` of unit trace. When more than `D = dim Herm(𝒜)` points
//! carry weight, a nonzero `g` with `Σ_i μ_i g_i M_i = 0` exists and
//! `P_± = (1 ± g) P` split `P` into two distinct POVMs with the same total.

use serde_json::{json, Value};

use crate::algebra::{AlgebraElement, AlgebraSpec, Field};
use crate::error::{Error, Result};
use crate::linalg;
use crate::linmap::{BlockSelection, ConstraintMap, LocalOp};
use crate::models::{povm_extreme_test, ModelDescriptor};
use crate::spectra::{Constraint, ExtremalityReport, Spectrahedron, Verdict};
use crate::Tolerances;

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub label: String,
    pub coords: Option<Vec<f64>>,
    pub weight: f64,
    pub density: AlgebraElement,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPovm {
    spec: AlgebraSpec,
    points: Vec<GridPoint>,
}

impl GridPovm {
    /// Validates weights and densities; points of zero weight are dropped.
    pub fn new(spec: &AlgebraSpec, points: Vec<GridPoint>, tol: &Tolerances) -> Result<Self> {
        let mut kept = Vec::with_capacity(points.len());
        for p in points {
            if p.density.spec() != spec {
                return Err(Error::SpecMismatch);
            }
            if !p.weight.is_finite() || p.weight < 0.0 {
                return Err(Error::InvalidDensity(format!("point {} has weight {}", p.label, p.weight)));
            }
            if p.weight == 0.0 {
                continue;
            }
            p.density.check_positive(tol.psd)?;
            let t = p.density.trace();
            if (t.re - 1.0).abs() > 1e-9 || t.im.abs() > 1e-9 {
                return Err(Error::InvalidDensity(format!("density of {} has trace {t}", p.label)));
            }
            kept.push(p);
        }
        Ok(Self { spec: spec.clone(), points: kept })
    }

    /// From effects `P_i`: `μ_i = Tr P_i`, `M_i = P_i / μ_i`.
    pub fn from_effects(spec: &AlgebraSpec, effects: Vec<(String, AlgebraElement)>, tol: &Tolerances) -> Result<Self> {
        let points = effects
            .into_iter()
            .map(|(label, e)| {
                let mu = e.trace().re;
                // Zero-weight points are dropped, so their density is irrelevant.
                let density = if mu > 0.0 { e.scale(1.0 / mu) } else { e };
                GridPoint { label, coords: None, weight: mu.max(0.0), density }
            })
            .collect();
        Self::new(spec, points, tol)
    }

    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    /// `D = dim Herm(𝒜)`.
    pub fn dimension_bound(&self) -> usize {
        self.spec.herm_dim()
    }

    pub fn effect(&self, i: usize) -> AlgebraElement {
        self.points[i].density.scale(self.points[i].weight)
    }

    /// `P(Ω) = Σ_i μ_i M_i`.
    pub fn total(&self) -> AlgebraElement {
        self.points.iter().fold(AlgebraElement::zeros(&self.spec), |acc, p| {
            acc.axpy(p.weight, &p.density).expect("same spec")
        })
    }

    /// Indices with `μ_i > τ_meas` and a nonzero density.
    pub fn support(&self, tol: &Tolerances) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&i| self.points[i].weight > tol.meas && self.points[i].density.max_abs() > 0.0)
            .collect()
    }

    fn with_weights(&self, w: &[f64]) -> Self {
        let points = self
            .points
            .iter()
            .zip(w)
            .map(|(p, &x)| GridPoint { weight: x, ..p.clone() })
            .collect();
        Self { spec: self.spec.clone(), points }
    }

    fn restricted(&self, keep: &[usize]) -> Self {
        Self { spec: self.spec.clone(), points: keep.iter().map(|&i| self.points[i].clone()).collect() }
    }

    pub fn to_json(&self) -> Value {
        let points: Vec<Value> = self
            .points
            .iter()
            .map(|p| {
                let mut v = json!({"label": p.label, "weight": p.weight, "density": p.density.to_json()});
                if let Some(c) = &p.coords {
                    v["coords"] = json!(c);
                }
                v
            })
            .collect();
        json!({"spec": self.spec.to_json(), "points": points})
    }
}

/// A grid POVM file: the POVM plus its normalising spectrahedron.
#[derive(Clone, Debug)]
pub struct GridProblem {
    pub povm: GridPovm,
    pub normalizer: Spectrahedron,
}

impl GridProblem {
    /// Parses `{"spec", "normalizer"?, "points"}`. Without a normaliser the
    /// singleton `{P(Ω)}` is used.
    pub fn from_json(v: &Value, tol: &Tolerances) -> Result<Self> {
        let spec: AlgebraSpec = serde_json::from_value(
            v.get("spec").cloned().ok_or_else(|| Error::Parse("grid POVM needs \"spec\"".into()))?,
        )
        .map_err(|e| Error::Parse(format!("spec: {e}")))?;
        let raw = v
            .get("points")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("grid POVM needs a \"points\" list".into()))?;
        let mut points = Vec::with_capacity(raw.len());
        for (i, p) in raw.iter().enumerate() {
            let label = match p.get("label") {
                Some(Value::String(s)) => s.clone(),
                Some(other) => other.to_string(),
                None => i.to_string(),
            };
            let weight = p
                .get("weight")
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Parse(format!("point {i} needs a numeric \"weight\"")))?;
            let coords = match p.get("coords") {
                None | Some(Value::Null) => None,
                Some(c) => Some(
                    serde_json::from_value::<Vec<f64>>(c.clone())
                        .map_err(|e| Error::Parse(format!("point {i} coords: {e}")))?,
                ),
            };
            let density = AlgebraElement::from_json(
                &spec,
                p.get("density").ok_or_else(|| Error::Parse(format!("point {i} needs \"density\"")))?,
            )?;
            points.push(GridPoint { label, coords, weight, density });
        }
        let povm = GridPovm::new(&spec, points, tol)?;
        let normalizer = match v.get("normalizer") {
            None | Some(Value::Null) => singleton(&povm.total())?,
            Some(n) => {
                let d = n.get("model_descriptor").unwrap_or(n);
                let s = ModelDescriptor::from_json(d)?.build()?;
                if s.spec() != &spec {
                    return Err(Error::SpecMismatch);
                }
                s
            }
        };
        Ok(Self { povm, normalizer })
    }
}

/// The spectrahedron `{Γ}` on the algebra of `Γ`.
pub fn singleton(gamma: &AlgebraElement) -> Result<Spectrahedron> {
    let spec = gamma.spec();
    let cs = (0..spec.num_blocks())
        .map(|x| {
            let map = ConstraintMap::local(spec, BlockSelection::Only(vec![x]), LocalOp::Identity)?;
            let target = AlgebraElement::new(map.codomain(), vec![gamma.block(x).clone()])?;
            Constraint::new(map, target)
        })
        .collect::<Result<Vec<_>>>()?;
    Spectrahedron::new(spec, cs)
}

/// A constructive proof that `P` is not extreme.
#[derive(Clone, Debug)]
pub struct SplitWitness {
    /// One entry per grid point, `‖g‖_∞ = 1`.
    pub g: Vec<f64>,
    pub plus: GridPovm,
    pub minus: GridPovm,
    /// `max_j |Σ_i μ_i g_i Tr[H_j M_i]|` over an orthonormal basis `H_j`.
    pub orthogonality_residual: f64,
}

impl SplitWitness {
    /// Largest per-point deviation of `½(P_+ + P_−)` from `P`.
    pub fn midpoint_error(&self, p: &GridPovm) -> f64 {
        (0..p.points.len())
            .map(|i| {
                let mid = self.plus.effect(i).add(&self.minus.effect(i)).expect("same spec").scale(0.5);
                mid.distance(&p.effect(i)).expect("same spec")
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "g": self.g,
            "orthogonality_residual": self.orthogonality_residual,
            "plus": self.plus.to_json(),
            "minus": self.minus.to_json(),
        })
    }
}

/// A finite-outcome POVM over the support labels and its verdict.
#[derive(Clone, Debug)]
pub struct CompactPovm {
    pub labels: Vec<String>,
    pub effects: AlgebraElement,
    pub report: ExtremalityReport,
    /// Closed-form verdict when the normaliser is a singleton.
    pub closed_form: Option<Verdict>,
}

impl CompactPovm {
    pub fn to_json(&self) -> Value {
        json!({
            "labels": self.labels,
            "effects": self.effects.to_json(),
            "report": self.report.to_json(),
            "closed_form": self.closed_form,
        })
    }
}

#[derive(Clone, Debug)]
pub enum SplitOutcome {
    Split(SplitWitness),
    Compact(Box<CompactPovm>),
}

fn require_member(pr: &GridProblem, tol: &Tolerances) -> Result<()> {
    let m = pr.normalizer.membership(&pr.povm.total(), tol)?;
    if m.member {
        Ok(())
    } else {
        Err(Error::NotMember { residual: m.worst_residual(), min_eigenvalue: m.min_eigenvalue })
    }
}

/// Columns `μ_i herm_coords(M_i)` over the given points.
fn f_system(p: &GridPovm, idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter()
        .map(|&i| {
            let w = p.points[i].weight;
            p.points[i].density.herm_coords().into_iter().map(|c| w * c).collect()
        })
        .collect()
}

/// Unit-`∞`-norm null vector of the density system on `idx`, as weights
/// over all points.
fn null_direction(p: &GridPovm, idx: &[usize]) -> Result<(Vec<f64>, f64)> {
    let d = p.dimension_bound();
    let cols = f_system(p, idx);
    let f = linalg::columns_to_matrix(&cols, d);
    let (_, v) = linalg::full_right_svd(&f);
    // The last right singular vector belongs to the smallest singular value.
    let mut g = v.column(v.ncols() - 1).into_owned();
    let inf = g.amax();
    if inf == 0.0 {
        return Err(Error::DegenerateNullspace { residual: f64::INFINITY });
    }
    g /= inf;
    let g = linalg::canonical_sign(g);
    let residual = (&f * &g).amax();
    if residual > 1e-9 {
        return Err(Error::DegenerateNullspace { residual });
    }
    let mut full = vec![0.0; p.points.len()];
    for (k, &i) in idx.iter().enumerate() {
        full[i] = g[k];
    }
    Ok((full, residual))
}

/// Split `P` when its support exceeds `D`, otherwise compress it to a finite
/// POVM and decide extremality there.
pub fn split_if_oversupported(pr: &GridProblem, tol: &Tolerances) -> Result<SplitOutcome> {
    require_member(pr, tol)?;
    let p = &pr.povm;
    let idx = p.support(tol);
    if idx.len() <= p.dimension_bound() {
        return compress(pr, tol).map(|c| SplitOutcome::Compact(Box::new(c)));
    }
    let (g, residual) = null_direction(p, &idx)?;
    let plus: Vec<f64> = p.points.iter().zip(&g).map(|(q, gi)| q.weight * (1.0 + gi)).collect();
    let minus: Vec<f64> = p.points.iter().zip(&g).map(|(q, gi)| q.weight * (1.0 - gi)).collect();
    Ok(SplitOutcome::Split(SplitWitness {
        g,
        plus: p.with_weights(&plus),
        minus: p.with_weights(&minus),
        orthogonality_residual: residual,
    }))
}

/// The finite POVM `Q_x = μ_x M_x` over the support, checked in
/// `POVM(𝒜, X, S)`.
pub fn compress(pr: &GridProblem, tol: &Tolerances) -> Result<CompactPovm> {
    let p = &pr.povm;
    let idx = p.support(tol);
    let bound = p.dimension_bound();
    if idx.len() > bound {
        return Err(Error::Oversupported { support: idx.len(), bound });
    }
    if idx.is_empty() {
        return Err(Error::BadDims("POVM has empty support".into()));
    }
    let q = p.restricted(&idx);
    let s = finite_povm_spectrahedron(&pr.normalizer, idx.len())?;
    let blocks: Vec<_> = (0..idx.len()).flat_map(|i| q.effect(i).into_blocks()).collect();
    let effects = AlgebraElement::new(s.spec(), blocks)?;
    let report = s.is_extreme(&effects, tol)?;
    let closed_form = if pr.normalizer.spec().num_blocks() == 1 && is_singleton(&pr.normalizer, tol) {
        Some(povm_extreme_test(&effects, tol)?)
    } else {
        None
    };
    Ok(CompactPovm { labels: q.points.iter().map(|p| p.label.clone()).collect(), effects, report, closed_form })
}

fn is_singleton(s: &Spectrahedron, tol: &Tolerances) -> bool {
    s.dim_zs(tol) == 0
}

/// `{⊕_x Q_x ⪰ 0 : Σ_x Q_x ∈ S}` for `outcomes` copies of the algebra of `S`.
pub fn finite_povm_spectrahedron(s: &Spectrahedron, outcomes: usize) -> Result<Spectrahedron> {
    let spec = s.spec().repeated(outcomes);
    let cs = s
        .constraints()
        .iter()
        .map(|c| Constraint::new(ConstraintMap::sum_of_copies(outcomes, c.map.clone())?, c.target.clone()))
        .collect::<Result<Vec<_>>>()?;
    Spectrahedron::new(&spec, cs)
}

/// `P = Σ_k w_k P_k` with every `P_k` supported on at most `D` points and
/// `P_k(Ω) = P(Ω)`.
#[derive(Clone, Debug)]
pub struct SupportReduction {
    pub leaves: Vec<(f64, GridPovm)>,
    /// Splits `rest = λ v + (1 − λ) rest'` performed; each one shrinks the
    /// support of the remainder, so at most `s − D + 1`.
    pub iterations: usize,
    /// Null-space solves spent walking to vertices.
    pub walk_steps: usize,
    /// Worst orthogonality residual over all steps.
    pub max_residual: f64,
}

impl SupportReduction {
    /// Largest per-point deviation of `Σ_k w_k P_k` from `P`.
    pub fn reconstruction_error(&self, p: &GridPovm) -> f64 {
        (0..p.points.len())
            .map(|i| {
                let sum = self.leaves.iter().fold(AlgebraElement::zeros(p.spec()), |acc, (w, l)| {
                    acc.axpy(*w, &l.effect(i)).expect("same spec")
                });
                sum.distance(&p.effect(i)).expect("same spec")
            })
            .fold(0.0, f64::max)
    }
}

/// Walk inside `{w ≥ 0 : Σ w_i M_i = P(Ω)}` to a vertex, peel it off, and
/// repeat on the remainder. Each step zeroes at least one weight.
pub fn reduce_support(pr: &GridProblem, tol: &Tolerances) -> Result<SupportReduction> {
    require_member(pr, tol)?;
    let p = &pr.povm;
    let d = p.dimension_bound();
    let s = p.points.len();
    let limit = s * s;
    let mut iterations = 0;
    let mut walk_steps = 0;
    let mut max_residual: f64 = 0.0;
    let mut leaves = Vec::new();
    let mut rest: Vec<f64> = p.points.iter().map(|q| q.weight).collect();
    let mut mass = 1.0;
    let active = |w: &[f64]| -> Vec<usize> { (0..w.len()).filter(|&i| w[i] > tol.meas).collect() };
    loop {
        let idx = active(&rest);
        if idx.len() <= d {
            leaves.push((mass, p.with_weights(&clean(&rest, tol))));
            break;
        }
        // Walk to a vertex of the face through `rest`.
        let mut v = rest.clone();
        loop {
            let iv = active(&v);
            if iv.len() <= d {
                break;
            }
            walk_steps += 1;
            if walk_steps > limit {
                return Err(Error::DegenerateNullspace { residual: max_residual });
            }
            let (g, r) = null_direction(&p.with_weights(&v), &iv)?;
            max_residual = max_residual.max(r);
            // Relative direction: w_i ↦ w_i (1 + t g_i); move until a weight hits zero.
            let t = iv
                .iter()
                .filter(|&&i| g[i] < 0.0)
                .map(|&i| -1.0 / g[i])
                .fold(f64::INFINITY, f64::min);
            for &i in &iv {
                v[i] *= 1.0 + t * g[i];
                if v[i] < tol.meas {
                    v[i] = 0.0;
                }
            }
        }
        // rest = λ v + (1 − λ) rest', with λ as large as positivity allows.
        iterations += 1;
        let lam = active(&v)
            .iter()
            .map(|&i| rest[i] / v[i])
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        if lam >= 1.0 - 1e-12 {
            leaves.push((mass, p.with_weights(&clean(&v, tol))));
            break;
        }
        leaves.push((mass * lam, p.with_weights(&clean(&v, tol))));
        for i in 0..s {
            rest[i] = ((rest[i] - lam * v[i]) / (1.0 - lam)).max(0.0);
            if rest[i] < tol.meas {
                rest[i] = 0.0;
            }
        }
        mass *= 1.0 - lam;
    }
    Ok(SupportReduction { leaves, iterations, walk_steps, max_residual })
}

fn clean(w: &[f64], tol: &Tolerances) -> Vec<f64> {
    w.iter().map(|&x| if x > tol.meas { x } else { 0.0 }).collect()
}

/// Qubit grid POVM `U_θ ξ U_θ† / n` at `n` equally spaced phases, with
/// `U_θ = diag(1, e^{iθ})`.
pub fn covariant_qubit_grid(xi: &linalg::CMat, n: usize, tol: &Tolerances) -> Result<GridProblem> {
    let spec = AlgebraSpec::full(Field::Complex, 2);
    let effects = (0..n)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / n as f64;
            let u = linalg::CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
                linalg::c64(1.0, 0.0),
                num_complex::Complex64::from_polar(1.0, th),
            ]));
            let e = (&u * xi * u.adjoint()).unscale(n as f64);
            Ok((format!("theta_{k}"), AlgebraElement::new(&spec, vec![linalg::hermitian_part(&e)])?))
        })
        .collect::<Result<Vec<_>>>()?;
    let povm = GridPovm::from_effects(&spec, effects, tol)?;
    let normalizer = singleton(&AlgebraElement::identity(&spec))?;
    Ok(GridProblem { povm, normalizer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, CMat};

    fn ones() -> CMat {
        CMat::from_element(2, 2, c64(1.0, 0.0))
    }

    #[test]
    fn covariant_grid_splits() {
        let tol = Tolerances::default();
        let pr = covariant_qubit_grid(&ones(), 16, &tol).unwrap();
        assert!((pr.povm.total().block(0) - linalg::identity(2)).norm() < 1e-12);
        let SplitOutcome::Split(w) = split_if_oversupported(&pr, &tol).unwrap() else { panic!("expected a split") };
        assert!(w.orthogonality_residual <= 1e-9);
        assert!(w.midpoint_error(&pr.povm) < 1e-12);
        assert!((w.g.iter().fold(0.0f64, |a, x| a.max(x.abs())) - 1.0).abs() < 1e-12);
        for half in [&w.plus, &w.minus] {
            assert!((half.total().block(0) - linalg::identity(2)).norm() < 1e-9);
            assert!(half.points().iter().all(|q| q.weight >= 0.0));
        }
    }

    #[test]
    fn reduction_leaves_are_small() {
        let tol = Tolerances::default();
        let pr = covariant_qubit_grid(&ones(), 16, &tol).unwrap();
        let red = reduce_support(&pr, &tol).unwrap();
        assert!(red.leaves.iter().all(|(_, l)| l.support(&tol).len() <= 4));
        assert!(red.reconstruction_error(&pr.povm) < 1e-9);
        let total: f64 = red.leaves.iter().map(|(w, _)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(red.iterations <= 16 - 3);
        assert!(red.iterations <= 4 * 16);
    }

    #[test]
    fn projective_grid_is_compact_and_extreme() {
        let tol = Tolerances::default();
        let spec = AlgebraSpec::full(Field::Complex, 2);
        let e0 = CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        let e1 = linalg::identity(2) - &e0;
        let effects = vec![
            ("up".to_string(), AlgebraElement::new(&spec, vec![e0]).unwrap()),
            ("down".to_string(), AlgebraElement::new(&spec, vec![e1]).unwrap()),
        ];
        let povm = GridPovm::from_effects(&spec, effects, &tol).unwrap();
        let pr = GridProblem { normalizer: singleton(&AlgebraElement::identity(&spec)).unwrap(), povm };
        let SplitOutcome::Compact(c) = split_if_oversupported(&pr, &tol).unwrap() else { panic!("expected compact") };
        assert_eq!(c.labels, vec!["up", "down"]);
        assert_eq!(c.report.verdict, Verdict::Extreme);
        assert_eq!(c.closed_form, Some(Verdict::Extreme));
    }

    #[test]
    fn single_point_is_extreme() {
        let tol = Tolerances::default();
        let spec = AlgebraSpec::full(Field::Complex, 2);
        let gamma = AlgebraElement::new(&spec, vec![CMat::from_row_slice(2, 2, &[
            c64(0.7, 0.0), c64(0.1, 0.2), c64(0.1, -0.2), c64(0.3, 0.0),
        ])])
        .unwrap();
        let povm = GridPovm::from_effects(&spec, vec![("all".into(), gamma.clone())], &tol).unwrap();
        let pr = GridProblem { normalizer: singleton(&gamma).unwrap(), povm };
        let c = compress(&pr, &tol).unwrap();
        assert_eq!(c.report.verdict, Verdict::Extreme);
    }

    #[test]
    fn oversupported_compress_rejected() {
        let tol = Tolerances::default();
        let pr = covariant_qubit_grid(&ones(), 6, &tol).unwrap();
        assert_eq!(compress(&pr, &tol).err(), Some(Error::Oversupported { support: 6, bound: 4 }));
    }

    #[test]
    fn json_round_trip_and_zero_weights_dropped() {
        let tol = Tolerances::default();
        let v = json!({
            "spec": {"field": "C", "blocks": [{"dim": 2}]},
            "points": [
                {"label": "a", "weight": 1.0, "density": [[1, 0], [0, 0]]},
                {"label": "b", "weight": 1.0, "density": [[0, 0], [0, 1]]},
                {"label": "c", "weight": 0.0, "density": [[0.5, 0], [0, 0.5]]}
            ]
        });
        let pr = GridProblem::from_json(&v, &tol).unwrap();
        assert_eq!(pr.povm.points().len(), 2);
        let again = GridProblem::from_json(&pr.povm.to_json(), &tol).unwrap();
        assert_eq!(again.povm, pr.povm);
    }

    #[test]
    fn total_outside_normaliser_rejected() {
        let tol = Tolerances::default();
        let spec = AlgebraSpec::full(Field::Complex, 2);
        let mut pr = covariant_qubit_grid(&ones(), 8, &tol).unwrap();
        pr.normalizer = singleton(&AlgebraElement::identity(&spec).scale(2.0)).unwrap();
        assert!(matches!(split_if_oversupported(&pr, &tol), Err(Error::NotMember { .. })));
    }
}
