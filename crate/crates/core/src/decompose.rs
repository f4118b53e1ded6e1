//! Convex decomposition of members into extreme points by repeated line
//! search along perturbation directions.

use nalgebra::DVector;
use serde_json::{json, Value};

use crate::algebra::{support, AlgebraElement};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::spectra::{ExtremalityReport, Spectrahedron, Verdict};
use crate::Tolerances;

#[derive(Clone, Debug)]
pub struct SplitResult {
    pub t_plus: f64,
    pub t_minus: f64,
    pub plus: AlgebraElement,
    pub minus: AlgebraElement,
    /// `A = p A_plus + (1 − p) A_minus`.
    pub p: f64,
}

/// Move from `A` along `±H` to the boundary of the positive cone.
///
/// `H` must be a perturbation of `A` (supported in `Supp(A)` and in the
/// kernel of every constraint map), so both endpoints stay in `S`.
pub fn split(s: &Spectrahedron, a: &AlgebraElement, h: &AlgebraElement, tol: &Tolerances) -> Result<SplitResult> {
    if a.spec() != s.spec() || h.spec() != s.spec() {
        return Err(Error::SpecMismatch);
    }
    let proj = support(&a.hermitian_part(), tol.supp, tol.psd)?;
    let hh = h.hermitian_part();
    let mut lambdas = Vec::new();
    for (x, v) in proj.isometries().iter().enumerate() {
        if v.ncols() == 0 {
            continue;
        }
        let inv_sqrt: Vec<f64> = proj.eigenvalues()[x].iter().map(|l| 1.0 / l.sqrt()).collect();
        let c = v.adjoint() * hh.block(x) * v;
        let w = CMat::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
        lambdas.extend(linalg::herm_eigenvalues(&w, a.field()));
    }
    let scale = lambdas.iter().fold(0.0, |acc: f64, l| acc.max(l.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::ZeroPerturbation);
    }
    let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = tol.psd * scale;
    if lo >= -cut || hi <= cut {
        return Err(Error::UnboundedFace);
    }
    let t_plus = -1.0 / lo;
    let t_minus = 1.0 / hi;
    let plus = a.axpy(t_plus, &hh)?;
    let minus = a.axpy(-t_minus, &hh)?;
    let p = t_minus / (t_plus + t_minus);
    Ok(SplitResult { t_plus, t_minus, plus, minus, p })
}

#[derive(Clone, Debug)]
pub struct Component {
    pub weight: f64,
    pub element: AlgebraElement,
    pub report: ExtremalityReport,
}

#[derive(Clone, Debug)]
pub struct ConvexDecomposition {
    pub components: Vec<Component>,
    /// `‖Σ p_i A_i − A‖` (weighted Hilbert–Schmidt norm).
    pub reconstruction_error: f64,
    pub tree_depth: usize,
}

impl ConvexDecomposition {
    pub fn to_json(&self) -> Value {
        let comps: Vec<Value> = self
            .components
            .iter()
            .map(|c| {
                json!({
                    "weight": c.weight,
                    "element": c.element.to_json(),
                    "rank_per_block": c.report.ranks,
                })
            })
            .collect();
        json!({
            "components": comps,
            "reconstruction_error": self.reconstruction_error,
            "tree_depth": self.tree_depth,
        })
    }
}

struct Leaf {
    weight: f64,
    element: AlgebraElement,
    coords: Vec<f64>,
}

struct Decomposer<'a> {
    s: &'a Spectrahedron,
    tol: &'a Tolerances,
    merge_dist: f64,
    bound: usize,
    max_components: usize,
    depth: usize,
}

impl Decomposer<'_> {
    fn run(&mut self, a: &AlgebraElement, weight: f64, depth: usize) -> Result<Vec<Leaf>> {
        self.depth = self.depth.max(depth);
        let report = self.s.is_extreme(a, self.tol)?;
        match report.verdict {
            Verdict::Inconclusive => return Err(Error::InconclusiveExtremality),
            Verdict::Extreme => {
                return Ok(vec![Leaf { weight, element: a.clone(), coords: a.herm_coords() }]);
            }
            Verdict::NotExtreme => {}
        }
        let h = &report.kernel_basis[0];
        let sp = split(self.s, a, h, self.tol)?;
        let mut leaves = self.run(&sp.plus, weight * sp.p, depth + 1)?;
        leaves.extend(self.run(&sp.minus, weight * (1.0 - sp.p), depth + 1)?);
        let leaves = self.prune(merge(leaves, self.merge_dist)?);
        if leaves.len() > self.max_components {
            return Err(Error::ComponentBudgetExceeded { limit: self.max_components });
        }
        Ok(leaves)
    }

    /// Carathéodory reduction: while the leaves are affinely dependent (or
    /// more than `D + 1`), shift weight along an affine dependency until a
    /// leaf drops out.
    fn prune(&self, mut leaves: Vec<Leaf>) -> Vec<Leaf> {
        loop {
            let k = leaves.len();
            if k <= 1 {
                return leaves;
            }
            let d = leaves[0].coords.len();
            let m = RMat::from_fn(d + 1, k, |i, j| if i < d { leaves[j].coords[i] } else { 1.0 });
            let scale = linalg::singular_values(&m).first().copied().unwrap_or(0.0);
            let ns = linalg::null_space(&m, scale, 1e-10, 1.0);
            let c: DVector<f64> = match ns.basis.first() {
                Some(c) if k > self.bound || ns.decision.nullity() > 0 => c.clone(),
                _ => return leaves,
            };
            // Largest step keeping all weights non-negative.
            let mut best: Option<(usize, f64)> = None;
            for (i, leaf) in leaves.iter().enumerate() {
                if c[i] > 0.0 {
                    let t = leaf.weight / c[i];
                    if best.is_none_or(|(_, bt)| t < bt) {
                        best = Some((i, t));
                    }
                }
            }
            let Some((drop, t)) = best else { return leaves };
            for (i, leaf) in leaves.iter_mut().enumerate() {
                leaf.weight -= t * c[i];
            }
            leaves.remove(drop);
            leaves.retain(|l| l.weight > 0.0);
        }
    }
}

fn merge(leaves: Vec<Leaf>, dist: f64) -> Result<Vec<Leaf>> {
    let mut out: Vec<Leaf> = Vec::with_capacity(leaves.len());
    'next: for leaf in leaves {
        for m in out.iter_mut() {
            if m.element.distance(&leaf.element)? <= dist {
                let w = m.weight + leaf.weight;
                m.element = m
                    .element
                    .scale(m.weight / w)
                    .axpy(leaf.weight / w, &leaf.element)?;
                m.coords = m.element.herm_coords();
                m.weight = w;
                continue 'next;
            }
        }
        out.push(leaf);
    }
    Ok(out)
}

/// Decompose a member of `s` into at most `max_components` extreme points.
///
/// Depth-first: an extreme node is a leaf, otherwise it is split along the
/// kernel direction with the smallest singular value. Near-identical leaves
/// are merged, and the leaf set is kept affinely independent, so it never
/// exceeds `D + 1` points.
pub fn decompose_extreme(
    s: &Spectrahedron,
    a: &AlgebraElement,
    max_components: usize,
    tol: &Tolerances,
) -> Result<ConvexDecomposition> {
    let norm = a.norm();
    let mut dec = Decomposer {
        s,
        tol,
        merge_dist: tol.merge * norm,
        bound: s.spec().herm_dim() + 1,
        max_components,
        depth: 0,
    };
    let mut leaves = dec.run(a, 1.0, 0)?;
    leaves.sort_by(|x, y| {
        y.weight
            .total_cmp(&x.weight)
            .then_with(|| {
                x.coords
                    .iter()
                    .zip(&y.coords)
                    .map(|(p, q)| p.total_cmp(q))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    let mut recon = AlgebraElement::zeros(s.spec());
    let mut components = Vec::with_capacity(leaves.len());
    for leaf in leaves {
        recon = recon.axpy(leaf.weight, &leaf.element)?;
        let report = s.is_extreme(&leaf.element, tol)?;
        components.push(Component { weight: leaf.weight, element: leaf.element, report });
    }
    Ok(ConvexDecomposition {
        components,
        reconstruction_error: recon.distance(a)?,
        tree_depth: dec.depth,
    })
}
