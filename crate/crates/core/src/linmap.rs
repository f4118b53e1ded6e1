//! Linear maps from a block algebra into operators on a finite-dimensional
//! space, with Hilbert–Schmidt adjoints and real coordinate matrices.

use nalgebra::DVector;
use serde_json::{json, Value};

use crate::algebra::{AlgebraElement, AlgebraSpec, Field, HermBasis};
use crate::error::{Error, Result};
use crate::json::{f64_matrix_from_json, matrix_from_json, matrix_to_json};
use crate::linalg::{self, c64, CMat, Factors, RMat};

/// Which blocks a local map reads. Selected blocks are summed without
/// multiplicity weights.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockSelection {
    All,
    Only(Vec<usize>),
}

impl BlockSelection {
    fn indices(&self, n: usize) -> Vec<usize> {
        match self {
            BlockSelection::All => (0..n).collect(),
            BlockSelection::Only(v) => v.clone(),
        }
    }
}

/// An operation on a single block matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalOp {
    Identity,
    /// Trace out every factor not in `keep`.
    PartialTrace { factors: Vec<usize>, keep: Vec<usize> },
    /// `A ↦ Tr_T[(S ⊗ I_keep) A]`, with `S` acting on the traced factors `T`
    /// (the complement of `keep`, in ascending order).
    SandwichTrace { operator: CMat, factors: Vec<usize>, keep: Vec<usize> },
    /// `A ↦ Tr_T A − I_W/d_W ⊗ Tr_{W∪T} A`, where `T` = `traced` and
    /// `W` = `twirled` (disjoint). The output lives on the factors outside `T`.
    CombCausality { factors: Vec<usize>, traced: Vec<usize>, twirled: Vec<usize> },
}

impl LocalOp {
    fn factors(&self) -> Option<&[usize]> {
        match self {
            LocalOp::Identity => None,
            LocalOp::PartialTrace { factors, .. }
            | LocalOp::SandwichTrace { factors, .. }
            | LocalOp::CombCausality { factors, .. } => Some(factors),
        }
    }

    fn out_dim(&self, r: usize) -> usize {
        match self {
            LocalOp::Identity => r,
            LocalOp::PartialTrace { factors, keep } | LocalOp::SandwichTrace { factors, keep, .. } => {
                keep.iter().map(|&k| factors[k]).product()
            }
            LocalOp::CombCausality { factors, traced, .. } => (0..factors.len())
                .filter(|k| !traced.contains(k))
                .map(|k| factors[k])
                .product(),
        }
    }

    fn apply(&self, m: &CMat) -> CMat {
        match self {
            LocalOp::Identity => m.clone(),
            LocalOp::PartialTrace { factors, keep } => linalg::partial_trace(m, factors, keep),
            LocalOp::SandwichTrace { operator, factors, keep } => {
                let traced = Factors::new(factors).complement(keep);
                let s = linalg::embed(operator, factors, &traced);
                linalg::partial_trace(&(s * m), factors, keep)
            }
            LocalOp::CombCausality { factors, traced, twirled } => {
                let (kept, kdims, tw) = causality_layout(factors, traced, twirled);
                let p = linalg::partial_trace(m, factors, &kept);
                &p - twirl(&p, &kdims, &tw)
            }
        }
    }

    fn adjoint(&self, y: &CMat) -> CMat {
        match self {
            LocalOp::Identity => y.clone(),
            LocalOp::PartialTrace { factors, keep } => linalg::embed(y, factors, keep),
            LocalOp::SandwichTrace { operator, factors, keep } => {
                let traced = Factors::new(factors).complement(keep);
                linalg::embed(&operator.adjoint(), factors, &traced) * linalg::embed(y, factors, keep)
            }
            LocalOp::CombCausality { factors, traced, twirled } => {
                let (kept, kdims, tw) = causality_layout(factors, traced, twirled);
                let z = y - twirl(y, &kdims, &tw);
                linalg::embed(&z, factors, &kept)
            }
        }
    }

    fn hermitian_preserving(&self) -> bool {
        match self {
            LocalOp::SandwichTrace { operator, .. } => {
                linalg::hermiticity_deviation(operator) <= 1e-12 * linalg::max_abs(operator).max(1.0)
            }
            _ => true,
        }
    }
}

/// Kept sites, their dims, and positions of the twirled sites among them.
fn causality_layout(factors: &[usize], traced: &[usize], twirled: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let kept: Vec<usize> = (0..factors.len()).filter(|k| !traced.contains(k)).collect();
    let kdims = kept.iter().map(|&k| factors[k]).collect();
    let tw = kept
        .iter()
        .enumerate()
        .filter(|(_, k)| twirled.contains(k))
        .map(|(i, _)| i)
        .collect();
    (kept, kdims, tw)
}

/// `I_W/d_W ⊗ Tr_W P`.
fn twirl(p: &CMat, dims: &[usize], w: &[usize]) -> CMat {
    let f = Factors::new(dims);
    let rest = f.complement(w);
    let dw = f.sub_dim(w) as f64;
    linalg::embed(&linalg::partial_trace(p, dims, &rest), dims, &rest).unscale(dw)
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    /// `A ↦ Σ_x m_x Tr A_x`.
    FullTrace,
    Local { blocks: BlockSelection, op: LocalOp },
    /// A real matrix on coordinates: canonical Hermitian coordinates when
    /// `hermitian_preserving`, otherwise the real coordinates of all
    /// operators.
    Matrix { entries: RMat, hermitian_preserving: bool },
    /// `⊕_c A_c ↦ L(Σ_c A_c)` on `copies` consecutive copies of the inner
    /// domain.
    SumOfCopies { copies: usize, inner: Box<ConstraintMap> },
    Adjoint(Box<ConstraintMap>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintMap {
    domain: AlgebraSpec,
    codomain: AlgebraSpec,
    kind: MapKind,
}

impl ConstraintMap {
    pub fn domain(&self) -> &AlgebraSpec {
        &self.domain
    }

    pub fn codomain(&self) -> &AlgebraSpec {
        &self.codomain
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn full_trace(domain: &AlgebraSpec) -> Self {
        Self {
            domain: domain.clone(),
            codomain: AlgebraSpec::full(domain.field, 1),
            kind: MapKind::FullTrace,
        }
    }

    /// `⊕_x A_x ↦ Σ_x A_x`; all blocks must share one dimension.
    pub fn block_sum(domain: &AlgebraSpec) -> Result<Self> {
        Self::local(domain, BlockSelection::All, LocalOp::Identity)
    }

    pub fn partial_trace(domain: &AlgebraSpec, blocks: BlockSelection, factors: Vec<usize>, keep: Vec<usize>) -> Result<Self> {
        Self::local(domain, blocks, LocalOp::PartialTrace { factors, keep })
    }

    pub fn sandwich_trace(
        domain: &AlgebraSpec,
        blocks: BlockSelection,
        operator: CMat,
        factors: Vec<usize>,
        keep: Vec<usize>,
    ) -> Result<Self> {
        Self::local(domain, blocks, LocalOp::SandwichTrace { operator, factors, keep })
    }

    pub fn comb_causality(
        domain: &AlgebraSpec,
        blocks: BlockSelection,
        factors: Vec<usize>,
        traced: Vec<usize>,
        twirled: Vec<usize>,
    ) -> Result<Self> {
        Self::local(domain, blocks, LocalOp::CombCausality { factors, traced, twirled })
    }

    pub fn local(domain: &AlgebraSpec, blocks: BlockSelection, op: LocalOp) -> Result<Self> {
        let sel = blocks.indices(domain.num_blocks());
        if sel.is_empty() {
            return Err(Error::BadDims("block selection is empty".into()));
        }
        if let Some(&x) = sel.iter().find(|&&x| x >= domain.num_blocks()) {
            return Err(Error::BadDims(format!("block {x} does not exist")));
        }
        let r = domain.blocks[sel[0]].dim;
        if sel.iter().any(|&x| domain.blocks[x].dim != r) {
            return Err(Error::BadDims("selected blocks differ in dimension".into()));
        }
        validate_op(&op, r, domain.field)?;
        Ok(Self {
            domain: domain.clone(),
            codomain: AlgebraSpec::full(domain.field, op.out_dim(r)),
            kind: MapKind::Local { blocks, op },
        })
    }

    pub fn matrix(domain: &AlgebraSpec, codomain: &AlgebraSpec, entries: RMat, hermitian_preserving: bool) -> Result<Self> {
        if domain.field != codomain.field {
            return Err(Error::FieldMismatch);
        }
        let shape = if hermitian_preserving {
            (codomain.herm_dim(), domain.herm_dim())
        } else {
            (codomain.real_dim(), domain.real_dim())
        };
        if entries.shape() != shape {
            return Err(Error::ShapeMismatch(format!(
                "coordinate matrix is {}x{}, expected {}x{}",
                entries.nrows(),
                entries.ncols(),
                shape.0,
                shape.1
            )));
        }
        Ok(Self {
            domain: domain.clone(),
            codomain: codomain.clone(),
            kind: MapKind::Matrix { entries, hermitian_preserving },
        })
    }

    /// The map `⊕_c A_c ↦ inner(Σ_c A_c)`.
    pub fn sum_of_copies(copies: usize, inner: ConstraintMap) -> Result<Self> {
        if copies == 0 {
            return Err(Error::BadDims("at least one copy is required".into()));
        }
        Ok(Self {
            domain: inner.domain.repeated(copies),
            codomain: inner.codomain.clone(),
            kind: MapKind::SumOfCopies { copies, inner: Box::new(inner) },
        })
    }

    pub fn adjoint(&self) -> Self {
        match &self.kind {
            MapKind::Adjoint(inner) => (**inner).clone(),
            MapKind::Matrix { entries, hermitian_preserving } => Self {
                domain: self.codomain.clone(),
                codomain: self.domain.clone(),
                kind: MapKind::Matrix {
                    entries: entries.transpose(),
                    hermitian_preserving: *hermitian_preserving,
                },
            },
            _ => Self {
                domain: self.codomain.clone(),
                codomain: self.domain.clone(),
                kind: MapKind::Adjoint(Box::new(self.clone())),
            },
        }
    }

    pub fn hermitian_preserving(&self) -> bool {
        match &self.kind {
            MapKind::FullTrace => true,
            MapKind::Local { op, .. } => op.hermitian_preserving(),
            MapKind::Matrix { hermitian_preserving, .. } => *hermitian_preserving,
            MapKind::SumOfCopies { inner, .. } | MapKind::Adjoint(inner) => inner.hermitian_preserving(),
        }
    }

    pub fn apply(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        if a.spec() != &self.domain {
            return Err(Error::SpecMismatch);
        }
        match &self.kind {
            MapKind::FullTrace => {
                AlgebraElement::new(&self.codomain, vec![CMat::from_element(1, 1, a.trace())])
            }
            MapKind::Local { blocks, op } => {
                let sel = blocks.indices(self.domain.num_blocks());
                let d = self.codomain.blocks[0].dim;
                let mut out = CMat::zeros(d, d);
                for x in sel {
                    out += op.apply(a.block(x));
                }
                AlgebraElement::new(&self.codomain, vec![out])
            }
            MapKind::Matrix { entries, hermitian_preserving: true } => {
                let herm = |h: &AlgebraElement| -> Result<AlgebraElement> {
                    let c = DVector::from_vec(h.herm_coords());
                    let out = entries * c;
                    AlgebraElement::from_herm_coords(&self.codomain, out.as_slice())
                };
                // Complex-linear extension from the Hermitian part.
                let re = herm(&a.hermitian_part())?;
                if self.domain.field == Field::Real {
                    return Ok(re);
                }
                let anti = a
                    .sub(&a.adjoint())?
                    .map_blocks(|m| m * c64(0.0, -0.5));
                let im = herm(&anti)?;
                Ok(AlgebraElement::new(
                    &self.codomain,
                    re.blocks()
                        .iter()
                        .zip(im.blocks())
                        .map(|(r, i)| r + i * c64(0.0, 1.0))
                        .collect(),
                )?)
            }
            MapKind::Matrix { entries, hermitian_preserving: false } => {
                let c = DVector::from_vec(a.real_coords());
                let out = entries * c;
                AlgebraElement::from_real_coords(&self.codomain, out.as_slice())
            }
            MapKind::SumOfCopies { copies, inner } => {
                let nb = inner.domain.num_blocks();
                let mut blocks: Vec<CMat> = a.blocks()[..nb].to_vec();
                for c in 1..*copies {
                    for (x, b) in blocks.iter_mut().enumerate() {
                        *b += a.block(c * nb + x);
                    }
                }
                inner.apply(&AlgebraElement::new(&inner.domain, blocks)?)
            }
            MapKind::Adjoint(inner) => inner.apply_adjoint(a),
        }
    }

    /// Apply the Hilbert–Schmidt adjoint to an element of the codomain.
    pub fn apply_adjoint(&self, y: &AlgebraElement) -> Result<AlgebraElement> {
        if y.spec() != &self.codomain {
            return Err(Error::SpecMismatch);
        }
        match &self.kind {
            MapKind::FullTrace => {
                let t = y.block(0)[(0, 0)];
                Ok(AlgebraElement::identity(&self.domain).map_blocks(|m| m * t))
            }
            MapKind::Local { blocks, op } => {
                let sel = blocks.indices(self.domain.num_blocks());
                let mut out: Vec<CMat> = self
                    .domain
                    .blocks
                    .iter()
                    .map(|b| CMat::zeros(b.dim, b.dim))
                    .collect();
                let img = op.adjoint(y.block(0));
                for x in sel {
                    out[x] += img.unscale(self.domain.blocks[x].mult as f64);
                }
                AlgebraElement::new(&self.domain, out)
            }
            MapKind::Matrix { .. } => self.adjoint().apply(y),
            MapKind::SumOfCopies { copies, inner } => {
                let one = inner.apply_adjoint(y)?;
                let blocks = (0..*copies).flat_map(|_| one.blocks().iter().cloned()).collect();
                AlgebraElement::new(&self.domain, blocks)
            }
            MapKind::Adjoint(inner) => inner.apply(y),
        }
    }

    /// Entry `(i, j)` is `⟨cod_i, L(dom_j)⟩`.
    pub fn coordinate_matrix(&self, dom: &HermBasis, cod: &HermBasis) -> Result<RMat> {
        if !self.hermitian_preserving() {
            return Err(Error::NotHermitianPreserving);
        }
        if dom.spec() != &self.domain || cod.spec() != &self.codomain {
            return Err(Error::SpecMismatch);
        }
        let mut m = RMat::zeros(cod.len(), dom.len());
        for (j, e) in dom.elements().iter().enumerate() {
            let out = self.apply(e)?;
            if !out.is_hermitian(1e-12) {
                return Err(Error::NotHermitianPreserving);
            }
            let c = cod.coords(&out)?;
            m.column_mut(j).copy_from_slice(&c);
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<Value> {
        let sel = |blocks: &BlockSelection, v: &mut Value| {
            if let BlockSelection::Only(ix) = blocks {
                v["blocks"] = json!(ix);
            }
        };
        Ok(match &self.kind {
            MapKind::FullTrace => json!({"kind": "full_trace"}),
            MapKind::Local { blocks, op } => {
                let mut v = match op {
                    LocalOp::Identity => json!({"kind": "block_sum"}),
                    LocalOp::PartialTrace { factors, keep } => {
                        json!({"kind": "partial_trace", "factors": factors, "keep": keep})
                    }
                    LocalOp::SandwichTrace { operator, factors, keep } => json!({
                        "kind": "sandwich_trace",
                        "operator": matrix_to_json(operator, self.domain.field),
                        "factors": factors,
                        "keep": keep,
                    }),
                    LocalOp::CombCausality { factors, traced, twirled } => json!({
                        "kind": "comb_causality",
                        "factors": factors,
                        "traced": traced,
                        "twirled": twirled,
                    }),
                };
                sel(blocks, &mut v);
                v
            }
            MapKind::Matrix { entries, hermitian_preserving } => json!({
                "kind": "matrix",
                "entries": matrix_to_json(&linalg::to_complex(entries), Field::Real),
                "hermitian_preserving": hermitian_preserving,
                "codomain": self.codomain.to_json(),
            }),
            MapKind::SumOfCopies { copies, inner } => json!({
                "kind": "sum_of_copies",
                "copies": copies,
                "inner": inner.to_json()?,
            }),
            MapKind::Adjoint(_) => {
                return Err(Error::Parse("adjoint maps have no JSON descriptor".into()));
            }
        })
    }

    /// Parse a map descriptor acting on `domain`.
    pub fn from_json(domain: &AlgebraSpec, v: &Value) -> Result<Self> {
        let kind = v
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("map descriptor needs a \"kind\" string".into()))?;
        let blocks = match v.get("blocks") {
            None | Some(Value::Null) => BlockSelection::All,
            Some(b) => BlockSelection::Only(usize_list(b, "blocks")?),
        };
        let factors = || -> Result<Vec<usize>> {
            match v.get("factors") {
                Some(f) => usize_list(f, "factors"),
                None => Err(Error::Parse(format!("{kind} needs \"factors\""))),
            }
        };
        match kind {
            "full_trace" => Ok(Self::full_trace(domain)),
            "block_sum" => Self::local(domain, blocks, LocalOp::Identity),
            "partial_trace" => {
                let keep = usize_list(v.get("keep").unwrap_or(&Value::Null), "keep")?;
                Self::partial_trace(domain, blocks, factors()?, keep)
            }
            "sandwich_trace" => {
                let operator = matrix_from_json(
                    v.get("operator")
                        .ok_or_else(|| Error::Parse("sandwich_trace needs \"operator\"".into()))?,
                )?;
                let factors = factors()?;
                let keep = match (v.get("keep"), v.get("side").and_then(Value::as_str)) {
                    (Some(k), _) => usize_list(k, "keep")?,
                    (None, Some("in")) => vec![1],
                    (None, Some("out")) => vec![0],
                    (None, Some(s)) => return Err(Error::Parse(format!("unknown side \"{s}\""))),
                    (None, None) => Vec::new(),
                };
                Self::sandwich_trace(domain, blocks, operator, factors, keep)
            }
            "comb_causality" => {
                let traced = usize_list(v.get("traced").unwrap_or(&Value::Null), "traced")?;
                let twirled = usize_list(v.get("twirled").unwrap_or(&Value::Null), "twirled")?;
                Self::comb_causality(domain, blocks, factors()?, traced, twirled)
            }
            "matrix" => {
                let entries = f64_matrix_from_json(
                    v.get("entries")
                        .ok_or_else(|| Error::Parse("matrix needs \"entries\"".into()))?,
                )?;
                let hp = v.get("hermitian_preserving").and_then(Value::as_bool).unwrap_or(true);
                let codomain = match v.get("codomain") {
                    Some(c) => serde_json::from_value(c.clone()).map_err(|e| Error::Parse(e.to_string()))?,
                    None => AlgebraSpec::full(domain.field, codomain_dim(entries.nrows(), domain.field, hp)?),
                };
                Self::matrix(domain, &codomain, entries, hp)
            }
            "sum_of_copies" => {
                let copies = v
                    .get("copies")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| Error::Parse("sum_of_copies needs \"copies\"".into()))? as usize;
                let nb = domain.num_blocks();
                if copies == 0 || !nb.is_multiple_of(copies) {
                    return Err(Error::BadDims("block count is not a multiple of copies".into()));
                }
                let inner_spec = AlgebraSpec::from_blocks(domain.field, domain.blocks[..nb / copies].to_vec())?;
                if inner_spec.repeated(copies) != *domain {
                    return Err(Error::BadDims("blocks are not copies of one spec".into()));
                }
                let inner = Self::from_json(
                    &inner_spec,
                    v.get("inner")
                        .ok_or_else(|| Error::Parse("sum_of_copies needs \"inner\"".into()))?,
                )?;
                Self::sum_of_copies(copies, inner)
            }
            other => Err(Error::Parse(format!("unknown map kind \"{other}\""))),
        }
    }
}

fn codomain_dim(rows: usize, field: Field, hp: bool) -> Result<usize> {
    (1..=rows.max(1))
        .find(|&d| if hp { field.herm_dim(d) } else { field.real_dim(d) } == rows)
        .ok_or_else(|| Error::ShapeMismatch(format!("{rows} rows do not match any codomain dimension")))
}

fn usize_list(v: &Value, what: &str) -> Result<Vec<usize>> {
    if v.is_null() {
        return Ok(Vec::new());
    }
    v.as_array()
        .ok_or_else(|| Error::Parse(format!("\"{what}\" must be a list")))?
        .iter()
        .map(|x| {
            x.as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| Error::Parse(format!("\"{what}\" entries must be non-negative integers")))
        })
        .collect()
}

fn check_sites(sites: &[usize], k: usize, what: &str) -> Result<()> {
    if sites.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadDims(format!("{what} must be strictly increasing")));
    }
    if sites.iter().any(|&s| s >= k) {
        return Err(Error::BadDims(format!("{what} refers to a missing factor")));
    }
    Ok(())
}

fn validate_op(op: &LocalOp, r: usize, field: Field) -> Result<()> {
    if let Some(factors) = op.factors() {
        if factors.iter().product::<usize>() != r || factors.contains(&0) {
            return Err(Error::BadDims(format!(
                "factor dims {factors:?} do not multiply to block dimension {r}"
            )));
        }
    }
    match op {
        LocalOp::Identity => Ok(()),
        LocalOp::PartialTrace { factors, keep } => check_sites(keep, factors.len(), "keep"),
        LocalOp::SandwichTrace { operator, factors, keep } => {
            check_sites(keep, factors.len(), "keep")?;
            let traced = Factors::new(factors).complement(keep);
            let dt: usize = traced.iter().map(|&t| factors[t]).product();
            if operator.shape() != (dt, dt) {
                return Err(Error::ShapeMismatch(format!(
                    "sandwich operator is {}x{}, traced factors have dimension {dt}",
                    operator.nrows(),
                    operator.ncols()
                )));
            }
            if field == Field::Real && !linalg::is_real(operator, 1e-12) {
                return Err(Error::FieldMismatch);
            }
            Ok(())
        }
        LocalOp::CombCausality { factors, traced, twirled } => {
            check_sites(traced, factors.len(), "traced")?;
            check_sites(twirled, factors.len(), "twirled")?;
            if traced.iter().any(|t| twirled.contains(t)) {
                return Err(Error::BadDims("traced and twirled factors overlap".into()));
            }
            Ok(())
        }
    }
}
