//! Block algebras `⊕_x L(R_x) ⊗ I_{M_x}`, their elements, Hermitian bases
//! and supports.
//!
//! Multiplicity factors are never materialised. An element stores one
//! `r_x × r_x` matrix per block and every trace carries the weight `m_x`.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::json::{matrix_from_json, matrix_to_json};
use crate::linalg::{self, c64, CMat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    #[serde(rename = "R")]
    Real,
    #[serde(rename = "C")]
    Complex,
}

impl Field {
    /// Real dimension of the Hermitian (symmetric) operators on `K^r`.
    pub fn herm_dim(self, r: usize) -> usize {
        match self {
            Field::Real => r * (r + 1) / 2,
            Field::Complex => r * r,
        }
    }

    /// Real dimension of all operators on `K^r`.
    pub fn real_dim(self, r: usize) -> usize {
        match self {
            Field::Real => r * r,
            Field::Complex => 2 * r * r,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Real => "R",
            Field::Complex => "C",
        })
    }
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    #[serde(default = "one")]
    pub mult: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct AlgebraSpec {
    pub field: Field,
    pub blocks: Vec<Block>,
}

#[derive(Deserialize)]
struct RawSpec {
    field: Field,
    blocks: Vec<Block>,
}

impl TryFrom<RawSpec> for AlgebraSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        AlgebraSpec::from_blocks(raw.field, raw.blocks)
    }
}

impl AlgebraSpec {
    pub fn from_blocks(field: Field, blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidSpec("at least one block is required".into()));
        }
        if let Some(b) = blocks.iter().find(|b| b.dim == 0 || b.mult == 0) {
            return Err(Error::InvalidSpec(format!(
                "block dimensions must be positive (got dim {}, mult {})",
                b.dim, b.mult
            )));
        }
        Ok(Self { field, blocks })
    }

    /// Blocks given as `(dim, mult)` pairs.
    pub fn new(field: Field, blocks: &[(usize, usize)]) -> Result<Self> {
        Self::from_blocks(
            field,
            blocks.iter().map(|&(dim, mult)| Block { dim, mult }).collect(),
        )
    }

    /// The full matrix algebra `L(K^d)`.
    pub fn full(field: Field, d: usize) -> Self {
        Self::new(field, &[(d, 1)]).expect("positive dimension")
    }

    /// `n` copies of `L(K^d)`, as used for finite-outcome POVMs.
    pub fn uniform(field: Field, d: usize, n: usize) -> Self {
        Self::new(field, &vec![(d, 1); n]).expect("positive dimension and count")
    }

    /// `n` copies of every block of `self`, in order.
    pub fn repeated(&self, n: usize) -> Self {
        let blocks = (0..n).flat_map(|_| self.blocks.iter().copied()).collect();
        Self::from_blocks(self.field, blocks).expect("copies of a valid spec")
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim).collect()
    }

    /// Dimension `D` of the Hermitian part.
    pub fn herm_dim(&self) -> usize {
        self.blocks.iter().map(|b| self.field.herm_dim(b.dim)).sum()
    }

    /// Real dimension of the whole algebra.
    pub fn real_dim(&self) -> usize {
        self.blocks.iter().map(|b| self.field.real_dim(b.dim)).sum()
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("spec serialises")
    }
}

/// One matrix per block; the `I_{M_x}` factor is implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    spec: AlgebraSpec,
    blocks: Vec<CMat>,
}

impl AlgebraElement {
    pub fn new(spec: &AlgebraSpec, blocks: Vec<CMat>) -> Result<Self> {
        if blocks.len() != spec.num_blocks() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} blocks, got {}",
                spec.num_blocks(),
                blocks.len()
            )));
        }
        for (x, (m, b)) in blocks.iter().zip(&spec.blocks).enumerate() {
            if m.shape() != (b.dim, b.dim) {
                return Err(Error::ShapeMismatch(format!(
                    "block {x} is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    b.dim,
                    b.dim
                )));
            }
        }
        let mut blocks = blocks;
        if spec.field == Field::Real {
            let scale = blocks.iter().map(linalg::max_abs).fold(0.0, f64::max);
            if blocks.iter().any(|m| !linalg::is_real(m, 1e-12 * scale.max(1.0))) {
                return Err(Error::FieldMismatch);
            }
            for m in &mut blocks {
                m.iter_mut().for_each(|z| z.im = 0.0);
            }
        }
        Ok(Self { spec: spec.clone(), blocks })
    }

    /// Single-block convenience constructor on `L(K^d)`.
    pub fn from_matrix(field: Field, m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::ShapeMismatch("expected a non-empty square matrix".into()));
        }
        Self::new(&AlgebraSpec::full(field, m.nrows()), vec![m])
    }

    pub fn zeros(spec: &AlgebraSpec) -> Self {
        let blocks = spec.blocks.iter().map(|b| CMat::zeros(b.dim, b.dim)).collect();
        Self { spec: spec.clone(), blocks }
    }

    pub fn identity(spec: &AlgebraSpec) -> Self {
        let blocks = spec.blocks.iter().map(|b| linalg::identity(b.dim)).collect();
        Self { spec: spec.clone(), blocks }
    }

    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn field(&self) -> Field {
        self.spec.field
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, x: usize) -> &CMat {
        &self.blocks[x]
    }

    pub fn into_blocks(self) -> Vec<CMat> {
        self.blocks
    }

    fn same_spec(&self, other: &Self) -> Result<()> {
        if self.spec == other.spec {
            Ok(())
        } else {
            Err(Error::SpecMismatch)
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Result<Self> {
        self.same_spec(other)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect();
        Ok(Self { spec: self.spec.clone(), blocks })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + t * other`.
    pub fn axpy(&self, t: f64, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b.scale(t))
    }

    pub fn scale(&self, t: f64) -> Self {
        self.map_blocks(|m| m.scale(t))
    }

    pub fn map_blocks(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        Self {
            spec: self.spec.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    /// `Σ_i w_i A_i` over elements sharing one spec.
    pub fn combination(spec: &AlgebraSpec, terms: &[(f64, &AlgebraElement)]) -> Result<Self> {
        let mut acc = Self::zeros(spec);
        for (w, a) in terms {
            acc = acc.axpy(*w, a)?;
        }
        Ok(acc)
    }

    pub fn adjoint(&self) -> Self {
        self.map_blocks(|m| m.adjoint())
    }

    pub fn hermitian_part(&self) -> Self {
        self.map_blocks(linalg::hermitian_part)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.blocks.iter().map(linalg::hermiticity_deviation).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol * self.max_abs().max(1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    /// Weighted Hilbert–Schmidt norm.
    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .zip(&self.spec.blocks)
            .map(|(m, b)| b.mult as f64 * m.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Eigenvalues of every block (ascending within each block).
    pub fn eigenvalues(&self) -> Vec<Vec<f64>> {
        self.blocks
            .iter()
            .map(|m| linalg::herm_eigenvalues(m, self.spec.field))
            .collect()
    }

    /// Largest absolute eigenvalue over all blocks (spectral norm of a
    /// Hermitian element).
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .flatten()
            .fold(0.0, |acc: f64, l| acc.max(l.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Hermitian within `tol` and minimum eigenvalue at least `-tol * ‖A‖`.
    pub fn check_positive(&self, tol: f64) -> Result<()> {
        let dev = self.hermiticity_deviation();
        if dev > tol.max(1e-12) * self.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let eig = self.eigenvalues();
        let norm = eig.iter().flatten().fold(0.0, |acc: f64, l| acc.max(l.abs()));
        let min = eig.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        if min < -tol * norm {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(())
    }

    /// `Σ_x m_x Tr A_x`.
    pub fn trace(&self) -> Complex64 {
        self.blocks
            .iter()
            .zip(&self.spec.blocks)
            .map(|(m, b)| m.trace() * b.mult as f64)
            .sum()
    }

    /// Numerical rank of every block, with eigenvalues above
    /// `tol * λ_max` (global over blocks) counted.
    pub fn ranks(&self, tol: f64) -> Vec<usize> {
        let eig = self.eigenvalues();
        let top = eig.iter().flatten().fold(0.0, |acc: f64, l| acc.max(l.abs()));
        eig.iter()
            .map(|ls| ls.iter().filter(|l| l.abs() > tol * top && top > 0.0).count())
            .collect()
    }

    /// Coordinates in the canonical orthonormal Hermitian basis (of the
    /// Hermitian part of `self`).
    pub fn herm_coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.spec.herm_dim());
        for (m, b) in self.blocks.iter().zip(&self.spec.blocks) {
            push_herm_coords(m, self.spec.field, b.mult, &mut out);
        }
        out
    }

    pub fn from_herm_coords(spec: &AlgebraSpec, coords: &[f64]) -> Result<Self> {
        if coords.len() != spec.herm_dim() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coordinates, got {}",
                spec.herm_dim(),
                coords.len()
            )));
        }
        let mut rest = coords;
        let mut blocks = Vec::with_capacity(spec.num_blocks());
        for b in &spec.blocks {
            let n = spec.field.herm_dim(b.dim);
            blocks.push(herm_from_coords(&rest[..n], spec.field, b.dim, b.mult));
            rest = &rest[n..];
        }
        Ok(Self { spec: spec.clone(), blocks })
    }

    /// Coordinates of the real vector space of all elements, orthonormal
    /// for the real part of the weighted inner product.
    pub fn real_coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.spec.real_dim());
        for (m, b) in self.blocks.iter().zip(&self.spec.blocks) {
            push_real_coords(m, self.spec.field, b.mult, &mut out);
        }
        out
    }

    pub fn from_real_coords(spec: &AlgebraSpec, coords: &[f64]) -> Result<Self> {
        if coords.len() != spec.real_dim() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coordinates, got {}",
                spec.real_dim(),
                coords.len()
            )));
        }
        let mut rest = coords;
        let mut blocks = Vec::with_capacity(spec.num_blocks());
        for b in &spec.blocks {
            let n = spec.field.real_dim(b.dim);
            let s = (b.mult as f64).sqrt();
            let m = match spec.field {
                Field::Real => CMat::from_fn(b.dim, b.dim, |i, j| c64(rest[i * b.dim + j] / s, 0.0)),
                Field::Complex => CMat::from_fn(b.dim, b.dim, |i, j| {
                    let k = 2 * (i * b.dim + j);
                    c64(rest[k] / s, rest[k + 1] / s)
                }),
            };
            blocks.push(m);
            rest = &rest[n..];
        }
        Ok(Self { spec: spec.clone(), blocks })
    }

    pub fn to_json(&self) -> Value {
        let blocks: Vec<Value> = self
            .blocks
            .iter()
            .map(|m| matrix_to_json(m, self.spec.field))
            .collect();
        json!({ "blocks": blocks })
    }

    /// Parse `{"blocks": [...]}` (or a bare matrix for single-block specs).
    pub fn from_json(spec: &AlgebraSpec, v: &Value) -> Result<Self> {
        let blocks = match v.get("blocks") {
            Some(Value::Array(bs)) => bs.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?,
            Some(_) => return Err(Error::Parse("\"blocks\" must be a list".into())),
            None if spec.num_blocks() == 1 => vec![matrix_from_json(v)?],
            None => return Err(Error::Parse("element needs a \"blocks\" field".into())),
        };
        Self::new(spec, blocks)
    }
}

/// Canonical coordinates of the Hermitian part of `m`, scaled by `sqrt(mult)`.
pub(crate) fn push_herm_coords(m: &CMat, field: Field, mult: usize, out: &mut Vec<f64>) {
    let n = m.nrows();
    let s = (mult as f64).sqrt();
    let r2 = std::f64::consts::SQRT_2;
    for a in 0..n {
        out.push(s * m[(a, a)].re);
    }
    for a in 0..n {
        for b in a + 1..n {
            out.push(s * r2 * 0.5 * (m[(a, b)].re + m[(b, a)].re));
        }
    }
    if field == Field::Complex {
        for a in 0..n {
            for b in a + 1..n {
                out.push(s * r2 * 0.5 * (m[(a, b)].im - m[(b, a)].im));
            }
        }
    }
}

pub(crate) fn herm_from_coords(c: &[f64], field: Field, n: usize, mult: usize) -> CMat {
    let s = (mult as f64).sqrt();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMat::zeros(n, n);
    for a in 0..n {
        m[(a, a)] = c64(c[a] / s, 0.0);
    }
    let mut k = n;
    for a in 0..n {
        for b in a + 1..n {
            m[(a, b)] = c64(h * c[k] / s, 0.0);
            m[(b, a)] = c64(h * c[k] / s, 0.0);
            k += 1;
        }
    }
    if field == Field::Complex {
        for a in 0..n {
            for b in a + 1..n {
                m[(a, b)].im = h * c[k] / s;
                m[(b, a)].im = -h * c[k] / s;
                k += 1;
            }
        }
    }
    m
}

pub(crate) fn push_real_coords(m: &CMat, field: Field, mult: usize, out: &mut Vec<f64>) {
    let s = (mult as f64).sqrt();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push(s * z.re);
            if field == Field::Complex {
                out.push(s * z.im);
            }
        }
    }
}

/// `Σ_x m_x Tr[A_x† B_x]`.
pub fn inner(a: &AlgebraElement, b: &AlgebraElement) -> Result<Complex64> {
    a.same_spec(b)?;
    Ok(a.blocks
        .iter()
        .zip(&b.blocks)
        .zip(&a.spec.blocks)
        .map(|((x, y), blk)| x.dotc(y) * blk.mult as f64)
        .sum())
}

/// An orthonormal basis of the Hermitian elements of an algebra.
#[derive(Clone, Debug)]
pub struct HermBasis {
    spec: AlgebraSpec,
    elements: Vec<AlgebraElement>,
    canonical: bool,
}

impl HermBasis {
    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn elements(&self) -> &[AlgebraElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Wrap an explicit list, which must be orthonormal and Hermitian.
    pub fn from_elements(spec: &AlgebraSpec, elements: Vec<AlgebraElement>) -> Result<Self> {
        for (i, e) in elements.iter().enumerate() {
            if e.spec() != spec {
                return Err(Error::SpecMismatch);
            }
            if !e.is_hermitian(1e-12) {
                return Err(Error::NotHermitian { deviation: e.hermiticity_deviation() });
            }
            for (j, f) in elements.iter().enumerate().take(i + 1) {
                let g = inner(e, f)?.re;
                let want = if i == j { 1.0 } else { 0.0 };
                if (g - want).abs() > 1e-10 {
                    return Err(Error::InvalidSpec(format!("basis is not orthonormal at ({i}, {j})")));
                }
            }
        }
        Ok(Self { spec: spec.clone(), elements, canonical: false })
    }

    /// Coordinates `⟨H_k, A⟩` of the Hermitian part of `a`.
    pub fn coords(&self, a: &AlgebraElement) -> Result<Vec<f64>> {
        if a.spec() != &self.spec {
            return Err(Error::SpecMismatch);
        }
        if self.canonical {
            return Ok(a.herm_coords());
        }
        let h = a.hermitian_part();
        self.elements.iter().map(|e| Ok(inner(e, &h)?.re)).collect()
    }

    pub fn synthesize(&self, coords: &[f64]) -> Result<AlgebraElement> {
        if coords.len() != self.len() {
            return Err(Error::ShapeMismatch("coordinate count differs from basis size".into()));
        }
        if self.canonical {
            return AlgebraElement::from_herm_coords(&self.spec, coords);
        }
        let terms: Vec<(f64, &AlgebraElement)> = coords.iter().copied().zip(&self.elements).collect();
        AlgebraElement::combination(&self.spec, &terms)
    }
}

/// Canonical basis: per block, diagonal units, then `(E_ab + E_ba)/√2`, then
/// (complex only) `(iE_ab − iE_ba)/√2`, pairs `a < b` in lexicographic
/// order, each divided by `sqrt(m_x)`.
pub fn herm_basis(spec: &AlgebraSpec) -> HermBasis {
    let d = spec.herm_dim();
    let elements = (0..d)
        .map(|k| {
            let mut c = vec![0.0; d];
            c[k] = 1.0;
            AlgebraElement::from_herm_coords(spec, &c).expect("coordinate count matches")
        })
        .collect();
    HermBasis { spec: spec.clone(), elements, canonical: true }
}

/// Per-block isometries onto the support of a positive element.
#[derive(Clone, Debug)]
pub struct SupportProjector {
    spec: AlgebraSpec,
    isometries: Vec<CMat>,
    eigenvalues: Vec<Vec<f64>>,
}

impl SupportProjector {
    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn isometries(&self) -> &[CMat] {
        &self.isometries
    }

    pub fn isometry(&self, x: usize) -> &CMat {
        &self.isometries[x]
    }

    /// Retained eigenvalues per block, ascending, matching the isometry
    /// columns.
    pub fn eigenvalues(&self) -> &[Vec<f64>] {
        &self.eigenvalues
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.isometries.iter().map(|v| v.ncols()).collect()
    }

    /// `dim V_A`, the real dimension of Hermitian elements supported in
    /// the support.
    pub fn dim_va(&self) -> usize {
        self.ranks().iter().map(|&s| self.spec.field.herm_dim(s)).sum()
    }

    pub fn projector(&self) -> AlgebraElement {
        let blocks = self.isometries.iter().map(|v| v * v.adjoint()).collect();
        AlgebraElement { spec: self.spec.clone(), blocks }
    }

    /// `Π X Π`.
    pub fn project(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        if x.spec() != &self.spec {
            return Err(Error::SpecMismatch);
        }
        let blocks = self
            .isometries
            .iter()
            .zip(x.blocks())
            .map(|(v, m)| {
                let p = v * v.adjoint();
                &p * m * &p
            })
            .collect();
        Ok(AlgebraElement { spec: self.spec.clone(), blocks })
    }

    /// `V_x† X_x V_x` per block (blocks of size zero allowed).
    pub fn compress(&self, x: &AlgebraElement) -> Result<Vec<CMat>> {
        if x.spec() != &self.spec {
            return Err(Error::SpecMismatch);
        }
        Ok(self
            .isometries
            .iter()
            .zip(x.blocks())
            .map(|(v, m)| v.adjoint() * m * v)
            .collect())
    }

    /// `V_x Y_x V_x†` per block.
    pub fn lift(&self, ys: &[CMat]) -> Result<AlgebraElement> {
        if ys.len() != self.isometries.len() {
            return Err(Error::ShapeMismatch("one compressed block per algebra block".into()));
        }
        let blocks = self
            .isometries
            .iter()
            .zip(ys)
            .map(|(v, y)| v * y * v.adjoint())
            .collect();
        Ok(AlgebraElement { spec: self.spec.clone(), blocks })
    }

    /// Coordinates of `Π X Π` in the orthonormal basis of `V_A` returned by
    /// [`SupportProjector::va_basis`].
    pub fn va_coords(&self, x: &AlgebraElement) -> Result<Vec<f64>> {
        let compressed = self.compress(x)?;
        let mut out = Vec::with_capacity(self.dim_va());
        for (m, b) in compressed.iter().zip(&self.spec.blocks) {
            push_herm_coords(m, self.spec.field, b.mult, &mut out);
        }
        Ok(out)
    }

    pub fn from_va_coords(&self, coords: &[f64]) -> Result<AlgebraElement> {
        if coords.len() != self.dim_va() {
            return Err(Error::ShapeMismatch("coordinate count differs from dim V_A".into()));
        }
        let mut rest = coords;
        let mut ys = Vec::with_capacity(self.isometries.len());
        for (v, b) in self.isometries.iter().zip(&self.spec.blocks) {
            let s = v.ncols();
            let n = self.spec.field.herm_dim(s);
            ys.push(herm_from_coords(&rest[..n], self.spec.field, s, b.mult));
            rest = &rest[n..];
        }
        self.lift(&ys)
    }

    /// Orthonormal basis `V_x h V_x† / sqrt(m_x)` of `V_A`.
    pub fn va_basis(&self) -> Vec<AlgebraElement> {
        let n = self.dim_va();
        (0..n)
            .map(|k| {
                let mut c = vec![0.0; n];
                c[k] = 1.0;
                self.from_va_coords(&c).expect("coordinate count matches")
            })
            .collect()
    }
}

/// Support of a positive element. Eigenvalues above `tol_supp * λ_max`
/// (largest eigenvalue over all blocks) are retained.
pub fn support(a: &AlgebraElement, tol_supp: f64, tol_psd: f64) -> Result<SupportProjector> {
    a.check_positive(tol_psd)?;
    let eig: Vec<(Vec<f64>, CMat)> = a
        .blocks()
        .iter()
        .map(|m| linalg::herm_eigen(m, a.field()))
        .collect();
    let top = eig
        .iter()
        .flat_map(|(ls, _)| ls.iter())
        .fold(0.0, |acc: f64, l| acc.max(*l));
    let mut isometries = Vec::with_capacity(eig.len());
    let mut eigenvalues = Vec::with_capacity(eig.len());
    for (ls, vecs) in eig {
        let keep: Vec<usize> = (0..ls.len()).filter(|&i| top > 0.0 && ls[i] > tol_supp * top).collect();
        let v = CMat::from_fn(vecs.nrows(), keep.len(), |i, j| vecs[(i, keep[j])]);
        eigenvalues.push(keep.iter().map(|&i| ls[i]).collect());
        isometries.push(v);
    }
    Ok(SupportProjector { spec: a.spec().clone(), isometries, eigenvalues })
}

/// Column vector helper for building rank-one operators.
pub fn ket(entries: &[Complex64]) -> DVector<Complex64> {
    DVector::from_column_slice(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> CMat {
        CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)])
    }

    fn pauli_z() -> CMat {
        CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)])
    }

    #[test]
    fn herm_basis_sizes() {
        assert_eq!(herm_basis(&AlgebraSpec::full(Field::Complex, 2)).len(), 4);
        assert_eq!(herm_basis(&AlgebraSpec::full(Field::Real, 2)).len(), 3);
        let spec = AlgebraSpec::new(Field::Complex, &[(2, 1), (3, 2)]).unwrap();
        assert_eq!(herm_basis(&spec).len(), 13);
    }

    #[test]
    fn herm_basis_is_orthonormal_with_multiplicities() {
        let spec = AlgebraSpec::new(Field::Complex, &[(2, 3), (3, 1)]).unwrap();
        let basis = herm_basis(&spec);
        for (i, a) in basis.elements().iter().enumerate() {
            assert!(a.is_hermitian(1e-14));
            for (j, b) in basis.elements().iter().enumerate() {
                let g = inner(a, b).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g.re - want).abs() < 1e-12 && g.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn basis_order_is_diag_sym_ant() {
        let b = herm_basis(&AlgebraSpec::full(Field::Complex, 2));
        let e = b.elements();
        assert_eq!(e[0].block(0)[(0, 0)], c64(1.0, 0.0));
        assert_eq!(e[1].block(0)[(1, 1)], c64(1.0, 0.0));
        assert!((e[2].block(0)[(0, 1)].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((e[3].block(0)[(0, 1)].im - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn inner_examples() {
        let spec = AlgebraSpec::full(Field::Complex, 2);
        let id = AlgebraElement::identity(&spec);
        assert_eq!(inner(&id, &id).unwrap().re, 2.0);
        let x = AlgebraElement::new(&spec, vec![pauli_x()]).unwrap();
        let z = AlgebraElement::new(&spec, vec![pauli_z()]).unwrap();
        assert_eq!(inner(&x, &z).unwrap().norm(), 0.0);
        let spec3 = AlgebraSpec::new(Field::Complex, &[(2, 3)]).unwrap();
        let id3 = AlgebraElement::identity(&spec3);
        assert_eq!(inner(&id3, &id3).unwrap().re, 6.0);
        assert_eq!(inner(&id, &id3), Err(Error::SpecMismatch));
    }

    #[test]
    fn support_examples() {
        let spec = AlgebraSpec::full(Field::Complex, 2);
        let half = AlgebraElement::identity(&spec).scale(0.5);
        assert_eq!(support(&half, 1e-9, 1e-9).unwrap().ranks(), vec![2]);
        let tiny = AlgebraElement::new(
            &spec,
            vec![CMat::from_diagonal(&DVector::from_vec(vec![c64(1.0, 0.0), c64(1e-15, 0.0)]))],
        )
        .unwrap();
        let p = support(&tiny, 1e-9, 1e-9).unwrap();
        assert_eq!(p.ranks(), vec![1]);
        assert!((p.isometry(0)[(0, 0)].norm() - 1.0).abs() < 1e-14);
        let neg = AlgebraElement::new(&spec, vec![pauli_z()]).unwrap();
        assert!(matches!(support(&neg, 1e-9, 1e-9), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn zero_element_has_empty_support() {
        let spec = AlgebraSpec::new(Field::Real, &[(2, 1), (1, 2)]).unwrap();
        let p = support(&AlgebraElement::zeros(&spec), 1e-9, 1e-9).unwrap();
        assert_eq!(p.ranks(), vec![0, 0]);
        assert_eq!(p.dim_va(), 0);
    }

    #[test]
    fn real_field_rejects_complex_entries() {
        let spec = AlgebraSpec::full(Field::Real, 2);
        let m = CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 1.0), c64(0.0, -1.0), c64(1.0, 0.0)]);
        assert_eq!(AlgebraElement::new(&spec, vec![m]), Err(Error::FieldMismatch));
    }

    #[test]
    fn spec_json_validates() {
        let s: AlgebraSpec = serde_json::from_str(r#"{"field":"C","blocks":[{"dim":2,"mult":3},{"dim":1}]}"#).unwrap();
        assert_eq!(s.blocks[1].mult, 1);
        assert!(serde_json::from_str::<AlgebraSpec>(r#"{"field":"R","blocks":[]}"#).is_err());
        assert!(serde_json::from_str::<AlgebraSpec>(r#"{"field":"R","blocks":[{"dim":0}]}"#).is_err());
    }

    #[test]
    fn element_json_round_trip() {
        let spec = AlgebraSpec::new(Field::Complex, &[(2, 1), (1, 2)]).unwrap();
        let a = AlgebraElement::new(&spec, vec![pauli_x(), CMat::from_element(1, 1, c64(0.5, 0.0))]).unwrap();
        let back = AlgebraElement::from_json(&spec, &a.to_json()).unwrap();
        assert_eq!(a, back);
    }
}
