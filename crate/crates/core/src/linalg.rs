//! Dense linear-algebra helpers shared by the rest of the crate: Hermitian
//! eigendecompositions, tensor-factor index gymnastics (partial traces and
//! embeddings), and rank decisions from singular values.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::algebra::Field;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_deviation(m: &CMat) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn is_real(m: &CMat, tol: f64) -> bool {
    m.iter().all(|z| z.im.abs() <= tol)
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| c64(x, 0.0))
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues ascending.
///
/// Over the real field the computation is done in `f64` so that the
/// eigenvectors come out real.
pub fn herm_eigen(m: &CMat, field: Field) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let (vals, vecs): (Vec<f64>, CMat) = match field {
        Field::Real => {
            let r = real_part(m);
            let sym = (&r + r.transpose()).scale(0.5);
            let eig = SymmetricEigen::new(sym);
            (eig.eigenvalues.iter().copied().collect(), to_complex(&eig.eigenvectors))
        }
        Field::Complex => {
            let eig = SymmetricEigen::new(hermitian_part(m));
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = CMat::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    (sorted_vals, sorted_vecs)
}

pub fn herm_eigenvalues(m: &CMat, field: Field) -> Vec<f64> {
    herm_eigen(m, field).0
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Mixed-radix indexing over an ordered list of tensor-factor dimensions.
#[derive(Clone, Debug)]
pub struct Factors {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Factors {
    pub fn new(dims: &[usize]) -> Self {
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Self { dims: dims.to_vec(), strides }
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.strides[site]) % self.dims[site]
    }

    /// Flattened index over the listed sites only (in the order given).
    pub fn sub_index(&self, index: usize, sites: &[usize]) -> usize {
        sites
            .iter()
            .fold(0, |acc, &s| acc * self.dims[s] + self.digit(index, s))
    }

    pub fn sub_dim(&self, sites: &[usize]) -> usize {
        sites.iter().map(|&s| self.dims[s]).product()
    }

    pub fn complement(&self, sites: &[usize]) -> Vec<usize> {
        (0..self.dims.len()).filter(|s| !sites.contains(s)).collect()
    }
}

/// Partial trace keeping the sites in `keep` (ascending), tracing the rest.
pub fn partial_trace(m: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let f = Factors::new(dims);
    let traced = f.complement(keep);
    let dk = f.sub_dim(keep);
    let mut out = CMat::zeros(dk, dk);
    let n = f.total();
    for i in 0..n {
        let ti = f.sub_index(i, &traced);
        let ki = f.sub_index(i, keep);
        for j in 0..n {
            if f.sub_index(j, &traced) == ti {
                out[(ki, f.sub_index(j, keep))] += m[(i, j)];
            }
        }
    }
    out
}

/// `op` acting on `sites` (ascending order), tensored with the identity on
/// every other site. This is also the Hilbert–Schmidt adjoint of the partial
/// trace that keeps `sites`.
pub fn embed(op: &CMat, dims: &[usize], sites: &[usize]) -> CMat {
    let f = Factors::new(dims);
    let rest = f.complement(sites);
    let n = f.total();
    let mut out = CMat::zeros(n, n);
    for i in 0..n {
        let ri = f.sub_index(i, &rest);
        let si = f.sub_index(i, sites);
        for j in 0..n {
            if f.sub_index(j, &rest) == ri {
                out[(i, j)] = op[(si, f.sub_index(j, sites))];
            }
        }
    }
    out
}

/// Reorder tensor factors: factor `k` of the result is factor `perm[k]` of
/// the input.
pub fn permute_factors(m: &CMat, dims: &[usize], perm: &[usize]) -> CMat {
    let src = Factors::new(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let n = src.total();
    // map[i] = index in the source of the basis vector with new index i
    let map: Vec<usize> = (0..n)
        .map(|i| {
            let f = Factors::new(&new_dims);
            let mut digits = vec![0; dims.len()];
            for (k, &p) in perm.iter().enumerate() {
                digits[p] = f.digit(i, k);
            }
            digits.iter().zip(dims).fold(0, |acc, (d, dim)| acc * dim + d)
        })
        .collect();
    CMat::from_fn(n, n, |i, j| m[(map[i], map[j])])
}

/// Outcome of deciding the numerical rank of a matrix from its singular
/// values.
#[derive(Clone, Debug, PartialEq)]
pub struct RankDecision {
    pub rank: usize,
    /// Singular values in descending order, padded with zeros up to the
    /// number of columns.
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    /// Some singular value sits within a factor `sqrt(gap)` of the
    /// threshold on either side.
    pub inconclusive: bool,
    /// Ratio between the smallest retained and the largest discarded
    /// singular value (infinite when one side is empty or exactly zero).
    pub gap_ratio: f64,
}

impl RankDecision {
    pub fn nullity(&self) -> usize {
        self.singular_values.len() - self.rank
    }
}

pub fn decide_rank(singular_values: Vec<f64>, scale: f64, rel_tol: f64, gap: f64) -> RankDecision {
    let threshold = rel_tol * scale;
    let band = gap.sqrt();
    let rank = singular_values.iter().filter(|&&s| s > threshold).count();
    let inconclusive = threshold > 0.0
        && singular_values
            .iter()
            .any(|&s| s > threshold / band && s <= threshold * band);
    let smallest_kept = singular_values[..rank].last().copied();
    let largest_dropped = singular_values.get(rank).copied();
    let gap_ratio = match (smallest_kept, largest_dropped) {
        (Some(k), Some(d)) if d > 0.0 => k / d,
        _ => f64::INFINITY,
    };
    RankDecision {
        rank,
        singular_values,
        threshold,
        inconclusive,
        gap_ratio,
    }
}

/// Singular values (descending, length `ncols`) and the full set of right
/// singular vectors as columns of an `ncols x ncols` matrix.
pub fn full_right_svd(m: &RMat) -> (Vec<f64>, RMat) {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return (Vec::new(), RMat::zeros(0, 0));
    }
    let padded = if rows < cols {
        let mut p = RMat::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v = svd.v_t.expect("requested V").transpose();
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    (sigma, v)
}

pub fn singular_values(m: &RMat) -> Vec<f64> {
    let (rows, cols) = m.shape();
    if cols == 0 || rows == 0 {
        return vec![0.0; cols];
    }
    let mut s: Vec<f64> = SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.resize(cols, 0.0);
    s
}

/// Null space of `m`, with the rank decided relative to `scale`.
#[derive(Clone, Debug)]
pub struct NullSpace {
    pub decision: RankDecision,
    /// Basis vectors ordered from the smallest singular value upwards.
    pub basis: Vec<DVector<f64>>,
}

pub fn null_space(m: &RMat, scale: f64, rel_tol: f64, gap: f64) -> NullSpace {
    let cols = m.ncols();
    let (sigma, v) = full_right_svd(m);
    let decision = decide_rank(sigma, scale, rel_tol, gap);
    let basis = (decision.rank..cols)
        .rev()
        .map(|k| canonical_sign(v.column(k).into_owned()))
        .collect();
    NullSpace { decision, basis }
}

/// Flip the sign so that the entry of largest magnitude (first one on ties)
/// is positive.
pub fn canonical_sign(mut v: DVector<f64>) -> DVector<f64> {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-9) {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
    v
}

/// Real matrix whose columns are the given real vectors.
pub fn columns_to_matrix(cols: &[Vec<f64>], nrows: usize) -> RMat {
    RMat::from_fn(nrows, cols.len(), |i, j| cols[j][i])
}

/// Numerical rank over `K` of a family of vectors in `K^n`, given as complex
/// vectors. Complex rank is read off the realification, whose singular
/// values come in equal pairs.
pub fn family_rank(vectors: &[Vec<Complex64>], field: Field, rel_tol: f64, gap: f64) -> RankDecision {
    let n = vectors.first().map_or(0, |v| v.len());
    let k = vectors.len();
    match field {
        Field::Real => {
            let m = RMat::from_fn(n, k, |i, j| vectors[j][i].re);
            let s = singular_values(&m);
            let scale = s.first().copied().unwrap_or(0.0);
            decide_rank(s, scale, rel_tol, gap)
        }
        Field::Complex => {
            let m = RMat::from_fn(2 * n, 2 * k, |i, j| {
                let (col, shifted) = (j % k, j >= k);
                let z = vectors[col][i % n];
                match (i >= n, shifted) {
                    (false, false) => z.re,
                    (true, false) => z.im,
                    (false, true) => -z.im,
                    (true, true) => z.re,
                }
            });
            let s = singular_values(&m);
            let scale = s.first().copied().unwrap_or(0.0);
            let paired: Vec<f64> = s.iter().step_by(2).copied().collect();
            let mut d = decide_rank(s, scale, rel_tol, gap);
            d.rank = d.rank.div_ceil(2);
            d.singular_values = paired;
            d
        }
    }
}

pub fn flatten(m: &CMat) -> Vec<Complex64> {
    m.iter().copied().collect()
}
