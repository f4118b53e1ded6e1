#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use spectrex::linalg::{c64, CMat, RMat};
use spectrex::models::random as gen;
use spectrex::{AlgebraElement, AlgebraSpec, BlockSelection, Constraint, ConstraintMap, Field, Spectrahedron};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn field(complex: bool) -> Field {
    if complex {
        Field::Complex
    } else {
        Field::Real
    }
}

/// One or two blocks, total block dimension at most 4.
pub fn random_spec(rng: &mut ChaCha8Rng, field: Field) -> AlgebraSpec {
    let first = rng.random_range(1..=4);
    let mut blocks = vec![(first, rng.random_range(1..=2))];
    if first < 4 && rng.random_bool(0.5) {
        blocks.push((rng.random_range(1..=4 - first), rng.random_range(1..=2)));
    }
    AlgebraSpec::new(field, &blocks).unwrap()
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, spec: &AlgebraSpec) -> AlgebraElement {
    let c: Vec<f64> = (0..spec.herm_dim()).map(|_| rng.sample(StandardNormal)).collect();
    AlgebraElement::from_herm_coords(spec, &c).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> RMat {
    RMat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Positive element with a random rank in every block (at least one block
/// nonzero).
pub fn random_positive(rng: &mut ChaCha8Rng, spec: &AlgebraSpec) -> AlgebraElement {
    let mut blocks: Vec<CMat> = spec
        .blocks
        .iter()
        .map(|b| {
            let rank = rng.random_range(0..=b.dim);
            if rank == 0 {
                CMat::zeros(b.dim, b.dim)
            } else {
                gen::random_state(rng, b.dim, rank, spec.field)
            }
        })
        .collect();
    if blocks.iter().all(|m| m.norm() == 0.0) {
        let d = spec.blocks[0].dim;
        blocks[0] = gen::random_state(rng, d, 1, spec.field);
    }
    AlgebraElement::new(spec, blocks).unwrap()
}

/// A Hermitian-defined spectrahedron that contains a known point: random
/// coordinate maps (and sometimes the trace or a block identity) with
/// targets read off the point. With `bounded` the trace is always fixed.
pub fn random_instance(rng: &mut ChaCha8Rng, field: Field, bounded: bool) -> (Spectrahedron, AlgebraElement) {
    let spec = random_spec(rng, field);
    let a = random_positive(rng, &spec);
    let d = spec.herm_dim();
    let mut maps = Vec::new();
    if bounded || rng.random_bool(0.5) {
        maps.push(ConstraintMap::full_trace(&spec));
    }
    if spec.num_blocks() > 1 && rng.random_bool(0.3) {
        maps.push(ConstraintMap::local(&spec, BlockSelection::Only(vec![0]), spectrex::LocalOp::Identity).unwrap());
    }
    let extra = rng.random_range(0..=2);
    for _ in 0..extra {
        let k = rng.random_range(1..=d.min(3));
        let cod = AlgebraSpec::full(field, 1).repeated(k);
        let rows = cod.herm_dim();
        maps.push(ConstraintMap::matrix(&spec, &cod, random_matrix(rng, rows, d), true).unwrap());
    }
    if maps.is_empty() {
        maps.push(ConstraintMap::full_trace(&spec));
    }
    let cs = maps
        .into_iter()
        .map(|m| {
            let b = m.apply(&a).unwrap();
            Constraint::new(m, b).unwrap()
        })
        .collect();
    (Spectrahedron::new(&spec, cs).unwrap(), a)
}

pub fn diag2(a: f64, b: f64) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(a, 0.0), c64(b, 0.0)]))
}
