//! Seeded generators for members of the model spectrahedra. Every member is a
//! convex mixture of explicitly feasible seed points, so membership holds by
//! construction.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::algebra::{AlgebraElement, Field};
use crate::error::Result;
use crate::linalg::{self, c64, CMat};
use crate::models::channels::choi_of_kraus;
use crate::models::comb::interleave_choi;

fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, field: Field) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = match field {
            Field::Complex => rng.sample(StandardNormal),
            Field::Real => 0.0,
        };
        c64(re, im)
    })
}

/// Haar-distributed unitary (orthogonal over ℝ).
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize, field: Field) -> CMat {
    let qr = gaussian(rng, d, d, field).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c64(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar isometry `K^cols → K^rows` (`rows ≥ cols`).
pub fn haar_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, field: Field) -> CMat {
    haar_unitary(rng, rows, field).columns(0, cols).into_owned()
}

/// Uniform random unit vector.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize, field: Field) -> CMat {
    let v = gaussian(rng, d, 1, field);
    let n = v.norm();
    v.unscale(n)
}

/// Uniform point of the probability simplex.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1).max(1e-300)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Random positive matrix of unit trace with the given rank.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize, field: Field) -> CMat {
    let g = gaussian(rng, d, rank.max(1), field);
    let rho = &g * g.adjoint();
    let t = rho.trace().re;
    linalg::hermitian_part(&rho.unscale(t))
}

/// Flat-Dirichlet mixture of `seeds`.
pub fn mixture<R: Rng + ?Sized>(rng: &mut R, seeds: &[AlgebraElement]) -> Result<AlgebraElement> {
    let w = dirichlet(rng, seeds.len());
    let terms: Vec<(f64, &AlgebraElement)> = w.iter().copied().zip(seeds).collect();
    AlgebraElement::combination(seeds[0].spec(), &terms)
}

/// Mixture of `1..=max_terms` seeds drawn from `draw`.
pub fn mixed_member<R: Rng + ?Sized>(
    rng: &mut R,
    max_terms: usize,
    mut draw: impl FnMut(&mut R) -> Result<AlgebraElement>,
) -> Result<AlgebraElement> {
    let k = rng.random_range(1..=max_terms.max(1));
    let seeds = (0..k).map(|_| draw(rng)).collect::<Result<Vec<_>>>()?;
    mixture(rng, &seeds)
}

/// Kraus operators of a Stinespring dilation with a Haar isometry
/// `K^d_in → K^d_out ⊗ K^rank`.
pub fn random_channel_kraus<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize, rank: usize, field: Field) -> Vec<CMat> {
    // The dilation needs d_out * rank >= d_in.
    let rank = rank.max(d_in.div_ceil(d_out)).max(1);
    let v = haar_isometry(rng, d_out * rank, d_in, field);
    (0..rank).map(|a| v.rows(a * d_out, d_out).into_owned()).collect()
}

/// Choi operator of a random channel of Kraus rank `rank`.
pub fn random_channel_choi<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize, rank: usize, field: Field) -> CMat {
    choi_of_kraus(&random_channel_kraus(rng, d_in, d_out, rank, field), d_in, d_out)
}

/// Choi operator of `ρ ↦ Σ_k p_k U_k ρ U_k†`.
pub fn random_unitary_mixture<R: Rng + ?Sized>(rng: &mut R, d: usize, terms: usize, field: Field) -> CMat {
    let p = dirichlet(rng, terms.max(1));
    p.iter().fold(CMat::zeros(d * d, d * d), |acc, &pk| {
        let u = haar_unitary(rng, d, field);
        acc + choi_of_kraus(&[u], d, d).scale(pk)
    })
}

/// Kraus operators of the thermal amplitude-damping channel with damping
/// `gamma` whose fixed point is `diag(n, 1 − n)`.
pub fn thermal_damping_kraus(n: f64, gamma: f64) -> Vec<CMat> {
    let r = |a: f64, b: f64, c: f64, d: f64| CMat::from_row_slice(2, 2, &[c64(a, 0.0), c64(b, 0.0), c64(c, 0.0), c64(d, 0.0)]);
    let (sn, sm) = (n.sqrt(), (1.0 - n).sqrt());
    let (sg, sh) = (gamma.sqrt(), (1.0 - gamma).sqrt());
    vec![
        r(1.0, 0.0, 0.0, sh).scale(sn),
        r(0.0, sg, 0.0, 0.0).scale(sn),
        r(sh, 0.0, 0.0, 1.0).scale(sm),
        r(0.0, 0.0, sg, 0.0).scale(sm),
    ]
}

fn random_diagonal_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize, field: Field) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| match field {
        Field::Complex => Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)),
        Field::Real => c64(if rng.random_bool(0.5) { 1.0 } else { -1.0 }, 0.0),
    }))
}

/// Seed channel fixing `diag(n, 1 − n)` on a qubit: a thermal damping
/// channel (random damping, occasionally the identity) dressed with diagonal
/// unitaries.
pub fn random_gibbs_qubit_choi<R: Rng + ?Sized>(rng: &mut R, n: f64, field: Field) -> CMat {
    let u = random_diagonal_unitary(rng, 2, field);
    let v = random_diagonal_unitary(rng, 2, field);
    let kraus: Vec<CMat> = if rng.random_bool(0.25) {
        vec![&u * &v]
    } else {
        let g = rng.random_range(0.05..1.0);
        thermal_damping_kraus(n, g).iter().map(|k| &u * k * &v).collect()
    };
    let kraus: Vec<CMat> = kraus.into_iter().filter(|k| k.norm() > 1e-14).collect();
    choi_of_kraus(&kraus, 2, 2)
}

/// Effects `P_x = V†(|x⟩⟨x| ⊗ I_k)V` of a Naimark dilation with a Haar
/// isometry `K^d → K^outcomes ⊗ K^k`.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, d: usize, outcomes: usize, k: usize, field: Field) -> Vec<CMat> {
    let rows = outcomes * k.max(1);
    let v = if rows >= d {
        haar_isometry(rng, rows, d, field)
    } else {
        // Too small for an isometry: fall back to a uniformly weighted split.
        return (0..outcomes).map(|_| linalg::identity(d).unscale(outcomes as f64)).collect();
    };
    (0..outcomes)
        .map(|x| {
            let b = v.rows(x * k.max(1), k.max(1));
            linalg::hermitian_part(&(b.adjoint() * b))
        })
        .collect()
}

/// `ρ^{1/2} Q_x ρ^{1/2}` for a random POVM `Q`: a member of the ensemble
/// spectrahedron of `ρ`.
pub fn random_ensemble<R: Rng + ?Sized>(rng: &mut R, rho: &CMat, outcomes: usize, k: usize, field: Field) -> Vec<CMat> {
    let s = sqrt_psd(rho, field);
    random_povm(rng, rho.nrows(), outcomes, k, field)
        .into_iter()
        .map(|q| linalg::hermitian_part(&(&s * q * &s)))
        .collect()
}

pub fn sqrt_psd(m: &CMat, field: Field) -> CMat {
    let (ls, v) = linalg::herm_eigen(m, field);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        ls.len(),
        ls.iter().map(|&l| c64(l.max(0.0).sqrt(), 0.0)),
    ));
    &v * d * v.adjoint()
}

/// Per-outcome Choi blocks of an instrument from a Stinespring isometry
/// `K^d_in → K^outcomes ⊗ K^k ⊗ K^d_out`.
pub fn random_instrument<R: Rng + ?Sized>(
    rng: &mut R,
    d_in: usize,
    d_out: usize,
    outcomes: usize,
    k: usize,
    field: Field,
) -> Vec<CMat> {
    let k = k.max(d_in.div_ceil(d_out * outcomes)).max(1);
    let kraus = random_channel_kraus(rng, d_in, d_out, outcomes * k, field);
    (0..outcomes)
        .map(|x| choi_of_kraus(&kraus[x * k..(x + 1) * k], d_in, d_out))
        .collect()
}

/// Gram matrix of `n` random unit vectors in `K^r`.
pub fn random_correlation<R: Rng + ?Sized>(rng: &mut R, n: usize, r: usize, field: Field) -> CMat {
    let cols: Vec<CMat> = (0..n).map(|_| unit_vector(rng, r, field)).collect();
    let mut xi = CMat::from_fn(n, n, |i, j| (cols[i].adjoint() * &cols[j])[(0, 0)]);
    for i in 0..n {
        xi[(i, i)] = c64(1.0, 0.0);
    }
    linalg::hermitian_part(&xi)
}

/// Two-step comb with a quantum memory of dimension `dm` and an environment
/// of dimension `de`, in the interleaved layout. Both are enlarged if needed
/// to make the dilations isometric.
pub fn random_comb2<R: Rng + ?Sized>(
    rng: &mut R,
    steps: [(usize, usize); 2],
    dm: usize,
    de: usize,
    field: Field,
) -> Result<CMat> {
    let [(i1, o1), (i2, o2)] = steps;
    let dm = dm.max(i1.div_ceil(o1));
    let de = de.max((i2 * dm).div_ceil(o2));
    let v1 = haar_isometry(rng, o1 * dm, i1, field);
    let v2 = haar_isometry(rng, o2 * de, i2 * dm, field);
    let kraus: Vec<CMat> = (0..de)
        .map(|e| {
            CMat::from_fn(o1 * o2, i1 * i2, |row, col| {
                let (a1, a2) = (row / o2, row % o2);
                let (b1, b2) = (col / i2, col % i2);
                (0..dm).fold(c64(0.0, 0.0), |acc, m| {
                    acc + v1[(a1 * dm + m, b1)] * v2[(a2 * de + e, b2 * dm + m)]
                })
            })
        })
        .collect();
    interleave_choi(&choi_of_kraus(&kraus, i1 * i2, o1 * o2), &steps)
}

/// Kraus operators `J_i / √2` of the spin-1 Landau–Streater channel: an
/// extreme bistochastic qutrit channel that is not a unitary mixture.
pub fn landau_streater() -> Vec<CMat> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c64(0.0, 0.0);
    let jx = CMat::from_row_slice(3, 3, &[z, c64(s, 0.0), z, c64(s, 0.0), z, c64(s, 0.0), z, c64(s, 0.0), z]);
    let jy = CMat::from_row_slice(3, 3, &[z, c64(0.0, -s), z, c64(0.0, s), z, c64(0.0, -s), z, c64(0.0, s), z]);
    let jz = CMat::from_row_slice(3, 3, &[c64(1.0, 0.0), z, z, z, z, z, z, z, c64(-1.0, 0.0)]);
    [jx, jy, jz].into_iter().map(|j| j.scale(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::channels::ChannelVariant;
    use crate::models::{build_channel_like, build_comb};
    use crate::Tolerances;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for field in [Field::Real, Field::Complex] {
            let u = haar_unitary(&mut rng, 4, field);
            assert!((u.adjoint() * &u - linalg::identity(4)).norm() < 1e-12);
            if field == Field::Real {
                assert!(linalg::is_real(&u, 0.0));
            }
        }
    }

    #[test]
    fn generators_produce_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tol = Tolerances::default();
        let ch = build_channel_like(2, 3, Field::Complex, &ChannelVariant::Channel).unwrap();
        let c = random_channel_choi(&mut rng, 2, 3, 2, Field::Complex);
        assert!(ch.membership(&AlgebraElement::from_matrix(Field::Complex, c).unwrap(), &tol).unwrap().member);

        let bi = build_channel_like(3, 3, Field::Real, &ChannelVariant::Bistochastic).unwrap();
        let c = random_unitary_mixture(&mut rng, 3, 3, Field::Real);
        assert!(bi.membership(&AlgebraElement::from_matrix(Field::Real, c).unwrap(), &tol).unwrap().member);

        let rho = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(0.3, 0.0), c64(0.7, 0.0)]));
        let gi = build_channel_like(
            2,
            2,
            Field::Complex,
            &ChannelVariant::GibbsPreserving { rho_in: rho.clone(), rho_out: rho },
        )
        .unwrap();
        for _ in 0..5 {
            let c = random_gibbs_qubit_choi(&mut rng, 0.3, Field::Complex);
            assert!(gi.membership(&AlgebraElement::from_matrix(Field::Complex, c).unwrap(), &tol).unwrap().member);
        }

        let ls = landau_streater();
        let c = choi_of_kraus(&ls, 3, 3);
        let bi3 = build_channel_like(3, 3, Field::Complex, &ChannelVariant::Bistochastic).unwrap();
        assert!(bi3.membership(&AlgebraElement::from_matrix(Field::Complex, c).unwrap(), &tol).unwrap().member);

        let comb = build_comb(&[(2, 2), (2, 2)], Field::Complex).unwrap();
        let c = random_comb2(&mut rng, [(2, 2), (2, 2)], 2, 2, Field::Complex).unwrap();
        assert!(comb.membership(&AlgebraElement::from_matrix(Field::Complex, c).unwrap(), &tol).unwrap().member);
    }

    #[test]
    fn povm_and_correlation_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_povm(&mut rng, 3, 4, 1, Field::Complex);
        let total = p.iter().fold(CMat::zeros(3, 3), |a, b| a + b);
        assert!((total - linalg::identity(3)).norm() < 1e-12);
        let xi = random_correlation(&mut rng, 4, 2, Field::Real);
        assert!(linalg::herm_eigenvalues(&xi, Field::Real)[0] > -1e-12);
        assert_eq!(xi[(2, 2)], c64(1.0, 0.0));
    }
}
