//! The bundled reproduction suite: ten seeded checks of the closed-form
//! instances and structural theorems implemented by this crate.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{AlgebraElement, AlgebraSpec, Field};
use crate::decompose::decompose_extreme;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat};
use crate::models::{self, random as gen, ChannelVariant, InstrumentVariant};
use crate::povm_measure::{self, GridPovm, GridProblem, SplitOutcome};
use crate::spectra::{Spectrahedron, Verdict};
use crate::Tolerances;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 2024;

/// `(id, key, title)` for every criterion.
pub const CRITERIA: [(u8, &str, &str); 10] = [
    (1, "pauli", "Pauli expectations pin I/2"),
    (2, "rank-bounds", "rank bounds on extreme points"),
    (3, "birkhoff", "qubit bistochastic channels are unitary mixtures"),
    (4, "li-tam", "rank-two extreme correlation matrices"),
    (5, "correlation-rank", "small correlation extremes have rank one"),
    (6, "equivalence", "closed-form tests agree with the engine"),
    (7, "rho-star", "rank-two extreme state with fixed marginals"),
    (8, "povm-support", "oversupported grid POVMs split"),
    (9, "outcome-count", "extreme POVMs have few nonzero effects"),
    (10, "determinism", "identical seeds give identical reports"),
];

/// Resolve `--only` selectors (keys or numbers); empty means all.
pub fn select(only: &[String]) -> Result<Vec<u8>> {
    if only.is_empty() {
        return Ok(CRITERIA.iter().map(|c| c.0).collect());
    }
    let mut ids = Vec::new();
    for sel in only.iter().flat_map(|s| s.split(',')).map(str::trim).filter(|s| !s.is_empty()) {
        let id = CRITERIA
            .iter()
            .find(|c| c.1 == sel || c.0.to_string() == sel)
            .map(|c| c.0)
            .ok_or_else(|| Error::Parse(format!("unknown criterion \"{sel}\"")))?;
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    ids.sort_unstable();
    Ok(ids)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub key: String,
    pub title: String,
    pub passed: bool,
    pub measured: String,
    pub expected: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReproduceReport {
    pub seed: u64,
    pub results: Vec<CriterionResult>,
}

impl ReproduceReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tool": "spectrex",
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "tolerances": Tolerances::default(),
            "results": self.results,
            "all_passed": self.all_passed(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("spectrex {} reproduce, seed {}\n", env!("CARGO_PKG_VERSION"), self.seed);
        for r in &self.results {
            let _ = writeln!(
                out,
                "{} {:>2} {:<18} measured: {} | expected: {}",
                if r.passed { "PASS" } else { "FAIL" },
                r.id,
                r.key,
                r.measured,
                r.expected
            );
        }
        let passed = self.results.iter().filter(|r| r.passed).count();
        let _ = writeln!(out, "{passed}/{} criteria passed", self.results.len());
        out
    }
}

fn rng_for(seed: u64, id: u8) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Outcome of one criterion body: pass flag plus measured/expected text.
struct Outcome {
    passed: bool,
    measured: String,
    expected: String,
}

fn outcome(passed: bool, measured: impl Into<String>, expected: impl Into<String>) -> Outcome {
    Outcome { passed, measured: measured.into(), expected: expected.into() }
}

/// Run one criterion other than the determinism check.
pub fn run_criterion(id: u8, seed: u64) -> CriterionResult {
    let (_, key, title) = CRITERIA[(id - 1) as usize];
    let mut rng = rng_for(seed, id);
    let tol = Tolerances::default();
    let res = match id {
        1 => pauli_uniqueness(&tol),
        2 => rank_bounds(&mut rng, &tol),
        3 => birkhoff(&mut rng, &tol),
        4 => li_tam(&tol),
        5 => correlation_rank(&mut rng, &tol),
        6 => equivalence(&mut rng, &tol),
        7 => rho_star_check(&tol),
        8 => povm_support(&mut rng, &tol),
        9 => outcome_count(&mut rng, &tol),
        _ => Err(Error::Parse(format!("criterion {id} cannot run on its own"))),
    };
    let o = res.unwrap_or_else(|e| outcome(false, format!("error: {e}"), "no error"));
    CriterionResult {
        id,
        key: key.to_string(),
        title: title.to_string(),
        passed: o.passed,
        measured: o.measured,
        expected: o.expected,
    }
}

/// Run the selected criteria. The determinism check re-runs the other
/// selected criteria (or criteria 1 and 4 when none are selected) and
/// compares the serialised results.
pub fn run_reproduce(seed: u64, only: &[u8]) -> ReproduceReport {
    let others: Vec<u8> = only.iter().copied().filter(|&id| id != 10).collect();
    let mut results: Vec<CriterionResult> = others.iter().map(|&id| run_criterion(id, seed)).collect();
    if only.contains(&10) {
        let probe = if others.is_empty() { vec![1, 4] } else { others.clone() };
        let first: Vec<CriterionResult> = if others.is_empty() {
            probe.iter().map(|&id| run_criterion(id, seed)).collect()
        } else {
            results.clone()
        };
        let second: Vec<CriterionResult> = probe.iter().map(|&id| run_criterion(id, seed)).collect();
        let a = serde_json::to_string(&first).expect("serialisable");
        let b = serde_json::to_string(&second).expect("serialisable");
        let same = a == b;
        results.push(CriterionResult {
            id: 10,
            key: CRITERIA[9].1.to_string(),
            title: CRITERIA[9].2.to_string(),
            passed: same,
            measured: format!(
                "{} criteria re-run, reports {}",
                probe.len(),
                if same { "byte-identical" } else { "differ" }
            ),
            expected: "byte-identical".into(),
        });
    }
    ReproduceReport { seed, results }
}

fn e(x: f64) -> String {
    format!("{x:.2e}")
}

fn pauli_uniqueness(tol: &Tolerances) -> Result<Outcome> {
    let (x, y, z) = (models::pauli_x(), models::pauli_y(), models::pauli_z());
    let c = models::build_state_expectations(Field::Complex, 2, &[x.clone(), y, z.clone()], &[0.0; 3])?;
    let r = models::build_state_expectations(Field::Real, 2, &[x, z], &[0.0; 2])?;
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, s) in [("C", &c), ("R", &r)] {
        let half = AlgebraElement::identity(s.spec()).scale(0.5);
        let rep = s.is_extreme(&half, tol)?;
        ok &= rep.verdict == Verdict::Extreme && rep.kernel_dim == 0;
        parts.push(format!("{name}: {:?} kernel_dim {}", rep.verdict, rep.kernel_dim));
    }
    Ok(outcome(ok, parts.join(", "), "Extreme with kernel_dim 0 over C and R"))
}

/// `Σ_j Σ_y d_y²` over constraint codomains (or `Σ d(d+1)` over ℝ).
fn codomain_budget(s: &Spectrahedron) -> usize {
    let f = |d: usize| match s.spec().field {
        Field::Complex => d * d,
        Field::Real => d * (d + 1),
    };
    s.constraints()
        .iter()
        .flat_map(|c| c.map.codomain().blocks.iter().map(|b| b.dim))
        .map(f)
        .sum()
}

fn rank_bounds(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    const TARGET: usize = 200;
    let mut checked = 0;
    let mut violations = 0;
    let mut by_model: BTreeMap<&str, usize> = BTreeMap::new();
    let chan_c = models::build_channel_like(2, 2, Field::Complex, &ChannelVariant::Channel)?;
    let chan_r = models::build_channel_like(2, 2, Field::Real, &ChannelVariant::Channel)?;
    let chan_23 = models::build_channel_like(2, 3, Field::Complex, &ChannelVariant::Channel)?;
    let id2 = linalg::identity(2);
    let povm_c = models::build_povm_spectrahedron(Field::Complex, 2, 5, &id2)?;
    let povm_r = models::build_povm_spectrahedron(Field::Real, 2, 4, &id2)?;
    let mut round = 0usize;
    while checked < TARGET {
        let kind = round % 7;
        round += 1;
        if round > 40 * TARGET {
            return Err(Error::Parse("too few extreme points produced".into()));
        }
        let (name, s, a, marg): (&str, Spectrahedron, AlgebraElement, Option<(usize, usize)>) = match kind {
            0..=2 => {
                let (s, field, d_out) = match kind {
                    0 => (&chan_c, Field::Complex, 2),
                    1 => (&chan_r, Field::Real, 2),
                    _ => (&chan_23, Field::Complex, 3),
                };
                let a = gen::mixed_member(rng, 4, |r| {
                    let rank = r.random_range(1..=4);
                    AlgebraElement::from_matrix(field, gen::random_channel_choi(r, 2, d_out, rank, field))
                })?;
                ("channel", s.clone(), a, None)
            }
            3 | 4 => {
                let (s, field, x) = if kind == 3 { (&povm_c, Field::Complex, 5) } else { (&povm_r, Field::Real, 4) };
                let a = gen::mixed_member(rng, 3, |r| {
                    let k = r.random_range(1..=2);
                    AlgebraElement::new(s.spec(), gen::random_povm(r, 2, x, k, field))
                })?;
                ("povm", s.clone(), a, None)
            }
            _ => {
                let (field, d1, d2) = if kind == 5 { (Field::Complex, 2, 3) } else { (Field::Real, 2, 2) };
                let rank = rng.random_range(2..=d1 * d2);
                let rho = gen::random_state(rng, d1 * d2, rank, field);
                let m1 = linalg::partial_trace(&rho, &[d1, d2], &[0]);
                let m2 = linalg::partial_trace(&rho, &[d1, d2], &[1]);
                let s = models::build_marginal_spectrahedron(field, &[d1, d2], &[vec![0], vec![1]], &[m1, m2])?;
                ("marginals", s, AlgebraElement::from_matrix(field, rho)?, Some((d1, d2)))
            }
        };
        let dec = decompose_extreme(&s, &a, 4 * s.spec().herm_dim() + 4, tol)?;
        let budget = codomain_budget(&s);
        for comp in dec.components.iter().filter(|c| c.report.verdict == Verdict::Extreme) {
            let field = s.spec().field;
            let lhs: usize = comp
                .report
                .ranks
                .iter()
                .map(|&r| match field {
                    Field::Complex => r * r,
                    Field::Real => r * (r + 1),
                })
                .sum();
            let mut ok = lhs <= budget;
            if let Some((d1, d2)) = marg {
                let r = comp.report.ranks[0];
                ok &= match field {
                    Field::Complex => r * r < d1 * d1 + d2 * d2,
                    Field::Real => r * (r + 1) / 2 < d1 * (d1 + 1) / 2 + d2 * (d2 + 1) / 2,
                };
            }
            if !ok {
                violations += 1;
            }
            checked += 1;
            *by_model.entry(name).or_default() += 1;
        }
    }
    let models: Vec<String> = by_model.iter().map(|(k, v)| format!("{k} {v}")).collect();
    Ok(outcome(
        violations == 0 && checked >= TARGET,
        format!("{violations} violations in {checked} extreme points ({})", models.join(", ")),
        format!("0 violations in >= {TARGET} extreme points"),
    ))
}

/// Kraus operator of a rank-one Choi operator.
fn single_kraus(choi: &CMat, d_in: usize, d_out: usize, field: Field) -> CMat {
    let (ls, v) = linalg::herm_eigen(choi, field);
    let last = ls.len() - 1;
    let col: Vec<_> = v.column(last).iter().map(|z| z * ls[last].max(0.0).sqrt()).collect();
    models::unvec_kraus(&col, d_in, d_out)
}

fn birkhoff(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let s = models::build_channel_like(2, 2, Field::Complex, &ChannelVariant::Bistochastic)?;
    let mut worst_err: f64 = 0.0;
    let mut worst_unitarity: f64 = 0.0;
    let mut max_count = 0;
    let mut bad_rank = 0;
    for _ in 0..100 {
        let terms = rng.random_range(1..=6);
        let c = gen::random_unitary_mixture(rng, 2, terms, Field::Complex);
        let a = AlgebraElement::from_matrix(Field::Complex, c)?;
        let dec = decompose_extreme(&s, &a, 64, tol)?;
        worst_err = worst_err.max(dec.reconstruction_error);
        max_count = max_count.max(dec.components.len());
        for comp in &dec.components {
            if comp.report.ranks != [1] {
                bad_rank += 1;
                continue;
            }
            let k = single_kraus(comp.element.block(0), 2, 2, Field::Complex);
            worst_unitarity = worst_unitarity.max((k.adjoint() * &k - linalg::identity(2)).norm());
        }
    }
    let ok = worst_err <= 1e-8 && bad_rank == 0 && worst_unitarity <= 1e-7 && max_count <= 17;
    Ok(outcome(
        ok,
        format!(
            "100 channels: max error {}, non-rank-1 components {bad_rank}, max |K†K-I| {}, max components {max_count}",
            e(worst_err),
            e(worst_unitarity)
        ),
        "error <= 1e-8, all rank 1, |K†K-I| <= 1e-7, components <= 17",
    ))
}

fn li_tam(tol: &Tolerances) -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (xi, field) in [(models::li_tam_real(), Field::Real), (models::li_tam_complex(), Field::Complex)] {
        let n = xi.nrows();
        let s = models::build_correlation(n, field)?;
        let a = AlgebraElement::from_matrix(field, xi.clone())?;
        let closed = models::corr_extreme_test(&xi, field, tol)?;
        let rep = s.is_extreme(&a, tol)?;
        let r = rep.ranks[0];
        let bound_ok = match field {
            Field::Complex => r * r <= n,
            Field::Real => r * (r + 1) / 2 <= n,
        };
        let mid = (&xi + linalg::identity(n)).scale(0.5);
        let mid_closed = models::corr_extreme_test(&mid, field, tol)?;
        let mid_engine = s.is_extreme(&AlgebraElement::from_matrix(field, mid)?, tol)?.verdict;
        ok &= closed == Verdict::Extreme
            && rep.verdict == Verdict::Extreme
            && r == 2
            && bound_ok
            && mid_closed == Verdict::NotExtreme
            && mid_engine == Verdict::NotExtreme;
        parts.push(format!(
            "{field} {n}x{n}: closed {closed:?}, engine {:?}, rank {r}, midpoint {mid_closed:?}/{mid_engine:?}",
            rep.verdict
        ));
    }
    Ok(outcome(ok, parts.join("; "), "Extreme/Extreme with rank 2 within the bound; midpoints NotExtreme"))
}

fn correlation_rank(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut bad = 0;
    let mut comps = 0;
    for (field, n) in [(Field::Complex, 3), (Field::Real, 2)] {
        let s = models::build_correlation(n, field)?;
        for _ in 0..50 {
            let xi = gen::random_correlation(rng, n, n, field);
            let dec = decompose_extreme(&s, &AlgebraElement::from_matrix(field, xi)?, 64, tol)?;
            for c in &dec.components {
                comps += 1;
                if c.report.verdict != Verdict::Extreme || c.report.ranks != [1] {
                    bad += 1;
                }
            }
        }
    }
    Ok(outcome(
        bad == 0,
        format!("{bad} components of rank > 1 among {comps} (50 complex n=3, 50 real n=2)"),
        "all extreme components rank 1",
    ))
}

#[derive(Default)]
struct Tally {
    total: usize,
    disagreements: usize,
    inconclusive: usize,
    extreme: usize,
}

impl Tally {
    fn record(&mut self, closed: Verdict, engine: Verdict) {
        self.total += 1;
        if closed == Verdict::Inconclusive || engine == Verdict::Inconclusive {
            self.inconclusive += 1;
        } else if closed != engine {
            self.disagreements += 1;
        } else if engine == Verdict::Extreme {
            self.extreme += 1;
        }
    }
}

fn field_for(i: usize) -> Field {
    if i.is_multiple_of(2) {
        Field::Complex
    } else {
        Field::Real
    }
}

/// Spectrahedra keyed by a description, built on first use.
struct Cache(BTreeMap<String, Spectrahedron>);

impl Cache {
    fn get(&mut self, key: String, build: impl FnOnce() -> Result<Spectrahedron>) -> Result<&Spectrahedron> {
        if !self.0.contains_key(&key) {
            let s = build()?;
            self.0.insert(key.clone(), s);
        }
        Ok(&self.0[&key])
    }
}

fn equivalence(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    const N: usize = 100;
    let mut tallies: BTreeMap<&str, Tally> = BTreeMap::new();
    let mut cache = Cache(BTreeMap::new());

    for i in 0..N {
        let field = field_for(i);
        let d_in = rng.random_range(1..=3);
        let d_out = rng.random_range(2..=3);
        let s = cache.get(format!("channel {field} {d_in} {d_out}"), || {
            models::build_channel_like(d_in, d_out, field, &ChannelVariant::Channel)
        })?;
        let a = gen::mixed_member(rng, 2, |r| {
            let rank = r.random_range(1..=d_in * d_out);
            AlgebraElement::from_matrix(field, gen::random_channel_choi(r, d_in, d_out, rank, field))
        })?;
        let mc = models::MappingConstraints::trace_preserving(d_in, d_out);
        let point = models::ChoiPoint::from_choi(d_in, d_out, field, a.block(0).clone(), tol)?;
        let closed = models::mapping_extreme_test(&point, &mc, tol)?;
        let engine = s.is_extreme(&a, tol)?.verdict;
        tallies.entry("channel").or_default().record(closed, engine);
    }

    for i in 0..N {
        let field = field_for(i);
        let d = rng.random_range(2..=3);
        let s = cache.get(format!("bistochastic {field} {d}"), || {
            models::build_channel_like(d, d, field, &ChannelVariant::Bistochastic)
        })?;
        let a = if d == 3 && field == Field::Complex && rng.random_bool(0.15) {
            AlgebraElement::from_matrix(field, models::choi_of_kraus(&gen::landau_streater(), 3, 3))?
        } else {
            let terms = rng.random_range(1..=3);
            AlgebraElement::from_matrix(field, gen::random_unitary_mixture(rng, d, terms, field))?
        };
        let mc = ChannelVariant::Bistochastic.constraints(d, d)?;
        let point = models::ChoiPoint::from_choi(d, d, field, a.block(0).clone(), tol)?;
        let closed = models::mapping_extreme_test(&point, &mc, tol)?;
        let engine = s.is_extreme(&a, tol)?.verdict;
        tallies.entry("bistochastic").or_default().record(closed, engine);
    }

    for i in 0..N {
        let field = field_for(i);
        let n = [0.2, 0.35][i / 2 % 2];
        let rho = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(n, 0.0), c64(1.0 - n, 0.0)]));
        let variant = ChannelVariant::GibbsPreserving { rho_in: rho.clone(), rho_out: rho.clone() };
        let s = cache.get(format!("gibbs {field} {n}"), || models::build_channel_like(2, 2, field, &variant))?;
        let a = gen::mixed_member(rng, 2, |r| {
            AlgebraElement::from_matrix(field, gen::random_gibbs_qubit_choi(r, n, field))
        })?;
        let mc = variant.constraints(2, 2)?;
        let point = models::ChoiPoint::from_choi(2, 2, field, a.block(0).clone(), tol)?;
        let closed = models::mapping_extreme_test(&point, &mc, tol)?;
        let engine = s.is_extreme(&a, tol)?.verdict;
        tallies.entry("gibbs").or_default().record(closed, engine);
    }

    for i in 0..N {
        let field = field_for(i);
        let n = rng.random_range(2..=4);
        let s = cache.get(format!("correlation {field} {n}"), || models::build_correlation(n, field))?;
        let xi = if i % 10 == 0 && n >= 3 {
            if field == Field::Real && n == 3 {
                models::li_tam_real()
            } else if field == Field::Complex && n == 4 {
                models::li_tam_complex()
            } else {
                gen::random_correlation(rng, n, 1, field)
            }
        } else {
            let a = gen::mixed_member(rng, 2, |r| {
                let rank = r.random_range(1..=n);
                AlgebraElement::from_matrix(field, gen::random_correlation(r, n, rank, field))
            })?;
            a.block(0).clone()
        };
        let closed = models::corr_extreme_test(&xi, field, tol)?;
        let engine = s.is_extreme(&AlgebraElement::from_matrix(field, xi)?, tol)?.verdict;
        tallies.entry("correlation").or_default().record(closed, engine);
    }

    for i in 0..N {
        let field = field_for(i);
        let d = rng.random_range(2..=3);
        let x = rng.random_range(2..=5);
        let s = cache.get(format!("povm {field} {d} {x}"), || {
            models::build_povm_spectrahedron(field, d, x, &linalg::identity(d))
        })?;
        let spec = s.spec().clone();
        let a = gen::mixed_member(rng, 2, |r| {
            let k = r.random_range(1..=2);
            AlgebraElement::new(&spec, gen::random_povm(r, d, x, k, field))
        })?;
        let closed = models::povm_extreme_test(&a, tol)?;
        let engine = s.is_extreme(&a, tol)?.verdict;
        tallies.entry("povm").or_default().record(closed, engine);
    }

    for i in 0..N {
        let field = field_for(i);
        let (d_in, d_out) = [(2, 2), (1, 2), (2, 3), (3, 2)][rng.random_range(0..4)];
        let x = rng.random_range(1..=3);
        let variant = if d_in == d_out && i % 3 == 1 { InstrumentVariant::Bistochastic } else { InstrumentVariant::Plain };
        let s = cache.get(format!("instrument {field} {d_in} {d_out} {x} {variant:?}"), || {
            models::build_instrument_spectrahedron(d_in, d_out, x, field, &variant)
        })?;
        let spec = s.spec().clone();
        let a = if variant == InstrumentVariant::Bistochastic {
            // Split a unitary mixture across outcomes.
            let terms = rng.random_range(1..=3);
            let p = gen::dirichlet(rng, terms);
            let mut blocks = vec![CMat::zeros(d_in * d_out, d_in * d_out); x];
            for pk in p {
                let u = gen::haar_unitary(rng, d_in, field);
                let slot = rng.random_range(0..x);
                blocks[slot] += models::choi_of_kraus(&[u], d_in, d_out).scale(pk);
            }
            AlgebraElement::new(&spec, blocks)?
        } else {
            gen::mixed_member(rng, 2, |r| {
                let k = r.random_range(1..=2);
                AlgebraElement::new(&spec, gen::random_instrument(r, d_in, d_out, x, k, field))
            })?
        };
        let closed = models::instrument_extreme_test(&a, d_in, d_out, &variant, tol)?;
        let engine = s.is_extreme(&a, tol)?.verdict;
        tallies.entry("instrument").or_default().record(closed, engine);
    }

    for i in 0..N {
        let field = field_for(i);
        let steps = [[(2, 2), (2, 2)], [(2, 2), (2, 1)], [(1, 2), (2, 2)]][i / 2 % 3];
        let s = cache.get(format!("comb {field} {steps:?}"), || models::build_comb(&steps, field))?;
        let a = gen::mixed_member(rng, 2, |r| {
            let dm = r.random_range(1..=2);
            let de = r.random_range(1..=2);
            AlgebraElement::from_matrix(field, gen::random_comb2(r, steps, dm, de, field)?)
        })?;
        let closed = models::comb_extreme_test(a.block(0), &steps, field, tol)?;
        let engine = s.is_extreme(&a, tol)?.verdict;
        tallies.entry("comb").or_default().record(closed, engine);
    }

    let mut ok = true;
    let mut parts = Vec::new();
    for (name, t) in &tallies {
        ok &= t.total >= N && t.disagreements == 0 && t.inconclusive * 100 <= t.total;
        parts.push(format!(
            "{name} {}/{} agree ({} extreme, {} inconclusive)",
            t.total - t.disagreements - t.inconclusive,
            t.total,
            t.extreme,
            t.inconclusive
        ));
    }
    Ok(outcome(ok, parts.join("; "), "0 disagreements, inconclusive <= 1% per model"))
}

/// `ρ* = (ψ+ ⊗ ψ+ + ψ− ⊗ ψ−)/2` with `ψ± = √p|0⟩ ± √(1−p)|1⟩`.
pub fn rho_star_state(p: f64) -> CMat {
    let proj = |s: f64| {
        let v = CMat::from_column_slice(2, 1, &[c64(p.sqrt(), 0.0), c64(s * (1.0 - p).sqrt(), 0.0)]);
        &v * v.adjoint()
    };
    let (a, b) = (proj(1.0), proj(-1.0));
    (linalg::kron(&a, &a) + linalg::kron(&b, &b)).scale(0.5)
}

fn rho_star_check(tol: &Tolerances) -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [0.1, 0.25, 0.4] {
        let marg = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(p, 0.0), c64(1.0 - p, 0.0)]));
        let s = models::build_marginal_spectrahedron(
            Field::Complex,
            &[2, 2],
            &[vec![0], vec![1]],
            &[marg.clone(), marg.clone()],
        )?;
        let star = rho_star_state(p);
        // diag(p, 0, 0, 1-p) lies on a face whose extreme points are pure.
        let mut correlated = CMat::zeros(4, 4);
        correlated[(0, 0)] = c64(p, 0.0);
        correlated[(3, 3)] = c64(1.0 - p, 0.0);

        let mut rank_two = 0;
        let mut pure = 0;
        let mut worst: f64 = 0.0;
        let mut worst_err: f64 = 0.0;
        for (k, m) in [star, correlated].into_iter().enumerate() {
            let dec = decompose_extreme(&s, &AlgebraElement::from_matrix(Field::Complex, m)?, 32, tol)?;
            worst_err = worst_err.max(dec.reconstruction_error);
            if k == 0 {
                rank_two = dec
                    .components
                    .iter()
                    .filter(|c| c.report.verdict == Verdict::Extreme && c.report.ranks == [2])
                    .count();
            }
            for c in dec.components.iter().filter(|c| c.report.ranks == [1]) {
                pure += 1;
                let (ls, v) = linalg::herm_eigen(c.element.block(0), Field::Complex);
                let psi = v.column(ls.len() - 1);
                worst = worst.max((psi[0].norm_sqr() - p).abs());
                worst = worst.max(psi[1].norm_sqr()).max(psi[2].norm_sqr());
            }
        }
        ok &= rank_two >= 1 && pure > 0 && worst <= 1e-7 && worst_err <= 1e-8;
        parts.push(format!(
            "p={p}: rho* gives {rank_two} rank-2 extreme; {pure} rank-1 components, Schmidt deviation {}",
            e(worst)
        ));
    }
    Ok(outcome(
        ok,
        parts.join("; "),
        ">= 1 rank-2 extreme component of rho*; rank-1 components have |c0|^2 = p within 1e-7",
    ))
}

fn povm_support(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let spec = AlgebraSpec::full(Field::Complex, 2);
    let normalizer = povm_measure::singleton(&AlgebraElement::identity(&spec))?;
    let mut worst_res: f64 = 0.0;
    let mut worst_mid: f64 = 0.0;
    let mut worst_recon: f64 = 0.0;
    let mut failures = Vec::new();
    let mut max_leaf = 0;
    let mut max_iter_ratio: f64 = 0.0;
    for k in 0..20usize {
        let s_pts = 5 + (27 * k + 9) / 19;
        let rank = 1 + k % 2;
        let effects = gen::random_povm(rng, 2, s_pts, rank, Field::Complex)
            .into_iter()
            .enumerate()
            .map(|(i, m)| Ok((format!("w{i}"), AlgebraElement::new(&spec, vec![m])?)))
            .collect::<Result<Vec<_>>>()?;
        let povm = GridPovm::from_effects(&spec, effects, tol)?;
        let pr = GridProblem { povm, normalizer: normalizer.clone() };
        let SplitOutcome::Split(w) = povm_measure::split_if_oversupported(&pr, tol)? else {
            failures.push(format!("grid {k} not split"));
            continue;
        };
        worst_res = worst_res.max(w.orthogonality_residual);
        worst_mid = worst_mid.max(w.midpoint_error(&pr.povm));
        let positive = [&w.plus, &w.minus].iter().all(|h| h.points().iter().all(|q| q.weight >= 0.0));
        let members = [&w.plus, &w.minus]
            .iter()
            .map(|h| normalizer.membership(&h.total(), tol).map(|m| m.member))
            .collect::<Result<Vec<_>>>()?;
        if !positive || members.contains(&false) {
            failures.push(format!("grid {k} halves invalid"));
        }
        let red = povm_measure::reduce_support(&pr, tol)?;
        worst_recon = worst_recon.max(red.reconstruction_error(&pr.povm));
        let leaf = red.leaves.iter().map(|(_, l)| l.support(tol).len()).max().unwrap_or(0);
        max_leaf = max_leaf.max(leaf);
        max_iter_ratio = max_iter_ratio.max(red.iterations as f64 / (4 * s_pts) as f64);
    }
    let ok = failures.is_empty()
        && worst_res <= 1e-9
        && worst_mid <= 1e-10
        && max_leaf <= 4
        && worst_recon <= 1e-9
        && max_iter_ratio <= 1.0;
    Ok(outcome(
        ok,
        format!(
            "20 grids (5-32 points): residual {}, midpoint {}, max leaf support {max_leaf}, reduction error {}{}",
            e(worst_res),
            e(worst_mid),
            e(worst_recon),
            if failures.is_empty() { String::new() } else { format!(", failures: {}", failures.join(", ")) }
        ),
        "residual <= 1e-9, midpoint <= 1e-10, leaves <= 4 points",
    ))
}

fn outcome_count(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut ok = true;
    for (field, x, bound) in [(Field::Complex, 6, 4), (Field::Real, 5, 3)] {
        let s = models::build_povm_spectrahedron(field, 2, x, &linalg::identity(2))?;
        let mut worst = 0;
        let mut extremes = 0;
        for _ in 0..20 {
            let k = rng.random_range(1..=2);
            let a = AlgebraElement::new(s.spec(), gen::random_povm(rng, 2, x, k, field))?;
            let dec = decompose_extreme(&s, &a, 4 * s.spec().herm_dim(), tol)?;
            for c in dec.components.iter().filter(|c| c.report.verdict == Verdict::Extreme) {
                extremes += 1;
                worst = worst.max(models::nonzero_outcomes(&c.element, tol));
            }
        }
        ok &= worst <= bound && extremes > 0;
        parts.push(format!("{field}^2: max {worst} nonzero effects over {extremes} extreme POVMs"));
    }
    Ok(outcome(ok, parts.join("; "), "<= 4 (C^2), <= 3 (R^2)"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection() {
        assert_eq!(select(&[]).unwrap().len(), 10);
        assert_eq!(select(&["birkhoff".into(), "1".into()]).unwrap(), vec![1, 3]);
        assert!(select(&["nope".into()]).is_err());
    }

    #[test]
    fn cheap_criteria_pass() {
        let r = run_reproduce(1, &[1, 4, 10]);
        assert!(r.all_passed(), "{}", r.to_text());
    }

    #[test]
    fn rho_star_has_the_stated_marginals() {
        let p = 0.25;
        let r = rho_star_state(p);
        let m = linalg::partial_trace(&r, &[2, 2], &[0]);
        assert!((m[(0, 0)].re - p).abs() < 1e-12 && m[(0, 1)].norm() < 1e-12);
        assert!((r[(1, 2)].re - p * (1.0 - p)).abs() < 1e-12);
    }
}
