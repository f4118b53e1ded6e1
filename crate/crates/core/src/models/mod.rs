//! Builders for the spectrahedra of quantum information, closed-form
//! extremality criteria, and JSON model descriptors.

pub mod channels;
pub mod comb;
pub mod correlation;
pub mod povm;
pub mod random;
pub mod states;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{AlgebraElement, AlgebraSpec, Field};
use crate::error::{Error, Result};
use crate::json::{mat, mat_vec, opt_mat};
use crate::linalg::{c64, CMat};
use crate::linmap::ConstraintMap;
use crate::spectra::{Constraint, Spectrahedron, Verdict};
use crate::Tolerances;

pub use channels::{
    build_channel_like, choi_of_kraus, mapping_extreme_test, unvec_kraus, vec_kraus, ChannelVariant, ChoiPoint,
    MappingConstraints,
};
pub use comb::{build_comb, comb_extreme_test, comb_span_family, interleave_choi};
pub use correlation::{build_correlation, corr_extreme_test, hadamard, li_tam_complex, li_tam_real};
pub use povm::{
    build_instrument_spectrahedron, build_povm_spectrahedron, instrument_extreme_test, nonzero_outcomes,
    povm_extreme_test, InstrumentVariant,
};
pub use states::{build_marginal_spectrahedron, build_state_expectations, inclusion_exclusion_bound};

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)])
}

fn complex() -> Field {
    Field::Complex
}

/// A constraint `C(input) = output` (forward) or `C†(output) = input`
/// (adjoint).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapPair {
    #[serde(with = "mat")]
    pub input: CMat,
    #[serde(with = "mat")]
    pub output: CMat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentKind {
    Plain,
    Bistochastic,
    Gibbs,
    PovmMapping,
}

/// JSON description of a spectrahedron, tagged by `"model"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelDescriptor {
    States {
        #[serde(default = "complex")]
        field: Field,
        dim: usize,
        #[serde(with = "mat_vec")]
        observables: Vec<CMat>,
        values: Vec<f64>,
    },
    Marginals {
        #[serde(default = "complex")]
        field: Field,
        factors: Vec<usize>,
        subsets: Vec<Vec<usize>>,
        #[serde(with = "mat_vec")]
        marginals: Vec<CMat>,
    },
    Channel {
        #[serde(default = "complex")]
        field: Field,
        d_in: usize,
        d_out: usize,
    },
    Bistochastic {
        #[serde(default = "complex")]
        field: Field,
        d: usize,
    },
    Gibbs {
        #[serde(default = "complex")]
        field: Field,
        #[serde(with = "mat")]
        rho_in: CMat,
        #[serde(with = "mat")]
        rho_out: CMat,
    },
    Mapping {
        #[serde(default = "complex")]
        field: Field,
        d_in: usize,
        d_out: usize,
        #[serde(default)]
        forward: Vec<MapPair>,
        #[serde(default)]
        adjoint: Vec<MapPair>,
    },
    Correlation {
        #[serde(default = "complex")]
        field: Field,
        n: usize,
    },
    Povm {
        #[serde(default = "complex")]
        field: Field,
        d: usize,
        outcomes: usize,
        #[serde(default, with = "opt_mat", skip_serializing_if = "Option::is_none")]
        normalizer: Option<CMat>,
    },
    Ensemble {
        #[serde(default = "complex")]
        field: Field,
        #[serde(with = "mat")]
        rho: CMat,
        outcomes: usize,
    },
    Instrument {
        #[serde(default = "complex")]
        field: Field,
        d_in: usize,
        d_out: usize,
        outcomes: usize,
        variant: InstrumentKind,
        #[serde(default, with = "opt_mat", skip_serializing_if = "Option::is_none")]
        rho_in: Option<CMat>,
        #[serde(default, with = "opt_mat", skip_serializing_if = "Option::is_none")]
        rho_out: Option<CMat>,
        #[serde(default, with = "mat_vec", skip_serializing_if = "Vec::is_empty")]
        input: Vec<CMat>,
        #[serde(default, with = "mat_vec", skip_serializing_if = "Vec::is_empty")]
        output: Vec<CMat>,
    },
    Comb {
        #[serde(default = "complex")]
        field: Field,
        steps: Vec<(usize, usize)>,
    },
    /// Any spectrahedron: map descriptors plus targets.
    Raw { spec: AlgebraSpec, constraints: Vec<RawConstraint> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawConstraint {
    pub map: Value,
    pub target: Value,
}

impl ModelDescriptor {
    pub fn from_json(v: &Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("descriptors serialise")
    }

    pub fn field(&self) -> Field {
        match self {
            ModelDescriptor::States { field, .. }
            | ModelDescriptor::Marginals { field, .. }
            | ModelDescriptor::Channel { field, .. }
            | ModelDescriptor::Bistochastic { field, .. }
            | ModelDescriptor::Gibbs { field, .. }
            | ModelDescriptor::Mapping { field, .. }
            | ModelDescriptor::Correlation { field, .. }
            | ModelDescriptor::Povm { field, .. }
            | ModelDescriptor::Ensemble { field, .. }
            | ModelDescriptor::Instrument { field, .. }
            | ModelDescriptor::Comb { field, .. } => *field,
            ModelDescriptor::Raw { spec, .. } => spec.field,
        }
    }

    fn mapping_constraints(&self) -> Result<Option<MappingConstraints>> {
        Ok(match self {
            ModelDescriptor::Channel { d_in, d_out, .. } => Some(ChannelVariant::Channel.constraints(*d_in, *d_out)?),
            ModelDescriptor::Bistochastic { d, .. } => Some(ChannelVariant::Bistochastic.constraints(*d, *d)?),
            ModelDescriptor::Gibbs { rho_in, rho_out, .. } => Some(
                ChannelVariant::GibbsPreserving { rho_in: rho_in.clone(), rho_out: rho_out.clone() }
                    .constraints(rho_in.nrows(), rho_out.nrows())?,
            ),
            ModelDescriptor::Mapping { d_in, d_out, forward, adjoint, .. } => Some(MappingConstraints::new(
                *d_in,
                *d_out,
                forward.iter().map(|p| (p.input.clone(), p.output.clone())).collect(),
                adjoint.iter().map(|p| (p.output.clone(), p.input.clone())).collect(),
            )?),
            _ => None,
        })
    }

    fn instrument_variant(&self) -> Result<Option<InstrumentVariant>> {
        let ModelDescriptor::Instrument { variant, rho_in, rho_out, input, output, .. } = self else {
            return Ok(None);
        };
        let need = |m: &Option<CMat>, name: &str| {
            m.clone()
                .ok_or_else(|| Error::Parse(format!("gibbs instruments need \"{name}\"")))
        };
        Ok(Some(match variant {
            InstrumentKind::Plain => InstrumentVariant::Plain,
            InstrumentKind::Bistochastic => InstrumentVariant::Bistochastic,
            InstrumentKind::Gibbs => InstrumentVariant::Gibbs {
                rho_in: need(rho_in, "rho_in")?,
                rho_out: need(rho_out, "rho_out")?,
            },
            InstrumentKind::PovmMapping => {
                InstrumentVariant::PovmMapping { input: input.clone(), output: output.clone() }
            }
        }))
    }

    pub fn build(&self) -> Result<Spectrahedron> {
        match self {
            ModelDescriptor::States { field, dim, observables, values } => {
                build_state_expectations(*field, *dim, observables, values)
            }
            ModelDescriptor::Marginals { field, factors, subsets, marginals } => {
                build_marginal_spectrahedron(*field, factors, subsets, marginals)
            }
            ModelDescriptor::Channel { field, d_in, d_out } => {
                build_channel_like(*d_in, *d_out, *field, &ChannelVariant::Channel)
            }
            ModelDescriptor::Bistochastic { field, d } => build_channel_like(*d, *d, *field, &ChannelVariant::Bistochastic),
            ModelDescriptor::Gibbs { field, rho_in, rho_out } => build_channel_like(
                rho_in.nrows(),
                rho_out.nrows(),
                *field,
                &ChannelVariant::GibbsPreserving { rho_in: rho_in.clone(), rho_out: rho_out.clone() },
            ),
            ModelDescriptor::Mapping { field, d_in, d_out, .. } => {
                let mc = self.mapping_constraints()?.expect("mapping descriptor");
                build_channel_like(*d_in, *d_out, *field, &ChannelVariant::Mapping(mc))
            }
            ModelDescriptor::Correlation { field, n } => build_correlation(*n, *field),
            ModelDescriptor::Povm { field, d, outcomes, normalizer } => {
                let g = normalizer.clone().unwrap_or_else(|| crate::linalg::identity(*d));
                build_povm_spectrahedron(*field, *d, *outcomes, &g)
            }
            ModelDescriptor::Ensemble { field, rho, outcomes } => {
                build_povm_spectrahedron(*field, rho.nrows(), *outcomes, rho)
            }
            ModelDescriptor::Instrument { field, d_in, d_out, outcomes, .. } => {
                let v = self.instrument_variant()?.expect("instrument descriptor");
                build_instrument_spectrahedron(*d_in, *d_out, *outcomes, *field, &v)
            }
            ModelDescriptor::Comb { field, steps } => build_comb(steps, *field),
            ModelDescriptor::Raw { spec, constraints } => {
                let cs = constraints
                    .iter()
                    .map(|c| {
                        let map = ConstraintMap::from_json(spec, &c.map)?;
                        let target = AlgebraElement::from_json(map.codomain(), &c.target)?;
                        Constraint::new(map, target)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Spectrahedron::new(spec, cs)
            }
        }
    }

    /// The model's closed-form extremality test, when it has one.
    pub fn closed_form_test(&self, a: &AlgebraElement, tol: &Tolerances) -> Option<Result<Verdict>> {
        let single = |a: &AlgebraElement| -> Result<CMat> {
            if a.spec().num_blocks() != 1 {
                return Err(Error::BadDims("expected a single block".into()));
            }
            Ok(a.block(0).clone())
        };
        let run = || -> Result<Option<Verdict>> {
            if let Some(mc) = self.mapping_constraints()? {
                let point = ChoiPoint::from_choi(mc.d_in, mc.d_out, a.field(), single(a)?, tol)?;
                return mapping_extreme_test(&point, &mc, tol).map(Some);
            }
            if let Some(v) = self.instrument_variant()? {
                let ModelDescriptor::Instrument { d_in, d_out, .. } = self else { unreachable!() };
                return instrument_extreme_test(a, *d_in, *d_out, &v, tol).map(Some);
            }
            Ok(match self {
                ModelDescriptor::Correlation { field, .. } => Some(corr_extreme_test(&single(a)?, *field, tol)?),
                ModelDescriptor::Povm { .. } | ModelDescriptor::Ensemble { .. } => Some(povm_extreme_test(a, tol)?),
                ModelDescriptor::Comb { field, steps } => Some(comb_extreme_test(&single(a)?, steps, *field, tol)?),
                _ => None,
            })
        };
        run().transpose()
    }
}

impl Spectrahedron {
    /// A `raw` descriptor that rebuilds this spectrahedron.
    pub fn to_descriptor(&self) -> Result<ModelDescriptor> {
        let constraints = self
            .constraints()
            .iter()
            .map(|c| Ok(RawConstraint { map: c.map.to_json()?, target: c.target.to_json() }))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelDescriptor::Raw { spec: self.spec().clone(), constraints })
    }
}
