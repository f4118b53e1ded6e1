//! Extreme points of spectrahedra in finite-dimensional operator algebras.
//!
//! A spectrahedron here is a set `{A >= 0 : L_j(A) = B_j}` inside a block
//! algebra `⊕_x L(R_x) ⊗ I_{M_x}` over the reals or the complex numbers.
//! The crate decides extremality of members, splits non-extreme members
//! into extreme ones, and ships builders for the spectrahedra of quantum
//! information (states, channels, POVMs, instruments, combs, correlation
//! matrices).

pub mod algebra;
pub mod decompose;
pub mod error;
pub mod json;
pub mod linalg;
pub mod linmap;
pub mod models;
pub mod povm_measure;
pub mod reproduce;
pub mod spectra;

use serde::{Deserialize, Serialize};

pub use algebra::{inner, AlgebraElement, AlgebraSpec, Block, Field, HermBasis, SupportProjector};
pub use decompose::{decompose_extreme, split, Component, ConvexDecomposition, SplitResult};
pub use error::{Error, Result};
pub use linmap::{BlockSelection, ConstraintMap, LocalOp, MapKind};
pub use spectra::{Constraint, ExtremalityReport, Membership, Spectrahedron, Verdict};

/// Numerical tolerances. All of them are relative to a natural scale of the
/// quantity being tested.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Eigenvalues below `supp * λ_max` are outside the support.
    pub supp: f64,
    /// Positivity slack, relative to the spectral norm.
    pub psd: f64,
    /// Singular values below `ker * σ_ref` count as zero.
    pub ker: f64,
    /// Constraint residual slack, scaled by `1 + ‖B_j‖`.
    pub mem: f64,
    /// Singular values within a factor `sqrt(gap)` of the kernel threshold
    /// make the verdict inconclusive.
    pub gap: f64,
    /// Leaves closer than `merge * ‖A‖` are merged during decomposition.
    pub merge: f64,
    /// Grid points with weight at most `meas` are outside the support.
    pub meas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            supp: 1e-9,
            psd: 1e-9,
            ker: 1e-8,
            mem: 1e-9,
            gap: 100.0,
            merge: 1e-7,
            meas: 1e-12,
        }
    }
}
