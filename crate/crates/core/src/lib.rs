//! Geometric quantum states: probability distributions on the manifold of pure
//! quantum states, their density matrices, the geometric canonical ensemble,
//! hybrid continuous–discrete decompositions and system–environment reduction.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod error;
pub mod gstate;
pub mod hybrid;
pub mod io;
pub mod linalg;
pub mod manifold;
pub mod observables;
pub mod thermo;
pub mod verify;

pub use canonical::{CanonicalSpec, GridResolution, SamplerConfig};
pub use error::{GqsError, Result};
pub use gstate::{
    density_matrix, eigen_mixture, expectation, histogram, povm_statistics, Atom, DeltaMixture,
    GeometricState, GridDensity, Histogram, SampleEnsemble,
};
pub use hybrid::{HybridDecomposition, HybridState, RegionGrid};
pub use manifold::{fs_uniform_grid, FsCell, FsGrid, ProbPhasePoint, PureStatePoint};
pub use observables::{
    eval_observable, povm_probabilities_point, validate_povm, DensityMatrix, Observable, Povm,
};
pub use thermo::{BipartitePureState, LabeledEnsemble};
pub use num_complex::Complex64;
