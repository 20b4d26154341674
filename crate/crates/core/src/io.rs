//! JSON schemas for states, observables and reports.
//!
//! Complex numbers are `[re, im]` pairs everywhere. Matrices are
//! `{"dim": D, "matrix": [[[re, im], ...], ...]}` with rows as the outer list.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::canonical::{CanonicalSpec, GibbsComparison, GridResolution, SamplerConfig};
use crate::error::GqsError;
use crate::gstate::{Atom, DeltaMixture, GeometricState, GridDensity, SampleEnsemble};
use crate::hybrid::{HybridDecomposition, HybridState, RegionGrid};
use crate::linalg::CMatrix;
use crate::manifold::{fs_uniform_grid, ProbPhasePoint, PureStatePoint};
use crate::observables::{validate_povm, DensityMatrix, Observable, Povm};
use crate::thermo::{BipartitePureState, LabeledEnsemble, ScalingReport};

/// Schema version accepted in state files.
pub const STATE_FILE_VERSION: &str = "gqs-1";

pub type Pair = [f64; 2];

/// Failure to load an input document.
#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    /// Malformed JSON or a document that does not match the schema.
    #[error("schema: {0}")]
    Schema(String),
    /// Well-formed input whose content violates a mathematical invariant.
    #[error("{0}")]
    Invariant(#[from] GqsError),
}

impl From<serde_json::Error> for LoadError {
    fn from(e: serde_json::Error) -> Self {
        LoadError::Schema(e.to_string())
    }
}

pub fn to_pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

pub fn from_pair(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub fn pairs(v: &[Complex64]) -> Vec<Pair> {
    v.iter().copied().map(to_pair).collect()
}

pub fn from_pairs(v: &[Pair]) -> Vec<Complex64> {
    v.iter().copied().map(from_pair).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub matrix: Vec<Vec<Pair>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        MatrixJson {
            dim: m.nrows(),
            matrix: (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| to_pair(m[(r, c)])).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix, LoadError> {
        if self.matrix.len() != self.dim || self.matrix.iter().any(|r| r.len() != self.dim) {
            return Err(LoadError::Schema(format!("matrix is not {0}×{0}", self.dim)));
        }
        Ok(CMatrix::from_fn(self.dim, self.dim, |r, c| from_pair(self.matrix[r][c])))
    }

    pub fn to_observable(&self) -> Result<Observable, LoadError> {
        Ok(Observable::new(self.to_matrix()?)?)
    }

    pub fn to_density_matrix(&self) -> Result<DensityMatrix, LoadError> {
        Ok(DensityMatrix::new(self.to_matrix()?)?)
    }
}

impl Serialize for PureStatePoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        pairs(self.amplitudes()).serialize(s)
    }
}

/// A point given either as amplitudes or as prob-phase coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointJson {
    Amplitudes(Vec<Pair>),
    ProbPhase(ProbPhasePoint),
}

impl PointJson {
    pub fn to_point(&self) -> Result<PureStatePoint, GqsError> {
        match self {
            PointJson::Amplitudes(v) => PureStatePoint::new(from_pairs(v)),
            PointJson::ProbPhase(pp) => Ok(PureStatePoint::from_prob_phase(&pp.clone().validated()?)),
        }
    }
}

impl<'de> Deserialize<'de> for PureStatePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        PointJson::deserialize(d)?
            .to_point()
            .map_err(serde::de::Error::custom)
    }
}

pub fn observable_to_json(obs: &Observable) -> MatrixJson {
    MatrixJson::from_matrix(obs.matrix())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmJson {
    pub effects: Vec<MatrixJson>,
}

impl PovmJson {
    pub fn to_povm(&self) -> Result<Povm, LoadError> {
        let mats = self
            .effects
            .iter()
            .map(|e| e.to_matrix())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(validate_povm(mats)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    pub weight: f64,
    pub point: PointJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GridGenerator {
    /// Uniform Fubini-Study density.
    Uniform,
    /// `∝ exp(−½ Z† ρ^{-1} Z)`.
    Gaussian { rho: MatrixJson },
}

fn default_seed() -> u64 {
    0
}

/// Kind-specific payload of a state file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateBody {
    Delta {
        atoms: Vec<AtomJson>,
    },
    Grid {
        dim: usize,
        bins_p: usize,
        bins_phase: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generator: Option<GridGenerator>,
    },
    Samples {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<Vec<PointJson>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        /// Draw this many uniform Fubini-Study samples instead of listing them.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        uniform: Option<usize>,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    Canonical {
        hamiltonian: MatrixJson,
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    Hybrid {
        axes: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        widths: Option<Vec<Vec<f64>>>,
        n_levels: usize,
        psi: Vec<Vec<Pair>>,
    },
    Bipartite {
        d_s: usize,
        d_e: usize,
        /// Rows indexed by the system basis, columns by the environment basis.
        psi: Vec<Vec<Pair>>,
    },
}

/// Versioned state document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub version: String,
    #[serde(flatten)]
    pub body: StateBody,
}

/// How a canonical state file should be realized.
#[derive(Debug, Clone, PartialEq)]
pub enum CanonicalMode {
    Grid(GridResolution),
    Sampler(SamplerConfig),
}

/// A state file after validation.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedState {
    Geometric(GeometricState),
    Canonical { spec: CanonicalSpec, mode: CanonicalMode },
    Hybrid(HybridState),
    Bipartite(BipartitePureState),
}

impl StateFile {
    pub fn new(body: StateBody) -> Self {
        StateFile {
            version: STATE_FILE_VERSION.to_string(),
            body,
        }
    }

    pub fn parse(text: &str) -> Result<Self, LoadError> {
        let file: StateFile = serde_json::from_str(text)?;
        if file.version != STATE_FILE_VERSION {
            return Err(LoadError::Schema(format!(
                "unsupported version {:?} (expected {STATE_FILE_VERSION:?})",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn load(&self) -> Result<LoadedState, LoadError> {
        match &self.body {
            StateBody::Delta { atoms } => {
                let atoms = atoms
                    .iter()
                    .map(|a| Ok(Atom { weight: a.weight, point: a.point.to_point()? }))
                    .collect::<Result<Vec<_>, GqsError>>()?;
                Ok(LoadedState::Geometric(DeltaMixture::new(atoms)?.into()))
            }
            StateBody::Grid { dim, bins_p, bins_phase, values, generator } => {
                let grid = fs_uniform_grid(*dim, *bins_p, *bins_phase)?;
                let density = match (values, generator) {
                    (Some(v), None) => GridDensity::new(grid, v.clone())?,
                    (None, Some(GridGenerator::Uniform)) => GridDensity::uniform(grid),
                    (None, Some(GridGenerator::Gaussian { rho })) => {
                        GridDensity::gaussian_like(&rho.to_density_matrix()?, grid)?
                    }
                    _ => {
                        return Err(LoadError::Schema(
                            "grid state needs exactly one of \"values\" or \"generator\"".into(),
                        ))
                    }
                };
                Ok(LoadedState::Geometric(density.into()))
            }
            StateBody::Samples { dim, samples, weights, uniform, seed } => {
                let ens = match (samples, uniform) {
                    (Some(s), None) => {
                        let pts = s.iter().map(|p| p.to_point()).collect::<Result<Vec<_>, _>>()?;
                        if let Some(p) = pts.iter().find(|p| p.dim() != *dim) {
                            return Err(GqsError::DimensionMismatch { expected: *dim, found: p.dim() }.into());
                        }
                        SampleEnsemble::new(pts, weights.clone(), *seed)?
                    }
                    (None, Some(n)) if weights.is_none() => SampleEnsemble::uniform(*dim, *n, *seed)?,
                    _ => {
                        return Err(LoadError::Schema(
                            "samples state needs exactly one of \"samples\" or \"uniform\"".into(),
                        ))
                    }
                };
                Ok(LoadedState::Geometric(ens.into()))
            }
            StateBody::Canonical { hamiltonian, beta, grid, samples, seed } => {
                let spec = CanonicalSpec::new(hamiltonian.to_observable()?, *beta)?;
                let mode = match (grid, samples) {
                    (Some(g), None) => CanonicalMode::Grid(GridResolution::square(*g)),
                    (None, Some(n)) => CanonicalMode::Sampler(SamplerConfig::new(*n, *seed)),
                    (None, None) => CanonicalMode::Grid(GridResolution::square(256)),
                    _ => return Err(LoadError::Schema("give either \"grid\" or \"samples\", not both".into())),
                };
                Ok(LoadedState::Canonical { spec, mode })
            }
            StateBody::Hybrid { axes, widths, n_levels, psi } => {
                let region = RegionGrid::from_axes(axes.clone(), widths.clone())?;
                let rows = psi.iter().map(|r| from_pairs(r)).collect();
                Ok(LoadedState::Hybrid(HybridState::new(region, *n_levels, rows)?))
            }
            StateBody::Bipartite { d_s, d_e, psi } => {
                if psi.len() != *d_s || psi.iter().any(|r| r.len() != *d_e) {
                    return Err(LoadError::Schema(format!("psi must be a {d_s}×{d_e} array")));
                }
                let m = CMatrix::from_fn(*d_s, *d_e, |k, a| from_pair(psi[k][a]));
                Ok(LoadedState::Bipartite(BipartitePureState::new(m)?))
            }
        }
    }
}

/// `{"dim", "matrix", "eigenvalues", "eigenvectors"}`; eigenpairs are listed
/// in descending eigenvalue order with gauge-fixed eigenvectors.
pub fn density_matrix_report(rho: &DensityMatrix) -> Value {
    let (values, vectors) = rho.eigen();
    let n = values.len();
    let eigvecs: Vec<Vec<Pair>> = (0..n)
        .rev()
        .map(|k| {
            let v: Vec<Complex64> = vectors.column(k).iter().copied().collect();
            pairs(PureStatePoint::new(v).expect("eigenvectors are normalized").amplitudes())
        })
        .collect();
    json!({
        "dim": rho.dim(),
        "matrix": MatrixJson::from_matrix(rho.matrix()).matrix,
        "eigenvalues": values.iter().rev().collect::<Vec<_>>(),
        "eigenvectors": eigvecs,
    })
}

pub fn geometric_state_to_json(state: &GeometricState) -> Value {
    match state {
        GeometricState::Delta(d) => json!({
            "version": STATE_FILE_VERSION,
            "kind": "delta",
            "atoms": d.atoms().iter().map(|a| json!({"weight": a.weight, "point": a.point})).collect::<Vec<_>>(),
        }),
        GeometricState::Grid(g) => json!({
            "version": STATE_FILE_VERSION,
            "kind": "grid",
            "dim": g.dim(),
            "bins_p": g.grid().bins_p(),
            "bins_phase": g.grid().bins_phase(),
            "values": g.values(),
        }),
        GeometricState::Samples(s) => {
            let mut v = json!({
                "version": STATE_FILE_VERSION,
                "kind": "samples",
                "dim": s.dim(),
                "seed": s.seed(),
                "samples": s.samples(),
            });
            if let Some(w) = s.weights() {
                v["weights"] = json!(w);
            }
            v
        }
    }
}

pub fn decomposition_to_json(dec: &HybridDecomposition) -> Value {
    json!({
        "axes": dec.region().axes(),
        "widths": dec.region().widths(),
        "n_levels": dec.n_levels(),
        "f": pairs(dec.f()),
        "p": dec.probs(),
        "phi": dec.phases(),
    })
}

pub fn labeled_ensemble_to_json(ens: &LabeledEnsemble) -> Value {
    json!({
        "d_s": ens.d_s,
        "entries": ens.entries.iter().map(|e| json!({
            "label": e.label,
            "weight": e.weight,
            "chi": pairs(&e.chi),
        })).collect::<Vec<_>>(),
        "zero_labels": ens.zero_labels,
    })
}

pub fn comparison_to_json(report: &GibbsComparison) -> Value {
    json!({
        "rho_geometric": density_matrix_report(&report.rho_geometric),
        "rho_gibbs": density_matrix_report(&report.rho_gibbs),
        "max_entry_difference": report.max_entry_difference,
        "geometric_populations": report.geometric_populations,
        "gibbs_populations": report.gibbs_populations,
        "geometric_commutator": report.geometric_commutator,
        "gibbs_commutator": report.gibbs_commutator,
    })
}

pub fn scaling_report_to_json(report: &ScalingReport) -> Value {
    json!({
        "d_s": report.d_s,
        "base_seed": report.base_seed,
        "rows": report.rows.iter().map(|r| json!({
            "d_e": r.d_e,
            "mean_trace_distance": r.mean_distance,
            "stderr": r.stderr,
            "trace_distances": r.distances,
            "histogram": r.histogram.as_ref().map(|h| json!({
                "bins_p": h.bins_p,
                "bins_phase": h.bins_phase,
                "masses": h.masses,
            })),
        })).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gstate::density_matrix;

    const Q2: &str = r#"{
        "version": "gqs-1",
        "kind": "delta",
        "atoms": [
            {"weight": 0.864, "point": [[0.657, 0], [0.418, 0.627]]},
            {"weight": 0.136, "point": {"p": [0.432], "nu": [4.124]}}
        ]
    }"#;

    #[test]
    fn delta_file_loads() {
        let LoadedState::Geometric(g) = StateFile::parse(Q2).unwrap().load().unwrap() else {
            panic!("expected a geometric state");
        };
        let rho = density_matrix(&g);
        assert!((rho.matrix()[(0, 0)].re - 0.45).abs() < 2e-3);
    }

    #[test]
    fn unknown_version_is_a_schema_error() {
        let text = Q2.replace("gqs-1", "gqs-9");
        assert!(matches!(StateFile::parse(&text), Err(LoadError::Schema(_))));
        assert!(matches!(StateFile::parse("{"), Err(LoadError::Schema(_))));
    }

    #[test]
    fn invariant_violations_are_separated() {
        let text = Q2.replace("0.136", "0.2");
        let err = StateFile::parse(&text).unwrap().load().unwrap_err();
        assert!(matches!(err, LoadError::Invariant(GqsError::NotNormalized(_))));
    }

    #[test]
    fn point_serialization() {
        let z = PureStatePoint::basis(2, 1).unwrap();
        assert_eq!(serde_json::to_string(&z).unwrap(), "[[0.0,0.0],[1.0,0.0]]");
        let back: PureStatePoint = serde_json::from_str("[[0.0,0.0],[1.0,0.0]]").unwrap();
        assert_eq!(back, z);
        let pp: PureStatePoint = serde_json::from_str(r#"{"p":[1.0],"nu":[0.0]}"#).unwrap();
        assert_eq!(pp, z);
        let coords = serde_json::to_string(&ProbPhasePoint::qubit(0.25, 1.0).unwrap()).unwrap();
        assert_eq!(coords, r#"{"p":[0.25],"nu":[1.0]}"#);
    }

    #[test]
    fn matrix_shape_is_checked() {
        let m = MatrixJson { dim: 2, matrix: vec![vec![[1.0, 0.0]]] };
        assert!(matches!(m.to_matrix(), Err(LoadError::Schema(_))));
    }

    #[test]
    fn state_file_roundtrip_through_serde() {
        let file = StateFile::new(StateBody::Canonical {
            hamiltonian: observable_to_json(&Observable::diagonal(&[0.0, 1.0])),
            beta: 1.0,
            grid: Some(64),
            samples: None,
            seed: 0,
        });
        let text = serde_json::to_string(&file).unwrap();
        assert_eq!(StateFile::parse(&text).unwrap(), file);
        assert!(matches!(file.load().unwrap(), LoadedState::Canonical { .. }));
    }

    #[test]
    fn other_kinds_load() {
        let bip = r#"{"version":"gqs-1","kind":"bipartite","d_s":2,"d_e":2,
            "psi":[[[0.7071067811865476,0],[0,0]],[[0,0],[0.7071067811865476,0]]]}"#;
        assert!(matches!(StateFile::parse(bip).unwrap().load().unwrap(), LoadedState::Bipartite(_)));
        let hyb = r#"{"version":"gqs-1","kind":"hybrid","axes":[[0.25,0.75]],"n_levels":2,
            "psi":[[[1,0],[0,0]],[[0,0],[0,1]]]}"#;
        assert!(matches!(StateFile::parse(hyb).unwrap().load().unwrap(), LoadedState::Hybrid(_)));
        let grid = r#"{"version":"gqs-1","kind":"grid","dim":2,"bins_p":8,"bins_phase":8,
            "generator":{"type":"uniform"}}"#;
        assert!(matches!(StateFile::parse(grid).unwrap().load().unwrap(), LoadedState::Geometric(_)));
        let samples = r#"{"version":"gqs-1","kind":"samples","dim":2,"uniform":10,"seed":3}"#;
        assert!(matches!(StateFile::parse(samples).unwrap().load().unwrap(), LoadedState::Geometric(_)));
        let bad = r#"{"version":"gqs-1","kind":"samples","dim":2,"seed":3}"#;
        assert!(matches!(StateFile::parse(bad).unwrap().load(), Err(LoadError::Schema(_))));
    }
}
