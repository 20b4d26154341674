//! Python bindings. Complex values cross the boundary as Python `complex`,
//! matrices as lists of rows.

use geoqs_core::canonical::{canonical_grid_state, gibbs_density_matrix, CanonicalSpec, GridResolution};
use geoqs_core::gstate::{self, Atom, DeltaMixture, GeometricState, GridDensity, SampleEnsemble};
use geoqs_core::hybrid::{self, HybridState, RegionGrid};
use geoqs_core::io::{LoadedState, StateFile};
use geoqs_core::linalg::CMatrix;
use geoqs_core::manifold::{fs_uniform_grid, ProbPhasePoint, PureStatePoint};
use geoqs_core::observables::{self, Observable};
use geoqs_core::thermo::{self, BipartitePureState};
use geoqs_core::verify::{run_suite, CheckStatus, VerifyOptions};
use geoqs_core::{Complex64, GqsError};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

type HistogramRow = (f64, f64, f64, f64, f64);

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("matrix rows must be non-empty and of equal length"));
    }
    Ok(CMatrix::from_fn(n, m, |r, c| rows[r][c]))
}

fn from_matrix(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}

fn observable(rows: Vec<Vec<Complex64>>) -> PyResult<Observable> {
    Observable::new(to_matrix(rows)?).map_err(err)
}

/// A point of CP^{D-1}, stored gauge-fixed.
#[pyclass(name = "PureState", module = "geoqs", frozen)]
struct PyPureState(PureStatePoint);

#[pymethods]
impl PyPureState {
    #[new]
    fn new(amplitudes: Vec<Complex64>) -> PyResult<Self> {
        PureStatePoint::new(amplitudes).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_prob_phase(probs: Vec<f64>, phases: Vec<f64>) -> PyResult<Self> {
        let c = ProbPhasePoint::new(probs, phases).map_err(err)?;
        Ok(Self(PureStatePoint::from_prob_phase(&c)))
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    /// `(p_1..p_{D-1}, ν_1..ν_{D-1})`.
    fn prob_phase(&self) -> (Vec<f64>, Vec<f64>) {
        let c = self.0.to_prob_phase();
        (c.probs().to_vec(), c.phases().to_vec())
    }

    fn expectation(&self, observable_matrix: Vec<Vec<Complex64>>) -> PyResult<f64> {
        observables::eval_observable(&observable(observable_matrix)?, &self.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("PureState({:?})", self.0.amplitudes())
    }
}

#[pyclass(name = "DensityMatrix", module = "geoqs", frozen)]
struct PyDensityMatrix(observables::DensityMatrix);

#[pymethods]
impl PyDensityMatrix {
    #[new]
    fn new(matrix: Vec<Vec<Complex64>>) -> PyResult<Self> {
        observables::DensityMatrix::new(to_matrix(matrix)?).map(Self).map_err(err)
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        from_matrix(self.0.matrix())
    }

    /// Eigenvalues ascending, and eigenvectors as rows.
    fn eigen(&self) -> (Vec<f64>, Vec<Vec<Complex64>>) {
        let (values, vectors) = self.0.eigen();
        (values, from_matrix(&vectors.transpose()))
    }

    fn purity(&self) -> f64 {
        self.0.purity()
    }

    fn expectation(&self, observable_matrix: Vec<Vec<Complex64>>) -> PyResult<f64> {
        self.0.expectation(&observable(observable_matrix)?).map_err(err)
    }

    /// The eigen-mixture as a geometric state.
    fn eigen_mixture(&self) -> PyGeometricState {
        PyGeometricState(gstate::eigen_mixture(&self.0).into())
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix({:?})", from_matrix(self.0.matrix()))
    }
}

/// A probability distribution on CP^{D-1}: weighted atoms, a grid density
/// or a sample ensemble.
#[pyclass(name = "GeometricState", module = "geoqs", frozen)]
struct PyGeometricState(GeometricState);

#[pymethods]
impl PyGeometricState {
    #[staticmethod]
    fn delta(weights: Vec<f64>, points: Vec<Vec<Complex64>>) -> PyResult<Self> {
        if weights.len() != points.len() {
            return Err(PyValueError::new_err("weights and points differ in length"));
        }
        let atoms = weights
            .into_iter()
            .zip(points)
            .map(|(weight, amps)| Ok(Atom { weight, point: PureStatePoint::new(amps)? }))
            .collect::<Result<Vec<_>, GqsError>>()
            .map_err(err)?;
        DeltaMixture::new(atoms).map(|d| Self(d.into())).map_err(err)
    }

    /// `q ∝ exp(−½ Z† ρ^{-1} Z)` on a `bins × bins` grid.
    #[staticmethod]
    #[pyo3(signature = (rho, bins = 256))]
    fn gaussian_like(rho: PyRef<'_, PyDensityMatrix>, bins: usize) -> PyResult<Self> {
        let grid = fs_uniform_grid(rho.0.dim(), bins, bins).map_err(err)?;
        GridDensity::gaussian_like(&rho.0, grid).map(|g| Self(g.into())).map_err(err)
    }

    #[staticmethod]
    fn uniform_samples(dim: usize, n: usize, seed: u64) -> PyResult<Self> {
        SampleEnsemble::uniform(dim, n, seed).map(|s| Self(s.into())).map_err(err)
    }

    /// Load a `gqs-1` state document of kind delta, grid, samples or
    /// bipartite (the latter gives the system's labeled ensemble).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        match StateFile::parse(text).map_err(err)?.load().map_err(err)? {
            LoadedState::Geometric(g) => Ok(Self(g)),
            LoadedState::Bipartite(b) => {
                thermo::geometric_state_of(&thermo::reduce(&b)).map(|d| Self(d.into())).map_err(err)
            }
            LoadedState::Hybrid(h) => hybrid::pushforward_weighted(&hybrid::decompose(&h))
                .map(|s| Self(s.into()))
                .map_err(err),
            LoadedState::Canonical { .. } => Err(PyValueError::new_err("use canonical_state for canonical documents")),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn density_matrix(&self) -> PyDensityMatrix {
        PyDensityMatrix(gstate::density_matrix(&self.0))
    }

    fn expectation(&self, observable_matrix: Vec<Vec<Complex64>>) -> PyResult<f64> {
        gstate::expectation(&self.0, &observable(observable_matrix)?).map_err(err)
    }

    fn povm_statistics(&self, effects: Vec<Vec<Vec<Complex64>>>) -> PyResult<Vec<f64>> {
        let mats = effects.into_iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
        let povm = observables::validate_povm(mats).map_err(err)?;
        gstate::povm_statistics(&self.0, &povm).map_err(err)
    }

    /// Rows `(p_lo, p_hi, nu_lo, nu_hi, mass)`; qubits only.
    #[pyo3(signature = (bins_p = 20, bins_phase = 20))]
    fn histogram(&self, bins_p: usize, bins_phase: usize) -> PyResult<Vec<HistogramRow>> {
        let h = gstate::histogram(&self.0, bins_p, bins_phase).map_err(err)?;
        Ok(h.rows().map(|r| (r[0], r[1], r[2], r[3], r[4])).collect())
    }
}

/// Geometric canonical state `∝ e^{−β⟨H⟩}` on a `bins × bins` grid.
#[pyfunction]
#[pyo3(signature = (hamiltonian, beta, bins = 256))]
fn canonical_state(hamiltonian: Vec<Vec<Complex64>>, beta: f64, bins: usize) -> PyResult<PyGeometricState> {
    let spec = CanonicalSpec::new(observable(hamiltonian)?, beta).map_err(err)?;
    canonical_grid_state(&spec, GridResolution::square(bins))
        .map(|g| PyGeometricState(g.into()))
        .map_err(err)
}

#[pyfunction]
fn gibbs_state(hamiltonian: Vec<Vec<Complex64>>, beta: f64) -> PyResult<PyDensityMatrix> {
    let spec = CanonicalSpec::new(observable(hamiltonian)?, beta).map_err(err)?;
    Ok(PyDensityMatrix(gibbs_density_matrix(&spec)))
}

/// `(m_full, m_prod)` for `n` continuous degrees of freedom and qudit dimension `d`.
#[pyfunction]
fn capacity_bounds(n: usize, d: usize) -> PyResult<(f64, f64)> {
    let b = hybrid::capacity_bounds(n, d).map_err(err)?;
    Ok((b.m_full, b.m_prod))
}

/// Reduced density matrix of a hybrid state on a midpoint grid.
///
/// `psi` is row-major over grid points, one complex vector per point.
#[pyfunction]
fn hybrid_reduce(axes: Vec<Vec<f64>>, n_levels: usize, psi: Vec<Vec<Complex64>>) -> PyResult<PyDensityMatrix> {
    let region = RegionGrid::from_axes(axes, None).map_err(err)?;
    let h = HybridState::new(region, n_levels, psi).map_err(err)?;
    Ok(PyDensityMatrix(hybrid::reduced_density_matrix(&hybrid::decompose(&h))))
}

/// Labeled ensemble of the system: `[(label, weight, chi), ...]`.
#[pyfunction]
fn thermo_reduce(psi: Vec<Vec<Complex64>>) -> PyResult<Vec<(usize, f64, Vec<Complex64>)>> {
    let state = BipartitePureState::new(to_matrix(psi)?).map_err(err)?;
    let ens = thermo::reduce(&state);
    Ok(ens.entries.iter().map(|e| (e.label, e.weight, e.chi.clone())).collect())
}

/// Golden-value suite: `[(name, status, deviation, tolerance), ...]`.
#[pyfunction]
fn verify() -> Vec<(String, String, f64, f64)> {
    run_suite(&VerifyOptions::default())
        .into_iter()
        .map(|r| {
            let status = match r.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "fail",
                CheckStatus::Measured => "info",
            };
            (r.name.to_string(), status.to_string(), r.deviation, r.tolerance)
        })
        .collect()
}

#[pymodule]
fn geoqs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPureState>()?;
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PyGeometricState>()?;
    m.add_function(wrap_pyfunction!(canonical_state, m)?)?;
    m.add_function(wrap_pyfunction!(gibbs_state, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(hybrid_reduce, m)?)?;
    m.add_function(wrap_pyfunction!(thermo_reduce, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
