//! Geometric quantum states: normalized distributions `q(Z)` on CP^{D-1}.
//!
//! Three representations are supported. Weighted atoms (covariant Dirac
//! deltas) are exact; grid densities integrate with the Fubini-Study midpoint
//! grid from [`crate::manifold`]; sample ensembles are Monte Carlo estimates and
//! report batch-means standard errors next to their values.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{GqsError, Result};
use crate::linalg::{hermitian_eigen, outer, CMatrix};
use crate::manifold::{wrap_phase, FsGrid, PureStatePoint};
use crate::observables::{eval_amplitudes, DensityMatrix, Observable, Povm};

/// Tolerance on the total weight of atoms and sample weights.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Cells per parallel chunk; fixed so reductions are bit-stable across thread counts.
const CHUNK: usize = 4096;

/// Eigenvalues at or below this are dropped by [`eigen_mixture`].
pub const EIGEN_DROP_TOL: f64 = 1e-12;

/// Number of batches used for batch-means standard errors.
pub const STDERR_BATCHES: usize = 50;

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(GqsError::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub weight: f64,
    pub point: PureStatePoint,
}

/// `q(Z) = Σ_j w_j δ̃(Z − Z_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMixture {
    dim: usize,
    atoms: Vec<Atom>,
}

impl DeltaMixture {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return Err(GqsError::invalid("a delta mixture needs at least one atom"));
        };
        let dim = first.point.dim();
        for a in &atoms {
            check_dim(dim, a.point.dim())?;
            if !(a.weight > 0.0) || !a.weight.is_finite() {
                return Err(GqsError::InvalidProbabilities(format!(
                    "atom weight {} is not positive",
                    a.weight
                )));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(GqsError::NotNormalized(total));
        }
        Ok(DeltaMixture { dim, atoms })
    }

    /// Rescale positive weights to sum to one.
    pub fn normalized(mut atoms: Vec<Atom>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if !(total > 0.0) {
            return Err(GqsError::NotNormalized(total));
        }
        for a in atoms.iter_mut() {
            a.weight /= total;
        }
        Self::new(atoms)
    }

    pub fn single(point: PureStatePoint) -> Self {
        DeltaMixture {
            dim: point.dim(),
            atoms: vec![Atom { weight: 1.0, point }],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
}

/// Piecewise-constant density on a Fubini-Study grid, normalized so that
/// `Σ q · volume = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: FsGrid,
    values: Vec<f64>,
}

impl GridDensity {
    /// Normalize nonnegative cell values.
    pub fn new(grid: FsGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(GqsError::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(GqsError::invalid(format!("density value {v} is negative or non-finite")));
        }
        let vols: Vec<f64> = (0..grid.len()).map(|i| grid.volume(i)).collect();
        let weighted: Vec<f64> = values.iter().zip(&vols).map(|(q, v)| q * v).collect();
        let mass = crate::linalg::pairwise_sum(&weighted);
        if !(mass > 0.0) {
            return Err(GqsError::NotNormalized(mass));
        }
        let values = values.into_iter().map(|q| q / mass).collect();
        Ok(GridDensity { grid, values })
    }

    /// Evaluate an unnormalized density at every quadrature node.
    pub fn from_fn<F>(grid: FsGrid, f: F) -> Result<Self>
    where
        F: Fn(&[Complex64]) -> f64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.center_amplitudes(i)))
            .collect();
        Self::new(grid, values)
    }

    /// The uniform density `1 / vol(CP^{D-1})`.
    pub fn uniform(grid: FsGrid) -> Self {
        let n = grid.len();
        Self::new(grid, vec![1.0; n]).expect("grid has positive volume")
    }

    /// `q(Z) ∝ exp(−½ Z† ρ^{-1} Z)` for an invertible density matrix.
    pub fn gaussian_like(rho: &DensityMatrix, grid: FsGrid) -> Result<Self> {
        check_dim(rho.dim(), grid.dim())?;
        let (values, _) = rho.eigen();
        if values[0] <= 0.0 {
            return Err(GqsError::invalid("density matrix must be invertible"));
        }
        let inv = crate::linalg::hermitian_map(rho.matrix(), |x| 1.0 / x);
        Self::from_fn(grid, |z| (-0.5 * eval_amplitudes(&inv, z)).exp())
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn grid(&self) -> &FsGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cell masses `q · volume`.
    pub fn masses(&self) -> Vec<f64> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, q)| q * self.grid.volume(i))
            .collect()
    }

    fn reduce_matrix(&self, f: impl Fn(&[Complex64]) -> CMatrix + Sync) -> CMatrix {
        let d = self.dim();
        let partials: Vec<CMatrix> = (0..self.grid.len())
            .collect::<Vec<_>>()
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = CMatrix::zeros(d, d);
                for &i in chunk {
                    let w = self.values[i] * self.grid.volume(i);
                    if w != 0.0 {
                        acc += f(&self.grid.center_amplitudes(i)) * Complex64::new(w, 0.0);
                    }
                }
                acc
            })
            .collect();
        partials.into_iter().fold(CMatrix::zeros(d, d), |a, b| a + b)
    }

    fn reduce_scalar(&self, f: impl Fn(&[Complex64]) -> f64 + Sync) -> f64 {
        let partials: Vec<f64> = (0..self.grid.len())
            .collect::<Vec<_>>()
            .par_chunks(CHUNK)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|&i| self.values[i] * self.grid.volume(i) * f(&self.grid.center_amplitudes(i)))
                    .sum::<f64>()
            })
            .collect();
        crate::linalg::pairwise_sum(&partials)
    }
}

/// Monte Carlo representation of `q(Z)`: points with optional weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleEnsemble {
    dim: usize,
    samples: Vec<PureStatePoint>,
    weights: Option<Vec<f64>>,
    seed: u64,
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Entrywise estimate of a density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEstimate {
    pub value: CMatrix,
    pub stderr_re: DMatrix<f64>,
    pub stderr_im: DMatrix<f64>,
}

impl MatrixEstimate {
    /// Largest `|value − reference|` measured in standard errors (entries with
    /// vanishing error bars are compared against `floor`).
    pub fn max_sigma_deviation(&self, reference: &CMatrix, floor: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for ((v, r), (sr, si)) in self
            .value
            .iter()
            .zip(reference.iter())
            .zip(self.stderr_re.iter().zip(self.stderr_im.iter()))
        {
            worst = worst.max((v.re - r.re).abs() / sr.max(floor));
            worst = worst.max((v.im - r.im).abs() / si.max(floor));
        }
        worst
    }
}

impl SampleEnsemble {
    pub fn new(samples: Vec<PureStatePoint>, weights: Option<Vec<f64>>, seed: u64) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(GqsError::invalid("a sample ensemble needs at least one sample"));
        };
        let dim = first.dim();
        for s in &samples {
            check_dim(dim, s.dim())?;
        }
        if let Some(w) = &weights {
            if w.len() != samples.len() {
                return Err(GqsError::DimensionMismatch {
                    expected: samples.len(),
                    found: w.len(),
                });
            }
            if w.iter().any(|x| !(*x >= 0.0)) {
                return Err(GqsError::InvalidProbabilities("negative sample weight".into()));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > WEIGHT_TOL {
                return Err(GqsError::NotNormalized(total));
            }
        }
        Ok(SampleEnsemble { dim, samples, weights, seed })
    }

    /// `n` independent draws from the uniform Fubini-Study measure.
    ///
    /// Normalized standard complex Gaussian vectors are unitarily invariant,
    /// so their rays are uniformly distributed on CP^{D-1}.
    pub fn uniform(dim: usize, n: usize, seed: u64) -> Result<Self> {
        if dim < 2 || n == 0 {
            return Err(GqsError::invalid("need dim >= 2 and n >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| loop {
                let v: Vec<Complex64> = (0..dim)
                    .map(|_| {
                        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
                    })
                    .collect();
                if let Ok(p) = PureStatePoint::new(v) {
                    break p;
                }
            })
            .collect();
        Self::new(samples, None, seed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[PureStatePoint] {
        &self.samples
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.samples.len() as f64,
        }
    }

    /// Contiguous batches; batch means of correlated (MCMC) chains give honest
    /// error bars as long as batches exceed the autocorrelation time.
    fn batches(&self) -> Vec<std::ops::Range<usize>> {
        let n = self.samples.len();
        let b = STDERR_BATCHES.min(n);
        (0..b).map(|k| (k * n / b)..((k + 1) * n / b)).collect()
    }

    fn batch_stderr(&self, f: impl Fn(usize) -> f64) -> Estimate {
        let value: f64 = (0..self.len()).map(|i| self.weight(i) * f(i)).sum();
        let batches = self.batches();
        if batches.len() < 2 {
            return Estimate { value, stderr: 0.0 };
        }
        let means: Vec<(f64, f64)> = batches
            .iter()
            .map(|r| {
                let w: f64 = r.clone().map(|i| self.weight(i)).sum();
                let s: f64 = r.clone().map(|i| self.weight(i) * f(i)).sum();
                (w, if w > 0.0 { s / w } else { 0.0 })
            })
            .collect();
        // weighted batch means; reduces to the textbook formula for equal weights
        let total_w: f64 = means.iter().map(|m| m.0).sum();
        let k = means.len() as f64;
        let var: f64 = means
            .iter()
            .map(|(w, m)| (w / total_w).powi(2) * k * k * (m - value).powi(2))
            .sum::<f64>()
            / (k * (k - 1.0));
        Estimate { value, stderr: var.sqrt() }
    }

    pub fn expectation_estimate(&self, obs: &Observable) -> Result<Estimate> {
        check_dim(self.dim, obs.dim())?;
        Ok(self.batch_stderr(|i| eval_amplitudes(obs.matrix(), self.samples[i].amplitudes())))
    }

    /// Density matrix with per-entry standard errors.
    pub fn density_matrix_estimate(&self) -> MatrixEstimate {
        let d = self.dim;
        let mut value = CMatrix::zeros(d, d);
        let mut stderr_re = DMatrix::zeros(d, d);
        let mut stderr_im = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let re = self.batch_stderr(|i| {
                    let z = self.samples[i].amplitudes();
                    (z[a] * z[b].conj()).re
                });
                let im = self.batch_stderr(|i| {
                    let z = self.samples[i].amplitudes();
                    (z[a] * z[b].conj()).im
                });
                value[(a, b)] = Complex64::new(re.value, im.value);
                value[(b, a)] = Complex64::new(re.value, -im.value);
                stderr_re[(a, b)] = re.stderr;
                stderr_re[(b, a)] = re.stderr;
                stderr_im[(a, b)] = im.stderr;
                stderr_im[(b, a)] = im.stderr;
            }
        }
        MatrixEstimate { value, stderr_re, stderr_im }
    }
}

/// A geometric quantum state in one of its representations.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometricState {
    Delta(DeltaMixture),
    Grid(GridDensity),
    Samples(SampleEnsemble),
}

impl From<DeltaMixture> for GeometricState {
    fn from(d: DeltaMixture) -> Self {
        GeometricState::Delta(d)
    }
}

impl From<GridDensity> for GeometricState {
    fn from(g: GridDensity) -> Self {
        GeometricState::Grid(g)
    }
}

impl From<SampleEnsemble> for GeometricState {
    fn from(s: SampleEnsemble) -> Self {
        GeometricState::Samples(s)
    }
}

impl GeometricState {
    pub fn dim(&self) -> usize {
        match self {
            GeometricState::Delta(d) => d.dim(),
            GeometricState::Grid(g) => g.dim(),
            GeometricState::Samples(s) => s.dim(),
        }
    }
}

/// `P_q[O] = ∫ q(Z) O(Z) dV_FS`.
pub fn expectation(state: &GeometricState, obs: &Observable) -> Result<f64> {
    check_dim(state.dim(), obs.dim())?;
    let m = obs.matrix();
    Ok(match state {
        GeometricState::Delta(d) => d
            .atoms
            .iter()
            .map(|a| a.weight * eval_amplitudes(m, a.point.amplitudes()))
            .sum(),
        GeometricState::Grid(g) => g.reduce_scalar(|z| eval_amplitudes(m, z)),
        GeometricState::Samples(s) => s.expectation_estimate(obs)?.value,
    })
}

/// The barycenter `ρ^q_{αβ} = ∫ q(Z) Z^α conj(Z^β) dV_FS`.
pub fn density_matrix(state: &GeometricState) -> DensityMatrix {
    let m = match state {
        GeometricState::Delta(d) => {
            let mut acc = CMatrix::zeros(d.dim, d.dim);
            for a in &d.atoms {
                acc += a.point.projector() * Complex64::new(a.weight, 0.0);
            }
            acc
        }
        GeometricState::Grid(g) => g.reduce_matrix(outer),
        GeometricState::Samples(s) => s.density_matrix_estimate().value,
    };
    DensityMatrix::from_trusted(m)
}

/// Outcome probabilities `Tr(ρ^q E_j)`.
pub fn povm_statistics(state: &GeometricState, povm: &Povm) -> Result<Vec<f64>> {
    check_dim(state.dim(), povm.dim())?;
    density_matrix(state).povm_probabilities(povm)
}

/// The eigen-ensemble of `ρ` as weighted atoms, heaviest first.
pub fn eigen_mixture(rho: &DensityMatrix) -> DeltaMixture {
    let (values, vectors) = hermitian_eigen(rho.matrix());
    let mut atoms: Vec<Atom> = values
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &w)| w > EIGEN_DROP_TOL)
        .map(|(k, &w)| Atom {
            weight: w,
            point: PureStatePoint::new(vectors.column(k).iter().copied().collect())
                .expect("eigenvectors are normalized"),
        })
        .collect();
    let total: f64 = atoms.iter().map(|a| a.weight).sum();
    for a in atoms.iter_mut() {
        a.weight /= total;
    }
    DeltaMixture { dim: rho.dim(), atoms }
}

/// Mass table over `(p, ν)` bins for qubit states.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins_p: usize,
    pub bins_phase: usize,
    /// Row-major: `masses[i * bins_phase + j]` for p-bin `i`, phase-bin `j`.
    pub masses: Vec<f64>,
}

pub const HISTOGRAM_CSV_HEADER: &str = "p_lo,p_hi,nu_lo,nu_hi,mass";

impl Histogram {
    fn empty(bins_p: usize, bins_phase: usize) -> Self {
        Histogram {
            bins_p,
            bins_phase,
            masses: vec![0.0; bins_p * bins_phase],
        }
    }

    /// Bin containing `(p, ν)`; phases at 2π wrap to the first bin.
    pub fn bin_of(&self, p: f64, nu: f64) -> (usize, usize) {
        let i = ((p * self.bins_p as f64).floor() as usize).min(self.bins_p - 1);
        let j = ((wrap_phase(nu) / TAU * self.bins_phase as f64).floor() as usize) % self.bins_phase;
        (i, j)
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.masses[i * self.bins_phase + j]
    }

    fn add(&mut self, p: f64, nu: f64, w: f64) {
        let (i, j) = self.bin_of(p, nu);
        self.masses[i * self.bins_phase + j] += w;
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `(p_lo, p_hi, ν_lo, ν_hi, mass)` for every bin.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 5]> + '_ {
        let dp = 1.0 / self.bins_p as f64;
        let dnu = TAU / self.bins_phase as f64;
        (0..self.bins_p).flat_map(move |i| {
            (0..self.bins_phase).map(move |j| {
                [
                    i as f64 * dp,
                    (i + 1) as f64 * dp,
                    j as f64 * dnu,
                    (j + 1) as f64 * dnu,
                    self.mass(i, j),
                ]
            })
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HISTOGRAM_CSV_HEADER);
        out.push('\n');
        for r in self.rows() {
            out.push_str(&format!("{},{},{},{},{}\n", r[0], r[1], r[2], r[3], r[4]));
        }
        out
    }
}

/// Histogram of a qubit geometric state in `(p, ν)` coordinates.
pub fn histogram(state: &GeometricState, bins_p: usize, bins_phase: usize) -> Result<Histogram> {
    if state.dim() != 2 {
        return Err(GqsError::UnsupportedDimension(state.dim(), "histograms are for D = 2"));
    }
    if bins_p == 0 || bins_phase == 0 {
        return Err(GqsError::invalid("bin counts must be >= 1"));
    }
    let mut h = Histogram::empty(bins_p, bins_phase);
    match state {
        GeometricState::Delta(d) => {
            for a in &d.atoms {
                let c = a.point.to_prob_phase();
                h.add(c.probs()[0], c.phases()[0], a.weight);
            }
        }
        GeometricState::Grid(g) => {
            for (i, m) in g.masses().into_iter().enumerate() {
                let c = g.grid.center(i);
                h.add(c.probs()[0], c.phases()[0], m);
            }
        }
        GeometricState::Samples(s) => {
            for (i, z) in s.samples.iter().enumerate() {
                let c = z.to_prob_phase();
                h.add(c.probs()[0], c.phases()[0], s.weight(i));
            }
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs_diff};
    use crate::manifold::{fs_uniform_grid, ProbPhasePoint};
    use crate::observables::validate_povm;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn q2() -> DeltaMixture {
        DeltaMixture::new(vec![
            Atom {
                weight: 0.864,
                point: PureStatePoint::new(vec![c(0.657, 0.0), c(0.418, 0.627)]).unwrap(),
            },
            Atom {
                weight: 0.136,
                point: PureStatePoint::new(vec![c(0.754, 0.0), c(-0.364, -0.546)]).unwrap(),
            },
        ])
        .unwrap()
    }

    #[test]
    fn single_atom_expectation_is_point_value() {
        let z = PureStatePoint::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let s: GeometricState = DeltaMixture::single(z.clone()).into();
        for obs in [Observable::pauli_x(), Observable::pauli_y(), Observable::pauli_z()] {
            let direct = crate::observables::eval_observable(&obs, &z).unwrap();
            assert!((expectation(&s, &obs).unwrap() - direct).abs() < 1e-15);
        }
        assert!((expectation(&s, &Observable::identity(2)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reference_qubit_density_matrix() {
        let rho = density_matrix(&q2().into());
        let m = rho.matrix();
        assert!((m[(0, 0)].re - 0.45).abs() <= 2e-3);
        assert!((m[(1, 1)].re - 0.55).abs() <= 2e-3);
        assert!((m[(0, 1)] - c(0.2, -0.3)).norm() <= 2e-3);
    }

    #[test]
    fn basis_atom_is_diagonal_projector() {
        let rho = density_matrix(&DeltaMixture::single(PureStatePoint::basis(2, 0).unwrap()).into());
        assert_eq!(rho.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(rho.matrix()[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn eigen_mixture_of_reference_qubit_rho() {
        let rho = DensityMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.45, 0.0), c(0.2, -0.3), c(0.2, 0.3), c(0.55, 0.0)],
        ))
        .unwrap();
        let mix = eigen_mixture(&rho);
        assert_eq!(mix.atoms().len(), 2);
        let expected = [(0.864, 0.568, 0.983), (0.136, 0.432, 4.124)];
        for (atom, (w, p, nu)) in mix.atoms().iter().zip(expected) {
            let pp = atom.point.to_prob_phase();
            assert!((atom.weight - w).abs() <= 2e-3);
            assert!((pp.probs()[0] - p).abs() <= 2e-3);
            assert!((pp.phases()[0] - nu).abs() <= 2e-3);
        }
        let back = density_matrix(&mix.into());
        assert!(max_abs_diff(back.matrix(), rho.matrix()) < 1e-12);
    }

    #[test]
    fn eigen_mixture_degenerate_and_pure() {
        let mixed = DensityMatrix::maximally_mixed(2);
        let mix = eigen_mixture(&mixed);
        assert_eq!(mix.atoms().len(), 2);
        assert!(mix.atoms().iter().all(|a| (a.weight - 0.5).abs() < 1e-12));
        assert!(max_abs_diff(density_matrix(&mix.into()).matrix(), mixed.matrix()) < 1e-12);

        let z = PureStatePoint::new(vec![c(0.3, 0.1), c(0.2, -0.5), c(0.1, 0.0)]).unwrap();
        let mix = eigen_mixture(&DensityMatrix::pure(&z));
        assert_eq!(mix.atoms().len(), 1);
        assert!((mix.atoms()[0].weight - 1.0).abs() < 1e-12);
        assert!(mix.atoms()[0].point.overlap(&z) > 1.0 - 1e-12);
    }

    #[test]
    fn delta_mixture_validation() {
        let z = PureStatePoint::basis(2, 0).unwrap();
        assert!(DeltaMixture::new(vec![Atom { weight: 0.5, point: z.clone() }]).is_err());
        assert!(DeltaMixture::new(vec![Atom { weight: -1.0, point: z.clone() }]).is_err());
        assert!(DeltaMixture::new(vec![]).is_err());
        let w = PureStatePoint::basis(3, 0).unwrap();
        assert!(DeltaMixture::normalized(vec![
            Atom { weight: 1.0, point: z },
            Atom { weight: 1.0, point: w }
        ])
        .is_err());
    }

    #[test]
    fn identity_expectation_on_every_representation() {
        let grid = GridDensity::uniform(fs_uniform_grid(2, 16, 16).unwrap());
        let samples = SampleEnsemble::uniform(2, 100, 1).unwrap();
        for s in [q2().into(), grid.into(), samples.into()] {
            let e: GeometricState = s;
            assert!((expectation(&e, &Observable::identity(2)).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn histogram_of_reference_qubit_atoms() {
        let h = histogram(&q2().into(), 10, 10).unwrap();
        let (i, j) = h.bin_of(0.568, 0.983);
        assert!((h.mass(i, j) - 0.864).abs() < 1e-12);
        let (k, l) = h.bin_of(0.432, 4.124);
        assert!((h.mass(k, l) - 0.136).abs() < 1e-12);
        assert_eq!(h.masses.iter().filter(|m| **m > 0.0).count(), 2);
        assert!((h.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn histogram_wraps_two_pi() {
        let h = Histogram::empty(4, 8);
        assert_eq!(h.bin_of(1.0, TAU), (3, 0));
        assert_eq!(h.bin_of(0.0, TAU - 1e-9), (0, 7));
    }

    #[test]
    fn histogram_rejects_qutrits() {
        let s: GeometricState = DeltaMixture::single(PureStatePoint::basis(3, 1).unwrap()).into();
        assert!(histogram(&s, 4, 4).is_err());
    }

    #[test]
    fn uniform_grid_histogram_follows_volumes() {
        let g = GridDensity::uniform(fs_uniform_grid(2, 20, 20).unwrap());
        let h = histogram(&g.into(), 10, 5).unwrap();
        for m in &h.masses {
            assert!((m - 1.0 / 50.0).abs() < 1e-12);
        }
        assert!(h.to_csv().starts_with("p_lo,p_hi,nu_lo,nu_hi,mass\n"));
    }

    #[test]
    fn uniform_samples_fill_bins_by_volume() {
        let n = 100_000;
        let s = SampleEnsemble::uniform(2, n, 11).unwrap();
        let h = histogram(&s.into(), 10, 10).unwrap();
        let expected = 1.0 / 100.0;
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        for m in &h.masses {
            assert!((m - expected).abs() <= 3.0 * se, "mass {m} vs {expected} ± {se}");
        }
        assert!((h.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_samples_are_maximally_mixed() {
        let s = SampleEnsemble::uniform(3, 20_000, 5).unwrap();
        let est = s.density_matrix_estimate();
        let target = identity(3) * c(1.0 / 3.0, 0.0);
        assert!(est.max_sigma_deviation(&target, 1e-12) < 4.0);
    }

    #[test]
    fn gauge_rotation_of_atoms_changes_nothing() {
        let raw = vec![c(0.3, 0.4), c(-0.5, 0.2), c(0.1, -0.6)];
        let rotated: Vec<_> = raw.iter().map(|z| z * Complex64::from_polar(1.0, 1.234)).collect();
        let a = DeltaMixture::single(PureStatePoint::new(raw).unwrap());
        let b = DeltaMixture::single(PureStatePoint::new(rotated).unwrap());
        let (ra, rb) = (density_matrix(&a.into()), density_matrix(&b.into()));
        assert!(max_abs_diff(ra.matrix(), rb.matrix()) < 1e-12);
    }

    #[test]
    fn sample_ensemble_validation() {
        let z = PureStatePoint::basis(2, 0).unwrap();
        assert!(SampleEnsemble::new(vec![z.clone()], Some(vec![0.5]), 0).is_err());
        assert!(SampleEnsemble::new(vec![z.clone()], Some(vec![1.0, 0.0]), 0).is_err());
        assert!(SampleEnsemble::new(vec![z], Some(vec![1.0]), 0).is_ok());
        assert!(SampleEnsemble::new(vec![], None, 0).is_err());
    }

    #[test]
    fn grid_density_rejects_bad_values() {
        let g = fs_uniform_grid(2, 2, 2).unwrap();
        assert!(GridDensity::new(g.clone(), vec![1.0; 3]).is_err());
        assert!(GridDensity::new(g.clone(), vec![1.0, -1.0, 1.0, 1.0]).is_err());
        assert!(GridDensity::new(g, vec![0.0; 4]).is_err());
    }

    #[test]
    fn povm_statistics_with_trivial_povm() {
        let povm = validate_povm(vec![identity(2)]).unwrap();
        let p = povm_statistics(&q2().into(), &povm).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delta_on_grid_node_matches_prob_phase() {
        let z = PureStatePoint::from_prob_phase(&ProbPhasePoint::qubit(0.25, 1.0).unwrap());
        let h = histogram(&DeltaMixture::single(z).into(), 4, 4).unwrap();
        assert_eq!(h.mass(1, 0), 1.0);
    }
}
