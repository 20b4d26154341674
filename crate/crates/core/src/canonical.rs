//! The geometric canonical ensemble `q(Z) = e^{−β h(Z)} / Q_β` with
//! `h(Z) = ⟨ψ(Z)|H|ψ(Z)⟩`, and its comparison with the Gibbs state.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{GqsError, Result};
use crate::gstate::{density_matrix, GeometricState, GridDensity, SampleEnsemble};
use crate::linalg::{hermitian_eigen, hermitian_map, max_abs_diff, CMatrix};
use crate::manifold::{fs_uniform_grid, ProbPhasePoint, PureStatePoint};
use crate::observables::{eval_amplitudes, eval_observable, DensityMatrix, Observable};

/// Largest relative change between successive grid refinements before the
/// resolution is reported as too coarse.
pub const REFINEMENT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSpec {
    hamiltonian: Observable,
    beta: f64,
}

impl CanonicalSpec {
    pub fn new(hamiltonian: Observable, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(GqsError::invalid(format!("inverse temperature must be finite and >= 0, got {beta}")));
        }
        Ok(CanonicalSpec { hamiltonian, beta })
    }

    pub fn hamiltonian(&self) -> &Observable {
        &self.hamiltonian
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    fn ground_energy(&self) -> f64 {
        self.hamiltonian.spectrum()[0]
    }
}

/// `h(Z) = ⟨ψ(Z)|H|ψ(Z)⟩`.
pub fn energy(spec: &CanonicalSpec, point: &PureStatePoint) -> Result<f64> {
    eval_observable(&spec.hamiltonian, point)
}

/// Bins along each probability and each phase axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridResolution {
    pub bins_p: usize,
    pub bins_phase: usize,
}

impl GridResolution {
    pub fn square(bins: usize) -> Self {
        GridResolution { bins_p: bins, bins_phase: bins }
    }

    fn halved(self) -> Self {
        GridResolution {
            bins_p: (self.bins_p / 2).max(1),
            bins_phase: (self.bins_phase / 2).max(1),
        }
    }
}

/// `∫ e^{−β (h − E_0)} dV_FS` on a grid, with `E_0` the ground energy.
fn shifted_partition_sum(spec: &CanonicalSpec, res: GridResolution) -> Result<f64> {
    let grid = fs_uniform_grid(spec.dim(), res.bins_p, res.bins_phase)?;
    let e0 = spec.ground_energy();
    let m = spec.hamiltonian.matrix();
    let partials: Vec<f64> = (0..grid.len())
        .collect::<Vec<_>>()
        .par_chunks(4096)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&i| {
                    let h = eval_amplitudes(m, &grid.center_amplitudes(i));
                    grid.volume(i) * (-spec.beta * (h - e0)).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok(crate::linalg::pairwise_sum(&partials))
}

fn checked_shifted_sum(spec: &CanonicalSpec, res: GridResolution) -> Result<f64> {
    let fine = shifted_partition_sum(spec, res)?;
    let coarse_res = res.halved();
    if coarse_res != res {
        let coarse = shifted_partition_sum(spec, coarse_res)?;
        let relative = (fine - coarse).abs() / fine.abs();
        if relative > REFINEMENT_TOL {
            let shift = (-spec.beta * spec.ground_energy()).exp();
            return Err(GqsError::CoarseResolution {
                coarse: coarse * shift,
                fine: fine * shift,
                relative,
            });
        }
    }
    Ok(fine)
}

/// `Q_β = ∫ dV_FS e^{−β h(Z)}` by midpoint quadrature (D ≤ 4).
///
/// The value at `res` is compared with the value at half the resolution and
/// a [`GqsError::CoarseResolution`] is returned if they differ by more than
/// [`REFINEMENT_TOL`] relative.
pub fn partition_function(spec: &CanonicalSpec, res: GridResolution) -> Result<f64> {
    let shifted = checked_shifted_sum(spec, res)?;
    Ok(shifted * (-spec.beta * spec.ground_energy()).exp())
}

/// The canonical density `e^{−βh}/Q_β` tabulated on a grid.
pub fn canonical_grid_state(spec: &CanonicalSpec, res: GridResolution) -> Result<GridDensity> {
    checked_shifted_sum(spec, res)?;
    let grid = fs_uniform_grid(spec.dim(), res.bins_p, res.bins_phase)?;
    let e0 = spec.ground_energy();
    let m = spec.hamiltonian.matrix().clone();
    let beta = spec.beta;
    GridDensity::from_fn(grid, move |z| (-beta * (eval_amplitudes(&m, z) - e0)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Samples kept after burn-in.
    pub n_samples: usize,
    pub seed: u64,
    /// Standard deviation of the Gaussian step in each probability.
    pub step_p: f64,
    /// Standard deviation of the Gaussian step in each phase (radians).
    pub step_phase: f64,
    /// Burn-in length as a fraction of `n_samples`.
    pub burn_in_fraction: f64,
}

impl SamplerConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        SamplerConfig {
            n_samples,
            seed,
            step_p: 0.1,
            step_phase: 0.5,
            burn_in_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerRun {
    pub ensemble: SampleEnsemble,
    pub acceptance_rate: f64,
    pub burn_in: usize,
    pub warning: Option<String>,
}

/// Fold `x` into `[0, 1]` by reflecting at both ends.
fn reflect_unit(x: f64) -> f64 {
    let y = x.rem_euclid(2.0);
    if y > 1.0 {
        2.0 - y
    } else {
        y
    }
}

/// Random-walk Metropolis chain targeting `e^{−βh}` in `(p, ν)` coordinates.
///
/// The Fubini-Study measure is flat in these coordinates so no Jacobian enters
/// the acceptance ratio. Probabilities are reflected into `[0, 1]`; a proposal
/// leaving the simplex through `Σ p > 1` has zero target density and is
/// rejected. Phases wrap modulo 2π.
pub fn canonical_sampler(spec: &CanonicalSpec, cfg: &SamplerConfig) -> Result<SamplerRun> {
    if cfg.n_samples == 0 {
        return Err(GqsError::invalid("n_samples must be >= 1"));
    }
    if !(cfg.step_p > 0.0 && cfg.step_phase > 0.0) {
        return Err(GqsError::invalid("step sizes must be positive"));
    }
    if !(0.0..10.0).contains(&cfg.burn_in_fraction) {
        return Err(GqsError::invalid("burn-in fraction out of range"));
    }
    let d = spec.dim();
    let m = d - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let step_p = Normal::new(0.0, cfg.step_p).map_err(|e| GqsError::invalid(e.to_string()))?;
    let step_nu = Normal::new(0.0, cfg.step_phase).map_err(|e| GqsError::invalid(e.to_string()))?;
    let h_of = |p: &[f64], nu: &[f64]| -> f64 {
        let coords = ProbPhasePoint::new(p.to_vec(), nu.to_vec()).expect("chain stays in the simplex");
        eval_amplitudes(spec.hamiltonian.matrix(), PureStatePoint::from_prob_phase(&coords).amplitudes())
    };

    let mut p = vec![1.0 / d as f64; m];
    let mut nu = vec![0.0; m];
    let mut h = h_of(&p, &nu);
    let burn_in = (cfg.n_samples as f64 * cfg.burn_in_fraction).round() as usize;
    let total = burn_in + cfg.n_samples;
    let mut accepted = 0usize;
    let mut samples = Vec::with_capacity(cfg.n_samples);
    let mut p_new = vec![0.0; m];
    let mut nu_new = vec![0.0; m];
    for step in 0..total {
        for a in 0..m {
            p_new[a] = reflect_unit(p[a] + step_p.sample(&mut rng));
            nu_new[a] = (nu[a] + step_nu.sample(&mut rng)).rem_euclid(TAU);
        }
        let u: f64 = rng.random();
        if p_new.iter().sum::<f64>() <= 1.0 {
            let h_new = h_of(&p_new, &nu_new);
            if u < (-spec.beta * (h_new - h)).exp() {
                p.copy_from_slice(&p_new);
                nu.copy_from_slice(&nu_new);
                h = h_new;
                accepted += 1;
            }
        }
        if step >= burn_in {
            let coords = ProbPhasePoint::new(p.clone(), nu.clone())?;
            samples.push(PureStatePoint::from_prob_phase(&coords));
        }
    }
    let acceptance_rate = accepted as f64 / total as f64;
    let warning = if acceptance_rate < 0.1 {
        Some(format!(
            "acceptance rate {acceptance_rate:.3} is below 0.1; try step sizes near p={:.3}, phase={:.3}",
            cfg.step_p * 0.5,
            cfg.step_phase * 0.5
        ))
    } else if acceptance_rate > 0.9 {
        Some(format!(
            "acceptance rate {acceptance_rate:.3} is above 0.9; try step sizes near p={:.3}, phase={:.3}",
            cfg.step_p * 2.0,
            cfg.step_phase * 2.0
        ))
    } else {
        None
    };
    Ok(SamplerRun {
        ensemble: SampleEnsemble::new(samples, None, cfg.seed)?,
        acceptance_rate,
        burn_in,
        warning,
    })
}

/// Independent chains seeded `seed, seed+1, …`, concatenated in seed order.
pub fn canonical_sampler_chains(spec: &CanonicalSpec, cfg: &SamplerConfig, chains: usize) -> Result<SamplerRun> {
    if chains == 0 {
        return Err(GqsError::invalid("need at least one chain"));
    }
    let runs: Vec<SamplerRun> = (0..chains as u64)
        .into_par_iter()
        .map(|k| {
            let mut c = *cfg;
            c.seed = cfg.seed.wrapping_add(k);
            canonical_sampler(spec, &c)
        })
        .collect::<Result<_>>()?;
    let acceptance_rate = runs.iter().map(|r| r.acceptance_rate).sum::<f64>() / chains as f64;
    let burn_in = runs.iter().map(|r| r.burn_in).sum();
    let warning = runs.iter().find_map(|r| r.warning.clone());
    let samples = runs
        .into_iter()
        .flat_map(|r| r.ensemble.samples().to_vec())
        .collect();
    Ok(SamplerRun {
        ensemble: SampleEnsemble::new(samples, None, cfg.seed)?,
        acceptance_rate,
        burn_in,
        warning,
    })
}

/// `e^{−βH} / Tr e^{−βH}`.
pub fn gibbs_density_matrix(spec: &CanonicalSpec) -> DensityMatrix {
    let e0 = spec.ground_energy();
    let unnorm = hermitian_map(spec.hamiltonian.matrix(), |e| (-spec.beta * (e - e0)).exp());
    let z = unnorm.trace().re;
    DensityMatrix::from_trusted(unnorm / Complex64::new(z, 0.0))
}

/// Side-by-side geometric and Gibbs density matrices for one Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsComparison {
    pub rho_geometric: DensityMatrix,
    pub rho_gibbs: DensityMatrix,
    pub max_entry_difference: f64,
    /// Populations of the energy eigenstates, ascending energy.
    pub geometric_populations: Vec<f64>,
    pub gibbs_populations: Vec<f64>,
    /// `max |[H, ρ]|` entrywise.
    pub geometric_commutator: f64,
    pub gibbs_commutator: f64,
}

fn populations(rho: &CMatrix, basis: &CMatrix) -> Vec<f64> {
    let rotated = basis.adjoint() * rho * basis;
    (0..rotated.nrows()).map(|k| rotated[(k, k)].re).collect()
}

fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    let c = a * b - b * a;
    c.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn compare_geometric_gibbs(spec: &CanonicalSpec, res: GridResolution) -> Result<GibbsComparison> {
    let state: GeometricState = canonical_grid_state(spec, res)?.into();
    Ok(comparison_from(spec, density_matrix(&state)))
}

/// Comparison report for an externally computed geometric density matrix.
pub fn comparison_from(spec: &CanonicalSpec, rho_geometric: DensityMatrix) -> GibbsComparison {
    let rho_gibbs = gibbs_density_matrix(spec);
    let h = spec.hamiltonian.matrix();
    let (_, basis) = hermitian_eigen(h);
    GibbsComparison {
        max_entry_difference: max_abs_diff(rho_geometric.matrix(), rho_gibbs.matrix()),
        geometric_populations: populations(rho_geometric.matrix(), &basis),
        gibbs_populations: populations(rho_gibbs.matrix(), &basis),
        geometric_commutator: commutator_norm(h, rho_geometric.matrix()),
        gibbs_commutator: commutator_norm(h, rho_gibbs.matrix()),
        rho_geometric,
        rho_gibbs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use std::f64::consts::PI;

    fn qubit_spec(beta: f64) -> CanonicalSpec {
        CanonicalSpec::new(Observable::diagonal(&[0.0, 1.0]), beta).unwrap()
    }

    /// Mean of `p` under the density `∝ e^{−βp}` on `[0, 1]`.
    fn truncated_exp_mean(beta: f64) -> f64 {
        1.0 / beta - (-beta).exp() / (1.0 - (-beta).exp())
    }

    #[test]
    fn energy_examples() {
        let spec = qubit_spec(1.0);
        assert_eq!(energy(&spec, &PureStatePoint::basis(2, 0).unwrap()).unwrap(), 0.0);
        for nu in [0.0, 2.0, 5.5] {
            let z = PureStatePoint::from_prob_phase(&ProbPhasePoint::qubit(0.5, nu).unwrap());
            assert!((energy(&spec, &z).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn partition_function_closed_forms() {
        let q0 = partition_function(&qubit_spec(0.0), GridResolution::square(64)).unwrap();
        assert!((q0 / PI - 1.0).abs() < 0.01);
        let q1 = partition_function(&qubit_spec(1.0), GridResolution::square(256)).unwrap();
        let exact = PI * (1.0 - (-1.0f64).exp());
        assert!((q1 / exact - 1.0).abs() < 0.01);
        let res = GridResolution { bins_p: 4096, bins_phase: 4 };
        let q50 = partition_function(&qubit_spec(50.0), res).unwrap();
        assert!((q50 / (PI / 50.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn coarse_resolution_is_reported() {
        let err = partition_function(&qubit_spec(50.0), GridResolution::square(16)).unwrap_err();
        assert!(matches!(err, GqsError::CoarseResolution { .. }));
    }

    #[test]
    fn ground_energy_shift_is_undone() {
        let shifted = CanonicalSpec::new(Observable::diagonal(&[2.0, 3.0]), 1.0).unwrap();
        let q = partition_function(&shifted, GridResolution::square(128)).unwrap();
        let exact = PI * (1.0 - (-1.0f64).exp()) * (-2.0f64).exp();
        assert!((q / exact - 1.0).abs() < 1e-3);
    }

    #[test]
    fn infinite_temperature_grid_is_flat() {
        let g = canonical_grid_state(&qubit_spec(0.0), GridResolution::square(32)).unwrap();
        let first = g.values()[0];
        assert!(g.values().iter().all(|v| (v - first).abs() < 1e-12));
        assert!((first - 1.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn canonical_marginal_is_exponential_in_p() {
        let res = GridResolution { bins_p: 64, bins_phase: 16 };
        let g = canonical_grid_state(&qubit_spec(1.0), res).unwrap();
        let grid = g.grid();
        // values depend on p only
        for s in 0..64 {
            let row = &g.values()[s * 16..(s + 1) * 16];
            let spread = row.iter().cloned().fold(f64::MIN, f64::max) - row.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread <= 1e-10);
        }
        // ratio between adjacent p bins equals e^{−Δp}
        let p0 = grid.center(0).probs()[0];
        let p1 = grid.center(16).probs()[0];
        let ratio = g.values()[16] / g.values()[0];
        assert!((ratio - (-(p1 - p0)).exp()).abs() < 1e-12);
    }

    #[test]
    fn gibbs_examples() {
        let g0 = gibbs_density_matrix(&qubit_spec(0.0));
        assert!(max_abs_diff(g0.matrix(), &(identity(2) * Complex64::new(0.5, 0.0))) < 1e-15);
        let g1 = gibbs_density_matrix(&qubit_spec(1.0));
        let e = (-1.0f64).exp();
        assert!((g1.matrix()[(0, 0)].re - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!((g1.matrix()[(0, 0)].re - 0.7311).abs() < 1e-4);
        assert!((g1.matrix()[(1, 1)].re - 0.2689).abs() < 1e-4);
        let h = Observable::new(CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.3, 0.0),
                Complex64::new(0.1, -0.4),
                Complex64::new(0.1, 0.4),
                Complex64::new(-0.7, 0.0),
            ],
        ))
        .unwrap();
        let spec = CanonicalSpec::new(h, 1.3).unwrap();
        let rho = gibbs_density_matrix(&spec);
        assert!(commutator_norm(spec.hamiltonian().matrix(), rho.matrix()) < 1e-12);
    }

    #[test]
    fn geometric_vs_gibbs_qubit() {
        let report = compare_geometric_gibbs(&qubit_spec(1.0), GridResolution::square(256)).unwrap();
        assert!((report.geometric_populations[1] - truncated_exp_mean(1.0)).abs() < 1e-3);
        assert!((report.gibbs_populations[1] - 0.26894).abs() < 1e-4);
        assert!((report.max_entry_difference - 0.149).abs() < 1e-3);
        assert!(report.geometric_commutator < 1e-8);

        let flat = compare_geometric_gibbs(&qubit_spec(0.0), GridResolution::square(32)).unwrap();
        assert!(flat.max_entry_difference < 1e-12);
    }

    #[test]
    fn geometric_population_decreases_with_beta() {
        let pops: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 5.0]
            .iter()
            .map(|&b| {
                compare_geometric_gibbs(&qubit_spec(b), GridResolution { bins_p: 256, bins_phase: 8 })
                    .unwrap()
                    .geometric_populations[1]
            })
            .collect();
        for w in pops.windows(2) {
            assert!(w[1] < w[0], "{pops:?}");
        }
        for (b, p) in [0.5, 1.0, 2.0, 5.0].iter().zip(&pops[1..]) {
            assert!((p - truncated_exp_mean(*b)).abs() < 1e-4);
        }
    }

    #[test]
    fn sampler_matches_truncated_exponential() {
        let run = canonical_sampler(&qubit_spec(1.0), &SamplerConfig::new(100_000, 7)).unwrap();
        assert_eq!(run.ensemble.len(), 100_000);
        assert_eq!(run.burn_in, 10_000);
        let est = run.ensemble.expectation_estimate(&Observable::diagonal(&[0.0, 1.0])).unwrap();
        assert!(
            (est.value - 0.41802).abs() <= 3.0 * est.stderr,
            "{} ± {}",
            est.value,
            est.stderr
        );
    }

    #[test]
    fn sampler_is_deterministic() {
        let cfg = SamplerConfig::new(2_000, 99);
        let a = canonical_sampler(&qubit_spec(1.0), &cfg).unwrap();
        let b = canonical_sampler(&qubit_spec(1.0), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampler_rejects_bad_config() {
        assert!(canonical_sampler(&qubit_spec(1.0), &SamplerConfig::new(0, 1)).is_err());
        let mut cfg = SamplerConfig::new(10, 1);
        cfg.step_p = 0.0;
        assert!(canonical_sampler(&qubit_spec(1.0), &cfg).is_err());
    }

    #[test]
    fn sampler_flags_extreme_acceptance() {
        let mut cfg = SamplerConfig::new(2_000, 3);
        cfg.step_p = 1e-4;
        cfg.step_phase = 1e-4;
        let run = canonical_sampler(&qubit_spec(1.0), &cfg).unwrap();
        assert!(run.warning.as_deref().unwrap().contains("above 0.9"));
    }

    #[test]
    fn chains_concatenate_in_seed_order() {
        let cfg = SamplerConfig::new(500, 10);
        let merged = canonical_sampler_chains(&qubit_spec(1.0), &cfg, 3).unwrap();
        assert_eq!(merged.ensemble.len(), 1500);
        let mut c2 = cfg;
        c2.seed = 11;
        let second = canonical_sampler(&qubit_spec(1.0), &c2).unwrap();
        assert_eq!(&merged.ensemble.samples()[500..1000], second.ensemble.samples());
    }

    #[test]
    fn rejects_negative_beta() {
        assert!(CanonicalSpec::new(Observable::identity(2), -1.0).is_err());
        assert!(CanonicalSpec::new(Observable::identity(2), f64::NAN).is_err());
    }
}
