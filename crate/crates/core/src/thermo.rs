//! System–environment reduction of a bipartite pure state into the
//! environment-labelled ensemble `{p_α, |χ_α⟩}` and back.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{GqsError, Result};
use crate::gstate::{histogram, Atom, DeltaMixture, GeometricState, Histogram};
use crate::linalg::{trace_distance, CMatrix};
use crate::manifold::PureStatePoint;
use crate::observables::DensityMatrix;

pub const BIPARTITE_NORM_TOL: f64 = 1e-12;

/// Largest environment dimension accepted by the scaling report.
pub const MAX_SCALING_ENV_DIM: usize = 4096;

/// Largest `d_S · d_E` accepted by the scaling report.
pub const MAX_SCALING_TOTAL_DIM: usize = 1 << 16;

/// `|ψ_SE⟩ = Σ_{kα} ψ_{kα} |s_k⟩|e_α⟩`, stored as a `d_S × d_E` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartitePureState {
    psi: CMatrix,
}

impl BipartitePureState {
    pub fn new(psi: CMatrix) -> Result<Self> {
        if psi.nrows() < 1 || psi.ncols() < 1 {
            return Err(GqsError::invalid("empty bipartite state"));
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > BIPARTITE_NORM_TOL {
            return Err(GqsError::NotNormalized(norm));
        }
        Ok(BipartitePureState { psi })
    }

    /// From a flat vector in `|s_k⟩ ⊗ |e_α⟩` order (environment index fastest).
    pub fn from_vector(amps: &[Complex64], d_s: usize) -> Result<Self> {
        if d_s == 0 || !amps.len().is_multiple_of(d_s) {
            return Err(GqsError::invalid(format!(
                "vector of length {} does not split with system dimension {d_s}",
                amps.len()
            )));
        }
        let d_e = amps.len() / d_s;
        Self::new(CMatrix::from_row_slice(d_s, d_e, amps))
    }

    /// Haar-random global state: normalized standard complex Gaussians.
    pub fn haar_random(d_s: usize, d_e: usize, rng: &mut impl rand::Rng) -> Self {
        let mut psi = CMatrix::from_fn(d_s, d_e, |_, _| {
            Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        });
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        psi /= Complex64::new(norm, 0.0);
        BipartitePureState { psi }
    }

    pub fn d_s(&self) -> usize {
        self.psi.nrows()
    }

    pub fn d_e(&self) -> usize {
        self.psi.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.psi
    }
}

/// One environment label `α` with its weight and conditional system state.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEntry {
    pub label: usize,
    pub weight: f64,
    /// `|χ_α⟩` exactly as produced by the reduction (not gauge-fixed).
    pub chi: Vec<Complex64>,
}

/// `{p_α, |χ_α⟩}` indexed by environment basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEnsemble {
    pub d_s: usize,
    pub entries: Vec<LabeledEntry>,
    /// Labels with `p_α = 0`, which carry no state.
    pub zero_labels: Vec<usize>,
}

impl LabeledEnsemble {
    /// Gauge-fixed manifold points of the conditional states, in entry order.
    pub fn gauge_fixed_states(&self) -> Vec<PureStatePoint> {
        self.entries
            .iter()
            .map(|e| PureStatePoint::new(e.chi.clone()).expect("χ states are normalized"))
            .collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }
}

/// `p_α = Σ_k |ψ_{kα}|²`, `|χ_α⟩ = Σ_k ψ_{kα}|s_k⟩ / √p_α`.
pub fn reduce(state: &BipartitePureState) -> LabeledEnsemble {
    let mut entries = Vec::new();
    let mut zero_labels = Vec::new();
    for (alpha, col) in state.psi.column_iter().enumerate() {
        let weight: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        if weight == 0.0 {
            zero_labels.push(alpha);
            continue;
        }
        let s = weight.sqrt();
        entries.push(LabeledEntry {
            label: alpha,
            weight,
            chi: col.iter().map(|z| z / s).collect(),
        });
    }
    LabeledEnsemble {
        d_s: state.d_s(),
        entries,
        zero_labels,
    }
}

/// `Σ_α p_α δ̃[Z − Z(χ_α)]`; coincident atoms stay separate.
pub fn geometric_state_of(ensemble: &LabeledEnsemble) -> Result<DeltaMixture> {
    let atoms = ensemble
        .entries
        .iter()
        .zip(ensemble.gauge_fixed_states())
        .map(|(e, point)| Atom { weight: e.weight, point })
        .collect();
    DeltaMixture::normalized(atoms)
}

/// `ψ_{kα} = √p_α ⟨s_k|χ_α⟩`; labels without an entry become zero columns.
pub fn reconstruct_global(ensemble: &LabeledEnsemble, d_e: usize) -> Result<BipartitePureState> {
    let mut psi = CMatrix::zeros(ensemble.d_s, d_e);
    for e in &ensemble.entries {
        if e.label >= d_e {
            return Err(GqsError::LabelOutOfRange { label: e.label, dim: d_e });
        }
        if e.chi.len() != ensemble.d_s {
            return Err(GqsError::DimensionMismatch {
                expected: ensemble.d_s,
                found: e.chi.len(),
            });
        }
        let s = e.weight.sqrt();
        for (k, z) in e.chi.iter().enumerate() {
            psi[(k, e.label)] = z * s;
        }
    }
    if let Some(&label) = ensemble.zero_labels.iter().find(|&&l| l >= d_e) {
        return Err(GqsError::LabelOutOfRange { label, dim: d_e });
    }
    BipartitePureState::new(psi)
}

/// Environment density matrix `ρ^E_{αβ} = ⟨e_α|Tr_S|ψ⟩⟨ψ||e_β⟩
/// = √(p_α p_β) ⟨χ_β|χ_α⟩`.
pub fn environment_density_matrix(ensemble: &LabeledEnsemble, d_e: usize) -> Result<DensityMatrix> {
    if let Some(e) = ensemble.entries.iter().find(|e| e.label >= d_e) {
        return Err(GqsError::LabelOutOfRange { label: e.label, dim: d_e });
    }
    let mut rho = CMatrix::zeros(d_e, d_e);
    for a in &ensemble.entries {
        for b in &ensemble.entries {
            let overlap: Complex64 = b.chi.iter().zip(&a.chi).map(|(x, y)| x.conj() * y).sum();
            rho[(a.label, b.label)] = overlap * (a.weight * b.weight).sqrt();
        }
    }
    Ok(DensityMatrix::from_trusted(rho))
}

/// System density matrix `Σ_α p_α |χ_α⟩⟨χ_α|` from the raw conditional states.
pub fn system_density_matrix(ensemble: &LabeledEnsemble) -> DensityMatrix {
    let d = ensemble.d_s;
    let mut rho = CMatrix::zeros(d, d);
    for e in &ensemble.entries {
        for a in 0..d {
            for b in 0..d {
                rho[(a, b)] += e.chi[a] * e.chi[b].conj() * e.weight;
            }
        }
    }
    DensityMatrix::from_trusted(rho)
}

/// Per-environment-size statistics of Haar-random global states.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub d_e: usize,
    /// Trace distance of `ρ^S` from `I/d_S`, one entry per seed in seed order.
    pub distances: Vec<f64>,
    pub mean_distance: f64,
    pub stderr: f64,
    /// Seed-averaged histogram of the system's geometric state (qubits only).
    pub histogram: Option<Histogram>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub d_s: usize,
    pub base_seed: u64,
    pub rows: Vec<ScalingRow>,
}

/// RNG for one `(seed, d_E)` cell of the report; streams separate sizes.
pub fn scaling_rng(seed: u64, d_e: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(d_e as u64);
    rng
}

/// Trace distances of reduced states of Haar-random global states from the
/// maximally mixed state, for each environment size, seeds
/// `base_seed..base_seed + n_seeds`.
pub fn environment_scaling_report(
    d_s: usize,
    d_es: &[usize],
    n_seeds: usize,
    base_seed: u64,
    bins: usize,
) -> Result<ScalingReport> {
    if d_s < 2 {
        return Err(GqsError::UnsupportedDimension(d_s, "system dimension must be >= 2"));
    }
    if n_seeds == 0 || bins == 0 {
        return Err(GqsError::invalid("need at least one seed and one bin"));
    }
    for &d_e in d_es {
        if d_e == 0 || d_e > MAX_SCALING_ENV_DIM || d_s * d_e > MAX_SCALING_TOTAL_DIM {
            return Err(GqsError::ResourceLimit(format!(
                "d_E = {d_e} with d_S = {d_s} exceeds the desk-scale limits (d_E <= {MAX_SCALING_ENV_DIM}, d_S·d_E <= {MAX_SCALING_TOTAL_DIM})"
            )));
        }
    }
    let mixed = DensityMatrix::maximally_mixed(d_s);
    let rows = d_es
        .iter()
        .map(|&d_e| {
            let per_seed: Vec<(f64, Option<Histogram>)> = (0..n_seeds as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = scaling_rng(base_seed + i, d_e);
                    let state = BipartitePureState::haar_random(d_s, d_e, &mut rng);
                    let ens = reduce(&state);
                    let rho = system_density_matrix(&ens);
                    let dist = trace_distance(rho.matrix(), mixed.matrix());
                    let hist = if d_s == 2 {
                        let g: GeometricState = geometric_state_of(&ens)?.into();
                        Some(histogram(&g, bins, bins)?)
                    } else {
                        None
                    };
                    Ok((dist, hist))
                })
                .collect::<Result<_>>()?;
            let distances: Vec<f64> = per_seed.iter().map(|r| r.0).collect();
            let n = distances.len() as f64;
            let mean = distances.iter().sum::<f64>() / n;
            let stderr = if distances.len() > 1 {
                (distances.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            let histogram = if d_s == 2 {
                let mut acc: Option<Histogram> = None;
                for (_, h) in per_seed {
                    let h = h.expect("qubit histograms are computed");
                    match acc.as_mut() {
                        None => acc = Some(h),
                        Some(a) => a.masses.iter_mut().zip(&h.masses).for_each(|(x, y)| *x += y),
                    }
                }
                acc.map(|mut h| {
                    h.masses.iter_mut().for_each(|m| *m /= n);
                    h
                })
            } else {
                None
            };
            Ok(ScalingRow {
                d_e,
                distances,
                mean_distance: mean,
                stderr,
                histogram,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ScalingReport { d_s, base_seed, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gstate::density_matrix;
    use crate::linalg::{identity, max_abs_diff};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell() -> BipartitePureState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        BipartitePureState::new(CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)])).unwrap()
    }

    fn product(a: &[Complex64], b: &[Complex64]) -> BipartitePureState {
        let na = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nb = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        BipartitePureState::new(CMatrix::from_fn(a.len(), b.len(), |k, al| a[k] * b[al] / (na * nb))).unwrap()
    }

    #[test]
    fn bell_state_reduction() {
        let ens = reduce(&bell());
        assert_eq!(ens.entries.len(), 2);
        for (k, e) in ens.entries.iter().enumerate() {
            assert!((e.weight - 0.5).abs() < 1e-15);
            assert_eq!(e.label, k);
            assert!((e.chi[k] - c(1.0, 0.0)).norm() < 1e-15);
        }
        let mix = geometric_state_of(&ens).unwrap();
        let coords: Vec<_> = mix.atoms().iter().map(|a| a.point.to_prob_phase()).collect();
        assert_eq!(coords[0].probs()[0], 0.0);
        assert!((coords[1].probs()[0] - 1.0).abs() < 1e-15);
        assert_eq!(coords[1].phases()[0], 0.0);
        let rho_e = environment_density_matrix(&ens, 2).unwrap();
        assert!(max_abs_diff(rho_e.matrix(), &(identity(2) * c(0.5, 0.0))) < 1e-15);
        assert_eq!(reconstruct_global(&ens, 2).unwrap(), bell());
    }

    #[test]
    fn product_state_reduction() {
        let a = [c(0.6, 0.0), c(0.0, 0.8)];
        let b = [c(0.5, 0.5), c(0.0, 0.3), c(-0.2, 0.0), c(0.1, 0.1)];
        let state = product(&a, &b);
        let ens = reduce(&state);
        let bn: f64 = b.iter().map(|z| z.norm_sqr()).sum();
        let a_point = PureStatePoint::new(a.to_vec()).unwrap();
        for (e, z) in ens.entries.iter().zip(&b) {
            assert!((e.weight - z.norm_sqr() / bn).abs() < 1e-12);
        }
        for p in ens.gauge_fixed_states() {
            assert!((p.overlap(&a_point) - 1.0).abs() < 1e-12);
        }
        let mix = geometric_state_of(&ens).unwrap();
        assert_eq!(mix.atoms().len(), 4);
        let h = histogram(&mix.into(), 10, 10).unwrap();
        assert_eq!(h.masses.iter().filter(|m| **m > 0.0).count(), 1);
        assert!((h.total() - 1.0).abs() < 1e-12);
        let rho_e = environment_density_matrix(&ens, 4).unwrap();
        assert!((rho_e.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_columns_roundtrip() {
        let psi = CMatrix::from_row_slice(2, 3, &[c(0.6, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.8)]);
        let state = BipartitePureState::new(psi).unwrap();
        let ens = reduce(&state);
        assert_eq!(ens.zero_labels, vec![1]);
        assert_eq!(reconstruct_global(&ens, 3).unwrap(), state);
        let rho_e = environment_density_matrix(&ens, 3).unwrap();
        assert_eq!(rho_e.matrix()[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn label_out_of_range() {
        let ens = reduce(&bell());
        assert_eq!(
            reconstruct_global(&ens, 1).unwrap_err(),
            GqsError::LabelOutOfRange { label: 1, dim: 1 }
        );
        assert!(environment_density_matrix(&ens, 1).is_err());
    }

    #[test]
    fn gauge_fixed_roundtrip_loses_column_phases_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let state = BipartitePureState::haar_random(3, 5, &mut rng);
        let mut ens = reduce(&state);
        for (e, p) in ens.entries.iter_mut().zip(reduce(&state).gauge_fixed_states()) {
            e.chi = p.into_amplitudes();
        }
        let back = reconstruct_global(&ens, 5).unwrap();
        assert!(max_abs_diff(back.matrix(), state.matrix()) > 1e-3);
        for a in 0..5 {
            let col_a = back.matrix().column(a);
            let col_b = state.matrix().column(a);
            let overlap: Complex64 = col_a.iter().zip(col_b.iter()).map(|(x, y)| x.conj() * y).sum();
            let na: f64 = col_a.iter().map(|z| z.norm_sqr()).sum();
            assert!((overlap.norm() - na).abs() < 1e-12);
        }
    }

    #[test]
    fn geometric_state_matches_system_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let state = BipartitePureState::haar_random(2, 64, &mut rng);
        let ens = reduce(&state);
        let mix = geometric_state_of(&ens).unwrap();
        assert_eq!(mix.atoms().len(), 64);
        let rho = density_matrix(&mix.into());
        let oracle = state.matrix() * state.matrix().adjoint();
        assert!(max_abs_diff(rho.matrix(), &oracle) < 1e-12);
    }

    #[test]
    fn from_vector_layout() {
        let v: Vec<Complex64> = (0..6).map(|i| c(i as f64, 0.0) / 55f64.sqrt()).collect();
        let s = BipartitePureState::from_vector(&v, 2).unwrap();
        assert_eq!(s.d_e(), 3);
        assert_eq!(s.matrix()[(1, 0)], v[3]);
        assert!(BipartitePureState::from_vector(&v, 4).is_err());
    }

    #[test]
    fn scaling_report_guards_and_determinism() {
        assert!(matches!(
            environment_scaling_report(2, &[8192], 1, 0, 4),
            Err(GqsError::ResourceLimit(_))
        ));
        let a = environment_scaling_report(2, &[2, 16], 5, 42, 8).unwrap();
        let b = environment_scaling_report(2, &[2, 16], 5, 42, 8).unwrap();
        assert_eq!(a, b);
        for row in &a.rows {
            assert!((row.histogram.as_ref().unwrap().total() - 1.0).abs() < 1e-9);
            assert_eq!(row.distances.len(), 5);
        }
        let qutrit = environment_scaling_report(3, &[4], 2, 0, 4).unwrap();
        assert!(qutrit.rows[0].histogram.is_none());
    }
}
