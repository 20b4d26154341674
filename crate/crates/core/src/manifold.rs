//! Points of the pure-state manifold CP^{D-1}, probability + phase coordinates
//! and Fubini-Study quadrature grids.
//!
//! In probability + phase coordinates `Z^α = √p_α e^{iν_α}` with `ν_0 = 0` the
//! Fubini-Study volume element is flat: `dV_FS = Π_{α≥1} dp_α dν_α / 2`.
//! The total volume of CP^{D-1} is `π^{D-1} / (D-1)!`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GqsError, Result};
use crate::linalg::{outer, CMatrix};

/// Normalization tolerance enforced at construction.
pub const NORM_TOL: f64 = 1e-12;

/// Amplitudes at or below this modulus do not fix the gauge.
pub const GAUGE_EPS: f64 = 1e-9;

/// Largest dimension for which grid quadrature is offered.
pub const MAX_GRID_DIM: usize = 4;

/// Volume of CP^{dim-1} under the Fubini-Study measure.
pub fn fs_total_volume(dim: usize) -> f64 {
    let n = dim.saturating_sub(1);
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    PI.powi(n as i32) / fact
}

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn arg(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.im.atan2(z.re)
    }
}

/// Multiply by the global phase that makes the first component with modulus
/// above [`GAUGE_EPS`] real and nonnegative.
pub fn gauge_fix(amps: &mut [Complex64]) {
    if let Some(lead) = amps.iter().position(|z| z.norm() > GAUGE_EPS) {
        let theta = arg(amps[lead]);
        if theta == 0.0 {
            return;
        }
        let rot = Complex64::from_polar(1.0, -theta);
        for z in amps.iter_mut() {
            *z *= rot;
        }
        // the leading component is real by construction, drop rounding residue
        amps[lead] = Complex64::new(amps[lead].re, 0.0);
    }
}

/// A normalized, gauge-fixed point of CP^{D-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct PureStatePoint {
    amps: Vec<Complex64>,
}

impl PureStatePoint {
    /// Normalize and gauge-fix an arbitrary nonzero vector.
    pub fn new(mut amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(GqsError::UnsupportedDimension(amps.len(), "need D >= 2"));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(GqsError::invalid("non-finite amplitude"));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= f64::MIN_POSITIVE {
            return Err(GqsError::ZeroNorm(norm));
        }
        for z in amps.iter_mut() {
            *z /= norm;
        }
        gauge_fix(&mut amps);
        Ok(PureStatePoint { amps })
    }

    pub fn from_reals(re_im: &[(f64, f64)]) -> Result<Self> {
        Self::new(re_im.iter().map(|&(r, i)| Complex64::new(r, i)).collect())
    }

    /// Computational basis state `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(GqsError::invalid(format!("basis index {k} >= {dim}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[k] = Complex64::new(1.0, 0.0);
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    /// The rank-one projector `|ψ(Z)⟩⟨ψ(Z)|`, i.e. entries `Z^α conj(Z^β)`.
    pub fn projector(&self) -> CMatrix {
        outer(&self.amps)
    }

    /// Index of the component that fixes the gauge.
    fn reference_index(&self) -> usize {
        self.amps
            .iter()
            .position(|z| z.norm() > GAUGE_EPS)
            .unwrap_or(0)
    }

    pub fn to_prob_phase(&self) -> ProbPhasePoint {
        let reference = arg(self.amps[self.reference_index()]);
        let probs = self.amps[1..].iter().map(|z| z.norm_sqr()).collect();
        let phases = self.amps[1..]
            .iter()
            .map(|&z| {
                if z.re == 0.0 && z.im == 0.0 {
                    0.0
                } else {
                    wrap_phase(arg(z) - reference)
                }
            })
            .collect();
        ProbPhasePoint { probs, phases }
    }

    pub fn from_prob_phase(coords: &ProbPhasePoint) -> Self {
        let mut amps = Vec::with_capacity(coords.dim());
        amps.push(Complex64::new(coords.p0().sqrt(), 0.0));
        for (&p, &nu) in coords.probs.iter().zip(&coords.phases) {
            amps.push(Complex64::from_polar(p.sqrt(), nu));
        }
        // coordinates are validated, so the vector is normalized up to rounding
        Self::new(amps).expect("prob-phase coordinates give a nonzero vector")
    }

    /// Fidelity-style overlap `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &PureStatePoint) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }
}

/// Coordinates `(p_1..p_{D-1}, ν_1..ν_{D-1})`, with `p_0 = 1 − Σ p_α` and `ν_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbPhasePoint {
    #[serde(rename = "p")]
    probs: Vec<f64>,
    #[serde(rename = "nu")]
    phases: Vec<f64>,
}

impl ProbPhasePoint {
    /// Validate probabilities and wrap phases into `[0, 2π)`.
    pub fn new(probs: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.len() != phases.len() {
            return Err(GqsError::invalid(format!(
                "need equal, nonzero numbers of probabilities and phases (got {} and {})",
                probs.len(),
                phases.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(GqsError::InvalidProbabilities(format!("negative or non-finite p = {p}")));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + NORM_TOL {
            return Err(GqsError::InvalidProbabilities(format!("sum of p_α = {total} > 1")));
        }
        if phases.iter().any(|v| !v.is_finite()) {
            return Err(GqsError::invalid("non-finite phase"));
        }
        let phases = phases.into_iter().map(wrap_phase).collect();
        Ok(ProbPhasePoint { probs, phases })
    }

    /// Qubit convenience constructor `Z = (√(1−p), √p e^{iν})`.
    pub fn qubit(p: f64, nu: f64) -> Result<Self> {
        Self::new(vec![p], vec![nu])
    }

    pub fn dim(&self) -> usize {
        self.probs.len() + 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn p0(&self) -> f64 {
        (1.0 - self.probs.iter().sum::<f64>()).max(0.0)
    }

    /// Revalidate after deserialization.
    pub fn validated(self) -> Result<Self> {
        Self::new(self.probs, self.phases)
    }
}

/// A rectangular cell of the simplex × torus coordinate box.
#[derive(Debug, Clone, PartialEq)]
pub struct FsCell {
    pub p_lo: Vec<f64>,
    pub p_hi: Vec<f64>,
    pub nu_lo: Vec<f64>,
    pub nu_hi: Vec<f64>,
    /// Fraction of the probability box inside the simplex.
    pub fraction: f64,
    /// Fubini-Study volume `fraction · Π dp dν / 2^{D-1}`.
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct SimplexCell {
    index: Vec<usize>,
    center: Vec<f64>,
    fraction: f64,
}

/// Midpoint quadrature grid over `{p_α ≥ 0, Σ p_α ≤ 1} × [0, 2π)^{D-1}`.
///
/// Cells are indexed by `simplex_index * phase_cells + phase_index`, where the
/// phase index enumerates `bins_phase^{D-1}` torus cells with the last phase
/// varying fastest. Boxes straddling the face `Σ p_α = 1` are clipped by the
/// fraction of sub-samples falling inside; their quadrature node is the
/// centroid of those sub-samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FsGrid {
    dim: usize,
    bins_p: usize,
    bins_phase: usize,
    simplex: Vec<SimplexCell>,
    phase_cells: usize,
}

/// Sub-samples per axis used to clip boundary cells: 4×4 for D = 3, 3×3×3 for D = 4.
fn clip_subdivisions(m: usize) -> usize {
    let mut k: usize = 1;
    while k.pow(m as u32) < 16 {
        k += 1;
    }
    k
}

fn for_each_multi_index(bins: usize, m: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; m];
    loop {
        f(&idx);
        let mut axis = m;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < bins {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Build the Fubini-Study quadrature grid for CP^{dim-1}.
pub fn fs_uniform_grid(dim: usize, bins_p: usize, bins_phase: usize) -> Result<FsGrid> {
    if dim < 2 {
        return Err(GqsError::UnsupportedDimension(dim, "need D >= 2"));
    }
    if dim > MAX_GRID_DIM {
        return Err(GqsError::UnsupportedDimension(
            dim,
            "grid quadrature is limited to D <= 4; use sampling instead",
        ));
    }
    if bins_p == 0 || bins_phase == 0 {
        return Err(GqsError::invalid("bin counts must be >= 1"));
    }
    let m = dim - 1;
    let h = 1.0 / bins_p as f64;
    let k = clip_subdivisions(m);
    let mut simplex = Vec::new();
    for_each_multi_index(bins_p, m, |idx| {
        let lo_sum: f64 = idx.iter().map(|&i| i as f64 * h).sum();
        let hi_sum: f64 = idx.iter().map(|&i| (i + 1) as f64 * h).sum();
        if lo_sum >= 1.0 - 1e-12 {
            return;
        }
        if hi_sum <= 1.0 + 1e-12 {
            let center = idx.iter().map(|&i| (i as f64 + 0.5) * h).collect();
            simplex.push(SimplexCell { index: idx.to_vec(), center, fraction: 1.0 });
            return;
        }
        // clip against Σ p = 1; sub-samples on the face count half
        let mut weight = 0.0;
        let mut centroid = vec![0.0; m];
        let mut sample = vec![0.0; m];
        for_each_multi_index(k, m, |sub| {
            for a in 0..m {
                sample[a] = (idx[a] as f64 + (sub[a] as f64 + 0.5) / k as f64) * h;
            }
            let s: f64 = sample.iter().sum();
            let w = if (s - 1.0).abs() <= 1e-12 {
                0.5
            } else if s < 1.0 {
                1.0
            } else {
                0.0
            };
            if w > 0.0 {
                weight += w;
                for a in 0..m {
                    centroid[a] += w * sample[a];
                }
            }
        });
        if weight > 0.0 {
            for c in centroid.iter_mut() {
                *c /= weight;
            }
            simplex.push(SimplexCell {
                index: idx.to_vec(),
                center: centroid,
                fraction: weight / (k.pow(m as u32) as f64),
            });
        }
    });
    Ok(FsGrid {
        dim,
        bins_p,
        bins_phase,
        simplex,
        phase_cells: bins_phase.pow(m as u32),
    })
}

impl FsGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bins_p(&self) -> usize {
        self.bins_p
    }

    pub fn bins_phase(&self) -> usize {
        self.bins_phase
    }

    pub fn len(&self) -> usize {
        self.simplex.len() * self.phase_cells
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dp(&self) -> f64 {
        1.0 / self.bins_p as f64
    }

    fn dnu(&self) -> f64 {
        TAU / self.bins_phase as f64
    }

    fn split(&self, cell: usize) -> (usize, Vec<usize>) {
        let s = cell / self.phase_cells;
        let mut t = cell % self.phase_cells;
        let m = self.dim - 1;
        let mut phase_idx = vec![0; m];
        for a in (0..m).rev() {
            phase_idx[a] = t % self.bins_phase;
            t /= self.bins_phase;
        }
        (s, phase_idx)
    }

    /// Fubini-Study volume of the cell.
    pub fn volume(&self, cell: usize) -> f64 {
        let m = (self.dim - 1) as i32;
        let s = cell / self.phase_cells;
        self.simplex[s].fraction * (self.dp() * self.dnu() / 2.0).powi(m)
    }

    pub fn total_volume(&self) -> f64 {
        let m = (self.dim - 1) as i32;
        let unit = (self.dp() * self.dnu() / 2.0).powi(m);
        self.simplex.iter().map(|c| c.fraction).sum::<f64>() * unit * self.phase_cells as f64
    }

    pub fn center(&self, cell: usize) -> ProbPhasePoint {
        let (s, phase_idx) = self.split(cell);
        let phases = phase_idx
            .iter()
            .map(|&j| (j as f64 + 0.5) * self.dnu())
            .collect();
        ProbPhasePoint {
            probs: self.simplex[s].center.clone(),
            phases,
        }
    }

    /// Amplitudes of the quadrature node, `Z^0 = √p_0`, `Z^α = √p_α e^{iν_α}`.
    pub fn center_amplitudes(&self, cell: usize) -> Vec<Complex64> {
        let c = self.center(cell);
        let mut amps = Vec::with_capacity(self.dim);
        amps.push(Complex64::new(c.p0().sqrt(), 0.0));
        for (&p, &nu) in c.probs.iter().zip(&c.phases) {
            amps.push(Complex64::from_polar(p.sqrt(), nu));
        }
        amps
    }

    pub fn center_point(&self, cell: usize) -> PureStatePoint {
        PureStatePoint::from_prob_phase(&self.center(cell))
    }

    pub fn cell(&self, cell: usize) -> FsCell {
        let (s, phase_idx) = self.split(cell);
        let sc = &self.simplex[s];
        let (dp, dnu) = (self.dp(), self.dnu());
        FsCell {
            p_lo: sc.index.iter().map(|&i| i as f64 * dp).collect(),
            p_hi: sc.index.iter().map(|&i| (i + 1) as f64 * dp).collect(),
            nu_lo: phase_idx.iter().map(|&j| j as f64 * dnu).collect(),
            nu_hi: phase_idx.iter().map(|&j| (j + 1) as f64 * dnu).collect(),
            fraction: sc.fraction,
            volume: self.volume(cell),
        }
    }

    /// All cells as `(center, cell)` pairs.
    pub fn cells(&self) -> impl Iterator<Item = (ProbPhasePoint, FsCell)> + '_ {
        (0..self.len()).map(move |i| (self.center(i), self.cell(i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_state_coordinates() {
        let z = PureStatePoint::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let pp = z.to_prob_phase();
        assert_eq!(pp.probs(), &[0.0]);
        assert_eq!(pp.phases(), &[0.0]);
    }

    #[test]
    fn reference_qubit_eigenvector_coordinates() {
        let plus = PureStatePoint::new(vec![c(0.657, 0.0), c(0.418, 0.627)]).unwrap();
        let pp = plus.to_prob_phase();
        assert!((pp.probs()[0] - 0.568).abs() <= 2e-3);
        assert!((pp.phases()[0] - 0.983).abs() <= 2e-3);

        let minus = PureStatePoint::new(vec![c(0.754, 0.0), c(-0.364, -0.546)]).unwrap();
        let pm = minus.to_prob_phase();
        assert!((pm.probs()[0] - 0.432).abs() <= 2e-3);
        assert!((pm.phases()[0] - 4.124).abs() <= 2e-3);
    }

    #[test]
    fn from_prob_phase_matches_reference_qubit_amplitudes() {
        let z = PureStatePoint::from_prob_phase(&ProbPhasePoint::qubit(0.568, 0.983).unwrap());
        let a = z.amplitudes();
        assert!((a[0] - c(0.657, 0.0)).norm() <= 2e-3);
        assert!((a[1] - c(0.418, 0.627)).norm() <= 2e-3);
    }

    #[test]
    fn zero_probability_gives_basis_state() {
        for nu in [0.0, 1.0, 5.0] {
            let z = PureStatePoint::from_prob_phase(&ProbPhasePoint::qubit(0.0, nu).unwrap());
            assert_eq!(z.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        }
    }

    #[test]
    fn rejects_overfull_simplex() {
        assert!(ProbPhasePoint::new(vec![0.7, 0.4], vec![0.0, 0.0]).is_err());
        assert!(ProbPhasePoint::new(vec![-0.1], vec![0.0]).is_err());
        assert!(ProbPhasePoint::new(vec![0.5], vec![]).is_err());
    }

    #[test]
    fn zero_leading_amplitude_uses_next_component() {
        let z = PureStatePoint::new(vec![c(0.0, 0.0), c(0.0, 0.6), c(0.8, 0.0)]).unwrap();
        assert!((z.amplitudes()[1] - c(0.6, 0.0)).norm() < 1e-15);
        let pp = z.to_prob_phase();
        assert_eq!(pp.phases()[0], 0.0);
        assert!((pp.phases()[1] - wrap_phase(-PI / 2.0)).abs() < 1e-12);
        let back = PureStatePoint::from_prob_phase(&pp);
        for (a, b) in back.amplitudes().iter().zip(z.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_counts_and_volumes() {
        let g = fs_uniform_grid(2, 2, 2).unwrap();
        assert_eq!(g.len(), 4);
        assert!((g.total_volume() - PI).abs() < 1e-12);

        let g = fs_uniform_grid(2, 256, 256).unwrap();
        assert!((g.total_volume() / PI - 1.0).abs() < 0.01);

        let g = fs_uniform_grid(3, 32, 32).unwrap();
        let expected = PI * PI / 2.0;
        assert!((g.total_volume() / expected - 1.0).abs() < 0.05);

        let g = fs_uniform_grid(4, 12, 4).unwrap();
        let expected = fs_total_volume(4);
        assert!((g.total_volume() / expected - 1.0).abs() < 0.05);
    }

    #[test]
    fn grid_volume_converges_for_cp2() {
        let errs: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&b| (fs_uniform_grid(3, b, 2).unwrap().total_volume() / fs_total_volume(3) - 1.0).abs())
            .collect();
        assert!(errs[2] <= errs[0] + 1e-12);
    }

    #[test]
    fn grid_rejects_large_dimension() {
        assert!(matches!(
            fs_uniform_grid(5, 4, 4),
            Err(GqsError::UnsupportedDimension(5, _))
        ));
        assert!(fs_uniform_grid(2, 0, 4).is_err());
    }

    #[test]
    fn cell_bookkeeping_is_consistent() {
        let g = fs_uniform_grid(3, 4, 3).unwrap();
        let summed: f64 = g.cells().map(|(_, cell)| cell.volume).sum();
        assert!((summed - g.total_volume()).abs() < 1e-12);
        for (center, cell) in g.cells() {
            assert!(center.p0() >= 0.0);
            for a in 0..2 {
                assert!(center.phases()[a] > cell.nu_lo[a] && center.phases()[a] < cell.nu_hi[a]);
                assert!(center.probs()[a] >= cell.p_lo[a] && center.probs()[a] <= cell.p_hi[a]);
            }
        }
    }

    fn arb_point(dim: usize) -> impl Strategy<Value = PureStatePoint> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
            .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-6)
            .prop_map(|v| PureStatePoint::from_reals(&v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn coordinate_roundtrip(z in (2usize..6).prop_flat_map(arb_point)) {
            let back = PureStatePoint::from_prob_phase(&z.to_prob_phase());
            for (a, b) in back.amplitudes().iter().zip(z.amplitudes()) {
                prop_assert!((a - b).norm() <= 1e-12);
            }
        }

        #[test]
        fn gauge_fix_is_idempotent(z in arb_point(3), lambda in 0.0f64..TAU) {
            let norm: f64 = z.amplitudes().iter().map(|a| a.norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() <= NORM_TOL);
            let mut again = z.amplitudes().to_vec();
            gauge_fix(&mut again);
            prop_assert_eq!(again.as_slice(), z.amplitudes());
            let rotated: Vec<_> = z.amplitudes().iter().map(|a| a * Complex64::from_polar(1.0, lambda)).collect();
            let fixed = PureStatePoint::new(rotated).unwrap();
            for (a, b) in fixed.amplitudes().iter().zip(z.amplitudes()) {
                prop_assert!((a - b).norm() <= 1e-12);
            }
        }
    }
}
