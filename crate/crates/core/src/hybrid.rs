//! Hybrid continuous–discrete states `∫dx Σ_s ψ_s(x)|x⟩|s⟩` and their
//! decomposition `∫dx f(x)|x⟩|q(x)⟩` with
//! `|q(x)⟩ = Σ_s √p_s(x) e^{iφ_s(x)}|s⟩`.
//!
//! The continuous region is discretized by a product grid; every integral over
//! `x` is the corresponding weighted sum over grid points.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{GqsError, Result};
use crate::gstate::SampleEnsemble;
use crate::linalg::CMatrix;
use crate::manifold::{wrap_phase, PureStatePoint};
use crate::observables::DensityMatrix;

pub const HYBRID_NORM_TOL: f64 = 1e-10;
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Product grid over a region of ℝ^N. Points are enumerated row-major with
/// the last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    axes: Vec<Vec<f64>>,
    widths: Vec<Vec<f64>>,
}

impl RegionGrid {
    /// Midpoint grid with `counts[k]` cells on `bounds[k]`.
    pub fn uniform(bounds: &[(f64, f64)], counts: &[usize]) -> Result<Self> {
        if bounds.is_empty() || bounds.len() != counts.len() {
            return Err(GqsError::invalid("need one count per bounded axis"));
        }
        let mut axes = Vec::new();
        let mut widths = Vec::new();
        for (&(lo, hi), &n) in bounds.iter().zip(counts) {
            if !(hi > lo) || n == 0 {
                return Err(GqsError::invalid(format!("degenerate axis [{lo}, {hi}] with {n} cells")));
            }
            let h = (hi - lo) / n as f64;
            axes.push((0..n).map(|i| lo + (i as f64 + 0.5) * h).collect());
            widths.push(vec![h; n]);
        }
        Ok(RegionGrid { axes, widths })
    }

    /// Grid from sample coordinates. Without explicit widths each point owns
    /// the interval between the midpoints to its neighbours, with end cells
    /// mirrored.
    pub fn from_axes(axes: Vec<Vec<f64>>, widths: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(GqsError::invalid("need at least one axis"));
        }
        for a in &axes {
            if a.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(GqsError::invalid("axis coordinates must be strictly increasing"));
            }
        }
        let widths = match widths {
            Some(w) => {
                if w.len() != axes.len() || w.iter().zip(&axes).any(|(w, a)| w.len() != a.len()) {
                    return Err(GqsError::invalid("widths must match axes"));
                }
                w
            }
            None => axes
                .iter()
                .map(|a| {
                    if a.len() < 2 {
                        return Err(GqsError::invalid("an axis with one point needs an explicit width"));
                    }
                    let n = a.len();
                    Ok((0..n)
                        .map(|i| {
                            let left = if i == 0 { a[1] - a[0] } else { a[i] - a[i - 1] };
                            let right = if i + 1 == n { a[n - 1] - a[n - 2] } else { a[i + 1] - a[i] };
                            0.5 * (left + right)
                        })
                        .collect())
                })
                .collect::<Result<_>>()?,
        };
        if widths.iter().flatten().any(|w| !(*w > 0.0)) {
            return Err(GqsError::invalid("cell measures must be positive"));
        }
        Ok(RegionGrid { axes, widths })
    }

    pub fn n_dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn widths(&self) -> &[Vec<f64>] {
        &self.widths
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        for k in (0..self.axes.len()).rev() {
            out[k] = idx % self.axes[k].len();
            idx /= self.axes[k].len();
        }
        out
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.unravel(idx)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.axes[k][i])
            .collect()
    }

    /// Cell measure `dx` at a grid point.
    pub fn measure(&self, idx: usize) -> f64 {
        self.unravel(idx)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.widths[k][i])
            .product()
    }

    pub fn measures(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.measure(i)).collect()
    }
}

/// Discretized `ψ_s(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    region: RegionGrid,
    n_levels: usize,
    psi: Vec<Vec<Complex64>>,
}

fn check_shape(region: &RegionGrid, n_levels: usize, rows: &[Vec<Complex64>]) -> Result<()> {
    if n_levels < 2 {
        return Err(GqsError::UnsupportedDimension(n_levels, "need at least two discrete levels"));
    }
    if rows.len() != region.len() {
        return Err(GqsError::DimensionMismatch {
            expected: region.len(),
            found: rows.len(),
        });
    }
    if let Some(r) = rows.iter().find(|r| r.len() != n_levels) {
        return Err(GqsError::DimensionMismatch {
            expected: n_levels,
            found: r.len(),
        });
    }
    Ok(())
}

impl HybridState {
    pub fn new(region: RegionGrid, n_levels: usize, psi: Vec<Vec<Complex64>>) -> Result<Self> {
        check_shape(&region, n_levels, &psi)?;
        let state = HybridState { region, n_levels, psi };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > HYBRID_NORM_TOL {
            return Err(GqsError::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Rescale so that `∫ Σ_s |ψ_s|² dx = 1`.
    pub fn normalized(region: RegionGrid, n_levels: usize, mut psi: Vec<Vec<Complex64>>) -> Result<Self> {
        check_shape(&region, n_levels, &psi)?;
        let norm: f64 = psi
            .iter()
            .enumerate()
            .map(|(i, r)| region.measure(i) * r.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum();
        if !(norm > 0.0) {
            return Err(GqsError::ZeroNorm(norm));
        }
        let scale = norm.sqrt();
        for z in psi.iter_mut().flatten() {
            *z /= scale;
        }
        Self::new(region, n_levels, psi)
    }

    /// Random state from seeded standard complex Gaussians.
    pub fn random(region: RegionGrid, n_levels: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = (0..region.len())
            .map(|_| {
                (0..n_levels)
                    .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                    .collect()
            })
            .collect();
        Self::normalized(region, n_levels, psi)
    }

    pub fn region(&self) -> &RegionGrid {
        &self.region
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn psi(&self) -> &[Vec<Complex64>] {
        &self.psi
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi
            .iter()
            .enumerate()
            .map(|(i, r)| self.region.measure(i) * r.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }
}

/// Fields `f(x)`, `p_s(x)`, `φ_s(x)` of the hybrid decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridDecomposition {
    region: RegionGrid,
    n_levels: usize,
    f: Vec<Complex64>,
    probs: Vec<Vec<f64>>,
    phases: Vec<Vec<f64>>,
}

impl HybridDecomposition {
    /// Validate the decomposition invariants.
    pub fn new(
        region: RegionGrid,
        f: Vec<Complex64>,
        probs: Vec<Vec<f64>>,
        phases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = region.len();
        if f.len() != n || probs.len() != n || phases.len() != n {
            return Err(GqsError::DimensionMismatch {
                expected: n,
                found: f.len().min(probs.len()).min(phases.len()),
            });
        }
        let n_levels = probs.first().map(|p| p.len()).unwrap_or(0);
        if n_levels < 2 {
            return Err(GqsError::UnsupportedDimension(n_levels, "need at least two discrete levels"));
        }
        for (p, ph) in probs.iter().zip(&phases) {
            if p.len() != n_levels || ph.len() != n_levels {
                return Err(GqsError::DimensionMismatch {
                    expected: n_levels,
                    found: p.len().min(ph.len()),
                });
            }
            if p.iter().any(|x| !(*x >= 0.0)) {
                return Err(GqsError::InvalidProbabilities("negative p_s(x)".into()));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > PROB_SUM_TOL {
                return Err(GqsError::InvalidProbabilities(format!("Σ_s p_s(x) = {total}")));
            }
            if ph[0] != 0.0 || ph.iter().any(|v| !(0.0..TAU).contains(v)) {
                return Err(GqsError::invalid("phases must lie in [0, 2π) with φ_0 = 0"));
            }
        }
        let norm: f64 = f
            .iter()
            .enumerate()
            .map(|(i, z)| region.measure(i) * z.norm_sqr())
            .sum();
        if (norm - 1.0).abs() > HYBRID_NORM_TOL {
            return Err(GqsError::NotNormalized(norm));
        }
        Ok(HybridDecomposition { region, n_levels, f, probs, phases })
    }

    pub fn region(&self) -> &RegionGrid {
        &self.region
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn f(&self) -> &[Complex64] {
        &self.f
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn phases(&self) -> &[Vec<f64>] {
        &self.phases
    }

    /// `|q(x)⟩` at grid point `idx`.
    pub fn discrete_state(&self, idx: usize) -> Vec<Complex64> {
        self.probs[idx]
            .iter()
            .zip(&self.phases[idx])
            .map(|(&p, &phi)| Complex64::from_polar(p.sqrt(), phi))
            .collect()
    }

    /// The embedding `Φ(x) = Z(x)` at a grid point.
    pub fn embed(&self, idx: usize) -> PureStatePoint {
        PureStatePoint::new(self.discrete_state(idx)).expect("p_s sums to one")
    }

    /// Continuous probability masses `|f(x)|² dx`.
    pub fn masses(&self) -> Vec<f64> {
        self.f
            .iter()
            .enumerate()
            .map(|(i, z)| z.norm_sqr() * self.region.measure(i))
            .collect()
    }
}

fn arg_or_zero(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.im.atan2(z.re)
    }
}

/// Split `ψ_s(x)` into `f(x) = √(Σ_s|ψ_s|²) e^{iθ_0}`, `p_s = |ψ_s|²/Σ_l|ψ_l|²`
/// and `φ_s = θ_s − θ_0`.
///
/// Points with vanishing norm get `f = 0`, uniform `p_s` and zero phases; a
/// vanishing component has `θ_s = 0`.
pub fn decompose(state: &HybridState) -> HybridDecomposition {
    let d = state.n_levels;
    let fields: Vec<(Complex64, Vec<f64>, Vec<f64>)> = state
        .psi
        .par_iter()
        .map(|row| {
            let weight: f64 = row.iter().map(|z| z.norm_sqr()).sum();
            if weight == 0.0 {
                return (Complex64::new(0.0, 0.0), vec![1.0 / d as f64; d], vec![0.0; d]);
            }
            let theta0 = arg_or_zero(row[0]);
            let f = Complex64::from_polar(weight.sqrt(), theta0);
            let probs = row.iter().map(|z| z.norm_sqr() / weight).collect();
            let mut phases: Vec<f64> = row.iter().map(|&z| wrap_phase(arg_or_zero(z) - theta0)).collect();
            phases[0] = 0.0;
            (f, probs, phases)
        })
        .collect();
    let mut f = Vec::with_capacity(fields.len());
    let mut probs = Vec::with_capacity(fields.len());
    let mut phases = Vec::with_capacity(fields.len());
    for (a, b, c) in fields {
        f.push(a);
        probs.push(b);
        phases.push(c);
    }
    HybridDecomposition {
        region: state.region.clone(),
        n_levels: d,
        f,
        probs,
        phases,
    }
}

/// `ψ_s(x) = f(x) √p_s(x) e^{iφ_s(x)}`.
pub fn reconstruct(dec: &HybridDecomposition) -> HybridState {
    let psi = (0..dec.region.len())
        .into_par_iter()
        .map(|i| dec.discrete_state(i).into_iter().map(|q| dec.f[i] * q).collect())
        .collect();
    HybridState {
        region: dec.region.clone(),
        n_levels: dec.n_levels,
        psi,
    }
}

/// `ρ = ∫ dx |f(x)|² |q(x)⟩⟨q(x)|`.
pub fn reduced_density_matrix(dec: &HybridDecomposition) -> DensityMatrix {
    let d = dec.n_levels;
    let masses = dec.masses();
    let mut rho = CMatrix::zeros(d, d);
    for (i, &w) in masses.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let q = dec.discrete_state(i);
        for a in 0..d {
            for b in 0..d {
                rho[(a, b)] += q[a] * q[b].conj() * w;
            }
        }
    }
    DensityMatrix::from_trusted(rho)
}

/// Pushforward of `|f(x)|² dx` through `Φ`, realized by sampling grid points.
///
/// Valid whether or not `Φ` is invertible: the samples are distributed
/// according to the image measure.
pub fn pushforward(dec: &HybridDecomposition, n_samples: usize, seed: u64) -> Result<SampleEnsemble> {
    if n_samples == 0 {
        return Err(GqsError::invalid("n_samples must be >= 1"));
    }
    let index = WeightedIndex::new(dec.masses()).map_err(|e| GqsError::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n_samples).map(|_| dec.embed(index.sample(&mut rng))).collect();
    SampleEnsemble::new(samples, None, seed)
}

/// Exact pushforward: every grid point as a sample weighted by `|f|² dx`.
pub fn pushforward_weighted(dec: &HybridDecomposition) -> Result<SampleEnsemble> {
    let masses = dec.masses();
    let total: f64 = masses.iter().sum();
    let weights = masses.iter().map(|m| m / total).collect();
    let samples = (0..dec.region.len()).map(|i| dec.embed(i)).collect();
    SampleEnsemble::new(samples, Some(weights), 0)
}

/// Rectangle `[x0, x1] × [y0, y1]` discretized with `nx × ny` midpoint cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRegion {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl BoxRegion {
    fn check(&self) -> Result<()> {
        if !(self.x1 > self.x0) || !(self.y1 > self.y0) {
            return Err(GqsError::invalid("degenerate box: need x1 > x0 and y1 > y0"));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(GqsError::invalid("box grid needs at least one cell per axis"));
        }
        Ok(())
    }

    /// `(p_1, φ_1) = ((x − x0)/(x1 − x0), 2π (y − y0)/(y1 − y0))`.
    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.x0) / (self.x1 - self.x0),
            TAU * (y - self.y0) / (self.y1 - self.y0),
        )
    }

    /// Inverse of [`BoxRegion::map`].
    pub fn unmap(&self, p: f64, phi: f64) -> (f64, f64) {
        (
            self.x0 + p * (self.x1 - self.x0),
            self.y0 + phi / TAU * (self.y1 - self.y0),
        )
    }

    /// The qubit state `Z = (√(1−p_1), √p_1 e^{iφ_1})` at `(x, y)`.
    pub fn point(&self, x: f64, y: f64) -> Result<PureStatePoint> {
        let (p, phi) = self.map(x, y);
        if !(0.0..=1.0).contains(&p) {
            return Err(GqsError::invalid(format!("x = {x} lies outside the box")));
        }
        PureStatePoint::new(vec![
            Complex64::new((1.0 - p).sqrt(), 0.0),
            Complex64::from_polar(p.sqrt(), phi),
        ])
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// The electron-in-a-box embedding of the rectangle onto CP^1.
///
/// `amplitude` gives the unnormalized `f(x, y)`; it is normalized on the grid.
/// Without it `|f|²` is uniform.
pub fn box_embedding(
    region: &BoxRegion,
    amplitude: Option<&(dyn Fn(f64, f64) -> Complex64 + Sync)>,
) -> Result<HybridDecomposition> {
    region.check()?;
    let grid = RegionGrid::uniform(&[(region.x0, region.x1), (region.y0, region.y1)], &[region.nx, region.ny])?;
    let mut f = Vec::with_capacity(grid.len());
    let mut probs = Vec::with_capacity(grid.len());
    let mut phases = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let c = grid.coords(i);
        let (p, phi) = region.map(c[0], c[1]);
        f.push(match amplitude {
            Some(a) => a(c[0], c[1]),
            None => Complex64::new(1.0, 0.0),
        });
        probs.push(vec![1.0 - p, p]);
        phases.push(vec![0.0, wrap_phase(phi)]);
    }
    let norm: f64 = f
        .iter()
        .enumerate()
        .map(|(i, z)| z.norm_sqr() * grid.measure(i))
        .sum::<f64>()
        .sqrt();
    if !(norm > 0.0) {
        return Err(GqsError::ZeroNorm(norm));
    }
    for z in f.iter_mut() {
        *z /= norm;
    }
    HybridDecomposition::new(grid, f, probs, phases)
}

/// Upper bounds on the number of qudits `M` controllable with `N` continuous
/// degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityBounds {
    /// Covering all of CP^{d^M − 1}: `log(N/2 + 1) / log d`.
    pub m_full: f64,
    /// Covering product states only: `N / (2(d − 1))`.
    pub m_prod: f64,
}

impl CapacityBounds {
    /// Largest integer qudit counts `(⌊m_full⌋, ⌊m_prod⌋)`.
    pub fn max_qudits(&self) -> (u32, u32) {
        // absorb rounding such as log(4)/log(2) = 1.9999999999999998
        let floor = |x: f64| (x + 1e-12).floor() as u32;
        (floor(self.m_full), floor(self.m_prod))
    }
}

/// Both capacity bounds as reals; callers floor them.
pub fn capacity_bounds(n_continuous: usize, qudit_dim: usize) -> Result<CapacityBounds> {
    if n_continuous < 1 {
        return Err(GqsError::invalid("need at least one continuous degree of freedom"));
    }
    if qudit_dim < 2 {
        return Err(GqsError::invalid("qudit dimension must be >= 2"));
    }
    let n = n_continuous as f64;
    let d = qudit_dim as f64;
    Ok(CapacityBounds {
        m_full: (n / 2.0 + 1.0).ln() / d.ln(),
        m_prod: n / (2.0 * (d - 1.0)),
    })
}
