//! Hermitian observables, POVMs and density matrices as quadratic functions on
//! the pure-state manifold.
//!
//! Matrices are stored as ordinary operator matrices (row = bra index) and a
//! point is evaluated as `Σ_{αβ} conj(Z^α) M_{αβ} Z^β = ⟨ψ(Z)|M|ψ(Z)⟩`.

use num_complex::Complex64;

use crate::error::{GqsError, Result};
use crate::linalg::{
    ensure_square, hermitian_eigen, hermiticity_defect, identity, max_abs_diff, sandwich,
    trace_product, CMatrix,
};
use crate::manifold::PureStatePoint;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const COMPLETENESS_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(GqsError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        ensure_square(&matrix)?;
        let defect = hermiticity_defect(&matrix);
        if !(defect <= HERMITIAN_TOL) {
            return Err(GqsError::NotHermitian(defect));
        }
        Ok(Observable { matrix })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let matrix = CMatrix::from_fn(n, n, |a, b| {
            if a == b {
                Complex64::new(values[a], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Observable { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Observable { matrix: identity(dim) }
    }

    pub fn pauli_x() -> Self {
        Self::from_rows(&[[(0.0, 0.0), (1.0, 0.0)], [(1.0, 0.0), (0.0, 0.0)]])
    }

    pub fn pauli_y() -> Self {
        Self::from_rows(&[[(0.0, 0.0), (0.0, -1.0)], [(0.0, 1.0), (0.0, 0.0)]])
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    fn from_rows(rows: &[[(f64, f64); 2]; 2]) -> Self {
        let matrix = CMatrix::from_fn(2, 2, |a, b| Complex64::new(rows[a][b].0, rows[a][b].1));
        Observable { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Real linear combination `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Observable, b: f64) -> Result<Observable> {
        check_dim(self.dim(), other.dim())?;
        Ok(Observable {
            matrix: &self.matrix * Complex64::new(a, 0.0) + &other.matrix * Complex64::new(b, 0.0),
        })
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// Conjugate by a unitary: `U M U†`.
    pub fn conjugated(&self, unitary: &CMatrix) -> Result<Observable> {
        check_dim(self.dim(), unitary.nrows())?;
        let m = unitary * &self.matrix * unitary.adjoint();
        Ok(Observable {
            matrix: (&m + m.adjoint()) * Complex64::new(0.5, 0.0),
        })
    }
}

/// Value of an observable at a point: `⟨ψ(Z)|M|ψ(Z)⟩`.
pub fn eval_observable(obs: &Observable, point: &PureStatePoint) -> Result<f64> {
    check_dim(obs.dim(), point.dim())?;
    Ok(eval_amplitudes(&obs.matrix, point.amplitudes()))
}

/// Quadratic form on raw amplitudes; the caller guarantees matching dimensions.
pub(crate) fn eval_amplitudes(matrix: &CMatrix, amps: &[Complex64]) -> f64 {
    let v = sandwich(amps, matrix, amps);
    debug_assert!(
        v.im.abs() <= 1e-12 * (1.0 + matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)),
        "imaginary residue {} from a Hermitian form",
        v.im
    );
    v.re
}

/// A validated positive operator-valued measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<Observable>,
}

impl Povm {
    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn effects(&self) -> &[Observable] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// Projective measurement in the computational basis.
    pub fn computational(dim: usize) -> Self {
        let effects = (0..dim)
            .map(|k| {
                let mut d = vec![0.0; dim];
                d[k] = 1.0;
                Observable::diagonal(&d)
            })
            .collect();
        Povm { effects }
    }
}

/// Check that the effects are Hermitian, positive and complete, naming the
/// first violated condition.
pub fn validate_povm(effects: Vec<CMatrix>) -> Result<Povm> {
    let Some(first) = effects.first() else {
        return Err(GqsError::invalid("a POVM needs at least one effect"));
    };
    let dim = ensure_square(first)?;
    let mut checked = Vec::with_capacity(effects.len());
    let mut total = CMatrix::zeros(dim, dim);
    for e in effects {
        check_dim(dim, ensure_square(&e)?)?;
        let obs = Observable::new(e)?;
        let min = hermitian_eigen(&obs.matrix).0[0];
        if min < -PSD_TOL {
            return Err(GqsError::NotPositive(min));
        }
        total += &obs.matrix;
        checked.push(obs);
    }
    let deviation = max_abs_diff(&total, &identity(dim));
    if !(deviation <= COMPLETENESS_TOL) {
        return Err(GqsError::EffectsNotComplete(deviation));
    }
    Ok(Povm { effects: checked })
}

/// Clamp tiny negative rounding to zero.
pub(crate) fn clamp_probability(p: f64) -> f64 {
    if (-1e-12..0.0).contains(&p) {
        0.0
    } else {
        p
    }
}

/// Outcome probabilities `E_j(Z)` at a pure state.
pub fn povm_probabilities_point(povm: &Povm, point: &PureStatePoint) -> Result<Vec<f64>> {
    check_dim(povm.dim(), point.dim())?;
    Ok(povm
        .effects
        .iter()
        .map(|e| clamp_probability(eval_amplitudes(&e.matrix, point.amplitudes())))
        .collect())
}

/// A Hermitian, positive, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validate a candidate density matrix.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, PSD_TOL)
    }

    /// Validation with a custom tolerance for trace and positivity, used for
    /// statistically estimated matrices.
    pub fn with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self> {
        ensure_square(&matrix)?;
        let defect = hermiticity_defect(&matrix);
        if !(defect <= tol.max(HERMITIAN_TOL)) {
            return Err(GqsError::NotHermitian(defect));
        }
        let trace = matrix.trace();
        if !((trace.re - 1.0).abs() <= tol.max(TRACE_TOL)) {
            return Err(GqsError::TraceNotOne(trace.re));
        }
        let min = hermitian_eigen(&matrix).0[0];
        if min < -tol.max(PSD_TOL) {
            return Err(GqsError::NotPositive(min));
        }
        Ok(DensityMatrix { matrix })
    }

    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        DensityMatrix { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            matrix: identity(dim) * Complex64::new(1.0 / dim as f64, 0.0),
        }
    }

    pub fn pure(point: &PureStatePoint) -> Self {
        DensityMatrix { matrix: point.projector() }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Eigenvalues ascending, eigenvectors as columns.
    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        hermitian_eigen(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        trace_product(&self.matrix, &self.matrix).re
    }

    /// `Tr(ρ O)`.
    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        check_dim(self.dim(), obs.dim())?;
        Ok(trace_product(&self.matrix, &obs.matrix).re)
    }

    /// `Tr(ρ E_j)` for every effect.
    pub fn povm_probabilities(&self, povm: &Povm) -> Result<Vec<f64>> {
        check_dim(self.dim(), povm.dim())?;
        Ok(povm
            .effects
            .iter()
            .map(|e| clamp_probability(trace_product(&self.matrix, &e.matrix).re))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ProbPhasePoint;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference_plus() -> PureStatePoint {
        PureStatePoint::new(vec![c(0.657, 0.0), c(0.418, 0.627)]).unwrap()
    }

    #[test]
    fn identity_evaluates_to_one() {
        let v = eval_observable(&Observable::identity(2), &reference_plus()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_gives_probability() {
        for (p, nu) in [(0.0, 0.0), (0.3, 2.0), (0.9, 6.0)] {
            let z = PureStatePoint::from_prob_phase(&ProbPhasePoint::qubit(p, nu).unwrap());
            let v = eval_observable(&Observable::diagonal(&[0.0, 1.0]), &z).unwrap();
            assert!((v - p).abs() < 1e-12);
        }
    }

    #[test]
    fn pauli_x_at_reference_qubit_point() {
        let z = reference_plus();
        let v = eval_observable(&Observable::pauli_x(), &z).unwrap();
        assert!((v - 0.549).abs() <= 2e-3, "{v}");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = eval_observable(&Observable::identity(3), &reference_plus()).unwrap_err();
        assert_eq!(err, GqsError::DimensionMismatch { expected: 3, found: 2 });
    }

    #[test]
    fn projective_povm_probabilities() {
        let povm = Povm::computational(2);
        let e0 = povm_probabilities_point(&povm, &PureStatePoint::basis(2, 0).unwrap()).unwrap();
        assert_eq!(e0, vec![1.0, 0.0]);
        let pr = povm_probabilities_point(&povm, &reference_plus()).unwrap();
        assert!((pr[0] - 0.432).abs() <= 2e-3);
        assert!((pr[1] - 0.568).abs() <= 2e-3);
    }

    #[test]
    fn validate_povm_cases() {
        assert!(validate_povm(vec![identity(2)]).is_ok());
        let half = identity(2) * c(0.5, 0.0);
        assert!(validate_povm(vec![half.clone(), half]).is_ok());
        let a = Observable::diagonal(&[1.0, 0.0]).matrix().clone();
        let b = Observable::diagonal(&[0.0, 0.9]).matrix().clone();
        assert!(matches!(validate_povm(vec![a, b]), Err(GqsError::EffectsNotComplete(_))));
        let neg = Observable::diagonal(&[1.5, 1.0]).matrix().clone();
        let rest = Observable::diagonal(&[-0.5, 0.0]).matrix().clone();
        assert!(matches!(validate_povm(vec![neg, rest]), Err(GqsError::NotPositive(_))));
        let mut skew = identity(2);
        skew[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(validate_povm(vec![skew]), Err(GqsError::NotHermitian(_))));
        assert!(validate_povm(vec![]).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(identity(2)).is_err());
        assert!(DensityMatrix::new(Observable::diagonal(&[1.2, -0.2]).matrix().clone()).is_err());
        assert!(DensityMatrix::new(identity(3) * c(1.0 / 3.0, 0.0)).is_ok());
    }

    fn arb_hermitian(n: usize) -> impl Strategy<Value = CMatrix> {
        prop::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |v| {
            let a = CMatrix::from_fn(n, n, |i, j| c(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]));
            (&a + a.adjoint()) * c(0.5, 0.0)
        })
    }

    fn arb_point(n: usize) -> impl Strategy<Value = PureStatePoint> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
            .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-6)
            .prop_map(|v| PureStatePoint::from_reals(&v).unwrap())
    }

    /// Random POVM built as `S^{-1/2} A_j S^{-1/2}` with `S = Σ A_j`.
    fn arb_povm(n: usize, k: usize) -> impl Strategy<Value = Povm> {
        prop::collection::vec(arb_hermitian(n), k).prop_map(move |gs| {
            let pos: Vec<CMatrix> = gs.iter().map(|g| g * g.adjoint() + identity(n) * c(1e-3, 0.0)).collect();
            let s = pos.iter().fold(CMatrix::zeros(n, n), |acc, a| acc + a);
            let s_inv_half = crate::linalg::hermitian_map(&s, |x| 1.0 / x.sqrt());
            validate_povm(pos.iter().map(|a| &s_inv_half * a * &s_inv_half).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn eval_matches_trace_oracle(m in arb_hermitian(3), z in arb_point(3)) {
            let obs = Observable::new(m.clone()).unwrap();
            let v = eval_observable(&obs, &z).unwrap();
            let dense = (&m * z.projector()).trace();
            prop_assert!((v - dense.re).abs() <= 1e-10);
            prop_assert!(dense.im.abs() <= 1e-10);
        }

        #[test]
        fn povm_probabilities_are_gauge_invariant_and_complete(
            povm in arb_povm(3, 3), z in arb_point(3), lambda in 0.0f64..std::f64::consts::TAU
        ) {
            let p = povm_probabilities_point(&povm, &z).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            let rotated: Vec<_> = z.amplitudes().iter().map(|a| a * Complex64::from_polar(1.0, lambda)).collect();
            // bypass gauge fixing to exercise the raw quadratic form
            let q: Vec<f64> = povm.effects().iter().map(|e| eval_amplitudes(e.matrix(), &rotated)).collect();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
