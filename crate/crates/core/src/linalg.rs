//! Small dense complex linear algebra used throughout the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GqsError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(GqsError::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in ascending order.
///
/// Column `k` of the returned matrix is the normalized eigenvector for the
/// `k`-th eigenvalue.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    // symmetrize so rounding in the input cannot leak into the solver
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

/// `v v†` for a column vector given as a slice.
pub fn outer(v: &[Complex64]) -> CMatrix {
    let n = v.len();
    CMatrix::from_fn(n, n, |a, b| v[a] * v[b].conj())
}

/// `⟨u|M|v⟩ = Σ conj(u_a) M_ab v_b`.
pub fn sandwich(u: &[Complex64], m: &CMatrix, v: &[Complex64]) -> Complex64 {
    let n = u.len();
    let mut acc = C_ZERO;
    for a in 0..n {
        let mut row = C_ZERO;
        for b in 0..n {
            row += m[(a, b)] * v[b];
        }
        acc += u[a].conj() * row;
    }
    acc
}

/// Trace of the product `a · b` without forming it.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = C_ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        let col: Vec<Complex64> = vectors.column(k).iter().copied().collect();
        out += outer(&col) * Complex64::new(f(lambda), 0.0);
    }
    out
}

/// Trace distance `½ Σ |λ_k(a − b)|` between two Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let (values, _) = hermitian_eigen(&(a - b));
    0.5 * values.iter().map(|v| v.abs()).sum::<f64>()
}

/// Kahan-free pairwise sum with a fixed split so results are bit-stable.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.45, 0.0),
                Complex64::new(0.2, -0.3),
                Complex64::new(0.2, 0.3),
                Complex64::new(0.55, 0.0),
            ],
        );
        let (vals, vecs) = hermitian_eigen(&m);
        assert!(vals[0] < vals[1]);
        let rebuilt = hermitian_map(&m, |x| x);
        assert!(max_abs_diff(&rebuilt, &m) < 1e-14);
        let unit = vecs.adjoint() * &vecs;
        assert!(max_abs_diff(&unit, &identity(2)) < 1e-14);
    }

    #[test]
    fn trace_distance_of_orthogonal_projectors_is_one() {
        let a = outer(&[C_ONE, C_ZERO]);
        let b = outer(&[C_ZERO, C_ONE]);
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-14);
    }
}
