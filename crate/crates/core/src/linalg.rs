//! Dense eigensolvers on top of nalgebra.
//!
//! Non-Hermitian matrices go through a complex Schur form `A = Q T Q†`.
//! Right eigenvectors come from back substitution on `T`; left eigenvectors
//! are the rows of the inverse right-eigenvector matrix, which makes the pair
//! biorthonormal by construction.

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const SCHUR_EPS: f64 = 1e-15;
const MAX_SWEEPS: usize = 100_000;

/// Eigenpairs of a Hermitian matrix, ascending in energy.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the normalized eigenvector of `values[k]`.
    pub vectors: CMatrix,
}

/// Hermitian eigendecomposition. Eigenvector phases are fixed so that the
/// largest-modulus component is real and positive.
pub fn hermitian_eigen(m: &CMatrix) -> Option<HermitianEigen> {
    let eig = SymmetricEigen::try_new(m.clone(), SCHUR_EPS, MAX_SWEEPS)?;
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let d = m.nrows();
    let mut vectors = CMatrix::zeros(d, d);
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(Complex64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        let v = v * (phase / v.norm());
        vectors.set_column(col, &v);
    }
    Some(HermitianEigen { values, vectors })
}

/// Biorthonormal eigensystem of a diagonalizable complex matrix.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<Complex64>,
    /// Unit-norm right eigenvectors as columns.
    pub right: CMatrix,
    /// Left eigenvectors as columns, scaled so that `left[:,q]† right[:,p] = δ_qp`.
    pub left: CMatrix,
    /// `|⟨l_q|r_q⟩| / (‖l_q‖ ‖r_q‖)` per eigenvalue; small values signal a
    /// nearby exceptional point.
    pub overlaps: Vec<f64>,
}

impl Eigensystem {
    pub fn min_overlap(&self) -> f64 {
        self.overlaps.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Eigendecomposition of a general complex matrix. Eigenvalues are ordered by
/// ascending real part, ties broken by imaginary part. Returns `None` if the
/// Schur iteration fails; if the right-eigenvector matrix is singular the
/// overlaps are reported as zero.
pub fn eigensystem(m: &CMatrix) -> Option<Eigensystem> {
    let d = m.nrows();
    let (q, t) = Schur::try_new(m.clone(), SCHUR_EPS, MAX_SWEEPS)?.unpack();

    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let small = scale * f64::EPSILON;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (t[(a, a)], t[(b, b)]);
        x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
    });

    let mut right = CMatrix::zeros(d, d);
    let mut x = CVector::zeros(d);
    for (col, &k) in order.iter().enumerate() {
        let lambda = t[(k, k)];
        x.fill(Complex64::new(0.0, 0.0));
        x[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * x[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < small {
                // degenerate diagonal: perturb as in LAPACK's trevc
                denom = Complex64::new(small, 0.0);
            }
            x[i] = -s / denom;
        }
        let v = &q * &x;
        let nrm = v.norm();
        right.set_column(col, &(v / Complex64::new(nrm, 0.0)));
    }

    let values: Vec<Complex64> = order.iter().map(|&k| t[(k, k)]).collect();
    let (left, overlaps) = match right.clone().lu().try_inverse() {
        Some(inv) => {
            let left = inv.adjoint();
            let overlaps = (0..d).map(|c| 1.0 / left.column(c).norm()).collect();
            (left, overlaps)
        }
        None => (CMatrix::zeros(d, d), vec![0.0; d]),
    };
    Some(Eigensystem { values, right, left, overlaps })
}

/// Eigenvalues only, in the same order as [`eigensystem`].
pub fn eigenvalues(m: &CMatrix) -> Option<Vec<Complex64>> {
    let t = Schur::try_new(m.clone(), SCHUR_EPS, MAX_SWEEPS)?.unpack().1;
    let mut values: Vec<Complex64> = (0..m.nrows()).map(|k| t[(k, k)]).collect();
    values.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Some(values)
}

/// `exp(A)` by scaling and squaring with a Taylor kernel.
pub fn expm(a: &CMatrix) -> CMatrix {
    let d = a.nrows();
    let norm1 = (0..d).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / Complex64::new(2f64.powi(squarings as i32), 0.0);

    let mut result = CMatrix::identity(d, d);
    let mut term = CMatrix::identity(d, d);
    for k in 1..40 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        result += &term;
        if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_pairs_are_orthonormal() {
        let m = CMatrix::from_row_slice(3, 3, &[c(2.0, 0.0), c(1.0, -1.0), c(0.0, 0.0), c(1.0, 1.0), c(3.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(0.5, 0.0), c(-1.0, 0.0)]);
        let eig = hermitian_eigen(&m).unwrap();
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let gram = eig.vectors.adjoint() * &eig.vectors;
        assert!((gram - CMatrix::identity(3, 3)).norm() < 1e-13);
        for k in 0..3 {
            let v = eig.vectors.column(k);
            assert!((&m * v - v * c(eig.values[k], 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn non_normal_matrix_biorthogonality() {
        let m = CMatrix::from_row_slice(3, 3, &[c(1.0, -0.2), c(2.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(-1.0, 0.0), c(3.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(0.3, -1.0)]);
        let es = eigensystem(&m).unwrap();
        let cross = es.left.adjoint() * &es.right;
        assert!((cross - CMatrix::identity(3, 3)).norm() < 1e-12);
        for k in 0..3 {
            let r = es.right.column(k);
            assert!((&m * r - r * es.values[k]).norm() < 1e-12);
            let l = es.left.column(k);
            assert!((m.adjoint() * l - l * es.values[k].conj()).norm() < 1e-11);
        }
    }

    #[test]
    fn defective_matrix_is_flagged() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let es = eigensystem(&m).unwrap();
        assert!(es.min_overlap() < 1e-10);
    }

    #[test]
    fn expm_of_rotation() {
        let theta = 0.7;
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-theta, 0.0), c(theta, 0.0), c(0.0, 0.0)]);
        let e = expm(&(a * c(10.0, 0.0)));
        let (s, co) = (10.0 * theta as f64).sin_cos();
        let expected = CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)]);
        assert!((e - expected).norm() < 1e-12);
    }
}
