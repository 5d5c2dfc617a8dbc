//! Eigen- and singular-value decompositions, delegated to nalgebra.

use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::math;
use crate::matrix::{ComplexMatrix, C64};

fn to_na(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Eigenvalues (ascending) and the matching orthonormal eigenvectors of the
/// Hermitian part of `m`.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

pub fn hermitian_eigen(m: &ComplexMatrix) -> HermitianEigen {
    debug_assert!(m.is_square());
    let eig = to_na(&m.hermitian_part()).symmetric_eigen();
    let mut order: Vec<usize> = (0..m.rows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    HermitianEigen {
        values: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        vectors: order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
            .collect(),
    }
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    let eig = to_na(&m.hermitian_part()).symmetric_eigenvalues();
    eig.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `f(M)` for Hermitian `M`, applied through the spectrum.
pub fn hermitian_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let eig = hermitian_eigen(m);
    let n = m.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (lambda, v) in eig.values.iter().zip(&eig.vectors) {
        let w = f(*lambda);
        if w == 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = v[i] * w;
            for j in 0..n {
                out[(i, j)] += vi * v[j].conj();
            }
        }
    }
    out
}

/// Pseudo-inverse square root of a positive semidefinite matrix; eigenvalues
/// at or below `cutoff` are treated as zero.
pub fn inv_sqrt_psd(m: &ComplexMatrix, cutoff: f64) -> ComplexMatrix {
    hermitian_function(m, |x| if x > cutoff { 1.0 / math::sqrt(x) } else { 0.0 })
}

pub fn sqrt_psd(m: &ComplexMatrix) -> ComplexMatrix {
    hermitian_function(m, |x| if x > 0.0 { math::sqrt(x) } else { 0.0 })
}

/// `m = u · diag(s) · v_t` with `s` descending and nonnegative.
pub fn svd3(m: &Matrix3<f64>) -> (Matrix3<f64>, Vector3<f64>, Matrix3<f64>) {
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let mut u_sorted = Matrix3::zeros();
    let mut vt_sorted = Matrix3::zeros();
    let mut s_sorted = Vector3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        vt_sorted.set_row(dst, &v_t.row(src));
        s_sorted[dst] = s[src];
    }
    (u_sorted, s_sorted, vt_sorted)
}
