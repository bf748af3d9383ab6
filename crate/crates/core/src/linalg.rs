//! Thin helpers over nalgebra for the small dense problems in this crate.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

pub(crate) type Mat3 = [[f64; 3]; 3];

/// Eigenpairs of a symmetric matrix sorted by descending eigenvalue.
///
/// Eigenvectors are the columns of the returned matrix. Each column's sign
/// is fixed so that its first entry with magnitude above `1e-12` is positive.
pub(crate) fn sym_eigen_desc(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(i).into_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// Squared norm of the component of column `target` orthogonal to the other
/// columns of `a`, computed by Householder QR with `target` ordered last.
///
/// Householder QR is backward stable column by column, so this stays
/// accurate when columns differ greatly in norm or are nearly collinear.
pub(crate) fn orthogonal_residual_sq(a: &DMatrix<f64>, target: usize) -> f64 {
    let k = a.ncols();
    let mut order: Vec<usize> = (0..k).filter(|&c| c != target).collect();
    order.push(target);
    let rows = a.nrows().max(k);
    let mut p = DMatrix::zeros(rows, k);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..a.nrows() {
            p[(r, dst)] = a[(r, src)];
        }
    }
    let r = p.qr().r();
    r[(k - 1, k - 1)] * r[(k - 1, k - 1)]
}

/// Upper-triangular factor `R` with `RᵀR = AᵀA` for a tall matrix `A`.
pub(crate) fn gram_factor(a: DMatrix<f64>) -> DMatrix<f64> {
    let k = a.ncols();
    if a.nrows() < k {
        let mut padded = DMatrix::zeros(k, k);
        padded.view_mut((0, 0), (a.nrows(), k)).copy_from(&a);
        return padded.qr().r();
    }
    a.qr().r()
}

/// Eigenvalues of a symmetric 3×3 matrix in ascending order.
pub(crate) fn sym3_eigenvalues(m: &Mat3) -> [f64; 3] {
    let e = nalgebra::Matrix3::from_fn(|i, j| 0.5 * (m[i][j] + m[j][i])).symmetric_eigenvalues();
    let mut v = [e[0], e[1], e[2]];
    v.sort_by(f64::total_cmp);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_matches_schur_complement() {
        let a = DMatrix::from_row_slice(4, 3, &[1.0, 2.0, 0.5, 0.0, 1.0, 1.0, 1.0, 0.0, 2.0, 3.0, 1.0, 0.0]);
        let f = a.transpose() * &a;
        let inv = f.clone().try_inverse().unwrap();
        for t in 0..3 {
            let h = orthogonal_residual_sq(&a, t);
            assert!((h - 1.0 / inv[(t, t)]).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_sorted_descending_with_sign_fix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let (vals, vecs) = sym_eigen_desc(m);
        assert!((vals[0] - 3.0).abs() < 1e-12 && (vals[1] + 1.0).abs() < 1e-12);
        assert!(vecs[(0, 0)] > 0.0 && vecs[(0, 1)] > 0.0);
    }

    #[test]
    fn gram_factor_reproduces_gram() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let r = gram_factor(a.clone());
        let diff = r.transpose() * &r - a.transpose() * &a;
        assert!(diff.amax() < 1e-12);
    }
}
