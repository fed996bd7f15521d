//! Small dense linear-algebra helpers shared by the assembly and flow code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative threshold below which a singular value or eigenvalue counts as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Eigenvalues of a symmetric matrix, sorted ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Numerical rank from the singular values of `m`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// Orthonormal basis (as columns) of the null space of `m`.
///
/// Built from the eigenvectors of `mᵀm` whose eigenvalues vanish relative to
/// the largest one. Columns are ordered by eigenvalue and sign-normalized so
/// that the first nonzero entry is positive, which keeps runs reproducible.
pub fn kernel_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.ncols();
    let gram = m.transpose() * m;
    let eig = SymmetricEigen::new(gram);
    let max = eig.eigenvalues.iter().copied().fold(0.0_f64, |a, b| a.max(b.abs()));
    let mut idx: Vec<usize> = (0..n)
        .filter(|&i| eig.eigenvalues[i].abs() <= RANK_TOL * max.max(1.0))
        .collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut basis = DMatrix::zeros(n, idx.len());
    for (col, &i) in idx.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        basis.set_column(col, &v);
    }
    basis
}

/// Least-squares residual of `v` against the column space of `a`.
pub fn residual_against_columns(a: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    if a.ncols() == 0 {
        return v.norm();
    }
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(v, RANK_TOL)
        .expect("SVD computed with both factors");
    (v - a * x).norm()
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}
