//! Dense linear-algebra helpers on top of nalgebra.
//!
//! All matrices here are small (side ≤ a few thousand), so full symmetric
//! eigendecompositions are used throughout.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order; column `k` of the returned matrix belongs to value `k`.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = symmetrize(m);
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn sym_eigenvalues_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest `|m_ij - m_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn outer(u: &DVector<f64>) -> DMatrix<f64> {
    u * u.transpose()
}

/// Top-`r` left singular vectors of `m` together with all singular values in
/// descending order.
///
/// Works on the smaller of the two Gram matrices `mmᵀ` / `mᵀm`, so memory is
/// `O(min(rows, cols)²)`.
pub fn top_left_singular(m: &DMatrix<f64>, r: usize) -> (DMatrix<f64>, Vec<f64>) {
    let (rows, cols) = m.shape();
    let r = r.min(rows.min(cols));
    if rows <= cols {
        let gram = m * m.transpose();
        let (values, vectors) = sym_eigen_desc(&gram);
        let sigma = values.iter().map(|v| v.max(0.0).sqrt()).collect();
        (vectors.columns(0, r).into_owned(), sigma)
    } else {
        let gram = m.transpose() * m;
        let (values, vectors) = sym_eigen_desc(&gram);
        let sigma: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
        let mut u = DMatrix::zeros(rows, r);
        for k in 0..r {
            let col = m * vectors.column(k);
            let norm = col.norm();
            if norm > 0.0 {
                u.set_column(k, &(col / norm));
            }
        }
        // Re-orthonormalize: the Gram route loses orthogonality for tiny σ.
        (orthonormalize(&u), sigma)
    }
}

/// Modified Gram-Schmidt (two passes). Zero columns stay zero.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut q = m.clone();
    for k in 0..q.ncols() {
        for _ in 0..2 {
            for j in 0..k {
                let proj = q.column(j).dot(&q.column(k));
                let qj = q.column(j).into_owned();
                q.column_mut(k).axpy(-proj, &qj, 1.0);
            }
        }
        let norm = q.column(k).norm();
        if norm > 1e-300 {
            q.column_mut(k).scale_mut(1.0 / norm);
        }
    }
    q
}

/// Thin SVD orthonormal basis of the column span, plus singular values (descending).
pub fn column_basis(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
    let basis = DMatrix::from_fn(m.nrows(), order.len(), |r, c| u[(r, order[c])]);
    (basis, sigma)
}

pub fn singular_values_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `σ_max / σ_min`; infinite for singular matrices.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values_desc(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Orthogonal projector `QQᵀ` onto the column span of an orthonormal `q`.
pub fn projector(q: &DMatrix<f64>) -> DMatrix<f64> {
    q * q.transpose()
}

/// Haar-distributed matrix with orthonormal columns: QR of a Gaussian matrix
/// with the signs of `diag(R)` folded into `Q`.
pub fn haar_orthonormal(gaussian: DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = gaussian.shape();
    let qr = gaussian.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..cols.min(rows) {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}
