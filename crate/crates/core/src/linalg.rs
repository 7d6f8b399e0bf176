//! Dense SVD-based helpers shared by the numeric modules.

use nalgebra::{DMatrix, DVector};

/// Singular values below `tol * max(1, sigma_max)` count as zero.
pub const DEFAULT_TOL: f64 = 1e-10;

fn padded_svd(m: &DMatrix<f64>) -> nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    // pad to at least square so that V^T is complete
    let (r, c) = m.shape();
    let mm = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    mm.svd(true, true)
}

fn threshold(sv: &DVector<f64>, tol: f64) -> f64 {
    tol * sv.iter().cloned().fold(1.0, f64::max)
}

pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let t = threshold(&sv, tol);
    sv.iter().filter(|&&s| s > t).count()
}

/// Orthonormal basis of the null space, as columns.
pub fn kernel(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let c = m.ncols();
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(c, c);
    }
    let svd = padded_svd(m);
    let t = threshold(&svd.singular_values, tol);
    let vt = svd.v_t.as_ref().unwrap();
    let cols: Vec<DVector<f64>> = (0..vt.nrows())
        .filter(|&i| svd.singular_values[i] <= t)
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(c, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormal basis of the column space, as columns.
pub fn column_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let r = m.nrows();
    if m.ncols() == 0 || r == 0 {
        return DMatrix::zeros(r, 0);
    }
    let svd = m.clone().svd(true, false);
    let t = threshold(&svd.singular_values, tol);
    let u = svd.u.as_ref().unwrap();
    let cols: Vec<DVector<f64>> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > t)
        .map(|i| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(r, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Least-squares solution of `a x = b` via SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let t = threshold(&svd.singular_values, tol);
    svd.solve(b, t).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Counts of positive, negative and zero eigenvalues of a symmetric matrix.
pub fn inertia(m: &DMatrix<f64>, tol: f64) -> (usize, usize, usize) {
    if m.is_empty() {
        return (0, 0, 0);
    }
    let sym = (m + m.transpose()) * 0.5;
    let ev = sym.symmetric_eigenvalues();
    let t = threshold(&ev.map(f64::abs), tol);
    let pos = ev.iter().filter(|&&v| v > t).count();
    let neg = ev.iter().filter(|&&v| v < -t).count();
    (pos, neg, ev.len() - pos - neg)
}
