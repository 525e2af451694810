//! SVD-based rank, subspace and least-squares helpers.

use nalgebra::{DMatrix, DVector};

/// Absolute floor below which a singular value is never counted.
pub const ABS_FLOOR: f64 = 1e-12;

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Count of singular values at or above `max(rel * sigma_max, ABS_FLOOR)`.
pub fn rank_of(sv: &[f64], rel: f64) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    let cut = (rel * top).max(ABS_FLOOR);
    sv.iter().filter(|&&s| s >= cut).count()
}

pub fn rank(m: &DMatrix<f64>, rel: f64) -> usize {
    rank_of(&singular_values(m), rel)
}

/// Rank with an absolute threshold.
pub fn rank_abs(m: &DMatrix<f64>, cut: f64) -> usize {
    singular_values(m).iter().filter(|&&s| s >= cut.max(ABS_FLOOR)).count()
}

/// Full SVD with values sorted decreasingly: `(U, sigma, V)` where `m = U diag(sigma) V^T`
/// restricted to the first `min(r, c)` columns; `V` is square `c x c`.
fn full_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (r, c) = m.shape();
    // Pad to at least square so that V^T is complete.
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = DMatrix::zeros(c, c);
    for (k, &i) in idx.iter().enumerate() {
        v.set_column(k, &vt.row(i).transpose());
    }
    let mut us = DMatrix::zeros(u.nrows(), idx.len());
    for (k, &i) in idx.iter().enumerate() {
        us.set_column(k, &u.column(i));
    }
    let us = us.rows(0, r).into_owned();
    (us, sigma, v)
}

/// Orthonormal basis (as columns) of the null space, using an absolute cutoff.
pub fn null_space_abs(m: &DMatrix<f64>, cut: f64) -> DMatrix<f64> {
    let c = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(c, c);
    }
    let (_, sigma, v) = full_svd(m);
    let r = sigma.iter().filter(|&&s| s >= cut.max(ABS_FLOOR)).count();
    v.columns(r, c - r).into_owned()
}

/// Orthonormal basis of the null space with the relative rank rule.
pub fn null_space(m: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let top = singular_values(m).first().copied().unwrap_or(0.0);
    null_space_abs(m, rel * top)
}

/// Orthonormal basis (as columns) of the column space, relative rank rule.
pub fn column_space(m: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let t = m.transpose();
    let (_, sigma, v) = full_svd(&t);
    let r = rank_of(&sigma, rel);
    v.columns(0, r).into_owned()
}

/// Minimal-norm least-squares solution of `a x = b`, discarding singular values
/// below `max(rel * sigma_max, ABS_FLOOR)`.
pub fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>, rel: f64) -> DVector<f64> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return DVector::zeros(c);
    }
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.max();
    let cut = (rel * top).max(ABS_FLOOR);
    svd.solve(b, cut - f64::EPSILON * cut).unwrap_or_else(|_| DVector::zeros(c))
}

/// Dimension of the sum of two subspaces given by basis columns.
pub fn sum_dim(a: &DMatrix<f64>, b: &DMatrix<f64>, rel: f64) -> usize {
    let n = a.nrows().max(b.nrows());
    let mut m = DMatrix::zeros(n, a.ncols() + b.ncols());
    if a.ncols() > 0 {
        m.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    }
    if b.ncols() > 0 {
        m.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    }
    if m.ncols() == 0 {
        return 0;
    }
    rank(&m, rel)
}

/// Orthonormal basis of the intersection of two subspaces given by orthonormal columns.
pub fn intersection(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    // x in span(a) ∩ span(b)  <=>  a y = b z; solve [a, -b] (y,z) = 0.
    let mut m = DMatrix::zeros(n, a.ncols() + b.ncols());
    m.view_mut((0, 0), (n, a.ncols())).copy_from(a);
    m.view_mut((0, a.ncols()), (n, b.ncols())).copy_from(&(-b));
    let ker = null_space_abs(&m, tol);
    if ker.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let vecs = a * ker.rows(0, a.ncols());
    column_space(&vecs, tol)
}

/// Largest principal-angle sine between two subspaces of equal dimension
/// (orthonormal bases); 1.0 when dimensions differ.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let proj = b * (b.transpose() * a);
    let resid = a - proj;
    singular_values(&resid).first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_counts_with_relative_and_absolute_floor() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-10]);
        assert_eq!(rank(&m, 1e-8), 1);
        assert_eq!(rank(&m, 1e-12), 2);
        assert_eq!(rank(&DMatrix::zeros(3, 3), 1e-8), 0);
    }

    #[test]
    fn null_space_of_wide_matrix_is_complete() {
        let m = DMatrix::from_row_slice(1, 3, &[-3.0, 0.0, 1.0]);
        let k = null_space(&m, 1e-8);
        assert_eq!(k.ncols(), 2);
        assert!((&m * &k).amax() < 1e-14);
        assert!((k.transpose() * &k - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn column_space_and_intersection() {
        let pi = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let cs = column_space(&pi, 1e-8);
        assert_eq!(cs.ncols(), 2);
        let tc = null_space(&DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]), 1e-8);
        assert_eq!(intersection(&cs, &tc, 1e-8).ncols(), 2);
        let tc2 = null_space(&DMatrix::from_row_slice(1, 3, &[-3.0, 0.0, 1.0]), 1e-8);
        let w = intersection(&cs, &tc2, 1e-8);
        assert_eq!(w.ncols(), 1);
        assert!(w[(0, 0)].abs() < 1e-12 && w[(2, 0)].abs() < 1e-12);
        assert_eq!(sum_dim(&cs, &tc2, 1e-8), 3);
    }

    #[test]
    fn pinv_gives_minimal_norm_solution() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = pinv_solve(&a, &DVector::from_vec(vec![2.0]), 1e-8);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }
}
