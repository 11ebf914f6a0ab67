//! Small dense helpers on top of nalgebra: ranks, null spaces, minimum-norm solves.

use nalgebra::{DMatrix, DVector};

/// Singular values below `REL_RANK_TOL · σ_max` count as zero.
pub const REL_RANK_TOL: f64 = 1e-9;

/// Singular values in decreasing order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Numerical rank with relative tolerance `rel_tol`.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(a);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&v| v > rel_tol * smax).count(),
        _ => 0,
    }
}

/// Ordered thin SVD with the rank already decided.
#[derive(Debug, Clone)]
pub struct RankedSvd {
    /// Left singular vectors (columns), ordered by decreasing singular value.
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    /// Right singular vectors (columns).
    pub v: DMatrix<f64>,
    pub rank: usize,
}

impl RankedSvd {
    pub fn new(a: &DMatrix<f64>, rel_tol: f64) -> Self {
        let (n, p) = a.shape();
        if n == 0 || p == 0 {
            return Self { u: DMatrix::zeros(n, 0), sigma: vec![], v: DMatrix::zeros(p, 0), rank: 0 };
        }
        let svd = a.clone().svd(true, true);
        let u0 = svd.u.expect("requested");
        let vt0 = svd.v_t.expect("requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let u = DMatrix::from_columns(&order.iter().map(|&i| u0.column(i).into_owned()).collect::<Vec<_>>());
        let v = DMatrix::from_columns(&order.iter().map(|&i| vt0.row(i).transpose()).collect::<Vec<_>>());
        let smax = sigma.first().copied().unwrap_or(0.0);
        let rank = if smax > 0.0 { sigma.iter().filter(|&&s| s > rel_tol * smax).count() } else { 0 };
        Self { u, sigma, v, rank }
    }

    /// Orthonormal basis of the range.
    pub fn range(&self) -> DMatrix<f64> {
        self.u.columns(0, self.rank).into_owned()
    }

    /// Orthonormal basis of the orthogonal complement of the range (left null space).
    pub fn left_null(&self) -> DMatrix<f64> {
        complement(&self.range(), self.u.nrows())
    }

    /// Orthonormal basis of the null space.
    pub fn null(&self) -> DMatrix<f64> {
        complement(&self.v.columns(0, self.rank).into_owned(), self.v.nrows())
    }

    /// Minimum-norm least-squares solution of `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.v.nrows());
        for i in 0..self.rank {
            let c = self.u.column(i).dot(b) / self.sigma[i];
            x.axpy(c, &self.v.column(i), 1.0);
        }
        x
    }
}

/// Orthonormal basis of the complement of the span of the orthonormal columns of `q` in ℝⁿ.
pub fn complement(q: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let r = q.ncols();
    if r == 0 {
        return DMatrix::identity(n, n);
    }
    let proj = DMatrix::<f64>::identity(n, n) - q * q.transpose();
    let eig = proj.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let cols: Vec<DVector<f64>> = idx.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        orthonormalize(&DMatrix::from_columns(&cols))
    }
}

/// Modified Gram–Schmidt (two passes); columns with a negligible remainder are dropped.
pub fn orthonormalize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let scale = a.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(a.ncols());
    for col in a.column_iter() {
        let mut v = col.into_owned();
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let nv = v.norm();
        if nv > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            out.push(v / nv);
        }
    }
    if out.is_empty() {
        DMatrix::zeros(a.nrows(), 0)
    } else {
        DMatrix::from_columns(&out)
    }
}

/// Least-squares residual of `b` against the column span of `a`, relative to `‖b‖`.
pub fn relative_span_residual(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    let nb = b.norm();
    if nb == 0.0 {
        return 0.0;
    }
    let q = RankedSvd::new(a, REL_RANK_TOL).range();
    let r = b - &q * (q.transpose() * b);
    r.norm() / nb
}

/// Flatten a matrix row-major into a vector.
pub fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.transpose().iter().copied())
}

/// Inverse of [`flatten`].
pub fn unflatten(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, v.as_slice())
}

/// Operator 2-norm.
pub fn op_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_and_range_are_complementary() {
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 0.0, 1.0, 2.0, 4.0, 0.0, 2.0]);
        let svd = RankedSvd::new(&a, REL_RANK_TOL);
        assert_eq!(svd.rank, 1);
        let n = svd.null();
        assert_eq!(n.ncols(), 3);
        assert!((&a * &n).norm() < 1e-12);
        assert_eq!(svd.left_null().ncols(), 1);
        assert!((svd.left_null().transpose() * &a).norm() < 1e-12);
    }

    #[test]
    fn minimum_norm_solution() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = RankedSvd::new(&a, REL_RANK_TOL).solve(&DVector::from_vec(vec![2.0]));
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }
}
