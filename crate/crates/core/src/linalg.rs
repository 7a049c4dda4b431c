//! Small dense SVD via one-sided Jacobi rotations.
//!
//! The matrices here are tiny (at most a few hundred rows) but the downstream
//! logic leans on crisp rank decisions for rank-deficient inputs, which the
//! general-purpose bidiagonalization SVD does not deliver reliably. One-sided
//! Jacobi orthogonalizes the columns in place and achieves high relative
//! accuracy for every singular value.

use nalgebra::DMatrix;

/// `a = u * diag(sigma) * v^T` with `sigma` descending, `u` of shape
/// `m x n` (thin) and `v` of shape `n x n`. Requires `m >= n`.
pub struct Svd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

/// One-sided Jacobi SVD. Panics if the matrix has more columns than rows;
/// transpose first in that case.
pub fn jacobi_svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = (a.nrows(), a.ncols());
    assert!(m >= n, "jacobi_svd expects m >= n; transpose the input");
    let mut work = a.clone();
    let mut v = DMatrix::identity(n, n);
    let eps = f64::EPSILON;

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..m {
                    let x = work[(i, p)];
                    let y = work[(i, q)];
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq.abs() <= 1e2 * eps * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                off = off.max(apq.abs() / (app * aqq).sqrt().max(f64::MIN_POSITIVE));
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let x = work[(i, p)];
                    let y = work[(i, q)];
                    work[(i, p)] = c * x - s * y;
                    work[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let x = v[(i, p)];
                    let y = v[(i, q)];
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if off == 0.0 {
            break;
        }
    }

    // Column norms are the singular values; sort descending.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| work.column(j).norm()).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());
    let mut u = DMatrix::zeros(m, n);
    let mut sigma = Vec::with_capacity(n);
    let mut v_sorted = DMatrix::zeros(n, n);
    for (slot, &j) in order.iter().enumerate() {
        sigma.push(norms[j]);
        if norms[j] > 0.0 {
            for i in 0..m {
                u[(i, slot)] = work[(i, j)] / norms[j];
            }
        }
        for i in 0..n {
            v_sorted[(i, slot)] = v[(i, j)];
        }
    }
    Svd {
        u,
        sigma,
        v: v_sorted,
    }
}

/// Minimum-norm pseudo-inverse built on [`jacobi_svd`], with singular values
/// below `rel_cut * sigma_max` treated as zero.
pub fn pseudo_inverse(a: &DMatrix<f64>, rel_cut: f64) -> DMatrix<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    if m >= n {
        let svd = jacobi_svd(a);
        let cut = rel_cut * svd.sigma.first().copied().unwrap_or(0.0);
        let mut out = DMatrix::zeros(n, m);
        for (k, &s) in svd.sigma.iter().enumerate() {
            if s <= cut || s == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in 0..m {
                    out[(i, j)] += svd.v[(i, k)] * svd.u[(j, k)] / s;
                }
            }
        }
        out
    } else {
        pseudo_inverse(&a.transpose(), rel_cut).transpose()
    }
}
