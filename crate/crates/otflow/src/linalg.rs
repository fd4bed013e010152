//! Matrix-free conjugate gradients in a weighted inner product.

use ndarray::Array1;

use crate::error::{Error, Result};

/// Weighted dot product `sum a*b*w`.
pub(crate) fn wdot(a: &Array1<f64>, b: &Array1<f64>, w: &Array1<f64>) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), ww)| x * y * ww).sum()
}

/// Solves `A x = b` for an operator `apply` that is self-adjoint and
/// positive definite in the inner product weighted by `w`. Convergence is
/// declared when the weighted residual norm drops below
/// `tol * max(||b||_w, floor)`.
pub(crate) fn cg(
    apply: impl Fn(&Array1<f64>) -> Array1<f64>,
    b: &Array1<f64>,
    x0: Array1<f64>,
    w: &Array1<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Array1<f64>> {
    let mut x = x0;
    let mut r = b - &apply(&x);
    let b_norm = wdot(b, b, w).sqrt().max(1e-300);
    let target = tol * b_norm;
    let mut rs = wdot(&r, &r, w);
    if rs.sqrt() <= target {
        return Ok(x);
    }
    let mut p = r.clone();
    for _ in 0..max_iter {
        let ap = apply(&p);
        let denom = wdot(&p, &ap, w);
        if !(denom > 0.0) {
            return Err(Error::CgNonConvergence { residual: rs.sqrt(), iters: max_iter });
        }
        let alpha = rs / denom;
        x.zip_mut_with(&p, |xi, pi| *xi += alpha * pi);
        r.zip_mut_with(&ap, |ri, api| *ri -= alpha * api);
        let rs_new = wdot(&r, &r, w);
        if rs_new.sqrt() <= target {
            return Ok(x);
        }
        let beta = rs_new / rs;
        rs = rs_new;
        p = &r + &(beta * &p);
    }
    Err(Error::CgNonConvergence { residual: rs.sqrt(), iters: max_iter })
}

/// Solves a symmetric tridiagonal system with varying diagonal and a
/// constant off-diagonal value, in place over `rhs`.
pub(crate) fn thomas_const_off(diag: &[f64], off: f64, rhs: &mut [f64]) {
    let n = diag.len();
    debug_assert_eq!(rhs.len(), n);
    let mut c = vec![0.0; n];
    let mut d = diag[0];
    rhs[0] /= d;
    for i in 1..n {
        c[i - 1] = off / d;
        d = diag[i] - off * c[i - 1];
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / d;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Eigendecomposition of a small symmetric matrix by cyclic Jacobi
/// rotations. Returns eigenvalues and the matrix whose columns are the
/// corresponding orthonormal eigenvectors (`v[i][l]` is component `i` of
/// eigenvector `l`).
pub(crate) fn jacobi_eigh(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1e-300);
    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(a[p][q].abs());
            }
        }
        if off < 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let (aip, aiq) = (a[i][p], a[i][q]);
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let (apj, aqj) = (a[p][j], a[q][j]);
                    a[p][j] = c * apj - s * aqj;
                    a[q][j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let (vip, viq) = (v[i][p], v[i][q]);
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }
    let eigvals = (0..n).map(|i| a[i][i]).collect();
    (eigvals, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_diagonal_system() {
        let d = Array1::from_vec(vec![1.0, 2.0, 4.0, 8.0]);
        let b = Array1::from_vec(vec![1.0, 1.0, 1.0, 1.0]);
        let w = Array1::from_elem(4, 0.25);
        let d2 = d.clone();
        let x = cg(|v| &d2 * v, &b, Array1::zeros(4), &w, 1e-14, 100).unwrap();
        for (xi, di) in x.iter().zip(&d) {
            assert!((xi - 1.0 / di).abs() < 1e-12);
        }
    }

    #[test]
    fn thomas_matches_direct_inverse() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = b, inverse known in closed form.
        let diag = vec![2.0, 2.0, 2.0];
        let mut rhs = vec![1.0, 0.0, 1.0];
        thomas_const_off(&diag, -1.0, &mut rhs);
        for (got, want) in rhs.iter().zip([1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // Symmetric [[2,1],[1,2]]: eigenvalues 1 and 3.
        let (mut vals, vecs) = jacobi_eigh(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        // Columns orthonormal.
        let dot = vecs[0][0] * vecs[0][1] + vecs[1][0] * vecs[1][1];
        assert!(dot.abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        // Indefinite operator: negated identity.
        let b = Array1::from_vec(vec![1.0, 1.0]);
        let w = Array1::from_elem(2, 1.0);
        let err = cg(|v| -v.clone(), &b, Array1::zeros(2), &w, 1e-14, 10);
        assert!(matches!(err, Err(Error::CgNonConvergence { .. })));
    }
}
