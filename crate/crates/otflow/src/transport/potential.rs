//! Weighted elliptic solve: recovers a velocity potential from a density
//! and a mass-flux divergence.

use ndarray::Array1;

use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::cg;
use crate::manifold::ManifoldGrid;

/// Solves `-div(rho grad phi) = drho` for the zero-mean potential `phi`.
///
/// `drho` must integrate to zero (the operator's range); `rho` must be a
/// strictly positive density, which makes the operator positive definite
/// on mean-zero fields.
pub fn solve_potential(
    grid: &ManifoldGrid,
    rho: &DensityField,
    drho: &ScalarField,
) -> Result<ScalarField> {
    rho.check_grid(grid)?;
    let mean = grid.integrate(drho)? / grid.volume();
    let scale = drho.max_abs().max(1e-300);
    if mean.abs() > 1e-10 * scale.max(1.0) {
        return Err(Error::NotMeanZero(mean));
    }
    let w = grid.vol_weights();
    let rho_vals = rho.values();
    // The centered/spectral first derivatives annihilate the grid's
    // highest (checkerboard) frequencies as well as constants, so the
    // operator has a small known kernel. Deflate it from the data and
    // inside the iteration so CG runs on the definite complement.
    let kernel = gradient_kernel_basis(grid);
    let deflate = |mut v: Array1<f64>| -> Array1<f64> {
        for b in &kernel {
            let c: f64 = v.iter().zip(b).zip(w).map(|((x, y), ww)| x * y * ww).sum();
            v.scaled_add(-c, b);
        }
        v
    };
    let apply = |v: &Array1<f64>| -> Array1<f64> {
        let grad = grid.gradient(&ScalarField::from(v.clone())).expect("finite");
        let flux = grad.scale_pointwise(&ScalarField::from(rho_vals.clone()));
        let div = grid.divergence(&flux).expect("finite");
        deflate(-div.into_values())
    };
    let b = deflate(drho.values().clone());
    let phi = cg(apply, &b, Array1::zeros(b.len()), w, 1e-11, 50_000)?;
    grid.mean_zero(&ScalarField::from(deflate(phi)))
}

/// Orthonormal basis (in the quadrature inner product) of the discrete
/// gradient's kernel: constants plus the per-axis checkerboard modes the
/// centered first differences cannot see.
fn gradient_kernel_basis(grid: &ManifoldGrid) -> Vec<Array1<f64>> {
    use crate::manifold::ManifoldKind;
    let n = grid.node_count();
    let w = grid.vol_weights();
    let mut raw: Vec<Array1<f64>> = vec![Array1::ones(n)];
    let checker = |pattern: &dyn Fn(usize) -> bool| -> Array1<f64> {
        Array1::from_iter((0..n).map(|idx| if pattern(idx) { 1.0 } else { -1.0 }))
    };
    match grid.kind() {
        ManifoldKind::Circle => {
            if n % 2 == 0 {
                raw.push(checker(&|idx| idx % 2 == 0));
            }
        }
        ManifoldKind::Torus2 => {
            let (nx, ny) = (grid.shape()[0], grid.shape()[1]);
            if nx % 2 == 0 {
                raw.push(checker(&|idx| (idx / ny) % 2 == 0));
            }
            if ny % 2 == 0 {
                raw.push(checker(&|idx| idx % 2 == 0));
            }
            if nx % 2 == 0 && ny % 2 == 0 {
                raw.push(checker(&|idx| (idx / ny + idx) % 2 == 0));
            }
        }
        ManifoldKind::Sphere2 => {
            let nlon = grid.shape()[1];
            if nlon % 2 == 0 {
                raw.push(checker(&|idx| idx % 2 == 0));
            }
        }
    }
    // The vectors are mutually orthogonal under the quadrature weights;
    // normalize them.
    raw.into_iter()
        .map(|v| {
            let norm: f64 = v.iter().zip(w).map(|(x, ww)| x * x * ww).sum::<f64>().sqrt();
            v / norm
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build_grid;
    use crate::manifold::ManifoldSpec;
    use std::f64::consts::PI;

    #[test]
    fn inverts_the_laplacian_for_uniform_density() {
        let grid = build_grid(&ManifoldSpec::circle(64)).unwrap();
        let rho = DensityField::uniform(&grid);
        let drho = ScalarField::from_vec(
            grid.nodes().iter().map(|p| (2.0 * PI * p[0]).cos()).collect(),
        )
        .unwrap();
        let phi = solve_potential(&grid, &rho, &drho).unwrap();
        // -phi'' = cos(2 pi x) with rho = 1: phi = cos(2 pi x) / (4 pi^2).
        let max_err = grid.nodes().iter().zip(phi.values()).fold(0.0f64, |m, (p, &v)| {
            m.max((v - (2.0 * PI * p[0]).cos() / (4.0 * PI * PI)).abs())
        });
        assert!(max_err < 1e-10, "max error {max_err:.3e}");
    }

    #[test]
    fn zero_source_gives_zero_potential() {
        let grid = build_grid(&ManifoldSpec::circle(32)).unwrap();
        let rho = DensityField::bump(&grid, &[0.4]).unwrap();
        let phi = solve_potential(&grid, &rho, &ScalarField::zeros(32)).unwrap();
        assert!(phi.max_abs() < 1e-12);
    }

    #[test]
    fn matches_dense_direct_solve() {
        // rho = 1 + 0.5 cos(2 pi x), drho = cos(4 pi x): compare against a
        // dense Gaussian elimination on the explicitly assembled operator.
        let n = 64;
        let grid = build_grid(&ManifoldSpec::circle(n)).unwrap();
        let rho = DensityField::from_positive_values(
            &grid,
            grid.nodes().iter().map(|p| 1.0 + 0.5 * (2.0 * PI * p[0]).cos()).collect(),
        )
        .unwrap();
        let drho = ScalarField::from_vec(
            grid.nodes().iter().map(|p| (4.0 * PI * p[0]).cos()).collect(),
        )
        .unwrap();
        let phi = solve_potential(&grid, &rho, &drho).unwrap();

        // Assemble A[i][j] = (-div(rho grad e_j))_i plus rank-one shifts
        // pinning the kernel: constants and the checkerboard mode (the
        // centered spectral derivative annihilates the Nyquist frequency).
        let mut a = vec![vec![0.0f64; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let grad = grid.gradient(&ScalarField::from_vec(e).unwrap()).unwrap();
            let flux = grad.scale_pointwise(&rho.as_scalar());
            let col = grid.divergence(&flux).unwrap();
            for i in 0..n {
                let checker = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                a[i][j] = -col.values()[i] + 1.0 + checker;
            }
        }
        let mut rhs: Vec<f64> = drho.values().to_vec();
        // Gaussian elimination with partial pivoting.
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            rhs.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                rhs[row] -= f * rhs[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut s = rhs[row];
            for k in row + 1..n {
                s -= a[row][k] * x[k];
            }
            x[row] = s / a[row][row];
        }
        let direct = grid.mean_zero(&ScalarField::from_vec(x).unwrap()).unwrap();
        let max_err = phi
            .values()
            .iter()
            .zip(direct.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(max_err < 1e-8, "max error {max_err:.3e}");

        // Residual check against the stated tolerance.
        let grad = grid.gradient(&phi).unwrap();
        let flux = grad.scale_pointwise(&rho.as_scalar());
        let div = grid.divergence(&flux).unwrap();
        let res = div
            .values()
            .iter()
            .zip(drho.values())
            .fold(0.0f64, |m, (d, s)| m.max((d + s).abs()));
        assert!(res <= 1e-9 * drho.max_abs(), "residual {res:.3e}");
    }

    #[test]
    fn rejects_sources_with_mass() {
        let grid = build_grid(&ManifoldSpec::circle(32)).unwrap();
        let rho = DensityField::uniform(&grid);
        let bad = ScalarField::from_vec(vec![1.0; 32]).unwrap();
        assert!(matches!(solve_potential(&grid, &rho, &bad), Err(Error::NotMeanZero(_))));
    }

    #[test]
    fn works_on_sphere() {
        let grid = build_grid(&ManifoldSpec::sphere2(16, 32)).unwrap();
        let rho = DensityField::bump(&grid, &[1.3, 2.0]).unwrap();
        let noise = crate::density::band_limited_noise(&grid, 9);
        let phi = solve_potential(&grid, &rho, &noise).unwrap();
        let grad = grid.gradient(&phi).unwrap();
        let flux = grad.scale_pointwise(&rho.as_scalar());
        let div = grid.divergence(&flux).unwrap();
        let res = div
            .values()
            .iter()
            .zip(noise.values())
            .fold(0.0f64, |m, (d, s)| m.max((d + s).abs()));
        assert!(res <= 1e-8 * noise.max_abs().max(1.0), "residual {res:.3e}");
        assert!(grid.integrate(&phi).unwrap().abs() < 1e-10);
    }
}
