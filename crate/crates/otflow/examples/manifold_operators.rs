//! Tour of the discrete differential operators: builds each supported
//! grid, then verifies quadrature exactness, the gradient/divergence
//! adjoint pair, and the Laplacian's mean-zero range.

use otflow::{build_grid, DensityField, ManifoldSpec, ScalarField};

fn main() -> otflow::Result<()> {
    for spec in [
        ManifoldSpec::circle(64),
        ManifoldSpec::torus2(32, 32),
        ManifoldSpec::sphere2(24, 48),
    ] {
        let grid = build_grid(&spec)?;
        println!(
            "{:?} {:?}: {} nodes, volume {:.12}",
            grid.kind(),
            grid.shape(),
            grid.node_count(),
            grid.volume()
        );

        // Quadrature integrates the constant exactly.
        let ones = ScalarField::from_vec(vec![1.0; grid.node_count()])?;
        println!("  integral of 1      = {:.3e} (vs volume)", grid.integrate(&ones)? - grid.volume());

        // <grad f, X> + <f, div X> = 0 for the discrete pair, here with
        // X = rho grad g built from two bump-derived fields.
        let f = DensityField::random(&grid, 3)?.as_scalar();
        let g = DensityField::random(&grid, 4)?.as_scalar();
        let grad_f = grid.gradient(&f)?;
        let grad_g = grid.gradient(&g)?;
        let lhs = grid.integrate(&grad_f.dot(&grad_g))?;
        let rhs = -grid.inner(&f, &grid.divergence(&grad_g)?)?;
        println!("  adjointness defect = {:.3e}", (lhs - rhs).abs());

        // The Laplacian maps into mean-zero fields (mass conservation).
        let lap = grid.laplacian(&g)?;
        println!("  laplacian mean     = {:.3e}", grid.integrate(&lap)?.abs());
    }
    Ok(())
}
