//! Constant-speed resampling: builds a translation path whose time
//! parameter has been deliberately warped, then flattens its per-slice
//! action profile with `reparametrize` without increasing the total
//! action.

use otflow::transport::{action, from_density_curve, reparametrize};
use otflow::{build_grid, DensityField, ManifoldSpec};

fn main() -> otflow::Result<()> {
    let grid = build_grid(&ManifoldSpec::circle(64))?;
    let k = 16usize;
    // Slice s carries the bump translated by 0.25 * warp(s), with a warp
    // that starts slow and speeds up (its speed never vanishes).
    let warp = |r: f64| (r + 3.0 * r * r) / 4.0;
    let slices: Vec<DensityField> = (0..=k)
        .map(|j| {
            let s = j as f64 / k as f64;
            DensityField::bump_pow(&grid, &[0.25 * warp(s)], 2.0)
        })
        .collect::<otflow::Result<_>>()?;
    let warped = from_density_curve(&grid, slices)?;
    let flat = reparametrize(&grid, &warped, 1e-3)?;

    let spread = |path: &otflow::transport::TransportPath| -> otflow::Result<f64> {
        let a = action(&grid, path)?;
        let interior = &a[1..a.len() - 1];
        let mean = interior.iter().sum::<f64>() / interior.len() as f64;
        Ok(interior.iter().fold(0.0f64, |m, &x| m.max((x - mean).abs())) / mean)
    };
    println!("relative action spread before: {:.3e}", spread(&warped)?);
    println!("relative action spread after:  {:.3e}", spread(&flat)?);
    println!("squared length before: {:.8}", warped.w2_sq_estimate);
    println!("squared length after:  {:.8}", flat.w2_sq_estimate);
    assert!(spread(&flat)? < spread(&warped)?);
    Ok(())
}
