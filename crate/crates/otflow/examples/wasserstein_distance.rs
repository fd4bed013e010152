//! Two ways to the same distance: the dynamic (kinetic-action) solver
//! and the independent linear-programming oracle agree on the
//! L2-Wasserstein distance between two bumps on the circle.

use otflow::transport::{lp_w2_oracle, solve_w2, TransportParams};
use otflow::{build_grid, DensityField, ManifoldSpec};

fn main() -> otflow::Result<()> {
    let grid = build_grid(&ManifoldSpec::circle(32))?;
    let mu0 = DensityField::bump(&grid, &[0.0])?;
    let mu1 = DensityField::bump(&grid, &[0.25])?;

    let mut params = TransportParams::default();
    params.stop_window = 200;
    let path = solve_w2(&grid, &mu0, &mu1, 16, &params)?;
    let lp = lp_w2_oracle(&grid, &mu0, &mu1)?;

    println!("dynamic solver:  W2 = {:.6}  ({} slices)", path.w2(), path.intervals());
    println!("LP oracle:       W2 = {:.6}  (duality gap {:.2e})", lp.w2, lp.duality_gap);
    let rel = (path.w2() - lp.w2).abs() / lp.w2;
    println!("relative difference: {rel:.3e}");
    assert!(rel < 2e-2);
    Ok(())
}
