//! Convexity of the energy along geodesics: checks the interpolation
//! inequality at three points of a geodesic for the logarithmic and the
//! quadratic (porous-medium) energies on the flat circle, where the
//! convexity modulus is zero.

use otflow::entropy::{make_entropy, EntropyKind};
use otflow::evi::{check_displacement_convexity, FlowCheckContext};
use otflow::{build_grid, DensityField, ManifoldSpec};

fn main() -> otflow::Result<()> {
    let grid = build_grid(&ManifoldSpec::circle(64))?;
    let mu0 = DensityField::random(&grid, 14)?;
    let mu1 = DensityField::random(&grid, 15)?;
    for kind in [EntropyKind::Log, EntropyKind::Power { m: 2.0 }] {
        let mut ctx = FlowCheckContext::new(&grid, make_entropy(kind)?);
        ctx.slices = 8;
        let report = check_displacement_convexity(&ctx, &mu0, &mu1, &[0.25, 0.5, 0.75])?;
        println!("{}", report.summary());
        assert!(report.pass);
    }
    Ok(())
}
