//! The evolution variational inequality and its consequences, measured:
//! runs the integral and differential forms, distance contraction, the
//! regularization bound, and the uniform-continuity bound for the heat
//! flow on the flat circle.

use otflow::entropy::{make_entropy, EntropyKind};
use otflow::evi::{
    check_contraction, check_evi_differential, check_evi_integral, check_regularization,
    check_uniform_continuity, FlowCheckContext,
};
use otflow::{build_grid, DensityField, ManifoldSpec};

fn main() -> otflow::Result<()> {
    let grid = build_grid(&ManifoldSpec::circle(64))?;
    let mut ctx = FlowCheckContext::new(&grid, make_entropy(EntropyKind::Log)?);
    ctx.slices = 8;
    let mu0 = DensityField::random(&grid, 1)?;
    let nu = DensityField::random(&grid, 2)?;

    let reports = [
        check_evi_integral(&ctx, &mu0, &nu, 0.01, 0.03)?,
        check_evi_differential(&ctx, &mu0, &nu, 0.02)?,
        check_contraction(&ctx, &mu0, &nu, 0.02)?,
        check_regularization(&ctx, &mu0, &nu, 0.01)?,
        check_uniform_continuity(&ctx, &mu0, 0.005, 0.02)?,
    ];
    for report in &reports {
        println!("{}", report.summary());
    }
    assert!(reports.iter().all(|r| r.pass));
    Ok(())
}
