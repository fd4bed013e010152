use std::f64::consts::PI;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn circle(n: usize) -> ManifoldGrid {
    build_grid(&ManifoldSpec::circle(n)).unwrap()
}

fn torus(n: usize) -> ManifoldGrid {
    build_grid(&ManifoldSpec::torus2(n, n)).unwrap()
}

fn sphere(nlat: usize, nlon: usize) -> ManifoldGrid {
    build_grid(&ManifoldSpec::sphere2(nlat, nlon)).unwrap()
}

fn circle_field(grid: &ManifoldGrid, f: impl Fn(f64) -> f64) -> ScalarField {
    ScalarField::from(Array1::from_vec(grid.nodes().iter().map(|p| f(p[0])).collect()))
}

fn surface_field(grid: &ManifoldGrid, f: impl Fn(f64, f64) -> f64) -> ScalarField {
    ScalarField::from(Array1::from_vec(grid.nodes().iter().map(|p| f(p[0], p[1])).collect()))
}

/// Random real trigonometric polynomial with modes strictly below n/4,
/// so that quadratic expressions stay resolvable on the grid.
fn band_limited_torus(grid: &ManifoldGrid, seed: u64) -> ScalarField {
    let max_mode = (grid.shape()[0] / 4).saturating_sub(1).max(1) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for kx in -max_mode..=max_mode {
        for ky in 0..=max_mode {
            if (kx, ky) == (0, 0) || (ky == 0 && kx < 0) {
                continue;
            }
            let amp = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
            modes.push((kx as f64, ky as f64, amp * rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)));
        }
    }
    surface_field(grid, |x, y| {
        modes
            .iter()
            .map(|&(kx, ky, a, ph)| a * (2.0 * PI * (kx * x + ky * y) + ph).cos())
            .sum()
    })
}

#[test]
fn weight_sums_match_total_volume() {
    assert!((circle(64).volume() - 1.0).abs() < 1e-12);
    assert!((torus(32).volume() - 1.0).abs() < 1e-12);
    assert!((sphere(48, 96).volume() - 4.0 * PI).abs() < 1e-10);
    let g = build_grid(&ManifoldSpec::circle(64).with_length(2.5)).unwrap();
    assert!((g.volume() - 2.5).abs() < 1e-12);
}

#[test]
fn rejects_small_resolution_and_nonunit_sphere() {
    assert!(build_grid(&ManifoldSpec::circle(7)).is_err());
    assert!(build_grid(&ManifoldSpec::sphere2(16, 32).with_length(2.0)).is_err());
    assert!(build_grid(&ManifoldSpec::sphere2(16, 31)).is_err());
}

#[test]
fn circle_gradient_and_laplacian_analytic() {
    let g = circle(64);
    let f = circle_field(&g, |x| (2.0 * PI * x).cos());
    let grad = g.gradient(&f).unwrap();
    let lap = g.laplacian(&f).unwrap();
    for (i, p) in g.nodes().iter().enumerate() {
        let x = p[0];
        assert!((grad.comp(0)[i] + 2.0 * PI * (2.0 * PI * x).sin()).abs() < 1e-10);
        assert!((lap.values()[i] + 4.0 * PI * PI * (2.0 * PI * x).cos()).abs() < 1e-10);
    }
}

#[test]
fn divergence_of_zero_field_is_zero() {
    let g = torus(16);
    let z = VectorField::zeros(2, g.node_count());
    assert_eq!(g.divergence(&z).unwrap().max_abs(), 0.0);
}

#[test]
fn laplacian_of_constant_vanishes() {
    for g in [circle(32), torus(16), sphere(16, 32)] {
        let f = ScalarField::from(Array1::from_elem(g.node_count(), 4.2));
        assert!(g.laplacian(&f).unwrap().max_abs() < 1e-12);
    }
}

#[test]
fn hessian_norm_circle_analytic() {
    let g = circle(64);
    let f = circle_field(&g, |x| (2.0 * PI * x).cos());
    let h = g.hessian_norm_sq(&f).unwrap();
    for (i, p) in g.nodes().iter().enumerate() {
        let c = (2.0 * PI * p[0]).cos();
        let exact = 16.0 * PI.powi(4) * c * c;
        assert!((h.values()[i] - exact).abs() < 1e-8 * (1.0 + exact));
    }
    let c = ScalarField::from(Array1::from_elem(g.node_count(), 1.0));
    assert!(g.hessian_norm_sq(&c).unwrap().max_abs() < 1e-12);
}

#[test]
fn hessian_norm_torus_vs_finite_difference_oracle() {
    let g = torus(32);
    let f_analytic = |x: f64, y: f64| (2.0 * PI * x).cos() * (2.0 * PI * y).cos();
    let f = surface_field(&g, f_analytic);
    let h = g.hessian_norm_sq(&f).unwrap();
    // Fourth-order centered differences on the analytic function.
    let eps = 1e-3;
    let d2 = |p: &dyn Fn(f64) -> f64| {
        (-p(2.0 * eps) + 16.0 * p(eps) - 30.0 * p(0.0) + 16.0 * p(-eps) - p(-2.0 * eps))
            / (12.0 * eps * eps)
    };
    for (i, node) in g.nodes().iter().enumerate() {
        let (x, y) = (node[0], node[1]);
        let fxx = d2(&|h| f_analytic(x + h, y));
        let fyy = d2(&|h| f_analytic(x, y + h));
        // Mixed partial from the diagonal second derivative:
        // d^2/ds^2 f(x+s, y+s) = fxx + 2 fxy + fyy.
        let fxy = (d2(&|h| f_analytic(x + h, y + h)) - fxx - fyy) / 2.0;
        let oracle = fxx * fxx + 2.0 * fxy * fxy + fyy * fyy;
        assert!(
            (h.values()[i] - oracle).abs() < 1e-6 * (1.0 + oracle.abs()),
            "node {i}: {} vs {oracle}",
            h.values()[i]
        );
    }
}

#[test]
fn ricci_quadratic_flat_and_sphere() {
    let g = torus(16);
    let f = surface_field(&g, |x, y| (2.0 * PI * x).cos() + (2.0 * PI * y).sin());
    let x = g.gradient(&f).unwrap();
    assert_eq!(g.ricci_quadratic(&x).unwrap().max_abs(), 0.0);

    let s = sphere(16, 32);
    let mut unit = VectorField::zeros(2, s.node_count());
    unit.comp_mut(0).fill(1.0);
    let r = s.ricci_quadratic(&unit).unwrap();
    assert!(r.values().iter().all(|v| (v - 1.0).abs() < 1e-14));

    let c = circle(32);
    let f = circle_field(&c, |x| (2.0 * PI * x).cos());
    let gx = c.gradient(&f).unwrap();
    assert_eq!(c.ricci_quadratic(&gx).unwrap().max_abs(), 0.0);
}

#[test]
fn bochner_residual_circle_spectral() {
    let g = circle(64);
    let f = circle_field(&g, |x| (2.0 * PI * x).cos());
    assert!(g.bochner_residual(&f).unwrap().max_abs() < 1e-8);
    let c = ScalarField::from(Array1::from_elem(g.node_count(), 2.0));
    assert!(g.bochner_residual(&c).unwrap().max_abs() < 1e-12);
}

#[test]
fn bochner_residual_torus_band_limited() {
    let g = torus(32);
    let f = band_limited_torus(&g, 7);
    let res = g.bochner_residual(&f).unwrap();
    assert!(res.max_abs() < 1e-6, "max residual {}", res.max_abs());
}

#[test]
fn integrate_examples() {
    let g = circle(64);
    let one = ScalarField::from(Array1::from_elem(g.node_count(), 1.0));
    assert!((g.integrate(&one).unwrap() - 1.0).abs() < 1e-14);
    let f = circle_field(&g, |x| (2.0 * PI * x).cos());
    assert!(g.integrate(&f).unwrap().abs() < 1e-14);
    let s = sphere(48, 96);
    let one = ScalarField::from(Array1::from_elem(s.node_count(), 1.0));
    assert!((s.integrate(&one).unwrap() - 4.0 * PI).abs() < 1e-10);
}

#[test]
fn divergence_is_negative_adjoint_of_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for g in [circle(64), torus(16), sphere(16, 32)] {
        let n = g.node_count();
        let f = match g.kind() {
            ManifoldKind::Sphere2 => {
                surface_field(&g, |t, p| t.cos() + t.sin() * p.cos() + 0.3 * (t.sin() * p.sin()).powi(2))
            }
            _ => ScalarField::from(Array1::from_vec(
                (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )),
        };
        let mut x = VectorField::zeros(g.dim(), n);
        for c in 0..g.dim() {
            for v in x.comp_mut(c).iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        let lhs = g.integrate(&g.gradient(&f).unwrap().dot(&x)).unwrap();
        let rhs = -g.integrate(&ScalarField::from(f.values() * g.divergence(&x).unwrap().values())).unwrap();
        let scale = f.max_abs() * (1.0 + x.norm_sq().max_abs().sqrt());
        assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1.0), "{}: {lhs} vs {rhs}", g.kind());
    }
}

#[test]
fn laplacian_squared_bounded_by_dim_times_hessian() {
    // (lap f)^2 <= n |Hess f|^2 pointwise, exact algebra for the flat
    // spectral operators.
    let g = torus(32);
    for seed in 0..5 {
        let f = band_limited_torus(&g, seed);
        let lap = g.laplacian(&f).unwrap();
        let hess = g.hessian_norm_sq(&f).unwrap();
        for (l, h) in lap.values().iter().zip(hess.values()) {
            assert!(l * l <= 2.0 * h + 1e-10);
        }
    }
}

/// Sup error away from the pole rings (first-order there) and weighted
/// L2 error over the whole sphere.
fn sphere_lap_errors(g: &ManifoldGrid, f: &ScalarField, eigenvalue: f64) -> (f64, f64) {
    let lap = g.laplacian(f).unwrap();
    let nlon = g.shape()[1];
    let nlat = g.shape()[0];
    let mut interior_sup = 0.0f64;
    let mut l2 = 0.0;
    for (idx, (l, v)) in lap.values().iter().zip(f.values()).enumerate() {
        let err = l + eigenvalue * v;
        let ring = idx / nlon;
        if ring >= 2 && ring < nlat - 2 {
            interior_sup = interior_sup.max(err.abs());
        }
        l2 += g.vol_weights()[idx] * err * err;
    }
    (interior_sup, l2.sqrt())
}

#[test]
fn sphere_laplacian_of_zonal_harmonic() {
    // lap(cos theta) = -2 cos theta on the unit sphere.
    let g = sphere(48, 96);
    let f = surface_field(&g, |t, _| t.cos());
    let (interior, l2) = sphere_lap_errors(&g, &f, 2.0);
    assert!(interior < 2e-2, "interior sup {interior}");
    assert!(l2 < 0.2, "weighted L2 {l2}");
}

#[test]
fn sphere_tesseral_harmonic_eigenvalue() {
    // Y_1^1 ~ sin(theta)cos(phi) also has eigenvalue -2.
    let g = sphere(48, 96);
    let f = surface_field(&g, |t, p| t.sin() * p.cos());
    let (interior, l2) = sphere_lap_errors(&g, &f, 2.0);
    assert!(interior < 2e-2, "interior sup {interior}");
    assert!(l2 < 2e-2, "weighted L2 {l2}");
}

#[test]
fn sphere_heat_eigenmode_decay_through_backward_step() {
    // One damped implicit step of the heat flow on Y_1^0: the discrete
    // decay factor must match 1/(1 + 2 dt) closely even though the
    // raw operator carries localized pole-ring error.
    let g = sphere(48, 96);
    let f = surface_field(&g, |t, _| t.cos());
    let dt = 1e-2;
    // Solve (I - dt lap) u = f by Richardson iteration on the residual.
    let mut u = ScalarField::from(f.values().to_owned());
    for _ in 0..4000 {
        let lap = g.laplacian(&u).unwrap();
        let res: Array1<f64> =
            f.values() - (u.values() - dt * lap.values());
        u = ScalarField::from(u.values() + 0.3 * &res);
    }
    let factor = 1.0 / (1.0 + 2.0 * dt);
    let mut worst = 0.0f64;
    for (a, b) in u.values().iter().zip(f.values()) {
        worst = worst.max((a - factor * b).abs());
    }
    assert!(worst < 2e-3, "worst {worst}");
}

#[test]
fn translate_field_round_trips() {
    let g = circle(32);
    let f = circle_field(&g, |x| (2.0 * PI * x).cos() + 0.3 * (4.0 * PI * x).sin());
    let t = g.translate_field(&f, &[5]).unwrap();
    let back = g.translate_field(&t, &[-5]).unwrap();
    assert_eq!(f, back);
}

#[test]
fn grid_serialization_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("grid");
    for g in [circle(32), torus(16), sphere(16, 32)] {
        save_grid(&g, &prefix).unwrap();
        let back = load_grid(&prefix).unwrap();
        assert_eq!(back.kind(), g.kind());
        assert_eq!(back.node_count(), g.node_count());
        assert_eq!(back.vol_weights(), g.vol_weights());
    }
}

#[test]
fn shape_mismatch_is_reported() {
    let g = circle(32);
    let f = ScalarField::zeros(31);
    assert!(matches!(g.laplacian(&f), Err(Error::ShapeMismatch { .. })));
}
