//! Executable checks for the gradient-flow inequalities.
//!
//! Nonlinear diffusion is the Wasserstein gradient flow of an internal
//! energy, and on manifolds whose Ricci curvature is bounded below the
//! flow satisfies a family of quantitative inequalities: an evolution
//! variational inequality in integral and differential form, contraction
//! of the distance, regularization and uniform-continuity bounds, and
//! displacement convexity of the energy along geodesics. Each check in
//! this module evolves densities, measures distances with the dynamic
//! solver (cross-checked against the linear-programming oracle on small
//! grids), evaluates both sides of one inequality, and emits a
//! [`CheckReport`] with the measured slack.
//!
//! The deepest check, [`action_identity`], verifies the differential
//! identity that links the time derivative of a path's kinetic action to
//! the space derivative of its energy through a curvature-weighted
//! dissipation term; its sign is the mechanism behind every other
//! inequality here.

use crate::density::DensityField;
use crate::diffusion::{evolve_to, DiffusionParams};
use crate::entropy::EntropyModel;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::manifold::{ManifoldGrid, ManifoldKind};
use crate::report::CheckReport;
use crate::transport::{
    interpolate, lp_w2_oracle, reparametrize, solve_potential, solve_w2, TransportParams,
    TransportPath, LP_NODE_CAP,
};

/// `int_0^t e^(lambda r) dr`: the accumulation factor of a
/// lambda-contractive flow. Equals `t` at `lambda = 0` and is continuous
/// in `lambda` there.
pub fn e_lambda(lambda: f64, t: f64) -> f64 {
    let x = lambda * t;
    if x == 0.0 {
        t
    } else {
        (x.exp_m1()) / lambda
    }
}

/// `t / sinh t`, with the removable singularity `1` at zero. Even in `t`.
pub fn sinh_ratio(t: f64) -> f64 {
    if t.abs() < 1e-5 {
        let t2 = t * t;
        1.0 / (1.0 + t2 / 6.0 + t2 * t2 / 120.0)
    } else {
        t / t.sinh()
    }
}

/// Numerical proxy for the upper right Dini derivative of a sampled
/// function at `t0`: the maximum forward difference quotient over the two
/// smallest available positive steps.
///
/// `samples` are `(t, value)` pairs; one of them must sit at `t0` (within
/// 1e-12) and at least two must lie strictly to its right.
pub fn dini_upper(samples: &[(f64, f64)], t0: f64) -> Result<f64> {
    let base = samples
        .iter()
        .find(|(t, _)| (t - t0).abs() <= 1e-12)
        .ok_or_else(|| Error::BadParameter(format!("no sample at t0 = {t0}")))?
        .1;
    let mut forward: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, _)| *t > t0 + 1e-12)
        .map(|&(t, v)| (t - t0, v))
        .collect();
    if forward.len() < 2 {
        return Err(Error::BadParameter(format!(
            "need at least 2 forward samples after t0 = {t0}, got {}",
            forward.len()
        )));
    }
    forward.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(forward[..2]
        .iter()
        .map(|(h, v)| (v - base) / h)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Shared configuration for the flow checks: the grid, the energy model,
/// the curvature lower bound, solver parameters, and the tolerance
/// policy.
#[derive(Debug, Clone)]
pub struct FlowCheckContext<'g> {
    pub grid: &'g ManifoldGrid,
    pub model: EntropyModel,
    /// Ricci lower bound used in the inequalities. Defaults to the
    /// grid's own constant; overriding is recorded in every report.
    pub lambda: f64,
    pub lambda_overridden: bool,
    pub diffusion: DiffusionParams,
    pub transport: TransportParams,
    /// Path slices for dynamic distance solves.
    pub slices: usize,
    /// Relative tolerance, scaled by the natural magnitude of each
    /// check: `5e-3` on the flat spectral grids, `5e-2` on the sphere
    /// (whose operators are lower order near the poles).
    pub tolerance: f64,
}

impl<'g> FlowCheckContext<'g> {
    pub fn new(grid: &'g ManifoldGrid, model: EntropyModel) -> Self {
        let tolerance = match grid.kind() {
            ManifoldKind::Sphere2 => 5e-2,
            _ => 5e-3,
        };
        let mut transport = TransportParams::default();
        transport.stop_window = 200;
        Self {
            grid,
            model,
            lambda: grid.ricci_lambda(),
            lambda_overridden: false,
            diffusion: DiffusionParams::new(1e-3),
            transport,
            slices: 16,
            tolerance,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda_overridden = lambda != self.lambda;
        self.lambda = lambda;
        self
    }

    fn scaled_tol(&self, magnitude: f64) -> f64 {
        self.tolerance * magnitude.abs().max(1e-8)
    }

    fn inputs(&self) -> String {
        format!(
            "{:?} {:?}, {} entropy, lambda {}{}",
            self.grid.kind(),
            self.grid.shape(),
            self.model.kind(),
            self.lambda,
            if self.lambda_overridden { " (override)" } else { "" }
        )
    }

    fn energy(&self, rho: &DensityField) -> Result<f64> {
        self.model.evaluate(self.grid, rho)
    }

    fn flow(&self, rho: &DensityField, t: f64) -> Result<DensityField> {
        evolve_to(self.grid, &self.model, rho, t, &self.diffusion)
    }

    /// Squared distance with both available estimators. The dynamic
    /// value is an upper bound of its own discretization; on oracle-size
    /// grids the LP value is recorded too, and inequality sides pick the
    /// estimate that gives the discretization the benefit of the doubt.
    fn w2_sq(&self, a: &DensityField, b: &DensityField) -> Result<W2Estimate> {
        let lp_sq = if self.grid.node_count() <= LP_NODE_CAP {
            Some(lp_w2_oracle(self.grid, a, b)?.w2.powi(2))
        } else {
            None
        };
        let dynamic_sq = match solve_w2(self.grid, a, b, self.slices, &self.transport) {
            Ok(path) => Some(path.w2_sq_estimate),
            Err(Error::TransportNonConvergence(_)) if lp_sq.is_some() => None,
            Err(e) => return Err(e),
        };
        Ok(W2Estimate { dynamic_sq, lp_sq })
    }
}

/// Squared-distance measurement carrying both estimators.
#[derive(Debug, Clone, Copy)]
pub struct W2Estimate {
    pub dynamic_sq: Option<f64>,
    pub lp_sq: Option<f64>,
}

impl W2Estimate {
    /// Smaller of the available estimates: used where the distance is
    /// being bounded from above.
    pub fn low(&self) -> f64 {
        match (self.dynamic_sq, self.lp_sq) {
            (Some(d), Some(l)) => d.min(l),
            (Some(d), None) => d,
            (None, Some(l)) => l,
            (None, None) => f64::NAN,
        }
    }

    /// Larger of the available estimates: used where the distance is
    /// being bounded from below.
    pub fn high(&self) -> f64 {
        match (self.dynamic_sq, self.lp_sq) {
            (Some(d), Some(l)) => d.max(l),
            (Some(d), None) => d,
            (None, Some(l)) => l,
            (None, None) => f64::NAN,
        }
    }

    fn record(&self, report: &mut CheckReport, prefix: &str) {
        if let Some(d) = self.dynamic_sq {
            report.insert(&format!("{prefix}_dynamic"), d);
        }
        if let Some(l) = self.lp_sq {
            report.insert(&format!("{prefix}_lp"), l);
        }
        if self.dynamic_sq.is_none() {
            report.note(format!("{prefix}: dynamic solver did not converge, using LP value"));
        }
    }
}

/// Integral form of the evolution variational inequality between times
/// `t0 < t1`:
///
/// `(e^(lambda dt)/2) W2^2(mu_t1, nu) - (1/2) W2^2(mu_t0, nu)
///   <= E_lambda(dt) (E(nu) - E(mu_t1))`.
pub fn check_evi_integral(
    ctx: &FlowCheckContext,
    mu0: &DensityField,
    nu: &DensityField,
    t0: f64,
    t1: f64,
) -> Result<CheckReport> {
    if !(0.0 <= t0 && t0 < t1) {
        return Err(Error::BadParameter(format!("need 0 <= t0 < t1, got ({t0}, {t1})")));
    }
    let dt = t1 - t0;
    let mu_t0 = ctx.flow(mu0, t0)?;
    let mu_t1 = ctx.flow(&mu_t0, dt)?;
    let w_t1 = ctx.w2_sq(&mu_t1, nu)?;
    let w_t0 = ctx.w2_sq(&mu_t0, nu)?;
    let e_nu = ctx.energy(nu)?;
    let e_t1 = ctx.energy(&mu_t1)?;
    let lhs = 0.5 * (ctx.lambda * dt).exp() * w_t1.low() - 0.5 * w_t0.high();
    let rhs = e_lambda(ctx.lambda, dt) * (e_nu - e_t1);
    let tol = ctx.scaled_tol(lhs.abs().max(rhs.abs()));
    let mut report = CheckReport::inequality(
        "evi_integral",
        format!("{}; t0 {t0} t1 {t1}", ctx.inputs()),
        rhs,
        lhs,
        tol,
    );
    w_t0.record(&mut report, "w2_sq_t0");
    w_t1.record(&mut report, "w2_sq_t1");
    report.insert("energy_nu", e_nu);
    report.insert("energy_mu_t1", e_t1);
    Ok(report)
}

/// Differential form of the evolution variational inequality at time `t`:
///
/// `(1/2) d+/dt W2^2(nu, mu_t) + (lambda/2) W2^2(nu, mu_t)
///   <= E(nu) - E(mu_t)`,
///
/// with the Dini derivative replaced by the forward-difference proxy of
/// [`dini_upper`] on the step schedule `{1e-2, 1e-3} x max(t, 1e-2)`.
pub fn check_evi_differential(
    ctx: &FlowCheckContext,
    mu0: &DensityField,
    nu: &DensityField,
    t: f64,
) -> Result<CheckReport> {
    if t < 0.0 {
        return Err(Error::BadParameter(format!("time {t} must be nonnegative")));
    }
    let time_scale = t.max(1e-2);
    let steps = [1e-2 * time_scale, 1e-3 * time_scale];
    let mu_t = ctx.flow(mu0, t)?;
    let w_t = ctx.w2_sq(&mu_t, nu)?;
    // Use one estimator consistently inside the difference quotients so
    // the quotient does not pick up estimator-switching noise.
    let zeta_at = |state: &DensityField| -> Result<f64> {
        let est = ctx.w2_sq(state, nu)?;
        Ok(0.5 * est.dynamic_sq.unwrap_or(est.low()))
    };
    let mut samples = vec![(t, zeta_at(&mu_t)?)];
    for h in steps {
        let state = ctx.flow(&mu_t, h)?;
        samples.push((t + h, zeta_at(&state)?));
    }
    let dini = dini_upper(&samples, t)?;
    let lambda_term = if ctx.lambda >= 0.0 { w_t.low() } else { w_t.high() };
    let lhs = dini + 0.5 * ctx.lambda * lambda_term;
    let rhs = ctx.energy(nu)? - ctx.energy(&mu_t)?;
    let tol = ctx.scaled_tol(lhs.abs().max(rhs.abs()));
    let mut report = CheckReport::inequality(
        "evi_differential",
        format!("{}; t {t}", ctx.inputs()),
        rhs,
        lhs,
        tol,
    );
    w_t.record(&mut report, "w2_sq_t");
    report.insert("dini_upper", dini);
    report.note(format!("forward steps {steps:?}"));
    Ok(report)
}

/// Contraction of the distance under the flow:
/// `W2(mu_t, nu_t) <= e^(-lambda t) W2(mu, nu)`.
pub fn check_contraction(
    ctx: &FlowCheckContext,
    mu: &DensityField,
    nu: &DensityField,
    t: f64,
) -> Result<CheckReport> {
    let mu_t = ctx.flow(mu, t)?;
    let nu_t = ctx.flow(nu, t)?;
    let after = ctx.w2_sq(&mu_t, &nu_t)?;
    let before = ctx.w2_sq(mu, nu)?;
    let lhs = after.low().max(0.0).sqrt();
    let rhs = (-ctx.lambda * t).exp() * before.high().max(0.0).sqrt();
    let tol = ctx.scaled_tol(lhs.max(rhs));
    let mut report = CheckReport::inequality(
        "contraction",
        format!("{}; t {t}", ctx.inputs()),
        rhs,
        lhs,
        tol,
    );
    before.record(&mut report, "w2_sq_before");
    after.record(&mut report, "w2_sq_after");
    Ok(report)
}

/// Regularization bound: the flow enters the energy sublevels of any
/// competitor at rate set by the initial distance,
/// `E(mu_t) <= E(nu) + W2^2(mu0, nu) / (2 E_lambda(t))`.
pub fn check_regularization(
    ctx: &FlowCheckContext,
    mu0: &DensityField,
    nu: &DensityField,
    t: f64,
) -> Result<CheckReport> {
    if !(t > 0.0) {
        return Err(Error::BadParameter(format!("time {t} must be positive")));
    }
    let mu_t = ctx.flow(mu0, t)?;
    let w = ctx.w2_sq(mu0, nu)?;
    let lhs = ctx.energy(&mu_t)?;
    let rhs = ctx.energy(nu)? + w.high() / (2.0 * e_lambda(ctx.lambda, t));
    let tol = ctx.scaled_tol(lhs.abs().max(rhs.abs()));
    let mut report = CheckReport::inequality(
        "regularization",
        format!("{}; t {t}", ctx.inputs()),
        rhs,
        lhs,
        tol,
    );
    w.record(&mut report, "w2_sq_initial");
    Ok(report)
}

/// Uniform continuity of the flow in time:
/// `W2^2(mu_t1, mu_t0) <= 2 E_(-lambda)(t1 - t0) (E(mu_t0) - E_inf)`,
/// with the energy infimum over unit-mass densities evaluated in closed
/// form (attained at the uniform density, by convexity).
pub fn check_uniform_continuity(
    ctx: &FlowCheckContext,
    mu0: &DensityField,
    t0: f64,
    t1: f64,
) -> Result<CheckReport> {
    if !(0.0 <= t0 && t0 <= t1) {
        return Err(Error::BadParameter(format!("need 0 <= t0 <= t1, got ({t0}, {t1})")));
    }
    let mu_t0 = ctx.flow(mu0, t0)?;
    let mu_t1 = ctx.flow(&mu_t0, t1 - t0)?;
    let (lhs, w) = if t1 > t0 {
        let w = ctx.w2_sq(&mu_t1, &mu_t0)?;
        (w.low(), Some(w))
    } else {
        (0.0, None)
    };
    let e_inf = ctx.model.entropy_inf(ctx.grid);
    let rhs = 2.0 * e_lambda(-ctx.lambda, t1 - t0) * (ctx.energy(&mu_t0)? - e_inf);
    let tol = ctx.scaled_tol(lhs.abs().max(rhs.abs()));
    let mut report = CheckReport::inequality(
        "uniform_continuity",
        format!("{}; t0 {t0} t1 {t1}", ctx.inputs()),
        rhs,
        lhs,
        tol,
    );
    if let Some(w) = w {
        w.record(&mut report, "w2_sq_gap");
    }
    report.insert("energy_inf", e_inf);
    Ok(report)
}

/// Displacement convexity of the energy along a near-geodesic:
///
/// `E(mu_s) <= (1-s) E(mu0) + s E(mu1)
///   - (lambda/2) s (1-s) W2^2(mu0, mu1)`
///
/// at each requested `s`, with the geodesic produced by the dynamic
/// solver and resampled to near-constant speed. Reports the worst slack.
pub fn check_displacement_convexity(
    ctx: &FlowCheckContext,
    mu0: &DensityField,
    mu1: &DensityField,
    s_samples: &[f64],
) -> Result<CheckReport> {
    if s_samples.is_empty() {
        return Err(Error::BadParameter("no interpolation points requested".into()));
    }
    let path = solve_w2(ctx.grid, mu0, mu1, ctx.slices, &ctx.transport)?;
    let geod = reparametrize(ctx.grid, &path, 1e-3)?;
    let lp_sq = if ctx.grid.node_count() <= LP_NODE_CAP {
        Some(lp_w2_oracle(ctx.grid, mu0, mu1)?.w2.powi(2))
    } else {
        None
    };
    let est = W2Estimate { dynamic_sq: Some(path.w2_sq_estimate), lp_sq };
    // The squared distance enters with a factor -lambda/2 on the upper
    // side, so the favorable estimate flips with the sign of lambda.
    let d_sq = if ctx.lambda >= 0.0 { est.low() } else { est.high() };
    let e0 = ctx.energy(mu0)?;
    let e1 = ctx.energy(mu1)?;
    let mut worst_slack = f64::INFINITY;
    let mut worst_s = f64::NAN;
    let mut magnitude = 0.0f64;
    let mut values = Vec::new();
    for &s in s_samples {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::BadParameter(format!("interpolation point {s} outside [0, 1]")));
        }
        let mu_s = interpolate(ctx.grid, &geod, s)?;
        let lhs = ctx.energy(&mu_s)?;
        let rhs = (1.0 - s) * e0 + s * e1 - 0.5 * ctx.lambda * s * (1.0 - s) * d_sq;
        magnitude = magnitude.max(lhs.abs()).max(rhs.abs());
        let slack = rhs - lhs;
        values.push((s, lhs, rhs));
        if slack < worst_slack {
            worst_slack = slack;
            worst_s = s;
        }
    }
    let tol = ctx.scaled_tol(magnitude);
    let (_, lhs, rhs) = values
        .iter()
        .find(|(s, _, _)| *s == worst_s)
        .copied()
        .expect("worst sample exists");
    let mut report = CheckReport::inequality(
        "displacement_convexity",
        format!("{}; s {s_samples:?}", ctx.inputs()),
        rhs,
        lhs,
        tol,
    );
    est.record(&mut report, "w2_sq_endpoints");
    report.insert("worst_s", worst_s);
    report.insert("energy_mu0", e0);
    report.insert("energy_mu1", e1);
    Ok(report)
}

/// Per-slice data of the time-skewed family built from a path: slice `s`
/// evolved for time `s * t`.
struct SkewSlice {
    rho: DensityField,
}

fn skew_family(ctx: &FlowCheckContext, path: &TransportPath, t: f64) -> Result<Vec<SkewSlice>> {
    path.rho
        .iter()
        .zip(&path.s_nodes)
        .map(|(rho, &s)| Ok(SkewSlice { rho: ctx.flow(rho, s * t)? }))
        .collect()
}

/// Kinetic action of the skewed family at interior node `j`, with the
/// potential recovered from the centered s-difference of the densities.
fn skew_action(
    ctx: &FlowCheckContext,
    family: &[SkewSlice],
    j: usize,
    ds: f64,
) -> Result<(f64, ScalarField)> {
    let grid = ctx.grid;
    let drho =
        (family[j + 1].rho.values() - family[j - 1].rho.values()) / (2.0 * ds);
    let phi = solve_potential(grid, &family[j].rho, &ScalarField::from(drho))?;
    let grad = grid.gradient(&phi)?;
    let integrand: Vec<f64> = grad
        .norm_sq()
        .values()
        .iter()
        .zip(family[j].rho.values())
        .map(|(g, r)| g * r)
        .collect();
    let action = grid.integrate(&ScalarField::from_vec(integrand)?)?;
    Ok((action, phi))
}

/// Curvature-weighted dissipation of a slice: the negative integral of
/// `(|Hess phi|^2 + Ric(grad phi, grad phi)) U(rho)
///   + (Lap phi)^2 (rho U'(rho) - U(rho))`.
fn skew_dissipation(
    ctx: &FlowCheckContext,
    rho: &DensityField,
    phi: &ScalarField,
) -> Result<(f64, f64)> {
    let grid = ctx.grid;
    let hess = grid.hessian_norm_sq(phi)?;
    let grad = grid.gradient(phi)?;
    let ric = grid.ricci_quadratic(&grad)?;
    let lap = grid.laplacian(phi)?;
    let model = &ctx.model;
    let mut curvature_part = vec![0.0; rho.values().len()];
    let mut pressure_part = vec![0.0; rho.values().len()];
    for i in 0..curvature_part.len() {
        let r = rho.values()[i];
        curvature_part[i] = (hess.values()[i] + ric.values()[i]) * model.u(r);
        pressure_part[i] =
            lap.values()[i].powi(2) * (r * model.u_prime(r) - model.u(r));
    }
    let curvature = grid.integrate(&ScalarField::from_vec(curvature_part)?)?;
    let pressure = grid.integrate(&ScalarField::from_vec(pressure_part)?)?;
    Ok((-(curvature + pressure), pressure))
}

/// Core computation shared by [`action_identity`] and
/// [`check_lambda_action_inequality`] at one interior node of the path.
struct ActionDerivatives {
    s: f64,
    d_action_dt: f64,
    d_energy_ds: f64,
    action: f64,
    dissipation: f64,
    pressure_term: f64,
}

fn action_derivatives(
    ctx: &FlowCheckContext,
    path: &TransportPath,
    t: f64,
    s: f64,
) -> Result<ActionDerivatives> {
    if !(t > 0.0) {
        return Err(Error::BadParameter(format!("time {t} must be positive")));
    }
    let k = path.intervals();
    let ds = 1.0 / k as f64;
    let j = (s * k as f64).round() as usize;
    if j == 0 || j >= k {
        return Err(Error::BadParameter(format!(
            "interpolation point {s} must round to an interior node of the {k}-interval path"
        )));
    }
    let s = j as f64 * ds;
    // Time step for the centered t-difference tied to the s-resolution,
    // so refining the path refines both difference quotients together.
    let ht = ds * t;
    let family_minus = skew_family(ctx, path, t - ht)?;
    let family_0 = skew_family(ctx, path, t)?;
    let family_plus = skew_family(ctx, path, t + ht)?;
    let (a_minus, _) = skew_action(ctx, &family_minus, j, ds)?;
    let (a_0, phi_0) = skew_action(ctx, &family_0, j, ds)?;
    let (a_plus, _) = skew_action(ctx, &family_plus, j, ds)?;
    let d_action_dt = (a_plus - a_minus) / (2.0 * ht);
    let e_prev = ctx.energy(&family_0[j - 1].rho)?;
    let e_next = ctx.energy(&family_0[j + 1].rho)?;
    let d_energy_ds = (e_next - e_prev) / (2.0 * ds);
    let (dissipation, pressure_term) = skew_dissipation(ctx, &family_0[j].rho, &phi_0)?;
    Ok(ActionDerivatives { s, d_action_dt, d_energy_ds, action: a_0, dissipation, pressure_term })
}

/// Differential identity along the time-skewed family of a path:
///
/// `d/dt (1/2) A(s, t) + d/ds E(s, t) = s D(s, t)`,
///
/// where `A` is the slice kinetic action, `E` the energy, and `D` the
/// curvature-weighted dissipation. On nonnegatively curved grids with an
/// admissible pressure function, `D <= 0`, which is also asserted.
pub fn action_identity(
    ctx: &FlowCheckContext,
    path: &TransportPath,
    t: f64,
    s: f64,
) -> Result<CheckReport> {
    let d = action_derivatives(ctx, path, t, s)?;
    let lhs = 0.5 * d.d_action_dt + d.d_energy_ds;
    let rhs = d.s * d.dissipation;
    let magnitude = lhs.abs().max(rhs.abs()).max(d.action.abs());
    let tol = ctx.scaled_tol(magnitude);
    let mut report = CheckReport::equality(
        "action_identity",
        format!("{}; t {t} s {}", ctx.inputs(), d.s),
        lhs,
        rhs,
        tol,
    );
    report.insert("d_action_dt", d.d_action_dt);
    report.insert("d_energy_ds", d.d_energy_ds);
    report.insert("action", d.action);
    report.insert("dissipation", d.dissipation);
    report.insert("pressure_term", d.pressure_term);
    if ctx.lambda >= 0.0 {
        let sign_ok = d.dissipation <= 1e-9 * magnitude.max(1.0);
        if !sign_ok {
            report.pass = false;
            report.note(format!(
                "dissipation {} positive despite nonnegative curvature",
                d.dissipation
            ));
        }
    }
    Ok(report)
}

/// Curvature-strengthened inequality along the time-skewed family,
/// restricted to the heat flow (logarithmic energy):
///
/// `(1/2) d/dt A(s, t) + lambda s A(s, t) + d/ds E(s, t) <= 0`.
pub fn check_lambda_action_inequality(
    ctx: &FlowCheckContext,
    path: &TransportPath,
    t: f64,
    s: f64,
) -> Result<CheckReport> {
    if !matches!(ctx.model.kind(), crate::entropy::EntropyKind::Log) {
        return Err(Error::BadParameter(
            "the curvature-strengthened action inequality is proved for the heat flow; \
             use the logarithmic energy"
                .into(),
        ));
    }
    let d = action_derivatives(ctx, path, t, s)?;
    let lhs = 0.5 * d.d_action_dt + ctx.lambda * d.s * d.action + d.d_energy_ds;
    let tol = ctx.scaled_tol(lhs.abs().max(d.action.abs()));
    let mut report = CheckReport::inequality(
        "lambda_action_inequality",
        format!("{}; t {t} s {}", ctx.inputs(), d.s),
        0.0,
        lhs,
        tol,
    );
    report.insert("d_action_dt", d.d_action_dt);
    report.insert("d_energy_ds", d.d_energy_ds);
    report.insert("action", d.action);
    Ok(report)
}

/// Asserts that a sampled scalar trace is nonincreasing: every forward
/// difference quotient stays below an additive tolerance scaled by the
/// trace's magnitude.
pub fn check_monotonicity_lemma(samples: &[(f64, f64)]) -> CheckReport {
    let scale = samples.iter().map(|(_, v)| v.abs()).fold(1e-8, f64::max);
    let mut worst = f64::NEG_INFINITY;
    let mut valid = true;
    for pair in samples.windows(2) {
        let dt = pair[1].0 - pair[0].0;
        if dt <= 0.0 {
            valid = false;
            break;
        }
        worst = worst.max((pair[1].1 - pair[0].1) / dt);
    }
    if samples.len() < 2 {
        valid = false;
    }
    let mut report = CheckReport::inequality(
        "monotonicity",
        format!("{} samples", samples.len()),
        0.0,
        if valid { worst.max(0.0) } else { f64::INFINITY },
        1e-8 * scale,
    );
    report.insert("worst_forward_quotient", worst);
    if !valid {
        report.pass = false;
        report.note("samples must be strictly increasing in time with at least 2 entries");
    }
    report
}
