//! Nonlinear diffusion `d rho/dt = Lap U(rho)`: the gradient flow of the
//! internal energy in the Wasserstein geometry.
//!
//! Time stepping is an implicit theta-scheme on the pressure variable
//! `u = U(rho)` (Crank-Nicolson by default, backward Euler at `theta = 1`)
//! with an inner Newton iteration; each linear stage is solved by
//! conjugate gradients. The density update is applied in divergence form,
//! so mass is conserved to machine precision on every step.

use ndarray::Array1;

use crate::density::DensityField;
use crate::entropy::EntropyModel;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::cg;
use crate::manifold::ManifoldGrid;
use crate::report::CheckReport;

/// Densities may not drop below this during the implicit solve; reaching
/// it is reported as an error instead of being silently regularized.
const DENSITY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct DiffusionParams {
    /// Time step.
    pub dt: f64,
    /// Implicitness: 0.5 = Crank-Nicolson (second order), 1.0 = backward
    /// Euler (first order, unconditionally entropy-dissipative).
    pub theta: f64,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub cg_tol: f64,
    pub cg_max: usize,
    /// Keep every k-th state in a trajectory (first and last always kept).
    pub store_every: usize,
}

impl DiffusionParams {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            theta: 0.5,
            newton_tol: 1e-12,
            newton_max: 50,
            cg_tol: 1e-12,
            cg_max: 10_000,
            store_every: 1,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_store_every(mut self, k: usize) -> Self {
        self.store_every = k.max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::BadParameter(format!("dt {} must be positive", self.dt)));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::BadParameter(format!("theta {} outside [0.5, 1]", self.theta)));
        }
        Ok(())
    }
}

/// Sampled states of one diffusion run, entropies recorded alongside.
#[derive(Debug, Clone)]
pub struct DiffusionTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityField>,
    pub entropies: Vec<f64>,
}

impl DiffusionTrajectory {
    pub fn final_state(&self) -> &DensityField {
        self.states.last().expect("non-empty trajectory")
    }

    /// Conservation battery: unit mass to `1e-10`, strict positivity, and
    /// entropy nonincreasing along consecutive stored states to `1e-10`.
    pub fn validate(&self, grid: &ManifoldGrid) -> Result<CheckReport> {
        let mut worst_mass = 0.0f64;
        let mut min_density = f64::INFINITY;
        let mut worst_entropy_rise = f64::NEG_INFINITY;
        for state in &self.states {
            let mass = grid.integrate(&state.as_scalar())?;
            worst_mass = worst_mass.max((mass - 1.0).abs());
            min_density = min_density.min(state.min());
        }
        for pair in self.entropies.windows(2) {
            worst_entropy_rise = worst_entropy_rise.max(pair[1] - pair[0]);
        }
        let mass_ok = CheckReport::inequality(
            "mass_conservation",
            "all stored states",
            -worst_mass,
            -1e-10,
            0.0,
        );
        let pos_ok =
            CheckReport::inequality("positivity", "all stored states", min_density, 0.0, 0.0);
        let ent_ok = CheckReport::inequality(
            "entropy_monotone",
            "consecutive stored states",
            -worst_entropy_rise,
            -1e-10,
            0.0,
        );
        let mut report =
            CheckReport::combine("trajectory_invariants", "diffusion run", &[mass_ok, pos_ok, ent_ok]);
        report.insert("worst_mass_error", worst_mass);
        report.insert("min_density", min_density);
        report.insert("worst_entropy_rise", worst_entropy_rise);
        Ok(report)
    }
}

/// Inverse of the pressure function and its derivative: `rho(u)` with
/// `U(rho(u)) = u`.
fn rho_of_u(model: &EntropyModel, u: f64) -> f64 {
    match model.kind() {
        crate::entropy::EntropyKind::Log => u,
        crate::entropy::EntropyKind::Power { m } => u.powf(1.0 / m),
    }
}

fn drho_du(model: &EntropyModel, u: f64) -> f64 {
    match model.kind() {
        crate::entropy::EntropyKind::Log => 1.0,
        crate::entropy::EntropyKind::Power { m } => u.powf(1.0 / m - 1.0) / m,
    }
}

/// One implicit theta-step of `d rho/dt = Lap U(rho)`.
pub fn step(
    grid: &ManifoldGrid,
    model: &EntropyModel,
    rho: &DensityField,
    params: &DiffusionParams,
) -> Result<DensityField> {
    rho.check_grid(grid)?;
    params.validate()?;
    let dt = params.dt;
    let theta = params.theta;
    let w = grid.vol_weights();

    let lap = |v: &Array1<f64>| -> Result<Array1<f64>> {
        Ok(grid.laplacian(&ScalarField::from(v.clone()))?.into_values())
    };

    // Right-hand side b = rho_k + (1 - theta) dt Lap U(rho_k).
    let u_old: Array1<f64> = rho.values().mapv(|r| model.u(r));
    let explicit = lap(&u_old)?;
    let b: Array1<f64> = rho.values() + &((1.0 - theta) * dt * &explicit);

    // Newton on u: R(u) = rho(u) - theta dt Lap u - b = 0, with Jacobian
    // diag(rho'(u)) - theta dt Lap, positive definite in the weighted
    // inner product.
    let u_floor = model.u(DENSITY_FLOOR);
    let mut u = u_old;
    let scale = rho.values().iter().fold(0.0f64, |m, r| m.max(r.abs())).max(1.0);
    let residual = |u: &Array1<f64>| -> Result<Array1<f64>> {
        let lap_u = lap(u)?;
        Ok(Array1::from_iter(
            u.iter()
                .zip(&lap_u)
                .zip(&b)
                .map(|((&ui, &li), &bi)| rho_of_u(model, ui) - theta * dt * li - bi),
        ))
    };
    let mut r = residual(&u)?;
    let mut converged = false;
    for _ in 0..params.newton_max {
        let r_norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if r_norm <= params.newton_tol * scale {
            converged = true;
            break;
        }
        let diag: Array1<f64> = u.mapv(|ui| drho_du(model, ui));
        let apply = |v: &Array1<f64>| -> Array1<f64> {
            let lap_v = lap(v).expect("laplacian on finite field");
            Array1::from_iter(
                diag.iter()
                    .zip(v)
                    .zip(&lap_v)
                    .map(|((&d, &vi), &li)| d * vi - theta * dt * li),
            )
        };
        let rhs = -&r;
        let delta = cg(apply, &rhs, Array1::zeros(u.len()), w, params.cg_tol, params.cg_max)?;
        // Damped update: halve until the iterate stays above the pressure
        // floor and the residual does not grow.
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Array1<f64> = &u + &(&delta * alpha);
            if trial.iter().all(|&ui| ui > u_floor) {
                let r_trial = residual(&trial)?;
                let trial_norm = r_trial.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if trial_norm < r_norm || alpha < 1e-6 {
                    u = trial;
                    r = r_trial;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::PositivityLoss { min: DENSITY_FLOOR });
        }
    }
    if !converged {
        let r_norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if r_norm > params.newton_tol * scale {
            return Err(Error::DiffusionSolve(format!(
                "Newton residual {r_norm:.3e} after {} iterations",
                params.newton_max
            )));
        }
    }

    // Divergence-form update: mass conserved to machine precision.
    let lap_u = lap(&u)?;
    let new_values: Array1<f64> = &b + &(theta * dt * &lap_u);
    let min = new_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= DENSITY_FLOOR {
        return Err(Error::PositivityLoss { min });
    }
    DensityField::new(grid, new_values)
}

/// Runs [`step`] until `t_final`, adjusting `dt` so the steps divide the
/// interval exactly.
pub fn evolve(
    grid: &ManifoldGrid,
    model: &EntropyModel,
    rho0: &DensityField,
    t_final: f64,
    params: &DiffusionParams,
) -> Result<DiffusionTrajectory> {
    rho0.check_grid(grid)?;
    params.validate()?;
    if t_final < 0.0 {
        return Err(Error::BadParameter(format!("t_final {t_final} must be nonnegative")));
    }
    let n_steps = if t_final == 0.0 { 0 } else { (t_final / params.dt).ceil() as usize };
    let mut step_params = *params;
    if n_steps > 0 {
        step_params.dt = t_final / n_steps as f64;
    }
    let mut trajectory = DiffusionTrajectory {
        times: vec![0.0],
        states: vec![rho0.clone()],
        entropies: vec![model.evaluate(grid, rho0)?],
    };
    let mut current = rho0.clone();
    for k in 1..=n_steps {
        current = step(grid, model, &current, &step_params)?;
        if k % params.store_every == 0 || k == n_steps {
            trajectory.times.push(k as f64 * step_params.dt);
            trajectory.entropies.push(model.evaluate(grid, &current)?);
            trajectory.states.push(current.clone());
        }
    }
    Ok(trajectory)
}

/// Final state only, for callers that do not need the intermediate states.
pub fn evolve_to(
    grid: &ManifoldGrid,
    model: &EntropyModel,
    rho0: &DensityField,
    t_final: f64,
    params: &DiffusionParams,
) -> Result<DensityField> {
    let mut p = *params;
    p.store_every = usize::MAX;
    Ok(evolve(grid, model, rho0, t_final, &p)?.states.pop().expect("final state"))
}
