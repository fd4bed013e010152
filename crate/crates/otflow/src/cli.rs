//! Configuration-driven experiment runner.
//!
//! Exposes every solver and check as a subcommand of the `otflow` binary,
//! writes one JSON report per check plus a flat CSV summary to the output
//! directory, and prints one PASS/FAIL line per check. Exit codes:
//! `0` all checks pass, `1` a check failed, `2` usage error, `3` a solver
//! failed before its check could be evaluated.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::density::{band_limited_noise, DensityField};
use crate::diffusion::{evolve, DiffusionParams};
use crate::entropy::{check_mccann, make_entropy, EntropyKind};
use crate::error::{Error, Result};
use crate::evi::{
    action_identity, check_contraction, check_displacement_convexity, check_evi_differential,
    check_evi_integral, check_lambda_action_inequality, check_regularization,
    check_uniform_continuity, FlowCheckContext,
};
use crate::manifold::{build_grid, ManifoldGrid, ManifoldKind, ManifoldSpec};
use crate::report::CheckReport;
use crate::transport::{
    action, lp_w2_oracle, reparametrize, solve_w2, TransportParams, LP_NODE_CAP,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Formats a float with 17 significant digits, enough to round-trip f64.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Parser, Debug)]
#[command(
    name = "otflow",
    about = "Wasserstein geodesics, entropy gradient flows, and convexity checks \
             on discretized compact manifolds",
    version
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Manifold: circle:<n>, torus:<nx>x<ny>, or sphere:<nlat>x<nlon>.
    #[arg(long, global = true)]
    manifold: Option<String>,
    /// Energy model: log, or power:m=<m>.
    #[arg(long, global = true)]
    entropy: Option<String>,
    /// Override the curvature lower bound used in the inequalities.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Path slices for dynamic distance solves.
    #[arg(long, global = true)]
    slices: Option<usize>,
    /// Diffusion time step.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Relative tolerance override for the checks.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Base seed for generated densities.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for JSON reports and the CSV summary.
    /// Overridden by the OTFLOW_OUT environment variable.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file with defaults for any of the options above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Distance between two densities: dynamic solver plus the LP oracle
    /// cross-check on oracle-size grids.
    W2 {
        #[arg(long, default_value = "bump:0")]
        mu0: String,
        #[arg(long, default_value = "bump:0.25")]
        mu1: String,
    },
    /// Constant-speed geodesic between two densities, exported as CSV.
    Geodesic {
        #[arg(long, default_value = "bump:0")]
        mu0: String,
        #[arg(long, default_value = "bump:0.25")]
        mu1: String,
        /// Speed-regularization floor for the reparametrization.
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
    },
    /// Evolve a density under the energy's gradient flow and validate the
    /// trajectory (mass, positivity, energy decay).
    Flow {
        #[arg(long, default_value = "bump:0")]
        density: String,
        #[arg(long, default_value_t = 0.1)]
        t: f64,
        /// Store every k-th step in the exported trajectory.
        #[arg(long, default_value_t = 10)]
        save_every: usize,
    },
    /// Evolution variational inequality, integral form over [t0, t1] and
    /// differential form at t0.
    EviCheck {
        #[arg(long, default_value = "random:1")]
        mu0: String,
        #[arg(long, default_value = "random:2")]
        nu: String,
        #[arg(long, default_value_t = 0.01)]
        t0: f64,
        #[arg(long, default_value_t = 0.03)]
        t1: f64,
    },
    /// Displacement convexity of the energy along a geodesic.
    ConvexityCheck {
        #[arg(long, default_value = "bump:0.1")]
        mu0: String,
        #[arg(long, default_value = "bump:0.5")]
        mu1: String,
        /// Comma-separated interpolation points in (0, 1).
        #[arg(long, default_value = "0.25,0.5,0.75")]
        s: String,
    },
    /// Distance contraction under the flow.
    ContractionCheck {
        #[arg(long, default_value = "random:1")]
        mu0: String,
        #[arg(long, default_value = "random:2")]
        nu: String,
        #[arg(long, default_value_t = 0.02)]
        t: f64,
    },
    /// Differential identity linking action decay, energy, and the
    /// curvature-weighted dissipation along a time-skewed geodesic.
    ActionIdentity {
        #[arg(long, default_value = "random:1")]
        mu0: String,
        #[arg(long, default_value = "random:2")]
        mu1: String,
        #[arg(long, default_value_t = 0.02)]
        t: f64,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
    },
    /// Curvature identity residual on random band-limited potentials,
    /// plus the pointwise dimensional inequality for the Laplacian.
    BochnerCheck {
        #[arg(long, default_value_t = 20)]
        potentials: u64,
    },
    /// Geodesic-convexity admissibility of the energy's pressure function
    /// in the given dimension.
    MccannCheck {
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Full desk-scale battery of the checks above.
    Suite {
        /// Run up to k independent checks concurrently.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
}

/// Fully resolved configuration; its canonical JSON is hashed into the
/// digest embedded in every report, so identical configs produce
/// byte-identical outputs.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunConfig {
    pub manifold: String,
    pub entropy: String,
    pub lambda: Option<f64>,
    pub slices: usize,
    pub dt: f64,
    pub tolerance: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Default, serde::Deserialize)]
struct FileConfig {
    manifold: Option<String>,
    entropy: Option<String>,
    lambda: Option<f64>,
    slices: Option<usize>,
    dt: Option<f64>,
    tolerance: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

fn resolve_config(common: &CommonArgs) -> Result<RunConfig> {
    let file: FileConfig = match &common.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => FileConfig::default(),
    };
    let out = std::env::var_os("OTFLOW_OUT")
        .map(PathBuf::from)
        .or_else(|| common.out.clone())
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from("reports"));
    Ok(RunConfig {
        manifold: common
            .manifold
            .clone()
            .or(file.manifold)
            .unwrap_or_else(|| "circle:64".into()),
        entropy: common.entropy.clone().or(file.entropy).unwrap_or_else(|| "log".into()),
        lambda: common.lambda.or(file.lambda),
        slices: common.slices.or(file.slices).unwrap_or(16),
        dt: common.dt.or(file.dt).unwrap_or(1e-3),
        tolerance: common.tolerance.or(file.tolerance),
        seed: common.seed.or(file.seed).unwrap_or(0),
        out,
    })
}

/// Parses `circle:<n>`, `torus:<nx>x<ny>`, `sphere:<nlat>x<nlon>`.
pub fn parse_manifold(text: &str) -> Result<ManifoldSpec> {
    let bad = || Error::InvalidSpec(format!("cannot parse manifold '{text}'"));
    let (kind, res) = text.split_once(':').ok_or_else(bad)?;
    let dims: Vec<usize> =
        res.split('x').map(|p| p.parse().map_err(|_| bad())).collect::<Result<_>>()?;
    match (kind, dims.as_slice()) {
        ("circle", [n]) => Ok(ManifoldSpec::circle(*n)),
        ("torus", [nx, ny]) => Ok(ManifoldSpec::torus2(*nx, *ny)),
        ("sphere", [nlat, nlon]) => Ok(ManifoldSpec::sphere2(*nlat, *nlon)),
        _ => Err(bad()),
    }
}

/// Parses `log` or `power:m=<m>` (also accepts `power:<m>`).
pub fn parse_entropy(text: &str) -> Result<EntropyKind> {
    if text == "log" {
        return Ok(EntropyKind::Log);
    }
    if let Some(rest) = text.strip_prefix("power:") {
        let m_text = rest.strip_prefix("m=").unwrap_or(rest);
        let m: f64 = m_text
            .parse()
            .map_err(|_| Error::InvalidEntropy(format!("cannot parse exponent in '{text}'")))?;
        return Ok(EntropyKind::Power { m });
    }
    Err(Error::InvalidEntropy(format!("unknown entropy '{text}' (expected log or power:m=<m>)")))
}

/// Parses a density generator: `uniform`, `bump:<c...>`,
/// `bump-pow:<c...>:<p>`, `two-bump:<c...>;<c...>`, `random:<seed>`.
/// Coordinates within a center are comma-separated.
pub fn parse_density(grid: &ManifoldGrid, text: &str) -> Result<DensityField> {
    let bad = |why: &str| Error::InvalidSpec(format!("density '{text}': {why}"));
    let coords = |part: &str| -> Result<Vec<f64>> {
        part.split(',')
            .map(|c| c.parse().map_err(|_| bad("bad coordinate")))
            .collect()
    };
    if text == "uniform" {
        return Ok(DensityField::uniform(grid));
    }
    if let Some(rest) = text.strip_prefix("bump-pow:") {
        let (center, power) = rest.rsplit_once(':').ok_or_else(|| bad("missing power"))?;
        return DensityField::bump_pow(
            grid,
            &coords(center)?,
            power.parse().map_err(|_| bad("bad power"))?,
        );
    }
    if let Some(rest) = text.strip_prefix("bump:") {
        return DensityField::bump(grid, &coords(rest)?);
    }
    if let Some(rest) = text.strip_prefix("two-bump:") {
        let (c1, c2) = rest.split_once(';').ok_or_else(|| bad("expected <c1>;<c2>"))?;
        return DensityField::two_bump(grid, &coords(c1)?, &coords(c2)?);
    }
    if let Some(rest) = text.strip_prefix("random:") {
        return DensityField::random(grid, rest.parse().map_err(|_| bad("bad seed"))?);
    }
    Err(bad("unknown generator"))
}

fn config_digest(config: &RunConfig, command: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(config).expect("config serializes").as_bytes());
    hasher.update(command.as_bytes());
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(serde::Serialize)]
struct ReportEnvelope<'a> {
    config_digest: &'a str,
    config: &'a RunConfig,
    report: &'a CheckReport,
}

fn write_reports(config: &RunConfig, digest: &str, reports: &[CheckReport]) -> Result<()> {
    fs::create_dir_all(&config.out)?;
    let summary_path = config.out.join("summary.csv");
    let mut summary = String::new();
    if !summary_path.exists() {
        summary.push_str("name,pass,slack,tolerance,config_digest\n");
    }
    for report in reports {
        let envelope = ReportEnvelope { config_digest: digest, config, report };
        let json = serde_json::to_string_pretty(&envelope)?;
        fs::write(config.out.join(format!("{}.json", report.name)), json)?;
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            report.name,
            report.pass,
            fmt17(report.slack),
            fmt17(report.tolerance),
            digest
        ));
    }
    let mut file = fs::OpenOptions::new().create(true).append(true).open(&summary_path)?;
    file.write_all(summary.as_bytes())?;
    Ok(())
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt17(x)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

struct Session<'g> {
    grid: &'g ManifoldGrid,
    config: RunConfig,
}

impl<'g> Session<'g> {
    fn context(&self) -> Result<FlowCheckContext<'g>> {
        let model = make_entropy(parse_entropy(&self.config.entropy)?)?;
        let mut ctx = FlowCheckContext::new(self.grid, model);
        if let Some(lambda) = self.config.lambda {
            ctx = ctx.with_lambda(lambda);
        }
        ctx.slices = self.config.slices;
        ctx.transport = self.transport_params();
        ctx.diffusion = DiffusionParams::new(self.config.dt);
        if let Some(tol) = self.config.tolerance {
            ctx.tolerance = tol;
        }
        Ok(ctx)
    }

    fn transport_params(&self) -> TransportParams {
        let mut params = TransportParams::default();
        params.stop_window = 200;
        // Wide-vacuum endpoint pairs converge slowly at fine slicing;
        // give the splitting solver headroom beyond the library default.
        params.max_iter = 100_000;
        params
    }

    fn density(&self, text: &str) -> Result<DensityField> {
        parse_density(self.grid, text)
    }

    fn run_w2(&self, mu0: &str, mu1: &str) -> Result<Vec<CheckReport>> {
        let mu0 = self.density(mu0)?;
        let mu1 = self.density(mu1)?;
        let path = solve_w2(self.grid, &mu0, &mu1, self.config.slices, &self.transport_params())?;
        let mut report = if self.grid.node_count() <= LP_NODE_CAP {
            let lp = lp_w2_oracle(self.grid, &mu0, &mu1)?;
            let mut r = CheckReport::equality(
                "w2",
                format!("{} -> {}", self.config.manifold, "dynamic vs LP oracle"),
                path.w2(),
                lp.w2,
                2e-2 * lp.w2.max(1e-8),
            );
            r.insert("w2_lp", lp.w2);
            r.insert("lp_duality_gap", lp.duality_gap);
            r
        } else {
            let mut r = CheckReport::inequality("w2", self.config.manifold.clone(), 1.0, 0.0, 0.0);
            r.note("grid above LP oracle cap; dynamic value reported without cross-check");
            r
        };
        report.insert("w2_dynamic", path.w2());
        report.insert("slices", self.config.slices as f64);
        Ok(vec![report])
    }

    fn run_geodesic(&self, mu0: &str, mu1: &str, eps: f64) -> Result<Vec<CheckReport>> {
        let mu0 = self.density(mu0)?;
        let mu1 = self.density(mu1)?;
        let path = solve_w2(self.grid, &mu0, &mu1, self.config.slices, &self.transport_params())?;
        let geod = reparametrize(self.grid, &path, eps)?;
        let actions = action(self.grid, &geod)?;
        let interior = &actions[1..actions.len() - 1];
        let mean = interior.iter().sum::<f64>() / interior.len() as f64;
        let max_dev =
            interior.iter().fold(0.0f64, |m, &a| m.max((a - mean).abs()));
        let mut report = CheckReport::inequality(
            "geodesic",
            format!("{}; constant-speed action spread", self.config.manifold),
            0.01 * mean.max(1e-8),
            max_dev,
            0.0,
        );
        report.insert("w2", geod.w2());
        report.insert("action_mean", mean);
        report.insert("action_spread", max_dev);

        fs::create_dir_all(&self.config.out)?;
        let mut rows = Vec::new();
        for (j, s) in geod.s_nodes.iter().enumerate() {
            for node in 0..self.grid.node_count() {
                rows.push(vec![
                    *s,
                    node as f64,
                    geod.rho[j].values()[node],
                    geod.phi[j].values()[node],
                ]);
            }
        }
        write_csv(&self.config.out.join("geodesic.csv"), "s,node,rho,phi", &rows)?;
        report.note("path exported to geodesic.csv");
        Ok(vec![report])
    }

    fn run_flow(&self, density: &str, t: f64, save_every: usize) -> Result<Vec<CheckReport>> {
        let ctx = self.context()?;
        let rho0 = self.density(density)?;
        let params = DiffusionParams::new(self.config.dt).with_store_every(save_every);
        let traj = evolve(self.grid, &ctx.model, &rho0, t, &params)?;
        let mut report = traj.validate(self.grid)?;

        fs::create_dir_all(&self.config.out)?;
        let mut rows = Vec::new();
        for (time, state) in traj.times.iter().zip(&traj.states) {
            let mut row = vec![*time];
            row.extend(state.values().iter().copied());
            rows.push(row);
        }
        let header = std::iter::once("t".to_string())
            .chain((0..self.grid.node_count()).map(|i| format!("rho_{i}")))
            .collect::<Vec<_>>()
            .join(",");
        write_csv(&self.config.out.join("flow.csv"), &header, &rows)?;
        report.note("trajectory exported to flow.csv");
        Ok(vec![report])
    }

    fn run_evi(&self, mu0: &str, nu: &str, t0: f64, t1: f64) -> Result<Vec<CheckReport>> {
        let ctx = self.context()?;
        let mu0 = self.density(mu0)?;
        let nu = self.density(nu)?;
        Ok(vec![
            check_evi_integral(&ctx, &mu0, &nu, t0, t1)?,
            check_evi_differential(&ctx, &mu0, &nu, t0)?,
        ])
    }

    fn run_convexity(&self, mu0: &str, mu1: &str, s: &str) -> Result<Vec<CheckReport>> {
        let ctx = self.context()?;
        let mu0 = self.density(mu0)?;
        let mu1 = self.density(mu1)?;
        let points: Vec<f64> = s
            .split(',')
            .map(|p| {
                p.parse()
                    .map_err(|_| Error::BadParameter(format!("bad interpolation point '{p}'")))
            })
            .collect::<Result<_>>()?;
        Ok(vec![check_displacement_convexity(&ctx, &mu0, &mu1, &points)?])
    }

    fn run_contraction(&self, mu0: &str, nu: &str, t: f64) -> Result<Vec<CheckReport>> {
        let ctx = self.context()?;
        let mu0 = self.density(mu0)?;
        let nu = self.density(nu)?;
        Ok(vec![check_contraction(&ctx, &mu0, &nu, t)?])
    }

    fn run_action_identity(&self, mu0: &str, mu1: &str, t: f64, s: f64) -> Result<Vec<CheckReport>> {
        let ctx = self.context()?;
        let mu0 = self.density(mu0)?;
        let mu1 = self.density(mu1)?;
        let path = solve_w2(self.grid, &mu0, &mu1, self.config.slices, &self.transport_params())?;
        let mut reports = vec![action_identity(&ctx, &path, t, s)?];
        if matches!(ctx.model.kind(), EntropyKind::Log) {
            reports.push(check_lambda_action_inequality(&ctx, &path, t, s)?);
        }
        Ok(reports)
    }

    fn run_bochner(&self, potentials: u64) -> Result<Vec<CheckReport>> {
        let dim = match self.grid.kind() {
            ManifoldKind::Circle => 1.0,
            ManifoldKind::Torus2 | ManifoldKind::Sphere2 => 2.0,
        };
        let tol = match self.grid.kind() {
            ManifoldKind::Sphere2 => 5e-2,
            _ => 1e-6,
        };
        let mut max_residual = 0.0f64;
        let mut max_excess = f64::NEG_INFINITY;
        for seed in 0..potentials {
            let f = band_limited_noise(self.grid, self.config.seed.wrapping_add(seed));
            let residual = self.grid.bochner_residual(&f)?;
            max_residual = max_residual.max(residual.max_abs());
            let lap = self.grid.laplacian(&f)?;
            let hess = self.grid.hessian_norm_sq(&f)?;
            for (l, h) in lap.values().iter().zip(hess.values()) {
                max_excess = max_excess.max(l * l - dim * h);
            }
        }
        let mut report = CheckReport::inequality(
            "bochner",
            format!("{}; {} random band-limited potentials", self.config.manifold, potentials),
            tol,
            max_residual,
            0.0,
        );
        report.insert("max_residual", max_residual);
        report.insert("max_dimensional_excess", max_excess);
        if max_excess > 1e-10 {
            report.pass = false;
            report.note(format!(
                "(lap f)^2 exceeds dim * |hess f|^2 by {max_excess:.3e} somewhere"
            ));
        }
        Ok(vec![report])
    }

    fn run_mccann(&self, dim: usize) -> Result<Vec<CheckReport>> {
        let model = make_entropy(parse_entropy(&self.config.entropy)?)?;
        Ok(vec![check_mccann(&model, dim)])
    }

    fn run_suite(&self, parallel: usize) -> Result<Vec<CheckReport>> {
        let seed = self.config.seed;
        let jobs: Vec<(&str, Box<dyn Fn() -> Result<Vec<CheckReport>> + Sync + '_>)> = vec![
            ("mccann", Box::new(move || self.run_mccann(2))),
            ("bochner", Box::new(move || self.run_bochner(10))),
            ("w2", Box::new(move || self.run_w2("bump:0", "bump:0.25"))),
            // Strictly positive endpoints: near-vacuum slices make the
            // per-slice velocity recovery (hence the action-constancy
            // assertion) ill-conditioned.
            (
                "geodesic",
                Box::new(move || {
                    self.run_geodesic(
                        &format!("random:{}", seed.wrapping_add(8)),
                        &format!("random:{}", seed.wrapping_add(9)),
                        1e-3,
                    )
                }),
            ),
            ("flow", Box::new(move || self.run_flow("bump:0", 0.05, 10))),
            (
                "evi",
                Box::new(move || {
                    self.run_evi(
                        &format!("random:{}", seed.wrapping_add(1)),
                        &format!("random:{}", seed.wrapping_add(2)),
                        0.01,
                        0.03,
                    )
                }),
            ),
            (
                "convexity",
                Box::new(move || self.run_convexity("bump:0.1", "bump:0.5", "0.25,0.5,0.75")),
            ),
            (
                "contraction",
                Box::new(move || {
                    self.run_contraction(
                        &format!("random:{}", seed.wrapping_add(3)),
                        &format!("random:{}", seed.wrapping_add(4)),
                        0.02,
                    )
                }),
            ),
            (
                "regularization",
                Box::new(move || {
                    let ctx = self.context()?;
                    let mu0 = self.density(&format!("random:{}", seed.wrapping_add(5)))?;
                    let nu = self.density("uniform")?;
                    Ok(vec![
                        check_regularization(&ctx, &mu0, &nu, 0.01)?,
                        check_uniform_continuity(&ctx, &mu0, 0.005, 0.02)?,
                    ])
                }),
            ),
            (
                "action-identity",
                Box::new(move || {
                    self.run_action_identity(
                        &format!("random:{}", seed.wrapping_add(6)),
                        &format!("random:{}", seed.wrapping_add(7)),
                        0.02,
                        0.5,
                    )
                }),
            ),
        ];

        let workers = parallel.max(1);
        let mut results: Vec<Option<Result<Vec<CheckReport>>>> =
            (0..jobs.len()).map(|_| None).collect();
        if workers == 1 {
            for (slot, (_, job)) in results.iter_mut().zip(&jobs) {
                *slot = Some(job());
            }
        } else {
            // Fixed-stride work split: slot order (hence report order) is
            // deterministic regardless of thread timing.
            std::thread::scope(|scope| {
                let mut handles = Vec::new();
                for w in 0..workers {
                    let jobs = &jobs;
                    handles.push(scope.spawn(move || {
                        let mut out = Vec::new();
                        for (i, (_, job)) in jobs.iter().enumerate() {
                            if i % workers == w {
                                out.push((i, job()));
                            }
                        }
                        out
                    }));
                }
                for handle in handles {
                    for (i, result) in handle.join().expect("suite worker panicked") {
                        results[i] = Some(result);
                    }
                }
            });
        }

        let mut reports = Vec::new();
        for ((name, _), result) in jobs.iter().zip(results) {
            match result.expect("every job ran") {
                Ok(mut batch) => reports.append(&mut batch),
                Err(e) => return Err(Error::BadParameter(format!("suite check {name}: {e}"))),
            }
        }
        Ok(reports)
    }
}

fn dispatch(session: &Session, command: &Command) -> Result<Vec<CheckReport>> {
    match command {
        Command::W2 { mu0, mu1 } => session.run_w2(mu0, mu1),
        Command::Geodesic { mu0, mu1, eps } => session.run_geodesic(mu0, mu1, *eps),
        Command::Flow { density, t, save_every } => session.run_flow(density, *t, *save_every),
        Command::EviCheck { mu0, nu, t0, t1 } => session.run_evi(mu0, nu, *t0, *t1),
        Command::ConvexityCheck { mu0, mu1, s } => session.run_convexity(mu0, mu1, s),
        Command::ContractionCheck { mu0, nu, t } => session.run_contraction(mu0, nu, *t),
        Command::ActionIdentity { mu0, mu1, t, s } => {
            session.run_action_identity(mu0, mu1, *t, *s)
        }
        Command::BochnerCheck { potentials } => session.run_bochner(*potentials),
        Command::MccannCheck { dim } => session.run_mccann(*dim),
        Command::Suite { parallel } => session.run_suite(*parallel),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::W2 { .. } => "w2",
        Command::Geodesic { .. } => "geodesic",
        Command::Flow { .. } => "flow",
        Command::EviCheck { .. } => "evi-check",
        Command::ConvexityCheck { .. } => "convexity-check",
        Command::ContractionCheck { .. } => "contraction-check",
        Command::ActionIdentity { .. } => "action-identity",
        Command::BochnerCheck { .. } => "bochner-check",
        Command::MccannCheck { .. } => "mccann-check",
        Command::Suite { .. } => "suite",
    }
}

/// Entry point for the `otflow` binary: parses `argv`, runs the selected
/// subcommand, writes reports, and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let config = match resolve_config(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let spec = match parse_manifold(&config.manifold) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let grid = match build_grid(&spec) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let digest = config_digest(&config, command_name(&cli.command));
    let session = Session { grid: &grid, config };
    let reports = match dispatch(&session, &cli.command) {
        Ok(reports) => reports,
        Err(e @ (Error::InvalidSpec(_) | Error::InvalidEntropy(_))) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            eprintln!("solver error: {e}");
            // Leave a machine-readable trace of the failure too.
            let mut report = CheckReport::inequality(
                command_name(&cli.command),
                session.config.manifold.clone(),
                f64::NEG_INFINITY,
                0.0,
                0.0,
            );
            report.pass = false;
            report.note(format!("solver error: {e}"));
            let _ = write_reports(&session.config, &digest, &[report]);
            return EXIT_SOLVER;
        }
    };
    if let Err(e) = write_reports(&session.config, &digest, &reports) {
        eprintln!("error writing reports: {e}");
        return EXIT_SOLVER;
    }
    for report in &reports {
        println!("{}", report.summary());
    }
    if reports.iter().all(|r| r.pass) {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAIL
    }
}
