//! Command-line front end: configuration files in, CSV/JSON artifacts out.
//!
//! Exit codes: 0 success, 2 configuration error, 3 reference error (missing
//! equilibrium or solution), 4 numeric failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use ebm_core::bifurcation::{self, sweep, SweepOpts};
use ebm_core::bim::{enumerate_equilibria, EnumerateOpts, StationarySolution};
use ebm_core::export;
use ebm_core::fdm::{
    self, artificial_source_run, ArtificialSource, FdmProblem, Grid, IntegrateOpts,
    SimulationState,
};
use ebm_core::greenfn::GreenKernel;
use ebm_core::params::{nondimensionalize, RunConfig};
use ebm_core::stability::{self, eigen_classify, heuristic_run, slope_classify};

#[derive(Parser)]
#[command(name = "ebm", version, about = "Energy balance model laboratory")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalArgs {
    /// Configuration file (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "ebm-out")]
    out_dir: PathBuf,
    /// Worker threads (EBM_THREADS applies when unset).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Newton seeds per unknown critical latitude.
    #[arg(long, global = true, default_value_t = 8)]
    seed_density: usize,
    /// Newton residual tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Find every stationary solution at one solar constant.
    Solve {
        /// Solar constant Q (W m^-2); config value when omitted.
        #[arg(long)]
        q: Option<f64>,
        /// Only emit solutions whose case name contains this substring.
        #[arg(long)]
        case_filter: Option<String>,
    },
    /// Integrate the time-dependent equation.
    Simulate {
        /// Initial condition: file:<csv>, uniform:<value> or
        /// equilibrium:<id>.
        #[arg(long)]
        ic: String,
        #[arg(long)]
        t_end: f64,
        /// Grid resolution.
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// Number of evenly spaced trajectory samples.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Use the step albedo instead of the smooth one.
        #[arg(long)]
        step_albedo: bool,
    },
    /// Artificial-source verification across grid resolutions.
    Verify {
        /// Comma-separated interior resolutions.
        #[arg(long, default_value = "100,200,400")]
        n_list: String,
        #[arg(long, default_value_t = 2.0)]
        t_end: f64,
    },
    /// Sweep the solar constant and emit the bifurcation diagram.
    Bifurcate {
        #[arg(long)]
        q_min: f64,
        #[arg(long)]
        q_max: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
    },
    /// Classify the stability of one equilibrium.
    Stability {
        #[arg(long)]
        q: Option<f64>,
        /// Index of the solution in the deterministic solve order.
        #[arg(long)]
        solution_id: usize,
        /// eigen, slope or heuristic.
        #[arg(long, default_value = "eigen")]
        method: String,
        /// Grid resolution for the eigen/heuristic methods.
        #[arg(long, default_value_t = 400)]
        n: usize,
        /// Also write the spectrum CSV (eigen method).
        #[arg(long)]
        spectrum: bool,
    },
    /// Dump the Green's kernel and its one-sided derivatives on a grid.
    GreenfnTable {
        #[arg(long, default_value_t = 24)]
        n_theta: usize,
        #[arg(long, default_value_t = 12)]
        n_xi: usize,
    },
}

enum CliError {
    Config(String),
    Reference(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Reference(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Io(_) => 4,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Reference(m) | CliError::Numeric(m) | CliError::Io(m) => m,
        }
    }
}

impl From<ebm_core::EbmError> for CliError {
    fn from(e: ebm_core::EbmError) -> Self {
        match e {
            ebm_core::EbmError::InvalidParameter(_) | ebm_core::EbmError::InvalidGeometry(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

/// Collects output files and writes the manifest last, atomically.
struct Manifest {
    command: String,
    out_dir: PathBuf,
    config: serde_json::Value,
    tolerances: serde_json::Value,
    files: Vec<(String, String)>, // (name, sha256)
    notes: Vec<String>,
}

impl Manifest {
    fn new(command: &str, out_dir: &Path, config: serde_json::Value) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir)?;
        Ok(Self {
            command: command.into(),
            out_dir: out_dir.to_path_buf(),
            config,
            tolerances: serde_json::json!({}),
            files: Vec::new(),
            notes: Vec::new(),
        })
    }

    fn write_file(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents)?;
        let digest = Sha256::digest(contents.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.files.push((name.to_string(), hex));
        Ok(())
    }

    fn finish(self) -> Result<(), CliError> {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = serde_json::json!({
            "command": self.command,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "timestamp_unix": now,
            "config": self.config,
            "tolerances": self.tolerances,
            "outputs": self.files.iter().map(|(name, sha)| {
                serde_json::json!({"file": name, "sha256": sha})
            }).collect::<Vec<_>>(),
            "notes": self.notes,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let tmp = self.out_dir.join("run_manifest.json.tmp");
        fs::write(&tmp, &text)?;
        fs::rename(&tmp, self.out_dir.join("run_manifest.json"))?;
        Ok(())
    }
}

fn load_config(global: &GlobalArgs) -> Result<RunConfig, CliError> {
    match &global.config {
        None => Ok(RunConfig::default()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

fn init_threads(global: &GlobalArgs) {
    let threads = global.threads.or_else(|| {
        std::env::var("EBM_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}

fn solve_all(
    cfg: &RunConfig,
    q: f64,
    global: &GlobalArgs,
) -> Result<Vec<StationarySolution>, CliError> {
    let geometry = cfg.continent_config()?;
    let dp = nondimensionalize(&cfg.physical, q)?;
    let kernel = GreenKernel::new(dp.beta)?;
    let opts = EnumerateOpts {
        seed_density: global.seed_density,
        newton: ebm_core::bim::NewtonOpts {
            tol: global.tol,
            ..Default::default()
        },
        ..Default::default()
    };
    Ok(enumerate_equilibria(
        &cfg.physical,
        &geometry,
        q,
        &kernel,
        &opts,
        &Vec::new(),
    )?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads(&cli.global);
    let cfg = load_config(&cli.global)?;
    let config_snapshot = serde_json::to_value(&cfg).expect("config serializes");

    match cli.command {
        Command::Solve { q, case_filter } => {
            let q = q.unwrap_or(cfg.q);
            let mut manifest = Manifest::new("solve", &cli.global.out_dir, config_snapshot)?;
            manifest.tolerances = serde_json::json!({
                "newton_tol": cli.global.tol,
                "seed_density": cli.global.seed_density,
            });
            let sols = solve_all(&cfg, q, &cli.global)?;
            let filtered: Vec<&StationarySolution> = sols
                .iter()
                .filter(|s| {
                    case_filter
                        .as_ref()
                        .is_none_or(|f| s.case_name.contains(f.as_str()))
                })
                .collect();
            if filtered.is_empty() {
                manifest.notes.push("no equilibria found".into());
            }
            for (i, sol) in filtered.iter().enumerate() {
                manifest.write_file(
                    &format!("solution_{i:02}_profile.csv"),
                    &export::profile_csv(sol, &cfg.physical),
                )?;
                manifest.write_file(
                    &format!("solution_{i:02}_meta.json"),
                    &serde_json::to_string_pretty(&export::solution_sidecar(sol, &cfg.physical))
                        .expect("sidecar serializes"),
                )?;
            }
            manifest.finish()
        }
        Command::Simulate {
            ic,
            t_end,
            n,
            samples,
            step_albedo,
        } => {
            let mut manifest = Manifest::new("simulate", &cli.global.out_dir, config_snapshot)?;
            let geometry = cfg.continent_config()?;
            let dp = nondimensionalize(&cfg.physical, cfg.q)?;
            let grid = Grid::new(n)?;
            let state0 = initial_condition(&ic, &cfg, &cli.global, grid)?;
            let mut problem = FdmProblem::new(&cfg.physical, dp, geometry);
            if step_albedo {
                problem = problem.with_albedo(fdm::AlbedoMode::Step);
            }
            let times: Vec<f64> = (1..samples.max(1))
                .map(|i| state0.t + (t_end - state0.t) * i as f64 / samples.max(1) as f64)
                .collect();
            let traj = if t_end > state0.t {
                fdm::integrate(&state0, t_end, &problem, &IntegrateOpts::default(), &times)?
            } else {
                // t_end at or before the start: echo the initial condition.
                fdm::Trajectory {
                    samples: vec![state0.clone()],
                    steps: 0,
                }
            };
            manifest.write_file("trajectory.csv", &export::trajectory_csv(&traj))?;
            manifest.finish()
        }
        Command::Verify { n_list, t_end } => {
            let mut manifest = Manifest::new("verify", &cli.global.out_dir, config_snapshot)?;
            let dp = nondimensionalize(&cfg.physical, cfg.q)?;
            let ns: Vec<usize> = n_list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| CliError::Config(format!("bad N value: {s}")))
                })
                .collect::<Result<_, _>>()?;
            if ns.is_empty() {
                return Err(CliError::Config("empty N list".into()));
            }
            let mut report = serde_json::Map::new();
            let mut failed = false;
            for (name, which) in [
                ("gauss_pulse", ArtificialSource::GaussPulse),
                ("moving_gauss", ArtificialSource::MovingGauss),
            ] {
                let mut rows = Vec::new();
                let mut errs = Vec::new();
                for &n in &ns {
                    let r = artificial_source_run(which, n, t_end, &cfg.physical, &dp)?;
                    errs.push(r.linf);
                    rows.push(serde_json::json!({
                        "n": r.n, "t_end": r.t_end, "linf": r.linf, "l2": r.l2,
                    }));
                }
                let order = if ns.len() >= 2 {
                    let mut orders = Vec::new();
                    for w in errs.windows(2) {
                        orders.push((w[0] / w[1]).log2());
                    }
                    let mean = orders.iter().sum::<f64>() / orders.len() as f64;
                    if mean < 1.7 {
                        failed = true;
                    }
                    serde_json::json!(mean)
                } else {
                    serde_json::Value::Null
                };
                report.insert(
                    name.to_string(),
                    serde_json::json!({"runs": rows, "order_estimate": order}),
                );
            }
            manifest.write_file(
                "verification.json",
                &serde_json::to_string_pretty(&serde_json::Value::Object(report))
                    .expect("report serializes"),
            )?;
            manifest.finish()?;
            if failed {
                return Err(CliError::Numeric(
                    "observed convergence order below 1.7".into(),
                ));
            }
            Ok(())
        }
        Command::Bifurcate { q_min, q_max, step } => {
            if !(q_min < q_max) || !(step > 0.0) {
                return Err(CliError::Config("need q_min < q_max and step > 0".into()));
            }
            let mut manifest = Manifest::new("bifurcate", &cli.global.out_dir, config_snapshot)?;
            let geometry = cfg.continent_config()?;
            let n_steps = ((q_max - q_min) / step).round().max(2.0) as usize;
            let opts = SweepOpts {
                enumerate: EnumerateOpts {
                    seed_density: cli.global.seed_density,
                    ..Default::default()
                },
                ..Default::default()
            };
            let diagram = sweep(&cfg.physical, &geometry, q_min, q_max, n_steps, &opts)?;
            manifest.tolerances = serde_json::json!({
                "seed_density": opts.enumerate.seed_density,
                "newton_tol": opts.enumerate.newton.tol,
                "stability_grid_n": opts.stability_grid_n,
            });
            manifest.write_file("diagram.csv", &export::diagram_csv(&diagram))?;
            manifest.write_file("folds.csv", &export::folds_csv(&diagram))?;
            let (agree, total) = bifurcation::cross_validation(&diagram);
            manifest.notes.push(format!(
                "slope/eigen agreement {agree}/{total} non-marginal points"
            ));
            manifest.finish()
        }
        Command::Stability {
            q,
            solution_id,
            method,
            n,
            spectrum,
        } => {
            let q = q.unwrap_or(cfg.q);
            let mut manifest = Manifest::new("stability", &cli.global.out_dir, config_snapshot)?;
            let geometry = cfg.continent_config()?;
            let dp = nondimensionalize(&cfg.physical, q)?;
            let sols = solve_all(&cfg, q, &cli.global)?;
            let sol = sols.get(solution_id).ok_or_else(|| {
                CliError::Reference(format!(
                    "solution {solution_id} not found ({} solutions at Q = {q})",
                    sols.len()
                ))
            })?;
            let grid = Grid::new(n)?;
            let t0 = bifurcation::profile_on_grid(sol, &grid);
            let report = match method.as_str() {
                "eigen" => {
                    let rep =
                        eigen_classify(&t0, &grid, &geometry, &dp, &cfg.physical, stability::TOL_ZERO)?;
                    if spectrum {
                        let mut csv = String::from("re,im\n");
                        for (re, im) in rep.spectrum.as_ref().unwrap() {
                            csv.push_str(&format!(
                                "{},{}\n",
                                export::fmt_f64(*re),
                                export::fmt_f64(*im)
                            ));
                        }
                        manifest.write_file("spectrum.csv", &csv)?;
                    }
                    serde_json::json!({
                        "method": "eigen",
                        "verdict": rep.verdict,
                        "max_real_eig": rep.max_real_eig,
                        "n": n,
                        "case": sol.case_name,
                        "q": q,
                    })
                }
                "slope" => {
                    // A short local branch around Q via warm-started solves.
                    let dq = 0.5;
                    let mut branch = Vec::new();
                    for qq in [q - dq, q, q + dq] {
                        let neighbours = solve_all(&cfg, qq, &cli.global)?;
                        let closest = neighbours
                            .iter()
                            .filter(|s| s.case_name == sol.case_name)
                            .min_by(|a, b| {
                                let da = theta_distance(&a.theta_c, &sol.theta_c);
                                let db = theta_distance(&b.theta_c, &sol.theta_c);
                                da.partial_cmp(&db).unwrap()
                            });
                        if let Some(s) = closest {
                            branch.push((qq, cfg.physical.t_s * s.t_mean));
                        }
                    }
                    let verdicts = slope_classify(&branch, 5e-3)
                        .map_err(|e| CliError::Reference(e.to_string()))?;
                    serde_json::json!({
                        "method": "slope",
                        "verdict": verdicts[verdicts.len() / 2],
                        "branch": branch,
                        "case": sol.case_name,
                        "q": q,
                    })
                }
                "heuristic" => {
                    let outcome = heuristic_run(
                        &t0,
                        &grid,
                        &geometry,
                        &dp,
                        &cfg.physical,
                        1e-2,
                        20.0,
                    )?;
                    serde_json::json!({
                        "method": "heuristic",
                        "verdict": outcome,
                        "n": n,
                        "case": sol.case_name,
                        "q": q,
                    })
                }
                other => {
                    return Err(CliError::Config(format!(
                        "unknown stability method: {other}"
                    )))
                }
            };
            manifest.write_file(
                "stability.json",
                &serde_json::to_string_pretty(&report).expect("report serializes"),
            )?;
            manifest.finish()
        }
        Command::GreenfnTable { n_theta, n_xi } => {
            let mut manifest =
                Manifest::new("greenfn-table", &cli.global.out_dir, config_snapshot)?;
            let dp = nondimensionalize(&cfg.physical, cfg.q)?;
            let kernel = GreenKernel::new(dp.beta)?;
            let pi = std::f64::consts::PI;
            let thetas: Vec<f64> = (1..=n_theta)
                .map(|i| pi * i as f64 / (n_theta as f64 + 1.0))
                .collect();
            let xis: Vec<f64> = (1..=n_xi)
                .map(|i| pi * i as f64 / (n_xi as f64 + 1.0))
                .collect();
            manifest.write_file(
                "greenfn_table.csv",
                &export::greenfn_table_csv(&kernel, &thetas, &xis),
            )?;
            manifest.finish()
        }
    }
}

fn theta_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn initial_condition(
    spec: &str,
    cfg: &RunConfig,
    global: &GlobalArgs,
    grid: Grid,
) -> Result<SimulationState, CliError> {
    if let Some(value) = spec.strip_prefix("uniform:") {
        let v: f64 = value
            .parse()
            .map_err(|_| CliError::Config(format!("bad uniform value: {value}")))?;
        return Ok(SimulationState::from_fn(grid, 0.0, |_| v));
    }
    if let Some(id) = spec.strip_prefix("equilibrium:") {
        let id: usize = id
            .parse()
            .map_err(|_| CliError::Config(format!("bad equilibrium id: {id}")))?;
        let sols = solve_all(cfg, cfg.q, global)?;
        let sol = sols.get(id).ok_or_else(|| {
            CliError::Reference(format!(
                "equilibrium {id} not found ({} solutions at Q = {})",
                sols.len(),
                cfg.q
            ))
        })?;
        let temps = bifurcation::profile_on_grid(sol, &grid);
        return Ok(SimulationState::new(grid, 0.0, temps)?);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
        // Two-column CSV theta,T with optional header.
        let mut pts = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with(|c: char| c.is_alphabetic()) {
                continue;
            }
            let mut parts = line.split(',');
            let theta: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Config(format!("bad profile line: {line}")))?;
            let t: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Config(format!("bad profile line: {line}")))?;
            pts.push((theta, t));
        }
        if pts.len() < 2 {
            return Err(CliError::Config("profile file has fewer than 2 points".into()));
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let temps: Vec<f64> = grid
            .theta
            .iter()
            .map(|&th| {
                let i = pts.partition_point(|&(x, _)| x < th).clamp(1, pts.len() - 1);
                let (x0, y0) = pts[i - 1];
                let (x1, y1) = pts[i];
                if x1 == x0 {
                    y0
                } else {
                    y0 + (y1 - y0) * (th - x0) / (x1 - x0)
                }
            })
            .collect();
        return Ok(SimulationState::new(grid, 0.0, temps)?);
    }
    Err(CliError::Config(format!(
        "initial condition must be file:<path>, uniform:<value> or equilibrium:<id>; got {spec}"
    )))
}
