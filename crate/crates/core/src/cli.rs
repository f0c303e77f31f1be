//! Command-line front end: subcommands produce CSV files and monitor
//! verdicts in memory; the entry point writes them and a run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use crate::acceptance;
use crate::config::{RunConfig, TrajectoryFormat};
use crate::error::{Error, Result};
use crate::fp::{
    csv_err, h1_energy_check, solve_viscous, standard_test_set, uniqueness_check,
    vanishing_viscosity, weak_residual, FpProblem, ViscositySchedule,
};
use crate::gl::{
    check_l2_decay, check_seminorm_uniform, check_window_halpha, picard_solve_local, run_global,
    steady_halpha_bound,
};
use crate::gronwall::{uniform_gronwall_check, TrajectoryTriple};
use crate::mc::{compare_density, simulate_killed, DensityComparison, StableSimConfig};
use crate::nonlocal::{poincare_constant, Grid1D, NonlocalOperator};
use crate::spectral::{
    asymptotic_eigenvalue, corrected_asymptotic_eigenvalue, eigendecompose, EigenDecomposition,
};

#[derive(Debug, Parser)]
#[command(name = "fracpde", version, about = "Nonlocal Ginzburg-Landau and Fokker-Planck solvers with estimate monitors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration (flat keys, unknown keys rejected).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discrete spectrum against the asymptotic formulas.
    Eig,
    /// Ginzburg-Landau run with energy monitors.
    Gl,
    /// Vanishing-viscosity Fokker-Planck run.
    Fp,
    /// Monte Carlo comparison against a Fokker-Planck solution.
    Mc,
    /// Uniform Gronwall check of a `t,y,g,h` CSV.
    Gronwall {
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Window length.
        #[arg(long)]
        r: Option<f64>,
    },
    /// Run the acceptance suite.
    Accept,
}

#[derive(Debug, Clone, Serialize)]
pub struct Monitor {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

impl Monitor {
    fn new(name: impl Into<String>, pass: bool, detail: Value) -> Self {
        Self {
            name: name.into(),
            pass,
            detail,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CommandOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub monitors: Vec<Monitor>,
    pub summary: Value,
}

impl CommandOutput {
    pub fn pass(&self) -> bool {
        self.monitors.iter().all(|m| m.pass)
    }
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> std::result::Result<(), csv::Error>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    fill(&mut w).map_err(csv_err)?;
    w.into_inner().map_err(|e| Error::Numerical(e.to_string()))
}

/// `k, eigenvalue, uncorrected_formula, corrected_formula, ratio_corrected`.
pub fn eigen_csv(eig: &EigenDecomposition) -> Result<Vec<u8>> {
    let alpha = eig.alpha();
    let rows = eig
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, &lam)| {
            let k = i + 1;
            let uncorrected = asymptotic_eigenvalue(alpha, k)?;
            let corrected = corrected_asymptotic_eigenvalue(alpha, k)?;
            Ok([
                k.to_string(),
                lam.to_string(),
                uncorrected.to_string(),
                corrected.to_string(),
                (lam / corrected).to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    csv_bytes(
        &["k", "eigenvalue", "uncorrected_formula", "corrected_formula", "ratio_corrected"],
        |w| rows.iter().try_for_each(|r| w.write_record(r)),
    )
}

/// `k, eps, eps_next, gap`.
pub fn gaps_csv(schedule: &ViscositySchedule, gaps: &[f64]) -> Result<Vec<u8>> {
    let eps = schedule.epsilons();
    csv_bytes(&["k", "eps", "eps_next", "gap"], |w| {
        gaps.iter().enumerate().try_for_each(|(k, g)| {
            w.write_record([
                k.to_string(),
                eps[k].to_string(),
                eps[k + 1].to_string(),
                g.to_string(),
            ])
        })
    })
}

/// `bin_left, bin_right, mc_mass, pde_mass`.
pub fn comparison_csv(cmp: &DensityComparison) -> Result<Vec<u8>> {
    let m = cmp.mc_bins.len() as f64;
    csv_bytes(&["bin_left", "bin_right", "mc_mass", "pde_mass"], |w| {
        cmp.mc_bins
            .iter()
            .zip(&cmp.pde_bins)
            .enumerate()
            .try_for_each(|(k, (a, b))| {
                w.write_record([
                    (k as f64 / m).to_string(),
                    ((k + 1) as f64 / m).to_string(),
                    a.to_string(),
                    b.to_string(),
                ])
            })
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub fn cmd_eig(cfg: &RunConfig) -> Result<CommandOutput> {
    let op = NonlocalOperator::new(cfg.alpha, cfg.n)?;
    let eig = eigendecompose(&op)?;
    let lam = eig.eigenvalues();
    let positive = lam.iter().all(|&l| l > 0.0);
    let increasing = lam.as_slice().windows(2).all(|w| w[1] >= w[0]);
    Ok(CommandOutput {
        files: vec![("eigenvalues.csv".into(), eigen_csv(&eig)?)],
        monitors: vec![
            Monitor::new("eigenvalues_positive", positive, json!(lam[0])),
            Monitor::new("eigenvalues_ascending", increasing, Value::Null),
        ],
        summary: json!({ "lambda_1": lam[0], "lambda_max": eig.largest(), "count": lam.len() }),
    })
}

pub fn cmd_gl(cfg: &RunConfig) -> Result<CommandOutput> {
    let op = NonlocalOperator::new(cfg.alpha, cfg.n)?;
    let eig = eigendecompose(&op)?;
    let grid = op.grid();
    let nl = cfg.nonlinearity()?;
    let u0 = cfg.initial_field()?;
    let mut gl = cfg.gl_config();
    let steps = (gl.t_final / gl.dt).round() as usize;
    gl.snapshot_every = (steps / 100).max(1);
    let mut monitors = Vec::new();
    if gl.t_final > 0.0 {
        let sol = picard_solve_local(&u0, &nl, &gl, &eig)?;
        monitors.push(Monitor::new(
            "picard_contraction",
            sol.contraction_factor < 1.0 && sol.residual <= gl.picard_tol,
            json!({
                "contraction_factor": sol.contraction_factor,
                "residual": sol.residual,
                "t_local": sol.t_local,
                "iterations": sol.iterations,
                "ball_radius": sol.ball_radius,
                "measured_ratios": sol.measured_ratios,
            }),
        ));
    }
    let run = run_global(&u0, &nl, &gl, &eig)?;
    let cp = poincare_constant(&op)?;
    if let Some(m) = nl.dissipation_constant() {
        let rep = check_l2_decay(&run.trace, cp, 1.0, m);
        monitors.push(Monitor::new("l2_decay", rep.pass, to_value(&rep)));
    }
    if run.trace.span() >= 2.0 - 1e-9 {
        if let Some(steady) = steady_halpha_bound(&nl, &eig, 1.0) {
            let rep = check_window_halpha(&run.trace, steady)?;
            monitors.push(Monitor::new("window_halpha", rep.pass, to_value(&rep)));
        }
        if nl.seminorm_growth().is_some() {
            let (ok, rep) = check_seminorm_uniform(&run.trace, 1.0)?;
            monitors.push(Monitor::new(
                "seminorm_uniform",
                ok,
                json!({ "a3": rep.a3, "bound": rep.bound, "premise_ok": rep.premise_ok }),
            ));
        }
    }
    let mut energy = Vec::new();
    run.trace.write_csv(&mut energy)?;
    let mut header = vec!["t".to_string()];
    header.extend(grid.nodes().iter().map(|x| format!("u({x})")));
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let traj = csv_bytes(&header_ref, |w| {
        run.snapshots.iter().try_for_each(|f| {
            let row = std::iter::once(f.time.unwrap_or(0.0).to_string())
                .chain(f.values.iter().map(|v| v.to_string()));
            w.write_record(row)
        })
    })?;
    let last = run.trace.records.last().copied();
    Ok(CommandOutput {
        files: vec![("energy.csv".into(), energy), ("trajectory.csv".into(), traj)],
        monitors,
        summary: json!({
            "nonlinearity": nl.name(),
            "steps": run.steps,
            "poincare_constant": cp,
            "final": last.map(|r| to_value(&r)),
        }),
    })
}

fn fp_problem(cfg: &RunConfig) -> Result<(FpProblem, NonlocalOperator)> {
    let op = NonlocalOperator::new(cfg.alpha, cfg.n)?;
    let problem = FpProblem::new(cfg.drift()?, Some(op.clone()), op.grid(), cfg.t_final, cfg.dt)?
        .with_record_every(cfg.record_every);
    Ok((problem, op))
}

pub fn cmd_fp(cfg: &RunConfig) -> Result<CommandOutput> {
    let schedule = cfg.schedule()?;
    let (problem, op) = fp_problem(cfg)?;
    let grid = problem.grid;
    let u0 = cfg.initial_field()?;
    let vv = vanishing_viscosity(&schedule, &problem, &u0)?;
    let mut files = Vec::new();
    for (k, run) in vv.runs.iter().enumerate() {
        let mut buf = Vec::new();
        match cfg.trajectory_format {
            TrajectoryFormat::Trace => run.write_trace_csv(&mut buf)?,
            TrajectoryFormat::Wide => run.write_wide_csv(&mut buf)?,
        }
        files.push((format!("fp_eps_{k:02}.csv"), buf));
    }
    let mut limit = Vec::new();
    vv.limit().write_wide_csv(&mut limit)?;
    files.push(("fp_limit.csv".into(), limit));
    files.push(("cauchy_gaps.csv".into(), gaps_csv(&schedule, &vv.cauchy_gaps)?));

    let eps_min = *schedule.epsilons().last().expect("non-empty schedule");
    let tol = 5.0 * (grid.h() + problem.dt + eps_min);
    let eig = eigendecompose(&op)?;
    let tests = standard_test_set(&eig, 10, 10);
    let weak = weak_residual(vv.limit(), &problem.drift, Some(&op), &tests, Some(tol))?;
    files.push((
        "weak_residual.csv".into(),
        csv_bytes(&["test_function", "residual", "tolerance"], |w| {
            weak.ids.iter().zip(&weak.residuals).try_for_each(|(id, r)| {
                w.write_record([id.clone(), r.to_string(), tol.to_string()])
            })
        })?,
    ));
    let energy: Vec<_> = vv.runs.iter().map(|r| h1_energy_check(r, &problem.drift)).collect();
    files.push((
        "h1_energy.csv".into(),
        csv_bytes(&["eps", "max_quantity", "bound", "pass"], |w| {
            energy.iter().try_for_each(|e| {
                w.write_record([
                    e.eps.to_string(),
                    e.max_quantity.to_string(),
                    e.bound.to_string(),
                    e.pass.to_string(),
                ])
            })
        })?,
    ));
    let perturbed = &u0 + grid.sample(|x| 0.1 * (3.0 * std::f64::consts::PI * x).sin());
    let uniq = uniqueness_check(&problem, eps_min, &u0, &perturbed)?;
    Ok(CommandOutput {
        files,
        monitors: vec![
            Monitor::new(
                "cauchy_gaps_strictly_decreasing",
                vv.strictly_decreasing,
                json!(vv.cauchy_gaps),
            ),
            Monitor::new("weak_residual", weak.pass() == Some(true), json!({ "max": weak.max(), "tolerance": tol })),
            Monitor::new("h1_energy", energy.iter().all(|e| e.pass), to_value(&energy)),
            Monitor::new(
                "uniqueness",
                uniq.pass,
                json!({ "fitted_exponent": uniq.fitted_exponent, "allowed_exponent": uniq.allowed_exponent }),
            ),
        ],
        summary: json!({
            "epsilons": schedule.epsilons(),
            "final_gap": vv.cauchy_gaps.last(),
            "limit_h1_seminorm": grid.h1_seminorm(vv.limit().final_state()),
        }),
    })
}

/// Last row of a wide trajectory CSV.
pub fn read_final_field(path: &Path, grid: Grid1D) -> Result<DVector<f64>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            line: 1,
            message: format!("{other:?}"),
        },
    })?;
    let mut last = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let vals = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != grid.n() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} node values, found {}", grid.n(), vals.len()),
            });
        }
        last = Some(DVector::from_vec(vals));
    }
    last.ok_or_else(|| Error::Parse {
        line: 1,
        message: "trajectory has no rows".into(),
    })
}

pub fn cmd_mc(cfg: &RunConfig) -> Result<CommandOutput> {
    let grid = cfg.grid()?;
    let drift = cfg.drift()?;
    let u0 = cfg.initial_field()?;
    let field = match &cfg.pde_run {
        Some(path) => read_final_field(path, grid)?,
        None => {
            let (problem, _) = fp_problem(cfg)?;
            solve_viscous(&problem.with_record_every(usize::MAX), 0.0, &u0)?
                .final_state()
                .clone()
        }
    };
    let sim = StableSimConfig {
        alpha: cfg.alpha,
        drift,
        n_paths: cfg.n_paths,
        dt: cfg.mc_dt,
        t_final: cfg.t_final,
        seed: cfg.seed,
        bins: cfg.bins,
    };
    let ens = simulate_killed(&sim, grid, &u0)?;
    let cmp = compare_density(&ens, grid, &field, grid.mass(&u0), cfg.bins)?;
    let m = cfg.bins as f64;
    let hist = csv_bytes(&["bin_left", "bin_right", "mass"], |w| {
        cmp.mc_bins.iter().enumerate().try_for_each(|(k, v)| {
            w.write_record([
                (k as f64 / m).to_string(),
                ((k + 1) as f64 / m).to_string(),
                v.to_string(),
            ])
        })
    })?;
    Ok(CommandOutput {
        files: vec![
            ("mc_histogram.csv".into(), hist),
            ("mc_comparison.csv".into(), comparison_csv(&cmp)?),
        ],
        monitors: vec![
            Monitor::new("l1_distance", cmp.l1 <= 0.05, json!(cmp.l1)),
            Monitor::new(
                "survival_agreement",
                cmp.survival_agrees,
                json!({ "mc": cmp.mc_survival, "pde": cmp.pde_survival, "se": cmp.survival_standard_error }),
            ),
        ],
        summary: json!({
            "seed": cfg.seed,
            "alpha": cfg.alpha,
            "dt": cfg.mc_dt,
            "n_paths": cfg.n_paths,
            "survivors": ens.survivors,
        }),
    })
}

pub fn cmd_gronwall(path: &Path, r: f64) -> Result<CommandOutput> {
    let triple = TrajectoryTriple::from_csv(path, r)?;
    let rep = uniform_gronwall_check(&triple)?;
    let windows = csv_bytes(&["start", "y_end", "bound", "skipped", "pass"], |w| {
        rep.windows.iter().try_for_each(|c| {
            w.write_record([
                c.start.to_string(),
                c.y_end.to_string(),
                rep.bound.to_string(),
                c.skipped.to_string(),
                c.pass.to_string(),
            ])
        })
    })?;
    Ok(CommandOutput {
        files: vec![("gronwall_windows.csv".into(), windows)],
        monitors: vec![
            Monitor::new("uniform_gronwall", rep.pass, json!({ "bound": rep.bound })),
            Monitor::new("differential_premise", rep.premise_ok, Value::Null),
        ],
        summary: json!({ "a1": rep.a1, "a2": rep.a2, "a3": rep.a3, "r": rep.r, "bound": rep.bound }),
    })
}

pub fn cmd_accept(seed: u64) -> Result<CommandOutput> {
    let mut monitors = Vec::new();
    let mut files = Vec::new();
    let mut results = Vec::new();
    for &(id, _) in acceptance::CRITERIA.iter() {
        let r = acceptance::criterion(id, seed);
        println!("{}", r.render());
        monitors.push(Monitor::new(
            format!("criterion_{id}_{}", r.name),
            r.pass,
            to_value(&r),
        ));
        files.extend(r.files.iter().cloned());
        results.push(r);
    }
    files.insert(0, ("acceptance.csv".into(), acceptance::results_csv(&results)?));
    let passed = results.iter().filter(|r| r.pass).count();
    Ok(CommandOutput {
        files,
        monitors,
        summary: json!({ "passed": passed, "total": results.len(), "seed": seed }),
    })
}

/// Dispatch a configuration-driven subcommand by name.
pub fn run_command(name: &str, cfg: &RunConfig) -> Result<CommandOutput> {
    match name {
        "eig" => cmd_eig(cfg),
        "gl" => cmd_gl(cfg),
        "fp" => cmd_fp(cfg),
        "mc" => cmd_mc(cfg),
        "gronwall" => {
            let path = cfg
                .gronwall_csv
                .as_ref()
                .ok_or_else(|| Error::Config("gronwall needs a CSV path".into()))?;
            cmd_gronwall(path, cfg.gronwall_r)
        }
        "accept" => cmd_accept(cfg.seed),
        other => Err(Error::Config(format!("unknown command {other}"))),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    seed: u64,
    wall_clock_seconds: f64,
    pass: bool,
    monitors: &'a [Monitor],
    summary: &'a Value,
    files: Vec<&'a str>,
    error: Option<String>,
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Error::io(path, e))
}

fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    seconds: f64,
    out: &CommandOutput,
    error: Option<String>,
) -> Result<()> {
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        seed: cfg.seed,
        wall_clock_seconds: seconds,
        pass: error.is_none() && out.pass(),
        monitors: &out.monitors,
        summary: &out.summary,
        files: out.files.iter().map(|f| f.0.as_str()).collect(),
        error,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    write_file(dir, "manifest.json", text.as_bytes())
}

/// Run the parsed command line and return the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let result = (|| -> Result<i32> {
        let mut cfg = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        let name = match &cli.command {
            Command::Eig => "eig",
            Command::Gl => "gl",
            Command::Fp => "fp",
            Command::Mc => "mc",
            Command::Gronwall { csv, r } => {
                if let Some(p) = csv {
                    cfg.gronwall_csv = Some(p.clone());
                }
                if let Some(r) = r {
                    cfg.gronwall_r = *r;
                }
                "gronwall"
            }
            Command::Accept => "accept",
        };
        let dir = cli
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let start = Instant::now();
        match run_command(name, &cfg) {
            Ok(out) => {
                for (file, bytes) in &out.files {
                    write_file(&dir, file, bytes)?;
                }
                write_manifest(&dir, name, &cfg, start.elapsed().as_secs_f64(), &out, None)?;
                for m in &out.monitors {
                    if name != "accept" {
                        println!("{} {}", if m.pass { "PASS" } else { "FAIL" }, m.name);
                    }
                }
                Ok(if out.pass() { 0 } else { 1 })
            }
            Err(e) => {
                let seconds = start.elapsed().as_secs_f64();
                let _ = write_manifest(&dir, name, &cfg, seconds, &CommandOutput::default(), Some(e.to_string()));
                Err(e)
            }
        }
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main_entry() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    execute(Cli::parse())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig_two_nodes() {
        let cfg = RunConfig {
            n: 2,
            ..RunConfig::default()
        };
        let out = cmd_eig(&cfg).unwrap();
        assert!(out.pass());
        let text = String::from_utf8(out.files[0].1.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("k,eigenvalue,uncorrected_formula,corrected_formula,ratio_corrected"));
    }

    #[test]
    fn gl_zero_data_is_all_zero() {
        let cfg = RunConfig {
            n: 15,
            t_final: 2.0,
            dt: 1e-2,
            initial: crate::config::InitialPreset::Zero,
            ..RunConfig::default()
        };
        let out = cmd_gl(&cfg).unwrap();
        assert!(out.pass());
        let energy = String::from_utf8(out.files[0].1.clone()).unwrap();
        for line in energy.lines().skip(1) {
            assert!(line.split(',').skip(1).all(|v| v == "0"), "{line}");
        }
    }

    #[test]
    fn gl_absurd_step_blows_up() {
        let cfg = RunConfig {
            n: 15,
            t_final: 50.0,
            dt: 1.0,
            initial_amplitude: 10.0,
            initial_mode: 3,
            ..RunConfig::default()
        };
        let err = cmd_gl(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
