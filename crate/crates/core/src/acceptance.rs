//! The acceptance suite: every criterion as a function returning its checks,
//! shared by the `accept` subcommand and the `acceptance` test target.

use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cli;
use crate::config::{DriftPreset, Equation, RunConfig};
use crate::error::Result;
use crate::fp::{
    solve_viscous, standard_test_set, uniqueness_check, vanishing_viscosity, weak_residual, Drift,
    DriftProfile, FpProblem, ViscositySchedule,
};
use crate::gl::{
    check_l2_decay, check_seminorm_uniform, check_window_halpha, picard_solve_local, run_global,
    step_exponential_euler, steady_halpha_bound, EnergyTrace, GlConfig, Nonlinearity,
};
use crate::gronwall::{uniform_gronwall_check, TrajectoryTriple};
use crate::mc::{compare_density, simulate_killed, StableSimConfig};
use crate::nonlocal::{poincare_constant, smallest_eigenvalue, Grid1D, NonlocalOperator};
use crate::spectral::{
    asymptotic_eigenvalue, corrected_asymptotic_eigenvalue, eigendecompose, logspace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Counts towards the verdict.
    Assert,
    /// Wall-clock budget; counts towards the verdict, kept out of CSV output.
    Runtime,
    /// Informational only.
    Report,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub limit: Option<f64>,
    pub pass: bool,
    pub kind: CheckKind,
}

impl Check {
    fn at_most(label: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            label: label.into(),
            value,
            limit: Some(limit),
            pass: value <= limit,
            kind: CheckKind::Assert,
        }
    }

    fn holds(label: impl Into<String>, ok: bool) -> Self {
        Self {
            label: label.into(),
            value: if ok { 1.0 } else { 0.0 },
            limit: None,
            pass: ok,
            kind: CheckKind::Assert,
        }
    }

    fn report(label: impl Into<String>, value: f64) -> Self {
        Self {
            label: label.into(),
            value,
            limit: None,
            pass: true,
            kind: CheckKind::Report,
        }
    }

    fn runtime(seconds: f64, budget: f64) -> Self {
        Self {
            label: "runtime_seconds".into(),
            value: seconds,
            limit: Some(budget),
            pass: seconds < budget,
            kind: CheckKind::Runtime,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
    /// Error text when the criterion could not be evaluated.
    pub error: Option<String>,
    #[serde(skip)]
    pub files: Vec<(String, Vec<u8>)>,
}

impl CriterionResult {
    /// One verdict line followed by indented check lines.
    pub fn render(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let mut out = format!(
            "{verdict} criterion {:>2} {} ({:.1} s)",
            self.id, self.name, self.seconds
        );
        if let Some(e) = &self.error {
            out.push_str(&format!("\n    error: {e}"));
        }
        for c in &self.checks {
            let tag = match (c.kind, c.pass) {
                (CheckKind::Report, _) => "info",
                (_, true) => "ok",
                (_, false) => "FAIL",
            };
            let limit = c.limit.map(|l| format!(" (limit {l:e})")).unwrap_or_default();
            out.push_str(&format!("\n    [{tag}] {} = {:e}{limit}", c.label, c.value));
        }
        out
    }
}

fn finish(
    id: u8,
    name: &'static str,
    start: Instant,
    body: Result<(Vec<Check>, Vec<(String, Vec<u8>)>)>,
) -> CriterionResult {
    let seconds = start.elapsed().as_secs_f64();
    match body {
        Ok((mut checks, files)) => {
            if let Some(rt) = checks.iter_mut().find(|c| c.label == "runtime_seconds") {
                rt.value = seconds;
                rt.pass = seconds < rt.limit.unwrap_or(f64::INFINITY);
            }
            let pass = checks.iter().all(|c| c.kind == CheckKind::Report || c.pass);
            CriterionResult {
                id,
                name,
                pass,
                seconds,
                checks,
                error: None,
                files,
            }
        }
        Err(e) => CriterionResult {
            id,
            name,
            pass: false,
            seconds,
            checks: Vec::new(),
            error: Some(e.to_string()),
            files: Vec::new(),
        },
    }
}

fn sine(grid: Grid1D, amp: f64, k: f64) -> DVector<f64> {
    grid.sample(|x| amp * (k * std::f64::consts::PI * x).sin())
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "green_identity"),
    (2, "spectral_structure"),
    (3, "semigroup_bounds"),
    (4, "gl_mild_solution"),
    (5, "gl_energy_suite"),
    (6, "fp_vanishing_viscosity"),
    (7, "fp_uniqueness"),
    (8, "uniform_gronwall"),
    (9, "monte_carlo"),
    (10, "determinism"),
];

/// Evaluate one criterion by number.
pub fn criterion(id: u8, seed: u64) -> CriterionResult {
    let start = Instant::now();
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .unwrap_or("unknown");
    let body = match id {
        1 => green_identity(),
        2 => spectral_structure(),
        3 => semigroup_bounds(),
        4 => gl_mild_solution(),
        5 => gl_energy_suite(),
        6 => fp_vanishing_viscosity(),
        7 => fp_uniqueness(),
        8 => uniform_gronwall(),
        9 => monte_carlo(seed),
        10 => determinism(seed),
        _ => Err(crate::error::Error::param(format!("no criterion {id}"))),
    };
    finish(id, name, start, body)
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|&(id, _)| criterion(id, seed)).collect()
}

type Body = Result<(Vec<Check>, Vec<(String, Vec<u8>)>)>;

fn green_identity() -> Body {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for alpha in [0.5, 1.0, 1.5] {
        let op = NonlocalOperator::new(alpha, 255)?;
        let grid = op.grid();
        let (mut scaled, mut pointwise, mut quadratic) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..100 {
            let u = DVector::from_fn(255, |_, _| rng.random_range(-1.0..1.0));
            let v = DVector::from_fn(255, |_, _| rng.random_range(-1.0..1.0));
            let au = op.apply(&u)?;
            let lhs = grid.inner(&au, &v);
            let rhs = op.gradient(&u)?.pairing(&op.gradient(&v)?);
            let res = (lhs + rhs).abs();
            scaled = scaled.max(res / (grid.norm(&au) * grid.norm(&v)));
            pointwise = pointwise.max(res / lhs.abs().max(rhs.abs()));
            let q = grid.inner(&au, &u);
            quadratic = quadratic.max((q + op.dirichlet_form(&u)?).abs() / q.abs());
        }
        checks.push(Check::at_most(
            format!("max_relative_residual_alpha_{alpha}"),
            scaled,
            1e-12,
        ));
        checks.push(Check::at_most(
            format!("max_quadratic_form_residual_alpha_{alpha}"),
            quadratic,
            1e-12,
        ));
        checks.push(Check::report(
            format!("max_residual_over_pairing_alpha_{alpha}"),
            pointwise,
        ));
    }
    checks.push(Check::runtime(0.0, 10.0));
    Ok((checks, Vec::new()))
}

fn spectral_structure() -> Body {
    let n = 511;
    let kmax = n / 8;
    let mut checks = Vec::new();
    let mut files = Vec::new();
    for alpha in [0.5, 1.0, 1.5] {
        let op = NonlocalOperator::new(alpha, n)?;
        let eig = eigendecompose(&op)?;
        let lam = eig.eigenvalues();
        checks.push(Check::holds(format!("lambda_1_positive_alpha_{alpha}"), lam[0] > 0.0));
        checks.push(Check::holds(
            format!("low_modes_strictly_increasing_alpha_{alpha}"),
            (1..kmax).all(|k| lam[k] > lam[k - 1]),
        ));
        let inverse = smallest_eigenvalue(&op)?;
        checks.push(Check::at_most(
            format!("lambda_1_inverse_iteration_rel_diff_alpha_{alpha}"),
            (inverse - lam[0]).abs() / lam[0],
            1e-10,
        ));
        let mut corrected = 0.0f64;
        let mut uncorrected = 0.0f64;
        for k in 1..=kmax {
            corrected = corrected.max((lam[k - 1] / corrected_asymptotic_eigenvalue(alpha, k)? - 1.0).abs());
            uncorrected = uncorrected.max((lam[k - 1] / asymptotic_eigenvalue(alpha, k)? - 1.0).abs());
        }
        let label = format!("max_rel_dev_from_corrected_asymptotic_alpha_{alpha}");
        if alpha >= 1.0 {
            checks.push(Check::at_most(label, corrected, 0.02));
        } else {
            // at small alpha the asymptotic formula itself is off by ~2% at k = 1
            checks.push(Check::report(label, corrected));
        }
        checks.push(Check::report(
            format!("max_rel_dev_from_uncorrected_formula_alpha_{alpha}"),
            uncorrected,
        ));
        files.push((format!("eigenvalues_alpha_{alpha}.csv"), cli::eigen_csv(&eig)?));
    }
    Ok((checks, files))
}

fn semigroup_bounds() -> Body {
    let mut checks = Vec::new();
    let times = logspace(1e-3, 10.0, 50);
    let betas = [0.25, 0.5, 0.75];
    for alpha in [0.5, 1.0, 1.5] {
        let op = NonlocalOperator::new(alpha, 255)?;
        let eig = eigendecompose(&op)?;
        let rep = eig.verify_semigroup_bounds(&times, &betas)?;
        let worst = rep
            .rows
            .iter()
            .map(|r| r.value / r.bound)
            .fold(0.0f64, f64::max);
        checks.push(Check::holds(format!("all_bound_families_hold_alpha_{alpha}"), rep.pass()));
        checks.push(Check::report(format!("max_value_over_bound_alpha_{alpha}"), worst));
        let u = op.grid().sample(|x| x * (1.0 - x) * (1.0 + (5.0 * x).sin()));
        for beta in betas {
            let integral = eig.negative_power_by_integral(beta, &u, 1e-13)?.value;
            let spectral = eig.apply_fn(&u, |l| l.powf(-beta))?;
            let rel = (&integral - &spectral).norm() / spectral.norm();
            checks.push(Check::at_most(
                format!("power_integral_rel_err_alpha_{alpha}_beta_{beta}"),
                rel,
                1e-6,
            ));
        }
    }
    checks.push(Check::runtime(0.0, 30.0));
    Ok((checks, Vec::new()))
}

fn gl_mild_solution() -> Body {
    let op = NonlocalOperator::new(1.0, 255)?;
    let eig = eigendecompose(&op)?;
    let grid = op.grid();
    let u0 = sine(grid, 0.5, 1.0);
    let cfg = GlConfig {
        t_final: 1.0,
        dt: 1e-3,
        picard_tol: 1e-10,
        ..GlConfig::default()
    };
    let mut checks = Vec::new();
    let sol = picard_solve_local(&u0, &Nonlinearity::Cubic, &cfg, &eig)?;
    checks.push(Check::at_most("contraction_factor", sol.contraction_factor, 1.0 - 1e-12));
    checks.push(Check::report("local_window", sol.t_local));
    checks.push(Check::at_most("fixed_point_residual", sol.residual, 1e-8));
    // the fixed point against the exponential-Euler trajectory
    let mut u = u0.clone();
    let mut diff = 0.0f64;
    let mut fmax = 0.0f64;
    for f in sol.trajectory.iter().skip(1) {
        fmax = fmax.max(grid.norm(&Nonlinearity::Cubic.eval(&u)));
        u = step_exponential_euler(&u, sol.step, &Nonlinearity::Cubic, &eig)?;
        diff = diff.max(grid.norm(&(&f.values - &u)));
    }
    checks.push(Check::at_most(
        "picard_vs_exponential_euler",
        diff,
        10.0 * sol.step * fmax,
    ));
    let lin = picard_solve_local(&u0, &Nonlinearity::Zero, &cfg, &eig)?;
    let mut err = 0.0f64;
    for f in &lin.trajectory {
        let exact = eig.heat_apply(f.time.unwrap_or(0.0), &u0)?;
        err = err.max((&f.values - exact).amax());
    }
    checks.push(Check::at_most("zero_forcing_vs_semigroup", err, 1e-10));
    Ok((checks, Vec::new()))
}

/// One GL run of the energy suite.
#[derive(Debug, Clone)]
pub struct GlCase {
    pub label: String,
    pub trace: EnergyTrace,
}

struct GlSuite {
    cases: Vec<GlCase>,
    checks: Vec<Check>,
    files: Vec<(String, Vec<u8>)>,
    seconds: f64,
}

static GL_SUITE: OnceLock<std::result::Result<GlSuite, String>> = OnceLock::new();

fn gl_suite() -> std::result::Result<&'static GlSuite, String> {
    GL_SUITE
        .get_or_init(|| compute_gl_suite().map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| e.clone())
}

fn compute_gl_suite() -> Result<GlSuite> {
    let start = Instant::now();
    let mut cases = Vec::new();
    let mut checks = Vec::new();
    let mut files = Vec::new();
    let cfg = GlConfig {
        t_final: 10.0,
        dt: 1e-3,
        ..GlConfig::default()
    };
    for alpha in [0.8, 1.5] {
        let op = NonlocalOperator::new(alpha, 255)?;
        let eig = eigendecompose(&op)?;
        let cp = poincare_constant(&op)?;
        let grid = op.grid();
        for (nl, nl_name) in [
            (Nonlinearity::Cubic, "cubic"),
            (Nonlinearity::CubicQuadratic, "cubic_quadratic"),
        ] {
            for (u0, u0_name) in [(sine(grid, 1.0, 1.0), "sin"), (sine(grid, 10.0, 3.0), "10sin3")] {
                let label = format!("{nl_name}_{u0_name}_alpha_{alpha}");
                let run = run_global(&u0, &nl, &cfg, &eig)?;
                let m = nl.dissipation_constant().expect("polynomial variant");
                let l2 = check_l2_decay(&run.trace, cp, 1.0, m);
                checks.push(Check::holds(format!("l2_decay_{label}"), l2.pass));
                let steady = steady_halpha_bound(&nl, &eig, 1.0).expect("polynomial variant");
                let win = check_window_halpha(&run.trace, steady)?;
                checks.push(Check::holds(format!("window_halpha_{label}"), win.pass));
                let (ok, rep) = check_seminorm_uniform(&run.trace, 1.0)?;
                checks.push(Check::holds(format!("seminorm_uniform_{label}"), ok));
                checks.push(Check::report(format!("seminorm_bound_{label}"), rep.bound));
                let thin = EnergyTrace {
                    records: run.trace.records.iter().step_by(10).copied().collect(),
                };
                let mut buf = Vec::new();
                thin.write_csv(&mut buf)?;
                files.push((format!("gl_energy_{label}.csv"), buf));
                cases.push(GlCase {
                    label,
                    trace: run.trace,
                });
            }
        }
    }
    Ok(GlSuite {
        cases,
        checks,
        files,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Energy traces of the GL suite (computed once per process).
pub fn gl_cases() -> std::result::Result<Vec<GlCase>, String> {
    gl_suite().map(|s| s.cases.clone())
}

fn gl_energy_suite() -> Body {
    let suite = gl_suite().map_err(crate::error::Error::Numerical)?;
    let mut checks = suite.checks.clone();
    // the runs may have been computed for another criterion first
    let mut rt = Check::runtime(suite.seconds, 120.0);
    rt.label = "gl_runs_seconds".into();
    checks.push(rt);
    Ok((checks, suite.files.clone()))
}

fn fp_setup(n: usize) -> Result<(NonlocalOperator, Drift)> {
    let op = NonlocalOperator::new(1.0, n)?;
    let drift = Drift::from_profile(
        op.grid(),
        &DriftProfile::Sine {
            amplitude: 0.5,
            frequency: 1.0,
        },
    )?;
    Ok((op, drift))
}

fn fp_vanishing_viscosity() -> Body {
    let (op, drift) = fp_setup(511)?;
    let grid = op.grid();
    let dt = 1e-4;
    let problem = FpProblem::new(drift.clone(), Some(op.clone()), grid, 0.5, dt)?.with_record_every(10);
    let schedule = ViscositySchedule::dyadic(10);
    let u0 = sine(grid, 1.0, 1.0);
    let vv = vanishing_viscosity(&schedule, &problem, &u0)?;
    let mut checks = vec![Check::holds("gaps_strictly_decreasing", vv.strictly_decreasing)];
    let final_gap = *vv.cauchy_gaps.last().unwrap_or(&0.0);
    checks.push(Check::at_most("final_cauchy_gap", final_gap, 1e-3));
    let eps_min = *schedule.epsilons().last().unwrap();
    let tol = 5.0 * (grid.h() + dt + eps_min);
    let eig = eigendecompose(&op)?;
    let tests = standard_test_set(&eig, 10, 10);
    let rep = weak_residual(vv.limit(), &drift, Some(&op), &tests, Some(tol))?;
    checks.push(Check::at_most("max_weak_residual", rep.max(), tol));
    checks.push(Check::holds("all_20_test_functions_within_tolerance", rep.pass() == Some(true)));
    checks.push(Check::report(
        "limit_h1_seminorm_at_T",
        grid.h1_seminorm(vv.limit().final_state()),
    ));
    checks.push(Check::runtime(0.0, 300.0));
    Ok((checks, vec![("fp_cauchy_gaps.csv".into(), cli::gaps_csv(&schedule, &vv.cauchy_gaps)?)]))
}

fn fp_uniqueness() -> Body {
    let (op, drift) = fp_setup(511)?;
    let grid = op.grid();
    let problem = FpProblem::new(drift.clone(), Some(op), grid, 0.5, 1e-4)?.with_record_every(10);
    let u0 = sine(grid, 1.0, 1.0);
    let same = uniqueness_check(&problem, 0.0, &u0, &u0)?;
    let mut checks = vec![Check::at_most(
        "identical_data_max_distance",
        same.distances.iter().copied().fold(0.0, f64::max),
        0.0,
    )];
    let pert = &u0 + sine(grid, 0.1, 3.0);
    let rep = uniqueness_check(&problem, 0.0, &u0, &pert)?;
    let allowed = 2.0 * drift.b_prime_sup * 1.1;
    checks.push(Check::at_most(
        "fitted_growth_exponent",
        rep.fitted_exponent.unwrap_or(f64::NEG_INFINITY),
        allowed,
    ));
    checks.push(Check::holds("distance_within_exponential_envelope", rep.envelope_holds));
    Ok((checks, Vec::new()))
}

fn uniform_gronwall() -> Body {
    let t: Vec<f64> = (0..=10_000).map(|i| i as f64 * 1e-4).collect();
    let y: Vec<f64> = t.iter().map(|s| s.exp()).collect();
    let triple = TrajectoryTriple::with_constants(t, y, 1.0, 0.0, 1.0)?;
    let rep = uniform_gronwall_check(&triple)?;
    let e = std::f64::consts::E;
    let mut checks = vec![
        Check::at_most("a1_error", (rep.a1 - 1.0).abs(), 1e-6),
        Check::at_most("a2_error", rep.a2.abs(), 1e-6),
        Check::at_most("a3_error", (rep.a3 - (e - 1.0)).abs(), 1e-6),
        Check::at_most("bound_error", (rep.bound - (e - 1.0) * e).abs(), 1e-6),
        Check::holds("bound_dominates_y_end", rep.bound >= e && rep.pass),
    ];
    let cases = gl_cases().map_err(crate::error::Error::Numerical)?;
    for case in &cases {
        let (ok, _) = check_seminorm_uniform(&case.trace, 1.0)?;
        checks.push(Check::holds(format!("checker_on_{}", case.label), ok));
    }
    Ok((checks, Vec::new()))
}

fn monte_carlo(seed: u64) -> Body {
    let n = 511;
    let t_final = 0.25;
    let dt = 1e-4;
    let grid = Grid1D::new(n)?;
    let u0 = sine(grid, 1.0, 1.0);
    let mut checks = Vec::new();
    let mut files = Vec::new();
    for alpha in [1.0, 2.0] {
        // alpha = 2 is killed Brownian motion: the local heat equation u_t = u_xx
        let (op, eps) = if alpha < 2.0 {
            (Some(NonlocalOperator::new(alpha, n)?), 0.0)
        } else {
            (None, 1.0)
        };
        let problem = FpProblem::new(Drift::zero(grid), op, grid, t_final, dt)?.with_record_every(2500);
        let pde = solve_viscous(&problem, eps, &u0)?;
        let cfg = StableSimConfig {
            alpha,
            drift: Drift::zero(grid),
            n_paths: 200_000,
            dt,
            t_final,
            seed,
            bins: 32,
        };
        let ens = simulate_killed(&cfg, grid, &u0)?;
        let cmp = compare_density(&ens, grid, pde.final_state(), grid.mass(&u0), cfg.bins)?;
        checks.push(Check::at_most(format!("l1_distance_alpha_{alpha}"), cmp.l1, 0.05));
        checks.push(Check::at_most(
            format!("survival_gap_alpha_{alpha}"),
            (cmp.mc_survival - cmp.pde_survival).abs(),
            3.0 * cmp.survival_standard_error + 0.01,
        ));
        checks.push(Check::report(format!("mc_survival_alpha_{alpha}"), cmp.mc_survival));
        checks.push(Check::report(format!("pde_survival_alpha_{alpha}"), cmp.pde_survival));
        files.push((format!("mc_comparison_alpha_{alpha}.csv"), cli::comparison_csv(&cmp)?));
    }
    checks.push(Check::runtime(0.0, 180.0));
    Ok((checks, files))
}

/// Small configurations of every CSV-emitting command.
pub fn determinism_configs(seed: u64) -> Vec<(&'static str, RunConfig)> {
    let base = RunConfig {
        seed,
        ..RunConfig::default()
    };
    vec![
        (
            "eig",
            RunConfig {
                n: 63,
                ..base.clone()
            },
        ),
        (
            "gl",
            RunConfig {
                n: 31,
                t_final: 2.5,
                dt: 1e-2,
                ..base.clone()
            },
        ),
        (
            "fp",
            RunConfig {
                equation: Equation::Fp,
                n: 63,
                t_final: 0.1,
                dt: 1e-3,
                viscosity_levels: 3,
                ..base.clone()
            },
        ),
        (
            "mc",
            RunConfig {
                equation: Equation::Fp,
                n: 63,
                t_final: 0.05,
                dt: 1e-3,
                mc_dt: 1e-3,
                n_paths: 20_000,
                drift: DriftPreset::Zero,
                ..base
            },
        ),
    ]
}

fn determinism(seed: u64) -> Body {
    let mut checks = Vec::new();
    for (cmd, cfg) in determinism_configs(seed) {
        let a = cli::run_command(cmd, &cfg)?;
        let b = cli::run_command(cmd, &cfg)?;
        let same = a.files == b.files && !a.files.is_empty();
        checks.push(Check::holds(format!("{cmd}_csv_byte_identical"), same));
    }
    Ok((checks, Vec::new()))
}

/// `criterion,name,check,kind,value,limit,pass` rows (runtime rows omitted so
/// the file is reproducible).
pub fn results_csv(results: &[CriterionResult]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = crate::fp::csv_err;
    w.write_record(["criterion", "name", "check", "kind", "value", "limit", "pass"])
        .map_err(err)?;
    for r in results {
        for c in r.checks.iter().filter(|c| c.kind != CheckKind::Runtime) {
            let kind = match c.kind {
                CheckKind::Assert => "assert",
                CheckKind::Report => "report",
                CheckKind::Runtime => unreachable!(),
            };
            w.write_record([
                r.id.to_string(),
                r.name.to_string(),
                c.label.clone(),
                kind.to_string(),
                c.value.to_string(),
                c.limit.map(|l| l.to_string()).unwrap_or_default(),
                c.pass.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.into_inner()
        .map_err(|e| crate::error::Error::Numerical(e.to_string()))
}
