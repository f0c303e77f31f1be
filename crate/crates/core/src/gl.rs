//! Nonlocal Ginzburg-Landau equation `u_t = A_alpha u + F(u)` on (0,1) with
//! `u = 0` outside: mild-solution Picard iteration, exponential Euler
//! stepping and the energy monitors.
//!
//! All norms are `L^2(D)` norms on the grid. For a state `u` with spectral
//! coefficients `c = Q^T u`:
//!
//! * `l2_sq       = h sum c_k^2`
//! * `seminorm_sq = h sum lambda_k c_k^2` (`= sum w G(u)^2`, the `H^{alpha/2}` proxy)
//! * `halpha_sq   = h sum lambda_k^2 c_k^2` (`= ||A u||^2`, the `H^alpha` proxy)

use std::io::Write;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gronwall::{uniform_gronwall_check, TrajectoryTriple, UniformGronwallReport};
use crate::nonlocal::Field;
use crate::quadrature::{cumulative_trapezoid, interp};
use crate::spectral::EigenDecomposition;

/// Tabulated reaction term with declared dissipativity constants.
#[derive(Debug, Clone)]
pub struct CustomNonlinearity {
    xi: Vec<f64>,
    values: Vec<f64>,
    c_d: f64,
    p: f64,
}

const AUDIT_RANGE: f64 = 10.0;
const AUDIT_SAMPLES: usize = 10_000;

impl CustomNonlinearity {
    /// Build from a table sorted by `xi`; evaluation is piecewise linear with
    /// linear extrapolation. Fails unless
    /// `-C|xi|^p - C <= F(xi) xi <= -C|xi|^p + C` on `[-10, 10]`.
    pub fn new(xi: Vec<f64>, values: Vec<f64>, c_d: f64, p: f64) -> Result<Self> {
        if xi.len() < 2 || xi.len() != values.len() {
            return Err(Error::param("custom nonlinearity needs matching tables of length >= 2"));
        }
        if xi.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("custom nonlinearity abscissae must increase"));
        }
        if !(c_d > 0.0) || !(p >= 2.0) {
            return Err(Error::param("dissipativity needs C > 0 and p >= 2"));
        }
        let f = Self { xi, values, c_d, p };
        for i in 0..AUDIT_SAMPLES {
            let s = -AUDIT_RANGE + 2.0 * AUDIT_RANGE * i as f64 / (AUDIT_SAMPLES - 1) as f64;
            let prod = f.eval_scalar(s) * s;
            let core = -c_d * s.abs().powf(p);
            let slack = 1e-12 * (1.0 + core.abs());
            if prod < core - c_d - slack || prod > core + c_d + slack {
                return Err(Error::param(format!(
                    "dissipativity audit failed at xi = {s}: F(xi) xi = {prod}"
                )));
            }
        }
        Ok(f)
    }

    pub fn growth_exponent(&self) -> f64 {
        self.p
    }

    pub fn eval_scalar(&self, s: f64) -> f64 {
        let n = self.xi.len();
        let i = self.xi.partition_point(|&x| x <= s).clamp(1, n - 1);
        let (x0, x1) = (self.xi[i - 1], self.xi[i]);
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        y0 + (s - x0) * (y1 - y0) / (x1 - x0)
    }
}

#[derive(Debug, Clone)]
pub enum Nonlinearity {
    /// `F = 0`: the linear nonlocal heat flow.
    Zero,
    /// `u - u^3`
    Cubic,
    /// `u + u^2 - u^3`
    CubicQuadratic,
    /// `u + f(x)`
    LinearForced { forcing: DVector<f64> },
    Custom(CustomNonlinearity),
}

impl Nonlinearity {
    pub fn name(&self) -> &'static str {
        match self {
            Nonlinearity::Zero => "zero",
            Nonlinearity::Cubic => "cubic",
            Nonlinearity::CubicQuadratic => "cubic_quadratic",
            Nonlinearity::LinearForced { .. } => "linear_forced",
            Nonlinearity::Custom(_) => "custom",
        }
    }

    pub fn eval(&self, u: &DVector<f64>) -> DVector<f64> {
        match self {
            Nonlinearity::Zero => DVector::zeros(u.len()),
            Nonlinearity::Cubic => u.map(|v| v - v * v * v),
            Nonlinearity::CubicQuadratic => u.map(|v| v + v * v - v * v * v),
            Nonlinearity::LinearForced { forcing } => u + forcing,
            Nonlinearity::Custom(c) => u.map(|v| c.eval_scalar(v)),
        }
    }

    /// `sup_xi xi F(xi)`, the absorbing constant of the `L^2` estimate.
    pub fn dissipation_constant(&self) -> Option<f64> {
        match self {
            Nonlinearity::Zero => Some(0.0),
            Nonlinearity::Cubic => Some(0.25),
            Nonlinearity::CubicQuadratic => {
                // critical point of xi^2 + xi^3 - xi^4
                let s = (3.0 + 41f64.sqrt()) / 8.0;
                Some(s * s + s * s * s - s.powi(4))
            }
            Nonlinearity::LinearForced { .. } => None,
            Nonlinearity::Custom(c) => Some(c.c_d),
        }
    }

    /// `kappa` with `<Lambda u, F(u)> <= kappa * seminorm_sq`.
    pub fn seminorm_growth(&self) -> Option<f64> {
        match self {
            Nonlinearity::Zero => Some(0.0),
            Nonlinearity::Cubic => Some(1.0),
            Nonlinearity::CubicQuadratic => Some(2.0),
            _ => None,
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if let Nonlinearity::LinearForced { forcing } = self {
            if forcing.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: forcing.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GlConfig {
    pub t_final: f64,
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Radius of the Picard ball; `None` means `1 + 2 ||u0||_{H^{alpha/2}}`.
    pub ball_radius: Option<f64>,
    /// Initial local window, halved until the Picard map contracts.
    pub t_local: f64,
    pub blowup_threshold: f64,
    /// Record energies every this many steps.
    pub record_every: usize,
    /// Keep a full snapshot every this many steps (0 disables).
    pub snapshot_every: usize,
    pub contraction_pairs: usize,
    pub seed: u64,
}

impl Default for GlConfig {
    fn default() -> Self {
        Self {
            t_final: 10.0,
            dt: 1e-3,
            picard_tol: 1e-10,
            picard_max_iters: 200,
            ball_radius: None,
            t_local: 1.0,
            blowup_threshold: 1e6,
            record_every: 1,
            snapshot_every: 0,
            contraction_pairs: 8,
            seed: 0,
        }
    }
}

impl GlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) {
            return Err(Error::param("dt must be positive and t_final non-negative"));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::param("picard_tol must be positive"));
        }
        if let Some(r) = self.ball_radius {
            if !(r > 0.0) {
                return Err(Error::param("ball radius must be positive"));
            }
        }
        if !(self.t_local > 0.0) || self.record_every == 0 {
            return Err(Error::param("t_local must be positive and record_every >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub l2_sq: f64,
    pub seminorm_sq: f64,
    pub halpha_sq: f64,
    /// Integral of `l2_sq` over the unit window ending at `t` (partial before t = 1).
    pub window_l2: f64,
    pub window_halpha: f64,
}

#[derive(Debug, Clone, Default)]
pub struct EnergyTrace {
    pub records: Vec<EnergyRecord>,
}

pub const ENERGY_CSV_HEADER: [&str; 6] = [
    "t",
    "l2_sq",
    "seminorm_sq",
    "halpha_sq",
    "window_l2",
    "window_halpha",
];

impl EnergyTrace {
    /// Assemble a trace from per-sample energies, filling the window columns.
    pub fn from_samples(t: Vec<f64>, l2: Vec<f64>, semi: Vec<f64>, halpha: Vec<f64>) -> Self {
        let cl = cumulative_trapezoid(&t, &l2);
        let ch = cumulative_trapezoid(&t, &halpha);
        let t0 = t.first().copied().unwrap_or(0.0);
        let records = (0..t.len())
            .map(|i| {
                let start = (t[i] - 1.0).max(t0);
                EnergyRecord {
                    t: t[i],
                    l2_sq: l2[i],
                    seminorm_sq: semi[i],
                    halpha_sq: halpha[i],
                    window_l2: cl[i] - interp(&t, &cl, start),
                    window_halpha: ch[i] - interp(&t, &ch, start),
                }
            })
            .collect();
        Self { records }
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn span(&self) -> f64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Numerical(format!("csv write failed: {e}"));
        w.write_record(ENERGY_CSV_HEADER).map_err(err)?;
        for r in &self.records {
            w.write_record(
                [r.t, r.l2_sq, r.seminorm_sq, r.halpha_sq, r.window_l2, r.window_halpha]
                    .iter()
                    .map(|v| v.to_string()),
            )
            .map_err(err)?;
        }
        w.flush()
            .map_err(|e| Error::Numerical(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}

/// Precomputed spectral factors for one step size.
struct ExpEulerFactors {
    decay: DVector<f64>,
    /// `dt phi_1(-dt lambda) = (1 - e^{-dt lambda}) / lambda`
    phi: DVector<f64>,
}

impl ExpEulerFactors {
    fn new(eig: &EigenDecomposition, dt: f64) -> Self {
        let decay = eig.eigenvalues().map(|l| (-dt * l).exp());
        let phi = eig.eigenvalues().map(|l| -(-dt * l).exp_m1() / l);
        Self { decay, phi }
    }

    fn advance(&self, c: &DVector<f64>, f_hat: &DVector<f64>) -> DVector<f64> {
        c.component_mul(&self.decay) + f_hat.component_mul(&self.phi)
    }
}

/// Spectral energies `(l2_sq, seminorm_sq, halpha_sq)` of coefficients `c`.
pub fn spectral_energies(eig: &EigenDecomposition, c: &DVector<f64>) -> (f64, f64, f64) {
    let h = eig.grid().h();
    let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
    for (ck, &l) in c.iter().zip(eig.eigenvalues().iter()) {
        let s = ck * ck;
        a += s;
        b += l * s;
        d += l * l * s;
    }
    (h * a, h * b, h * d)
}

/// `||u||_{H^{alpha/2}}^2 = ||u||^2 + seminorm` from spectral coefficients.
fn h_half_norm_sq(eig: &EigenDecomposition, c: &DVector<f64>) -> f64 {
    let (a, b, _) = spectral_energies(eig, c);
    a + b
}

/// One exponential Euler step `u+ = e^{-dt Lambda} u + dt phi_1(-dt Lambda) F(u)`.
pub fn step_exponential_euler(
    u: &DVector<f64>,
    dt: f64,
    nl: &Nonlinearity,
    eig: &EigenDecomposition,
) -> Result<DVector<f64>> {
    if !(dt > 0.0) {
        return Err(Error::param("dt must be positive"));
    }
    if u.len() != eig.n() {
        return Err(Error::Dimension {
            expected: eig.n(),
            got: u.len(),
        });
    }
    nl.check_len(eig.n())?;
    let fac = ExpEulerFactors::new(eig, dt);
    let next = eig.from_spectral(&fac.advance(&eig.to_spectral(u), &eig.to_spectral(&nl.eval(u))));
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("exponential Euler step produced non-finite values".into()));
    }
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct PicardSolution {
    /// Fixed point on the step grid of `[0, t_local]`.
    pub trajectory: Vec<Field>,
    pub step: f64,
    pub t_local: f64,
    /// Largest measured Lipschitz ratio on the accepted window.
    pub contraction_factor: f64,
    /// Largest ratio measured at each tried window, in order.
    pub measured_ratios: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub ball_radius: f64,
}

struct PicardMap<'a> {
    eig: &'a EigenDecomposition,
    nl: &'a Nonlinearity,
    fac: ExpEulerFactors,
    u0_hat: DVector<f64>,
    steps: usize,
}

impl PicardMap<'_> {
    /// Variation-of-constants map with left-endpoint exponential quadrature,
    /// on trajectories stored as spectral coefficients.
    fn apply(&self, traj: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(self.steps + 1);
        out.push(self.u0_hat.clone());
        for (j, cj) in traj.iter().take(self.steps).enumerate() {
            let f_hat = self.eig.to_spectral(&self.nl.eval(&self.eig.from_spectral(cj)));
            let next = self.fac.advance(&out[j], &f_hat);
            out.push(next);
        }
        out
    }

    fn distance(&self, a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| h_half_norm_sq(self.eig, &(x - y)))
            .fold(0.0f64, f64::max)
            .sqrt()
    }
}

/// Solve the mild formulation on a local window by Picard iteration.
///
/// The window starts at `min(cfg.t_local, cfg.t_final)` and is halved until
/// the largest Lipschitz ratio of the map, measured on random trajectory
/// pairs inside the ball of radius `R` around `u0`, drops below one.
pub fn picard_solve_local(
    u0: &DVector<f64>,
    nl: &Nonlinearity,
    cfg: &GlConfig,
    eig: &EigenDecomposition,
) -> Result<PicardSolution> {
    cfg.validate()?;
    let n = eig.n();
    if u0.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: u0.len(),
        });
    }
    nl.check_len(n)?;
    let u0_hat = eig.to_spectral(u0);
    let radius = cfg
        .ball_radius
        .unwrap_or_else(|| 1.0 + 2.0 * h_half_norm_sq(eig, &u0_hat).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let modes = n.min(8);

    let mut t_local = if cfg.t_final > 0.0 {
        cfg.t_local.min(cfg.t_final)
    } else {
        cfg.t_local
    };
    let mut ratios = Vec::new();
    const MAX_HALVINGS: usize = 20;
    let mut accepted = None;
    for _ in 0..=MAX_HALVINGS {
        let steps = ((t_local / cfg.dt).round() as usize).max(1);
        let step = t_local / steps as f64;
        let map = PicardMap {
            eig,
            nl,
            fac: ExpEulerFactors::new(eig, step),
            u0_hat: u0_hat.clone(),
            steps,
        };
        let mut worst = 0.0f64;
        for _ in 0..cfg.contraction_pairs.max(1) {
            let a = random_ball_trajectory(&map, radius, modes, &mut rng);
            let b = random_ball_trajectory(&map, radius, modes, &mut rng);
            let denom = map.distance(&a, &b);
            if denom > 0.0 {
                let ratio = map.distance(&map.apply(&a), &map.apply(&b)) / denom;
                worst = worst.max(ratio);
            }
        }
        ratios.push(worst);
        if worst < 1.0 {
            accepted = Some((map, step, worst));
            break;
        }
        t_local *= 0.5;
    }
    let Some((map, step, factor)) = accepted else {
        return Err(Error::NoContraction {
            halvings: MAX_HALVINGS,
            ratios,
        });
    };

    let mut current: Vec<DVector<f64>> = vec![u0_hat.clone(); map.steps + 1];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.picard_max_iters {
        let next = map.apply(&current);
        iterations += 1;
        residual = map.distance(&next, &current);
        current = next;
        let sup = current
            .iter()
            .map(|c| eig.from_spectral(c).amax())
            .fold(0.0f64, f64::max);
        if !sup.is_finite() || sup > cfg.blowup_threshold {
            return Err(Error::BlowUp {
                step: iterations,
                t: t_local,
                sup_norm: sup,
                l2_norm: f64::NAN,
            });
        }
        if residual <= cfg.picard_tol {
            break;
        }
    }
    if residual > cfg.picard_tol {
        return Err(Error::Numerical(format!(
            "Picard iteration stalled at residual {residual:e} after {iterations} iterations"
        )));
    }
    let trajectory = current
        .iter()
        .enumerate()
        .map(|(j, c)| Field::at(eig.from_spectral(c), j as f64 * step))
        .collect::<Result<Vec<_>>>()?;
    Ok(PicardSolution {
        trajectory,
        step,
        t_local: step * map.steps as f64,
        contraction_factor: factor,
        measured_ratios: ratios,
        residual,
        iterations,
        ball_radius: radius,
    })
}

/// `u0 + r psi(t)` with a smooth random direction of unit sup-in-time norm
/// and `r` uniform in `[0, R]`.
fn random_ball_trajectory(
    map: &PicardMap<'_>,
    radius: f64,
    modes: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<DVector<f64>> {
    let n = map.u0_hat.len();
    let a: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
    let dirs: Vec<DVector<f64>> = (0..=map.steps)
        .map(|j| {
            let s = j as f64 / map.steps as f64;
            let mut c = DVector::zeros(n);
            for k in 0..modes {
                c[k] = a[k] + b[k] * s;
            }
            c
        })
        .collect();
    let norm = dirs
        .iter()
        .map(|c| h_half_norm_sq(map.eig, c))
        .fold(0.0f64, f64::max)
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let r = radius * rng.random_range(0.0..1.0);
    dirs.into_iter().map(|d| &map.u0_hat + d * (r / norm)).collect()
}

#[derive(Debug, Clone)]
pub struct GlobalRun {
    pub trace: EnergyTrace,
    pub final_field: Field,
    pub snapshots: Vec<Field>,
    pub steps: usize,
}

/// Integrate to `cfg.t_final` with exponential Euler, recording energies.
pub fn run_global(
    u0: &DVector<f64>,
    nl: &Nonlinearity,
    cfg: &GlConfig,
    eig: &EigenDecomposition,
) -> Result<GlobalRun> {
    cfg.validate()?;
    let n = eig.n();
    if u0.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: u0.len(),
        });
    }
    nl.check_len(n)?;
    let grid = eig.grid();
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let fac = ExpEulerFactors::new(eig, cfg.dt);
    let mut u = u0.clone();
    let mut c = eig.to_spectral(&u);
    let (mut ts, mut l2, mut semi, mut ha) = (vec![], vec![], vec![], vec![]);
    let mut snapshots = Vec::new();
    let mut record = |k: usize, c: &DVector<f64>| {
        let (a, b, d) = spectral_energies(eig, c);
        ts.push(k as f64 * cfg.dt);
        l2.push(a);
        semi.push(b);
        ha.push(d);
    };
    record(0, &c);
    if cfg.snapshot_every > 0 {
        snapshots.push(Field::at(u.clone(), 0.0)?);
    }
    for k in 1..=steps {
        let f_hat = eig.to_spectral(&nl.eval(&u));
        c = fac.advance(&c, &f_hat);
        u = eig.from_spectral(&c);
        let sup = u.amax();
        if !sup.is_finite() || sup > cfg.blowup_threshold {
            return Err(Error::BlowUp {
                step: k,
                t: k as f64 * cfg.dt,
                sup_norm: sup,
                l2_norm: grid.norm(&u),
            });
        }
        if k % cfg.record_every == 0 || k == steps {
            record(k, &c);
        }
        if cfg.snapshot_every > 0 && (k % cfg.snapshot_every == 0 || k == steps) {
            snapshots.push(Field::at(u.clone(), k as f64 * cfg.dt)?);
        }
    }
    Ok(GlobalRun {
        trace: EnergyTrace::from_samples(ts, l2, semi, ha),
        final_field: Field::at(u, steps as f64 * cfg.dt)?,
        snapshots,
        steps,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct L2DecayReport {
    pub pass: bool,
    pub first_violation: Option<f64>,
    /// Smallest `bound - y` over the trace.
    pub min_margin: f64,
    /// Absorbing level `2 C_P M |D|`.
    pub absorbing_level: f64,
    /// Whether the level `|D|/2` (no Poincare constant) also held.
    pub uncorrected_level_holds: bool,
    pub tail_max: f64,
}

/// `y(t) <= y(0) e^{-t/C_P} + 2 C_P M |D|` with `M = sup xi F(xi)`
/// (`= C_P |D| / 2` for the cubic term).
pub fn check_l2_decay(
    trace: &EnergyTrace,
    poincare: f64,
    domain: f64,
    dissipation: f64,
) -> L2DecayReport {
    let y0 = trace.records.first().map(|r| r.l2_sq).unwrap_or(0.0);
    let level = 2.0 * poincare * dissipation * domain;
    let mut first_violation = None;
    let mut min_margin = f64::INFINITY;
    let mut uncorrected = true;
    for r in &trace.records {
        let env = y0 * (-r.t / poincare).exp();
        let bound = env + level;
        let margin = bound - r.l2_sq;
        let tol = 1e-12 * bound.max(1.0);
        min_margin = min_margin.min(margin);
        if margin < -tol && first_violation.is_none() {
            first_violation = Some(r.t);
        }
        if r.l2_sq > env + 0.5 * domain + tol {
            uncorrected = false;
        }
    }
    let span = trace.span();
    let t_end = trace.records.last().map(|r| r.t).unwrap_or(0.0);
    let tail_max = trace
        .records
        .iter()
        .filter(|r| r.t >= t_end - 0.25 * span)
        .map(|r| r.l2_sq)
        .fold(0.0f64, f64::max);
    if first_violation.is_some() {
        log::warn!("L2 decay bound violated first at t = {:?}", first_violation);
    }
    log::debug!(
        "L2 decay: absorbing level {level}, |D|/2 form holds: {uncorrected}, tail max {tail_max}"
    );
    L2DecayReport {
        pass: first_violation.is_none(),
        first_violation,
        min_margin,
        absorbing_level: level,
        uncorrected_level_holds: uncorrected,
        tail_max,
    }
}

/// Asymptotic bound on unit-window integrals of `||A u||^2`.
///
/// Polynomial variants: `int E <= M|D|(1 + C_P)` asymptotically, the seminorm
/// obeys `E' <= 2 kappa E - 2 ||A u||^2`, so a window integral of `||A u||^2`
/// is at most `a3 (e^{2 kappa} / 2 + kappa)`. The linear forced equation has
/// steady state `(Lambda - I)^{-1} f`, giving `2 (lambda_1/(lambda_1 - 1))^2 ||f||^2`.
pub fn steady_halpha_bound(
    nl: &Nonlinearity,
    eig: &EigenDecomposition,
    domain: f64,
) -> Option<f64> {
    let lam1 = eig.gap();
    match nl {
        Nonlinearity::LinearForced { forcing } => {
            if lam1 <= 1.0 {
                return None;
            }
            let amp = lam1 / (lam1 - 1.0);
            Some(2.0 * amp * amp * eig.grid().norm_sq(forcing))
        }
        _ => {
            let m = nl.dissipation_constant()?;
            let kappa = nl.seminorm_growth()?;
            let a3 = m * domain * (1.0 + 1.0 / lam1);
            Some(a3 * (0.5 * (2.0 * kappa).exp() + kappa))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowReport {
    pub pass: bool,
    pub transient_max: f64,
    pub steady_bound: f64,
    pub max_window: f64,
    pub first_violation: Option<f64>,
    pub windows_checked: usize,
}

/// Every full unit window of `||A u||^2` stays below twice the largest
/// window of the first quarter of the run plus `steady_bound`.
pub fn check_window_halpha(trace: &EnergyTrace, steady_bound: f64) -> Result<WindowReport> {
    if trace.span() < 2.0 - 1e-9 {
        return Err(Error::param("window check needs at least two time units"));
    }
    let t0 = trace.records[0].t;
    let t_end = trace.records.last().unwrap().t;
    let full: Vec<&EnergyRecord> = trace
        .records
        .iter()
        .filter(|r| r.t >= t0 + 1.0 - 1e-9)
        .collect();
    let quarter_end = (t0 + 0.25 * (t_end - t0)).max(t0 + 1.0);
    let transient_max = full
        .iter()
        .filter(|r| r.t <= quarter_end + 1e-9)
        .map(|r| r.window_halpha)
        .fold(0.0f64, f64::max);
    let limit = 2.0 * transient_max + steady_bound;
    let mut first_violation = None;
    let mut max_window = 0.0f64;
    for r in &full {
        max_window = max_window.max(r.window_halpha);
        if r.window_halpha > limit * (1.0 + 1e-12) && first_violation.is_none() {
            first_violation = Some(r.t);
        }
    }
    Ok(WindowReport {
        pass: first_violation.is_none(),
        transient_max,
        steady_bound,
        max_window,
        first_violation,
        windows_checked: full.len(),
    })
}

/// Uniform Gronwall on `y = seminorm_sq` with `g = growth`, `h = 0`, `r = 1`.
/// Passes only if the differential premise also held on every interval.
pub fn check_seminorm_uniform(
    trace: &EnergyTrace,
    growth: f64,
) -> Result<(bool, UniformGronwallReport)> {
    if trace.span() < 2.0 - 1e-9 {
        return Err(Error::param("uniform check needs at least two time units"));
    }
    let t = trace.times();
    let y = trace.records.iter().map(|r| r.seminorm_sq).collect();
    let triple = TrajectoryTriple::with_constants(t, y, growth, 0.0, 1.0)?;
    let report = uniform_gronwall_check(&triple)?;
    Ok((report.pass && report.premise_ok, report))
}
