//! Nonlocal Fokker-Planck equation `u_t + (b u)_x = A_alpha u` on (0,1) with
//! `u = 0` outside, solved through the viscous regularisation
//! `u_t + (b u)_x = eps u_xx + A_alpha u` and the limit `eps -> 0`.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlocal::{Grid1D, NonlocalOperator};
use crate::spectral::EigenDecomposition;

/// Analytic drift families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftProfile {
    Zero,
    /// `amplitude * sin(2 pi frequency x)`
    Sine { amplitude: f64, frequency: f64 },
    /// `sum coeffs[k] x^k`
    Polynomial { coeffs: Vec<f64> },
}

impl DriftProfile {
    fn eval(&self, x: f64, derivative: usize) -> f64 {
        match self {
            DriftProfile::Zero => 0.0,
            DriftProfile::Sine {
                amplitude,
                frequency,
            } => {
                let w = 2.0 * std::f64::consts::PI * frequency;
                let phase = w * x + derivative as f64 * std::f64::consts::FRAC_PI_2;
                amplitude * w.powi(derivative as i32) * phase.sin()
            }
            DriftProfile::Polynomial { coeffs } => horner_derivative(coeffs, derivative, x),
        }
    }

    /// Exact sup of `|b'|` and `|b''|` on [0,1] (sampled for polynomials).
    fn derivative_sups(&self) -> (f64, f64) {
        match self {
            DriftProfile::Zero => (0.0, 0.0),
            DriftProfile::Sine {
                amplitude,
                frequency,
            } => {
                let w = 2.0 * std::f64::consts::PI * frequency;
                let a = amplitude.abs();
                // sin(w x) reaches +-1 on [0,1] once |w| >= pi/2; otherwise the
                // extremes sit at the endpoints
                let reach = |shift: f64| {
                    if w.abs() >= std::f64::consts::PI {
                        1.0
                    } else {
                        (0..=10_000)
                            .map(|i| (w * i as f64 / 10_000.0 + shift).sin().abs())
                            .fold(0.0, f64::max)
                    }
                };
                (
                    a * w.abs() * reach(std::f64::consts::FRAC_PI_2),
                    a * w * w * reach(std::f64::consts::PI),
                )
            }
            DriftProfile::Polynomial { .. } => {
                let s = |d: usize| {
                    (0..=10_000)
                        .map(|i| self.eval(i as f64 / 10_000.0, d).abs())
                        .fold(0.0, f64::max)
                };
                (s(1), s(2))
            }
        }
    }
}

/// `d^k/dx^k sum c_j x^j` by Horner's rule on the falling-factorial coefficients.
fn horner_derivative(coeffs: &[f64], derivative: usize, x: f64) -> f64 {
    let mut acc = 0.0;
    for k in (derivative..coeffs.len()).rev() {
        let fall: f64 = (0..derivative).map(|j| (k - j) as f64).product();
        acc = acc * x + coeffs[k] * fall;
    }
    acc
}

/// Drift sampled at the nodes and at the cell faces `x = (i + 1/2) h`,
/// `i = 0..=n`, with declared bounds on `|b'|` and `|b''|`.
#[derive(Debug, Clone)]
pub struct Drift {
    pub nodes: DVector<f64>,
    pub faces: DVector<f64>,
    pub b_prime_sup: f64,
    pub b_second_sup: f64,
}

impl Drift {
    pub fn zero(grid: Grid1D) -> Self {
        Self {
            nodes: DVector::zeros(grid.n()),
            faces: DVector::zeros(grid.n() + 1),
            b_prime_sup: 0.0,
            b_second_sup: 0.0,
        }
    }

    pub fn from_profile(grid: Grid1D, profile: &DriftProfile) -> Result<Self> {
        let (p, s) = profile.derivative_sups();
        Self::from_fn(grid, |x| profile.eval(x, 0), p, s)
    }

    /// Sample `b` and check the declared derivative bounds by finite
    /// differences on the half-step lattice; excess beyond 1% is an error.
    pub fn from_fn<F: Fn(f64) -> f64>(
        grid: Grid1D,
        b: F,
        b_prime_sup: f64,
        b_second_sup: f64,
    ) -> Result<Self> {
        if !(b_prime_sup >= 0.0) || !(b_second_sup >= 0.0) {
            return Err(Error::param("declared drift bounds must be non-negative"));
        }
        let n = grid.n();
        let h = grid.h();
        let nodes = grid.sample(&b);
        let faces = DVector::from_iterator(n + 1, (0..=n).map(|i| b((i as f64 + 0.5) * h)));
        if nodes.iter().chain(faces.iter()).any(|v| !v.is_finite()) {
            return Err(Error::param("drift has non-finite samples"));
        }
        let m = 2 * n + 3;
        let step = 0.5 * h;
        let fine: Vec<f64> = (0..m).map(|k| b(k as f64 * step)).collect();
        let d1 = fine
            .windows(2)
            .map(|w| ((w[1] - w[0]) / step).abs())
            .fold(0.0, f64::max);
        let d2 = fine
            .windows(3)
            .map(|w| ((w[2] - 2.0 * w[1] + w[0]) / (step * step)).abs())
            .fold(0.0, f64::max);
        let tol = |declared: f64| 1.01 * declared + 1e-9;
        if d1 > tol(b_prime_sup) {
            return Err(Error::param(format!(
                "drift derivative reaches {d1} but |b'| <= {b_prime_sup} was declared"
            )));
        }
        if d2 > tol(b_second_sup) {
            return Err(Error::param(format!(
                "drift second derivative reaches {d2} but |b''| <= {b_second_sup} was declared"
            )));
        }
        Ok(Self {
            nodes,
            faces,
            b_prime_sup,
            b_second_sup,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.nodes.amax().max(self.faces.amax())
    }

    /// First-order upwind `(b u)_x` with zero exterior values.
    pub fn upwind_div(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = u.len();
        let h = 1.0 / (n as f64 + 1.0);
        let flux = |f: usize| {
            let left = if f == 0 { 0.0 } else { u[f - 1] };
            let right = if f == n { 0.0 } else { u[f] };
            let b = self.faces[f];
            b.max(0.0) * left + b.min(0.0) * right
        };
        let mut out = DVector::zeros(n);
        let mut prev = flux(0);
        for i in 0..n {
            let next = flux(i + 1);
            out[i] = (next - prev) / h;
            prev = next;
        }
        out
    }

    /// Centred face fluxes `b_f (u_l + u_r) / 2`.
    fn centred_fluxes(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = u.len();
        DVector::from_iterator(
            n + 1,
            (0..=n).map(|f| {
                let left = if f == 0 { 0.0 } else { u[f - 1] };
                let right = if f == n { 0.0 } else { u[f] };
                0.5 * self.faces[f] * (left + right)
            }),
        )
    }
}

/// Strictly decreasing viscosities in (0, 1].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViscositySchedule {
    epsilons: Vec<f64>,
}

impl ViscositySchedule {
    pub fn new(epsilons: Vec<f64>) -> Result<Self> {
        if epsilons.is_empty() {
            return Err(Error::Config("viscosity schedule is empty".into()));
        }
        if !(epsilons[0] <= 1.0) || epsilons.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::param("viscosities must lie in (0, 1]"));
        }
        if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::param("viscosities must be strictly decreasing"));
        }
        Ok(Self { epsilons })
    }

    /// `eps_k = 2^{-k}`, `k = 0..=levels`.
    pub fn dyadic(levels: usize) -> Self {
        Self {
            epsilons: (0..=levels).map(|k| 0.5f64.powi(k as i32)).collect(),
        }
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }
}

/// Convolution with the normalised bump `exp(-1/(1-(x/eps)^2))` of radius
/// `eps`, with zero extension outside (0,1).
pub fn mollify_initial(grid: Grid1D, u0: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
    if !(eps > 0.0) {
        return Err(Error::param("mollifier radius must be positive"));
    }
    if u0.len() != grid.n() {
        return Err(Error::Dimension {
            expected: grid.n(),
            got: u0.len(),
        });
    }
    let h = grid.h();
    if eps < h {
        log::warn!("mollifier radius {eps} is below the mesh width {h}; data left unchanged");
        return Ok(u0.clone());
    }
    let reach = ((eps / h).ceil() as usize).min(2 * grid.n());
    let mut w: Vec<f64> = (0..=reach)
        .map(|k| {
            let r = k as f64 * h / eps;
            if r < 1.0 {
                (-1.0 / (1.0 - r * r)).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total = w[0] + 2.0 * w[1..].iter().sum::<f64>();
    w.iter_mut().for_each(|v| *v /= total);
    let n = grid.n() as isize;
    Ok(DVector::from_iterator(
        grid.n(),
        (0..n).map(|i| {
            let mut acc = w[0] * u0[i as usize];
            for (k, &wk) in w.iter().enumerate().skip(1) {
                let k = k as isize;
                if i - k >= 0 {
                    acc += wk * u0[(i - k) as usize];
                }
                if i + k < n {
                    acc += wk * u0[(i + k) as usize];
                }
            }
            acc
        }),
    ))
}

/// Fixed data of a viscous run: drift, optional nonlocal operator, time grid.
#[derive(Debug, Clone)]
pub struct FpProblem {
    pub grid: Grid1D,
    pub drift: Drift,
    /// `None` drops the nonlocal term (local heat equation with drift).
    pub operator: Option<NonlocalOperator>,
    pub t_final: f64,
    pub dt: f64,
    /// Record every this many steps (the final step is always recorded).
    pub record_every: usize,
}

impl FpProblem {
    pub fn new(
        drift: Drift,
        operator: Option<NonlocalOperator>,
        grid: Grid1D,
        t_final: f64,
        dt: f64,
    ) -> Result<Self> {
        let p = Self {
            grid,
            drift,
            operator,
            t_final,
            dt,
            record_every: 1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) {
            return Err(Error::param("dt must be positive and T non-negative"));
        }
        if self.drift.nodes.len() != self.grid.n() {
            return Err(Error::Dimension {
                expected: self.grid.n(),
                got: self.drift.nodes.len(),
            });
        }
        if let Some(op) = &self.operator {
            if op.grid() != self.grid {
                return Err(Error::Grid("operator and problem grids differ".into()));
            }
        }
        let bmax = self.drift.max_abs();
        if bmax > 0.0 && self.dt > self.grid.h() / (2.0 * bmax) {
            return Err(Error::param(format!(
                "drift CFL violated: dt = {} > h / (2 max|b|) = {}",
                self.dt,
                self.grid.h() / (2.0 * bmax)
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    fn implicit_matrix(&self, eps: f64) -> DMatrix<f64> {
        let n = self.grid.n();
        let mut m = match &self.operator {
            Some(op) => -op.matrix() * self.dt,
            None => DMatrix::zeros(n, n),
        };
        let lap = eps * self.dt / (self.grid.h() * self.grid.h());
        for i in 0..n {
            m[(i, i)] += 1.0 + 2.0 * lap;
            if i + 1 < n {
                m[(i, i + 1)] -= lap;
                m[(i + 1, i)] -= lap;
            }
        }
        m
    }
}

/// Recorded states with finite-difference time derivatives.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid1D,
    pub eps: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// `(u^s - u^{s-1}) / dt` at each record; forward difference at `t = 0`.
    pub rates: Vec<DVector<f64>>,
}

pub const TRACE_CSV_HEADER: [&str; 4] = ["t", "l2", "h1_semi", "mass"];

impl Trajectory {
    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_CSV_HEADER).map_err(csv_err)?;
        for (t, u) in self.times.iter().zip(&self.states) {
            w.write_record([
                t.to_string(),
                self.grid.norm(u).to_string(),
                self.grid.h1_seminorm(u).to_string(),
                self.grid.mass(u).to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(())
    }

    pub fn write_wide_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.grid.nodes().iter().map(|x| format!("u({x})")));
        w.write_record(&header).map_err(csv_err)?;
        for (t, u) in self.times.iter().zip(&self.states) {
            let row = std::iter::once(t.to_string()).chain(u.iter().map(|v| v.to_string()));
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Numerical(format!("csv write failed: {e}"))
}

/// IMEX stepping `(I - dt(eps D2 + A)) u+ = u - dt (b u)_x`.
pub fn solve_viscous(problem: &FpProblem, eps: f64, u0: &DVector<f64>) -> Result<Trajectory> {
    problem.validate()?;
    if !(eps >= 0.0) {
        return Err(Error::param("viscosity must be non-negative"));
    }
    let n = problem.grid.n();
    if u0.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: u0.len(),
        });
    }
    let chol: Cholesky<f64, Dyn> = Cholesky::new(problem.implicit_matrix(eps))
        .ok_or_else(|| Error::Numerical("implicit system is not positive definite".into()))?;
    let dt = problem.dt;
    let steps = problem.steps();
    let every = problem.record_every.max(1);
    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    let mut rates = Vec::new();
    let mut u = u0.clone();
    for s in 1..=steps {
        let mut next = &u - problem.drift.upwind_div(&u) * dt;
        chol.solve_mut(&mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite state at step {s}")));
        }
        if s == 1 {
            rates.push((&next - &u) / dt);
        }
        if s % every == 0 || s == steps {
            rates.push((&next - &u) / dt);
            times.push(s as f64 * dt);
            states.push(next.clone());
        }
        u = next;
    }
    if steps == 0 {
        rates.push(DVector::zeros(n));
    }
    Ok(Trajectory {
        grid: problem.grid,
        eps,
        dt,
        times,
        states,
        rates,
    })
}

#[derive(Debug, Clone)]
pub struct VanishingViscosity {
    /// One run per viscosity, in schedule order.
    pub runs: Vec<Trajectory>,
    /// `sup_t ||u^{eps_k} - u^{eps_{k+1}}||` over the recorded times.
    pub cauchy_gaps: Vec<f64>,
    pub strictly_decreasing: bool,
}

impl VanishingViscosity {
    /// The smallest-viscosity run, taken as the limit candidate.
    pub fn limit(&self) -> &Trajectory {
        self.runs.last().expect("schedule is non-empty")
    }
}

/// Run every viscosity of the schedule from mollified data.
pub fn vanishing_viscosity(
    schedule: &ViscositySchedule,
    problem: &FpProblem,
    u0: &DVector<f64>,
) -> Result<VanishingViscosity> {
    problem.validate()?;
    let runs = schedule
        .epsilons()
        .par_iter()
        .map(|&eps| {
            let data = mollify_initial(problem.grid, u0, eps)?;
            solve_viscous(problem, eps, &data)
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = problem.grid;
    let cauchy_gaps: Vec<f64> = runs
        .windows(2)
        .map(|pair| {
            pair[0]
                .states
                .iter()
                .zip(&pair[1].states)
                .map(|(a, b)| grid.norm(&(a - b)))
                .fold(0.0, f64::max)
        })
        .collect();
    let strictly_decreasing = cauchy_gaps.windows(2).all(|w| w[1] < w[0]);
    if !strictly_decreasing {
        log::warn!("Cauchy gaps are not strictly decreasing: {cauchy_gaps:?}");
    }
    Ok(VanishingViscosity {
        runs,
        cauchy_gaps,
        strictly_decreasing,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TestFunction {
    pub id: String,
    #[serde(skip)]
    pub values: DVector<f64>,
}

/// The first `eigen` eigenvectors plus `hats` evenly spaced nodal hats.
pub fn standard_test_set(eig: &EigenDecomposition, eigen: usize, hats: usize) -> Vec<TestFunction> {
    let n = eig.n();
    let mut set: Vec<TestFunction> = (0..eigen.min(n))
        .map(|k| TestFunction {
            id: format!("eigen_{}", k + 1),
            values: eig.mode(k),
        })
        .collect();
    for j in 1..=hats {
        let node = (j * n / (hats + 1)).min(n - 1);
        let mut v = DVector::zeros(n);
        v[node] = 1.0;
        set.push(TestFunction {
            id: format!("hat_{node}"),
            values: v,
        });
    }
    set
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakResidualReport {
    pub ids: Vec<String>,
    /// Sup over recorded `t > 0` of the weak-form residual over `||phi||_{H^1}`.
    pub residuals: Vec<f64>,
    pub tolerance: Option<f64>,
}

impl WeakResidualReport {
    pub fn max(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn pass(&self) -> Option<bool> {
        self.tolerance.map(|tol| self.residuals.iter().all(|&r| r <= tol))
    }
}

/// Residual of `<u_t, phi> - int b u phi_x - <A u, phi> = 0` along a
/// trajectory, with centred drift fluxes.
pub fn weak_residual(
    traj: &Trajectory,
    drift: &Drift,
    operator: Option<&NonlocalOperator>,
    tests: &[TestFunction],
    tolerance: Option<f64>,
) -> Result<WeakResidualReport> {
    let grid = traj.grid;
    let h = grid.h();
    let mut residuals = vec![0.0f64; tests.len()];
    for s in 1..traj.states.len() {
        let u = &traj.states[s];
        let au = match operator {
            Some(op) => op.apply(u)?,
            None => DVector::zeros(u.len()),
        };
        let flux = drift.centred_fluxes(u);
        for (r, phi) in residuals.iter_mut().zip(tests) {
            let p = &phi.values;
            let n = p.len();
            let mut drift_term = 0.0;
            for f in 0..=n {
                let left = if f == 0 { 0.0 } else { p[f - 1] };
                let right = if f == n { 0.0 } else { p[f] };
                drift_term += flux[f] * (right - left);
            }
            let val = h * traj.rates[s].dot(p) - drift_term - h * au.dot(p);
            let norm = (grid.norm_sq(p) + grid.h1_seminorm(p).powi(2)).sqrt();
            *r = r.max(val.abs() / norm);
        }
    }
    Ok(WeakResidualReport {
        ids: tests.iter().map(|t| t.id.clone()).collect(),
        residuals,
        tolerance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct H1EnergyReport {
    pub eps: f64,
    /// `max_t (||u|| + ||u_x|| + ||u_t||)`
    pub max_quantity: f64,
    pub bound: f64,
    pub pass: bool,
    pub first_violation: Option<f64>,
}

/// `||u|| + ||u_x|| + ||u_t|| <= e^{C T} (||u0|| + ||u0_x|| + ||u_t(0)||)` with
/// `C = 3 (1 + sup|b'| + sup|b''|)`.
pub fn h1_energy_check(traj: &Trajectory, drift: &Drift) -> H1EnergyReport {
    let g = traj.grid;
    let c = 3.0 * (1.0 + drift.b_prime_sup + drift.b_second_sup);
    let t_end = traj.times.last().copied().unwrap_or(0.0);
    let q = |u: &DVector<f64>, r: &DVector<f64>| g.norm(u) + g.h1_seminorm(u) + g.norm(r);
    let initial = q(&traj.states[0], &traj.rates[0]);
    let bound = (c * t_end).exp() * initial;
    let mut max_quantity = 0.0f64;
    let mut first_violation = None;
    for ((t, u), r) in traj.times.iter().zip(&traj.states).zip(&traj.rates) {
        let v = q(u, r);
        max_quantity = max_quantity.max(v);
        if v > bound * (1.0 + 1e-12) && first_violation.is_none() {
            first_violation = Some(*t);
        }
    }
    H1EnergyReport {
        eps: traj.eps,
        max_quantity,
        bound,
        pass: first_violation.is_none(),
        first_violation,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub times: Vec<f64>,
    /// `d(t) = ||u_a - u_b||^2`
    pub distances: Vec<f64>,
    /// Least-squares slope of `log d` against `t` (`None` if `d` vanishes).
    pub fitted_exponent: Option<f64>,
    /// `2 sup|b'|`
    pub allowed_exponent: f64,
    pub envelope_holds: bool,
    pub pass: bool,
}

/// Run both initial data through the same discretisation and check that the
/// squared distance grows no faster than `e^{2 sup|b'| t}`.
pub fn uniqueness_check(
    problem: &FpProblem,
    eps: f64,
    u0_a: &DVector<f64>,
    u0_b: &DVector<f64>,
) -> Result<UniquenessReport> {
    let (a, b) = rayon::join(
        || solve_viscous(problem, eps, u0_a),
        || solve_viscous(problem, eps, u0_b),
    );
    let (a, b) = (a?, b?);
    let grid = problem.grid;
    let distances: Vec<f64> = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| grid.norm_sq(&(x - y)))
        .collect();
    let allowed = 2.0 * problem.drift.b_prime_sup;
    let d0 = distances[0];
    let tol = 1e-24 + 1e-12 * d0;
    let envelope_holds = a
        .times
        .iter()
        .zip(&distances)
        .all(|(t, d)| *d <= d0 * (allowed * t).exp() * (1.0 + 1e-9) + tol);
    let pts: Vec<(f64, f64)> = a
        .times
        .iter()
        .zip(&distances)
        .filter(|(_, d)| **d > 0.0)
        .map(|(t, d)| (*t, d.ln()))
        .collect();
    let fitted_exponent = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    } else {
        None
    };
    let slope_ok = fitted_exponent.is_none_or(|k| k <= allowed * 1.1 + 1e-12);
    Ok(UniquenessReport {
        times: a.times,
        distances,
        fitted_exponent,
        allowed_exponent: allowed,
        envelope_holds,
        pass: envelope_holds && slope_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigendecompose;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sine_drift(grid: Grid1D) -> Drift {
        Drift::from_profile(
            grid,
            &DriftProfile::Sine {
                amplitude: 0.5,
                frequency: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn drift_bounds_are_audited() {
        let grid = Grid1D::new(63).unwrap();
        let d = sine_drift(grid);
        assert!((d.b_prime_sup - std::f64::consts::PI).abs() < 1e-12);
        assert!((d.b_second_sup - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
        assert!(Drift::from_fn(grid, |x| 0.5 * (2.0 * std::f64::consts::PI * x).sin(), 1.0, 100.0).is_err());
        let poly = DriftProfile::Polynomial {
            coeffs: vec![0.0, 1.0, -1.0],
        };
        let d = Drift::from_profile(grid, &poly).unwrap();
        assert!((d.b_prime_sup - 1.0).abs() < 1e-12);
        assert!((d.b_second_sup - 2.0).abs() < 1e-12);
        assert!((poly.eval(0.5, 0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn schedule_validation() {
        assert!(ViscositySchedule::new(vec![]).is_err());
        assert!(ViscositySchedule::new(vec![0.5, 0.5]).is_err());
        assert!(ViscositySchedule::new(vec![2.0, 1.0]).is_err());
        assert_eq!(ViscositySchedule::dyadic(10).epsilons().len(), 11);
    }

    #[test]
    fn mollifier_contracts_and_converges() {
        let grid = Grid1D::new(127).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let u = DVector::from_fn(127, |_, _| rng.random_range(-1.0..1.0));
            let m = mollify_initial(grid, &u, 0.05).unwrap();
            assert!(grid.norm(&m) <= grid.norm(&u) * (1.0 + 1e-12));
        }
        let zero = DVector::zeros(127);
        assert_eq!(mollify_initial(grid, &zero, 0.1).unwrap(), zero);
        let u = grid.sample(|x| (std::f64::consts::PI * x).sin());
        let errs: Vec<f64> = (1..7)
            .map(|k| grid.norm(&(mollify_initial(grid, &u, 0.5f64.powi(k)).unwrap() - &u)))
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert_eq!(mollify_initial(grid, &u, 0.5 * grid.h()).unwrap(), u);
    }

    #[test]
    fn pure_nonlocal_flow_tracks_spectral_solution() {
        let op = NonlocalOperator::new(1.0, 63).unwrap();
        let eig = eigendecompose(&op).unwrap();
        let grid = op.grid();
        let dt = 1e-3;
        let problem = FpProblem::new(Drift::zero(grid), Some(op), grid, 1.0, dt).unwrap();
        let phi = eig.mode(0);
        let traj = solve_viscous(&problem, 0.0, &phi).unwrap();
        let lam = eig.gap();
        for (t, u) in traj.times.iter().zip(&traj.states) {
            let exact = &phi * (-lam * t).exp();
            assert!(grid.norm(&(u - exact)) <= 10.0 * dt * lam * t.max(dt) * grid.norm(&phi));
        }
    }

    #[test]
    fn mass_positivity_and_linearity() {
        let op = NonlocalOperator::new(1.3, 63).unwrap();
        let grid = op.grid();
        let problem = FpProblem::new(sine_drift(grid), Some(op.clone()), grid, 0.2, 1e-3).unwrap();
        let u0 = grid.sample(|x| (-(x - 0.3).powi(2) * 50.0).exp());
        let traj = solve_viscous(&problem, 0.01, &u0).unwrap();
        let masses: Vec<f64> = traj.states.iter().map(|u| grid.mass(u)).collect();
        assert!(masses.windows(2).all(|w| w[1] <= w[0] + 1e-10));
        let tol = 1e-12 * u0.amax();
        assert!(traj.states.iter().all(|u| u.min() >= -tol));

        let w = grid.sample(|x| x * (1.0 - x));
        let comb = &u0 * 2.5 + &w;
        let a = solve_viscous(&problem, 0.01, &comb).unwrap();
        let b = solve_viscous(&problem, 0.01, &w).unwrap();
        for s in 0..a.states.len() {
            let r = &a.states[s] - &traj.states[s] * 2.5 - &b.states[s];
            assert!(r.amax() <= 1e-10);
        }

        let zero = solve_viscous(&problem, 0.01, &DVector::zeros(63)).unwrap();
        assert!(zero.states.iter().all(|u| u.amax() == 0.0));

        let pure = FpProblem::new(Drift::zero(grid), Some(op), grid, 0.2, 1e-3).unwrap();
        let traj = solve_viscous(&pure, 0.0, &u0).unwrap();
        let masses: Vec<f64> = traj.states.iter().map(|u| grid.mass(u)).collect();
        assert!(masses.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn cfl_is_enforced() {
        let grid = Grid1D::new(63).unwrap();
        let err = FpProblem::new(sine_drift(grid), None, grid, 1.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }

    #[test]
    fn weak_residual_of_zero_and_first_mode() {
        let op = NonlocalOperator::new(1.0, 63).unwrap();
        let eig = eigendecompose(&op).unwrap();
        let grid = op.grid();
        let tests = standard_test_set(&eig, 10, 10);
        assert_eq!(tests.len(), 20);
        let problem = FpProblem::new(Drift::zero(grid), Some(op.clone()), grid, 0.5, 1e-3).unwrap();
        let zero = solve_viscous(&problem, 0.0, &DVector::zeros(63)).unwrap();
        let rep = weak_residual(&zero, &problem.drift, Some(&op), &tests, None).unwrap();
        assert_eq!(rep.max(), 0.0);

        // for the implicit step the discrete identity is exact
        let traj = solve_viscous(&problem, 0.0, &eig.mode(0)).unwrap();
        let rep = weak_residual(&traj, &problem.drift, Some(&op), &tests, None).unwrap();
        assert!(rep.max() < 1e-10, "{rep:?}");
    }

    #[test]
    fn vanishing_viscosity_small_grid() {
        let op = NonlocalOperator::new(1.0, 63).unwrap();
        let grid = op.grid();
        let problem = FpProblem::new(sine_drift(grid), Some(op), grid, 0.2, 1e-3)
            .unwrap()
            .with_record_every(10);
        let u0 = grid.sample(|x| (std::f64::consts::PI * x).sin());
        let vv = vanishing_viscosity(&ViscositySchedule::dyadic(4), &problem, &u0).unwrap();
        assert_eq!(vv.cauchy_gaps.len(), 4);
        assert!(vv.strictly_decreasing, "{:?}", vv.cauchy_gaps);
        let zero = vanishing_viscosity(&ViscositySchedule::dyadic(3), &problem, &DVector::zeros(63)).unwrap();
        assert!(zero.cauchy_gaps.iter().all(|&g| g == 0.0));
        for run in &vv.runs {
            assert!(h1_energy_check(run, &problem.drift).pass);
        }
    }

    #[test]
    fn uniqueness_and_stability() {
        let op = NonlocalOperator::new(1.0, 63).unwrap();
        let grid = op.grid();
        let problem = FpProblem::new(sine_drift(grid), Some(op.clone()), grid, 0.5, 1e-3).unwrap();
        let u0 = grid.sample(|x| (std::f64::consts::PI * x).sin());
        let same = uniqueness_check(&problem, 0.0, &u0, &u0).unwrap();
        assert!(same.distances.iter().all(|&d| d == 0.0));
        assert!(same.pass);
        let pert = &u0 + grid.sample(|x| 0.1 * (3.0 * std::f64::consts::PI * x).sin());
        let rep = uniqueness_check(&problem, 0.0, &u0, &pert).unwrap();
        assert!(rep.pass, "{rep:?}");
        let free = FpProblem::new(Drift::zero(grid), Some(op), grid, 0.5, 1e-3).unwrap();
        let rep = uniqueness_check(&free, 0.0, &u0, &pert).unwrap();
        assert!(rep.distances.windows(2).all(|w| w[1] <= w[0]));
    }
}
