//! Classical and uniform Gronwall checks on sampled trajectories.
//!
//! The premise `dy/dt <= g y + h` is only satisfied by sampled data up to
//! discretisation error, so every interval is tested with a tolerance of ten
//! times a local truncation estimate.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{cumulative_trapezoid, interp};

/// Time grid with samples of `y`, `g`, `h` and a window length `r`.
#[derive(Debug, Clone)]
pub struct TrajectoryTriple {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub r: f64,
}

impl TrajectoryTriple {
    pub fn new(t: Vec<f64>, y: Vec<f64>, g: Vec<f64>, h: Vec<f64>, r: f64) -> Result<Self> {
        let n = t.len();
        if n < 2 {
            return Err(Error::param("trajectory needs at least two samples"));
        }
        for (name, v) in [("y", &y), ("g", &g), ("h", &h)] {
            if v.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::param(format!("{name} contains non-finite samples")));
            }
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) || t.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("time grid must be finite and strictly increasing"));
        }
        if !(r > 0.0) {
            return Err(Error::param(format!("window length must be positive, got {r}")));
        }
        if r > t[n - 1] - t[0] + 1e-12 * (t[n - 1] - t[0]) {
            return Err(Error::param(format!(
                "window length {r} exceeds the grid span {}",
                t[n - 1] - t[0]
            )));
        }
        Ok(Self { t, y, g, h, r })
    }

    /// `y` with `g` and `h` held constant.
    pub fn with_constants(t: Vec<f64>, y: Vec<f64>, g: f64, h: f64, r: f64) -> Result<Self> {
        let n = t.len();
        Self::new(t, y, vec![g; n], vec![h; n], r)
    }

    /// Read `t,y,g,h` columns (header row required).
    pub fn from_csv(path: &Path, r: f64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        let idx = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Parse {
                    line: 1,
                    message: format!("missing column `{name}`"),
                })
        };
        let cols = [idx("t")?, idx("y")?, idx("g")?, idx("h")?];
        let mut data: [Vec<f64>; 4] = Default::default();
        for rec in reader.records() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            for (k, &c) in cols.iter().enumerate() {
                let field = rec.get(c).ok_or_else(|| Error::Parse {
                    line,
                    message: "missing field".into(),
                })?;
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{field}` is not a number"),
                })?;
                data[k].push(v);
            }
        }
        let [t, y, g, h] = data;
        Self::new(t, y, g, h, r)
    }

    fn premise_violations(&self) -> Vec<usize> {
        let n = self.t.len();
        let scale = self.y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let rhs: Vec<f64> = (0..n).map(|i| self.g[i] * self.y[i] + self.h[i]).collect();
        let quot: Vec<f64> = (0..n - 1)
            .map(|i| (self.y[i + 1] - self.y[i]) / (self.t[i + 1] - self.t[i]))
            .collect();
        let mut bad = Vec::new();
        for i in 0..n - 1 {
            let avg = 0.5 * (rhs[i] + rhs[i + 1]);
            // local truncation estimate from the variation of both sides
            let dq = if i + 1 < n - 1 {
                (quot[i + 1] - quot[i]).abs()
            } else if i > 0 {
                (quot[i] - quot[i - 1]).abs()
            } else {
                0.0
            };
            let trunc = 0.5 * (dq + (rhs[i + 1] - rhs[i]).abs());
            let tol = 10.0 * trunc + 1e-12 * scale;
            if quot[i] > avg + tol {
                bad.push(i);
            }
        }
        bad
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => Error::Parse {
            line,
            message: e.to_string(),
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicBound {
    pub t: f64,
    pub bound: f64,
    pub y: f64,
    pub holds: bool,
    /// Indices of grid intervals where the differential premise fails.
    pub premise_violations: Vec<usize>,
}

/// `y(t0) exp(int g) + int_{t0}^t h(s) exp(int_s^t g) ds`, trapezoidal.
pub fn classic_gronwall_bound(triple: &TrajectoryTriple, t: f64) -> Result<ClassicBound> {
    let ts = &triple.t;
    let last = ts.len() - 1;
    if t < ts[0] || t > ts[last] {
        return Err(Error::param(format!(
            "t = {t} outside [{}, {}]",
            ts[0], ts[last]
        )));
    }
    let big_g = cumulative_trapezoid(ts, &triple.g);
    let g_at_t = interp(ts, &big_g, t);
    // integrand h(s) exp(G(t) - G(s)) on the grid up to t
    let mut s_pts: Vec<f64> = ts.iter().copied().filter(|&s| s < t).collect();
    s_pts.push(t);
    let vals: Vec<f64> = s_pts
        .iter()
        .map(|&s| interp(ts, &triple.h, s) * (g_at_t - interp(ts, &big_g, s)).exp())
        .collect();
    let forcing = if s_pts.len() > 1 {
        *cumulative_trapezoid(&s_pts, &vals).last().unwrap()
    } else {
        0.0
    };
    let bound = triple.y[0] * g_at_t.exp() + forcing;
    let y = interp(ts, &triple.y, t);
    let premise_violations = triple.premise_violations();
    let holds = y <= bound * (1.0 + 1e-9) + 1e-12;
    Ok(ClassicBound {
        t,
        bound,
        y,
        holds,
        premise_violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowCheck {
    pub start: f64,
    pub y_end: f64,
    pub skipped: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformGronwallReport {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub r: f64,
    pub bound: f64,
    pub pass: bool,
    pub premise_ok: bool,
    pub windows: Vec<WindowCheck>,
}

/// Uniform Gronwall: `y(t+r) <= (a3/r + a2) exp(a1)` for every window start,
/// where `a1, a2, a3` are the largest window integrals of `g, h, y`.
pub fn uniform_gronwall_check(triple: &TrajectoryTriple) -> Result<UniformGronwallReport> {
    let ts = &triple.t;
    let last = ts.len() - 1;
    if triple.y.iter().chain(&triple.g).chain(&triple.h).any(|&v| v < 0.0) {
        return Err(Error::param("uniform Gronwall requires non-negative y, g, h"));
    }
    let r = triple.r;
    let cg = cumulative_trapezoid(ts, &triple.g);
    let ch = cumulative_trapezoid(ts, &triple.h);
    let cy = cumulative_trapezoid(ts, &triple.y);
    let t_end = ts[last];
    let slack = 1e-12 * (t_end - ts[0]).max(1.0);
    let starts: Vec<usize> = (0..=last).filter(|&i| ts[i] + r <= t_end + slack).collect();
    let window = |c: &[f64], a: f64| interp(ts, c, (a + r).min(t_end)) - interp(ts, c, a);
    let (mut a1, mut a2, mut a3) = (0.0f64, 0.0f64, 0.0f64);
    for &i in &starts {
        a1 = a1.max(window(&cg, ts[i]));
        a2 = a2.max(window(&ch, ts[i]));
        a3 = a3.max(window(&cy, ts[i]));
    }
    let bound = (a3 / r + a2) * a1.exp();
    let bad = triple.premise_violations();
    let premise_ok = bad.is_empty();
    let windows: Vec<WindowCheck> = starts
        .iter()
        .map(|&i| {
            let a = ts[i];
            let b = (a + r).min(t_end);
            let skipped = bad.iter().any(|&k| ts[k + 1] > a && ts[k] < b);
            let y_end = interp(ts, &triple.y, b);
            WindowCheck {
                start: a,
                y_end,
                skipped,
                pass: skipped || y_end <= bound * (1.0 + 1e-9) + 1e-300,
            }
        })
        .collect();
    let pass = windows.iter().all(|w| w.pass);
    Ok(UniformGronwallReport {
        a1,
        a2,
        a3,
        r,
        bound,
        pass,
        premise_ok,
        windows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }

    #[test]
    fn constant_trajectory_is_tight() {
        let t = grid(0.0, 2.0, 200);
        let y = vec![3.0; t.len()];
        let tr = TrajectoryTriple::with_constants(t, y, 0.0, 0.0, 1.0).unwrap();
        let cb = classic_gronwall_bound(&tr, 2.0).unwrap();
        assert_eq!(cb.bound, 3.0);
        assert!(cb.holds);
        let rep = uniform_gronwall_check(&tr).unwrap();
        assert!((rep.bound - 3.0).abs() < 1e-12);
        assert!(rep.pass && rep.premise_ok);
    }

    #[test]
    fn exponential_closed_form() {
        let t = grid(0.0, 1.0, 2000);
        let y: Vec<f64> = t.iter().map(|s| s.exp()).collect();
        let tr = TrajectoryTriple::with_constants(t, y, 1.0, 0.0, 1.0).unwrap();
        let cb = classic_gronwall_bound(&tr, 1.0).unwrap();
        assert!((cb.bound - 1f64.exp()).abs() < 1e-6);
        assert!(cb.premise_violations.is_empty());
    }

    #[test]
    fn linear_growth_with_unit_forcing() {
        let t = grid(0.0, 3.0, 300);
        let y = t.clone();
        let tr = TrajectoryTriple::with_constants(t, y, 0.0, 1.0, 1.0).unwrap();
        let cb = classic_gronwall_bound(&tr, 2.5).unwrap();
        assert!((cb.bound - 2.5).abs() < 1e-12);
        assert!(cb.holds);
    }

    #[test]
    fn premise_violation_is_flagged() {
        let t = grid(0.0, 2.0, 400);
        let y: Vec<f64> = t.iter().map(|s| (3.0 * s).exp()).collect();
        let tr = TrajectoryTriple::with_constants(t, y, 1.0, 0.0, 1.0).unwrap();
        let rep = uniform_gronwall_check(&tr).unwrap();
        assert!(!rep.premise_ok);
        assert!(rep.windows.iter().all(|w| w.skipped));
    }

    #[test]
    fn window_longer_than_span_is_rejected() {
        let t = grid(0.0, 0.5, 10);
        let y = vec![1.0; 11];
        assert!(matches!(
            TrajectoryTriple::with_constants(t, y, 0.0, 0.0, 1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn larger_forcing_never_lowers_bound() {
        let t = grid(0.0, 3.0, 300);
        let y: Vec<f64> = t.iter().map(|s| 1.0 + (-s).exp()).collect();
        let lo = TrajectoryTriple::with_constants(t.clone(), y.clone(), 0.2, 0.1, 1.0).unwrap();
        let hi = TrajectoryTriple::with_constants(t, y, 0.2, 0.4, 1.0).unwrap();
        let b_lo = uniform_gronwall_check(&lo).unwrap().bound;
        let b_hi = uniform_gronwall_check(&hi).unwrap().bound;
        assert!(b_hi >= b_lo);
    }

    #[test]
    fn monotone_input_reduces_to_window_average() {
        // g = h = 0 and y non-increasing: the bound is the largest window mean
        let t = grid(0.0, 4.0, 400);
        let y: Vec<f64> = t.iter().map(|s| 2.0 / (1.0 + s)).collect();
        let tr = TrajectoryTriple::with_constants(t, y.clone(), 0.0, 0.0, 1.0).unwrap();
        let rep = uniform_gronwall_check(&tr).unwrap();
        assert_eq!(rep.a1, 0.0);
        assert_eq!(rep.a2, 0.0);
        // first window has the largest mean
        let first: f64 = cumulative_trapezoid(&tr.t[..=100], &y[..=100])[100];
        assert!((rep.bound - first).abs() < 1e-14);
        assert!(rep.pass);
    }
}
