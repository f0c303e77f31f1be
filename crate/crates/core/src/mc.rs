//! Monte Carlo oracle: the killed SDE `dX = b(X) dt + dL^alpha` on (0,1),
//! whose law solves the nonlocal Fokker-Planck equation with `u = 0` outside.
//!
//! The driver is the standard symmetric stable process with
//! `E exp(i k L_t) = exp(-t |k|^alpha)`, whose generator is exactly
//! `-(-Delta)^{alpha/2}`; at `alpha = 2` this is Brownian motion with
//! variance `2t`, i.e. generator `d^2/dx^2`.

use std::io::Write;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fp::{csv_err, Drift};
use crate::nonlocal::Grid1D;

/// Paths per independent RNG stream.
pub const BLOCK_PATHS: usize = 4096;

#[derive(Debug, Clone)]
pub struct StableSimConfig {
    pub alpha: f64,
    pub drift: Drift,
    pub n_paths: usize,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub bins: usize,
}

impl StableSimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::param(format!("alpha must lie in (0, 2], got {}", self.alpha)));
        }
        if self.n_paths < 1000 {
            return Err(Error::param("need at least 1000 paths"));
        }
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) {
            return Err(Error::param("dt must be positive and T non-negative"));
        }
        if self.bins < 16 {
            return Err(Error::param("need at least 16 histogram bins"));
        }
        Ok(())
    }
}

/// One symmetric stable variate with unit scale (Chambers-Mallows-Stuck).
fn standard_stable<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    let v = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break std::f64::consts::PI * (u - 0.5);
        }
    };
    if alpha == 1.0 {
        return v.tan();
    }
    let w = loop {
        let u: f64 = rng.random();
        let w = -(1.0 - u).ln();
        if w > 0.0 {
            break w;
        }
    };
    if alpha == 2.0 {
        return 2.0 * v.sin() * w.sqrt();
    }
    (alpha * v).sin() / v.cos().powf(1.0 / alpha)
        * ((v - alpha * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Increment of the stable driver over a step `dt`: `dt^{1/alpha} X`.
pub fn sample_stable_increment<R: Rng>(alpha: f64, dt: f64, rng: &mut R) -> f64 {
    dt.powf(1.0 / alpha) * standard_stable(alpha, rng)
}

/// Piecewise-linear density through the nodes, zero at 0 and 1.
struct LinearDensity {
    x: Vec<f64>,
    v: Vec<f64>,
    cdf: Vec<f64>,
}

impl LinearDensity {
    fn new(grid: Grid1D, values: &DVector<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::Dimension {
                expected: grid.n(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::param("initial density must be non-negative"));
        }
        let mut x = vec![0.0];
        x.extend(grid.nodes());
        x.push(1.0);
        let mut v = vec![0.0];
        v.extend(values.iter());
        v.push(0.0);
        let mut cdf = vec![0.0];
        for j in 0..x.len() - 1 {
            let last = cdf[j];
            cdf.push(last + 0.5 * (x[j + 1] - x[j]) * (v[j] + v[j + 1]));
        }
        let total = *cdf.last().unwrap();
        if !(total > 0.0) {
            return Err(Error::param("initial density has zero mass"));
        }
        Ok(Self { x, v, cdf })
    }

    fn total(&self) -> f64 {
        *self.cdf.last().unwrap()
    }

    /// Integral of the interpolant over `[0, s]`.
    fn cumulative(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return self.total();
        }
        let j = self.x.partition_point(|&p| p <= s) - 1;
        let d = s - self.x[j];
        let slope = (self.v[j + 1] - self.v[j]) / (self.x[j + 1] - self.x[j]);
        self.cdf[j] + self.v[j] * d + 0.5 * slope * d * d
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let target = rng.random::<f64>() * self.total();
        let j = (self.cdf.partition_point(|&c| c <= target).max(1) - 1).min(self.x.len() - 2);
        let (a, b) = (self.v[j], self.v[j + 1]);
        let width = self.x[j + 1] - self.x[j];
        let local = ((target - self.cdf[j]) / (0.5 * width * (a + b))).clamp(0.0, 1.0);
        // invert a s + (b - a) s^2 / 2 = local (a + b) / 2 on [0, 1]
        let s = if (b - a).abs() <= 1e-12 * (a + b) {
            local
        } else {
            (-a + (a * a + (b * b - a * a) * local).max(0.0).sqrt()) / (b - a)
        };
        self.x[j] + width * s.clamp(0.0, 1.0)
    }
}

/// Linear interpolation of the drift through its node and face samples.
struct DriftField {
    x: Vec<f64>,
    b: Vec<f64>,
}

impl DriftField {
    fn new(drift: &Drift) -> Self {
        let n = drift.nodes.len();
        let h = 1.0 / (n as f64 + 1.0);
        let mut x = Vec::with_capacity(2 * n + 1);
        let mut b = Vec::with_capacity(2 * n + 1);
        for f in 0..=n {
            x.push((f as f64 + 0.5) * h);
            b.push(drift.faces[f]);
            if f < n {
                x.push((f as f64 + 1.0) * h);
                b.push(drift.nodes[f]);
            }
        }
        Self { x, b }
    }

    fn is_zero(&self) -> bool {
        self.b.iter().all(|&v| v == 0.0)
    }

    fn eval(&self, s: f64) -> f64 {
        let last = self.x.len() - 1;
        if s <= self.x[0] {
            return self.b[0];
        }
        if s >= self.x[last] {
            return self.b[last];
        }
        let j = self.x.partition_point(|&p| p <= s) - 1;
        let w = (s - self.x[j]) / (self.x[j + 1] - self.x[j]);
        self.b[j] + w * (self.b[j + 1] - self.b[j])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KilledEnsemble {
    /// Final positions of surviving paths, all strictly inside (0,1).
    pub positions: Vec<f64>,
    pub n_paths: usize,
    pub survivors: usize,
    pub survival_fraction: f64,
}

impl KilledEnsemble {
    /// Binomial standard error of the survival fraction.
    pub fn survival_standard_error(&self) -> f64 {
        let p = self.survival_fraction;
        (p * (1.0 - p) / self.n_paths as f64).sqrt()
    }
}

/// Euler scheme with stable increments; a path dies at the first step
/// whose post-jump position lies outside (0,1).
pub fn simulate_killed(
    cfg: &StableSimConfig,
    grid: Grid1D,
    initial_density: &DVector<f64>,
) -> Result<KilledEnsemble> {
    cfg.validate()?;
    let density = LinearDensity::new(grid, initial_density)?;
    let drift = DriftField::new(&cfg.drift);
    let driftless = drift.is_zero();
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let scale = cfg.dt.powf(1.0 / cfg.alpha);
    let blocks = cfg.n_paths.div_ceil(BLOCK_PATHS);
    let per_block: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(block as u64);
            let count = BLOCK_PATHS.min(cfg.n_paths - block * BLOCK_PATHS);
            let mut alive = Vec::with_capacity(count);
            'path: for _ in 0..count {
                let mut x = density.sample(&mut rng);
                for _ in 0..steps {
                    let push = if driftless { 0.0 } else { drift.eval(x) * cfg.dt };
                    x += push + scale * standard_stable(cfg.alpha, &mut rng);
                    if !(x > 0.0 && x < 1.0) {
                        continue 'path;
                    }
                }
                alive.push(x);
            }
            alive
        })
        .collect();
    let positions: Vec<f64> = per_block.into_iter().flatten().collect();
    let survivors = positions.len();
    Ok(KilledEnsemble {
        positions,
        n_paths: cfg.n_paths,
        survivors,
        survival_fraction: survivors as f64 / cfg.n_paths as f64,
    })
}

/// Sub-probability masses of the survivors on `bins` equal bins of (0,1).
pub fn histogram(ensemble: &KilledEnsemble, bins: usize) -> Vec<f64> {
    let mut counts = vec![0usize; bins];
    for &x in &ensemble.positions {
        let k = ((x * bins as f64) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / ensemble.n_paths as f64)
        .collect()
}

pub fn write_histogram_csv<W: Write>(masses: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_left", "bin_right", "mass"]).map_err(csv_err)?;
    let m = masses.len() as f64;
    for (k, mass) in masses.iter().enumerate() {
        w.write_record([
            (k as f64 / m).to_string(),
            ((k + 1) as f64 / m).to_string(),
            mass.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(())
}

/// Masses of the piecewise-linear interpolant of `field` on equal bins,
/// divided by `reference_mass`.
pub fn pde_bin_masses(
    grid: Grid1D,
    field: &DVector<f64>,
    reference_mass: f64,
    bins: usize,
) -> Result<Vec<f64>> {
    if !(reference_mass > 0.0) {
        return Err(Error::param("reference mass must be positive"));
    }
    let clipped = field.map(|v| v.max(0.0));
    let dens = LinearDensity::new(grid, &clipped).or_else(|e| match e {
        Error::Parameter(_) => Ok(LinearDensity {
            x: vec![0.0, 1.0],
            v: vec![0.0, 0.0],
            cdf: vec![0.0, 0.0],
        }),
        other => Err(other),
    })?;
    Ok((0..bins)
        .map(|k| {
            let a = k as f64 / bins as f64;
            let b = (k + 1) as f64 / bins as f64;
            (dens.cumulative(b) - dens.cumulative(a)) / reference_mass
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityComparison {
    pub l1: f64,
    pub mc_survival: f64,
    pub pde_survival: f64,
    pub survival_standard_error: f64,
    /// `|mc - pde| <= 3 SE + 0.01`
    pub survival_agrees: bool,
    pub mc_bins: Vec<f64>,
    pub pde_bins: Vec<f64>,
}

/// Compare the survivor histogram with the PDE field at the same time,
/// normalised by the initial PDE mass.
pub fn compare_density(
    ensemble: &KilledEnsemble,
    grid: Grid1D,
    pde_field: &DVector<f64>,
    initial_mass: f64,
    bins: usize,
) -> Result<DensityComparison> {
    if ensemble.n_paths == 0 || ensemble.survivors == 0 {
        return Err(Error::Numerical(
            "degenerate comparison: the ensemble has no surviving paths".into(),
        ));
    }
    if pde_field.len() != grid.n() {
        return Err(Error::Dimension {
            expected: grid.n(),
            got: pde_field.len(),
        });
    }
    let mc_bins = histogram(ensemble, bins);
    let pde_bins = pde_bin_masses(grid, pde_field, initial_mass, bins)?;
    let l1 = mc_bins.iter().zip(&pde_bins).map(|(a, b)| (a - b).abs()).sum();
    let pde_survival = grid.mass(pde_field) / initial_mass;
    let se = ensemble.survival_standard_error();
    Ok(DensityComparison {
        l1,
        mc_survival: ensemble.survival_fraction,
        pde_survival,
        survival_standard_error: se,
        survival_agrees: (ensemble.survival_fraction - pde_survival).abs() <= 3.0 * se + 0.01,
        mc_bins,
        pde_bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlocal::{smallest_eigenvalue, NonlocalOperator};

    fn config(alpha: f64, t: f64, seed: u64) -> StableSimConfig {
        StableSimConfig {
            alpha,
            drift: Drift::zero(Grid1D::new(63).unwrap()),
            n_paths: 20_000,
            dt: 1e-3,
            t_final: t,
            seed,
            bins: 32,
        }
    }

    fn sine(grid: Grid1D) -> DVector<f64> {
        grid.sample(|x| (std::f64::consts::PI * x).sin())
    }

    #[test]
    fn symmetric_median() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let positive = (0..n)
            .filter(|_| sample_stable_increment(1.3, 0.01, &mut rng) > 0.0)
            .count() as f64;
        assert!((positive - 0.5 * n as f64).abs() <= 3.0 * 0.5 * (n as f64).sqrt());
    }

    #[test]
    fn gaussian_reduction_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dt = 0.01;
        let n = 1_000_000;
        let var = (0..n)
            .map(|_| sample_stable_increment(2.0, dt, &mut rng).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((var / (2.0 * dt) - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn general_formula_matches_special_cases() {
        // alpha close to the special values must agree with them in law;
        // check the quantile of |X| at 3/4 against the Cauchy value tan(3 pi/8)
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut xs: Vec<f64> = (0..200_000)
            .map(|_| standard_stable(0.999_999, &mut rng).abs())
            .collect();
        xs.sort_by(f64::total_cmp);
        let q = xs[150_000];
        assert!((q / (3.0 * std::f64::consts::PI / 8.0).tan() - 1.0).abs() < 0.02);
    }

    #[test]
    fn hill_tail_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let alpha = 1.2;
        let mut xs: Vec<f64> = (0..1_000_000)
            .map(|_| standard_stable(alpha, &mut rng).abs())
            .collect();
        xs.sort_by(|a, b| b.total_cmp(a));
        let k = xs.len() / 100;
        let base = xs[k].ln();
        let hill = k as f64 / xs[..k].iter().map(|x| x.ln() - base).sum::<f64>();
        assert!((hill - alpha).abs() <= 0.15, "hill estimate {hill}");
    }

    #[test]
    fn zero_time_keeps_everyone() {
        let grid = Grid1D::new(63).unwrap();
        let mut spike = DVector::zeros(63);
        spike[31] = 1.0;
        let ens = simulate_killed(&config(1.0, 0.0, 1), grid, &spike).unwrap();
        assert_eq!(ens.survivors, ens.n_paths);
        assert!(ens.positions.iter().all(|&x| (x - 0.5).abs() < grid.h()));
    }

    #[test]
    fn survival_decreases_with_time_and_alpha() {
        let grid = Grid1D::new(63).unwrap();
        let u0 = sine(grid);
        let fr: Vec<f64> = [0.1, 0.2, 0.4]
            .iter()
            .map(|&t| simulate_killed(&config(1.5, t, 7), grid, &u0).unwrap().survival_fraction)
            .collect();
        assert!(fr[0] > fr[1] && fr[1] > fr[2], "{fr:?}");
        // on the unit interval the killing rate follows the principal
        // eigenvalue, which grows with alpha for the |k|^alpha normalisation
        let lam = |a: f64| smallest_eigenvalue(&NonlocalOperator::new(a, 63).unwrap()).unwrap();
        assert!(lam(1.1) < lam(1.9));
        let heavy = simulate_killed(&config(1.1, 0.2, 7), grid, &u0).unwrap();
        let light = simulate_killed(&config(1.9, 0.2, 7), grid, &u0).unwrap();
        assert!(heavy.survival_fraction > light.survival_fraction);
        assert!(heavy.positions.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let grid = Grid1D::new(63).unwrap();
        let u0 = sine(grid);
        let a = simulate_killed(&config(1.0, 0.05, 42), grid, &u0).unwrap();
        let b = simulate_killed(&config(1.0, 0.05, 42), grid, &u0).unwrap();
        assert_eq!(a.positions, b.positions);
        let c = simulate_killed(&config(1.0, 0.05, 43), grid, &u0).unwrap();
        assert_ne!(a.positions, c.positions);
    }

    #[test]
    fn initial_sampling_matches_density() {
        let grid = Grid1D::new(63).unwrap();
        let u0 = sine(grid);
        let ens = simulate_killed(&config(1.0, 0.0, 3), grid, &u0).unwrap();
        let cmp = compare_density(&ens, grid, &u0, grid.mass(&u0), 32).unwrap();
        assert!(cmp.l1 < 0.03, "{}", cmp.l1);
        assert!((cmp.pde_survival - 1.0).abs() < 1e-12);
        assert!(cmp.survival_agrees);
    }

    #[test]
    fn bin_masses_of_interpolant_are_exact() {
        let grid = Grid1D::new(15).unwrap();
        let u = DVector::from_element(15, 1.0);
        let m = pde_bin_masses(grid, &u, 1.0, 16).unwrap();
        // trapezoid ramps of width h at each end, flat in between
        let total: f64 = m.iter().sum();
        assert!((total - grid.mass(&u)).abs() < 1e-14);
        assert!((m[7] - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        let grid = Grid1D::new(63).unwrap();
        let mut cfg = config(1.0, 0.1, 0);
        assert!(simulate_killed(&cfg, grid, &DVector::zeros(63)).is_err());
        cfg.n_paths = 10;
        assert!(simulate_killed(&cfg, grid, &sine(grid)).is_err());
        let empty = KilledEnsemble {
            positions: vec![],
            n_paths: 1000,
            survivors: 0,
            survival_fraction: 0.0,
        };
        assert!(compare_density(&empty, grid, &sine(grid), 1.0, 32).is_err());
    }
}
