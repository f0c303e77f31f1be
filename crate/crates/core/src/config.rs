//! JSON run configuration. Keys are flat; unknown keys are rejected.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::{Drift, DriftProfile, ViscositySchedule};
use crate::gl::{CustomNonlinearity, GlConfig, Nonlinearity};
use crate::nonlocal::Grid1D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Gl,
    Fp,
    /// The nonlocal heat flow `u_t = A u`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    Zero,
    Cubic,
    CubicQuadratic,
    LinearForced,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPreset {
    /// `initial_amplitude * sin(initial_mode * pi x)`
    Sine,
    Zero,
    /// `initial_amplitude * exp(-50 (x - 1/2)^2)`
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftPreset {
    Zero,
    /// `drift_amplitude * sin(2 pi drift_frequency x)`
    Sine,
    /// `sum drift_coeffs[k] x^k`
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryFormat {
    /// `t, l2, h1_semi, mass`
    Trace,
    /// `t` followed by every nodal value
    Wide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub equation: Equation,
    pub alpha: f64,
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,

    pub initial: InitialPreset,
    pub initial_amplitude: f64,
    pub initial_mode: u32,

    pub nonlinearity: NonlinearityKind,
    /// Amplitude of the forcing `f = forcing_amplitude * sin(pi x)`.
    pub forcing_amplitude: f64,
    /// CSV with columns `xi,f` for the custom reaction term.
    pub custom_table: Option<PathBuf>,
    pub custom_c: f64,
    pub custom_p: f64,

    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub ball_radius: Option<f64>,
    pub t_local: f64,
    pub record_every: usize,

    pub drift: DriftPreset,
    pub drift_amplitude: f64,
    pub drift_frequency: f64,
    pub drift_coeffs: Vec<f64>,
    /// Explicit viscosities; when absent `2^{-k}`, `k = 0..=viscosity_levels`.
    pub viscosities: Option<Vec<f64>>,
    pub viscosity_levels: usize,
    pub trajectory_format: TrajectoryFormat,

    pub n_paths: usize,
    pub mc_dt: f64,
    pub bins: usize,
    /// Wide-format trajectory CSV whose last row is the PDE comparison field.
    pub pde_run: Option<PathBuf>,

    pub gronwall_csv: Option<PathBuf>,
    pub gronwall_r: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            equation: Equation::Gl,
            alpha: 1.0,
            n: 255,
            dt: 1e-3,
            t_final: 10.0,
            seed: 0,
            output_dir: None,
            initial: InitialPreset::Sine,
            initial_amplitude: 1.0,
            initial_mode: 1,
            nonlinearity: NonlinearityKind::Cubic,
            forcing_amplitude: 1.0,
            custom_table: None,
            custom_c: 1.0,
            custom_p: 4.0,
            picard_tol: 1e-10,
            picard_max_iters: 200,
            ball_radius: None,
            t_local: 1.0,
            record_every: 1,
            drift: DriftPreset::Sine,
            drift_amplitude: 0.5,
            drift_frequency: 1.0,
            drift_coeffs: Vec::new(),
            viscosities: None,
            viscosity_levels: 10,
            trajectory_format: TrajectoryFormat::Trace,
            n_paths: 200_000,
            mc_dt: 1e-4,
            bins: 32,
            pde_run: None,
            gronwall_csv: None,
            gronwall_r: 1.0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::Config(format!(
                "alpha must lie in the open interval (0, 2), got {}",
                self.alpha
            )));
        }
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) {
            return Err(Error::Config("dt must be positive and t_final non-negative".into()));
        }
        if !(self.mc_dt > 0.0) || self.bins < 16 || self.record_every == 0 {
            return Err(Error::Config(
                "mc_dt must be positive, bins >= 16 and record_every >= 1".into(),
            ));
        }
        if self.nonlinearity == NonlinearityKind::Custom && self.custom_table.is_none() {
            return Err(Error::Config("custom nonlinearity needs custom_table".into()));
        }
        if self.drift == DriftPreset::Polynomial && self.drift_coeffs.is_empty() {
            return Err(Error::Config("polynomial drift needs drift_coeffs".into()));
        }
        if let Some(eps) = &self.viscosities {
            if eps.is_empty() {
                return Err(Error::Config("viscosity schedule is empty".into()));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.n)
    }

    pub fn initial_field(&self) -> Result<DVector<f64>> {
        let grid = self.grid()?;
        let a = self.initial_amplitude;
        let k = self.initial_mode as f64;
        Ok(match self.initial {
            InitialPreset::Zero => DVector::zeros(self.n),
            InitialPreset::Sine => grid.sample(|x| a * (k * std::f64::consts::PI * x).sin()),
            InitialPreset::Bump => grid.sample(|x| a * (-50.0 * (x - 0.5).powi(2)).exp()),
        })
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        if self.equation == Equation::Linear {
            return Ok(Nonlinearity::Zero);
        }
        Ok(match self.nonlinearity {
            NonlinearityKind::Zero => Nonlinearity::Zero,
            NonlinearityKind::Cubic => Nonlinearity::Cubic,
            NonlinearityKind::CubicQuadratic => Nonlinearity::CubicQuadratic,
            NonlinearityKind::LinearForced => {
                let a = self.forcing_amplitude;
                Nonlinearity::LinearForced {
                    forcing: self.grid()?.sample(|x| a * (std::f64::consts::PI * x).sin()),
                }
            }
            NonlinearityKind::Custom => {
                let path = self.custom_table.as_ref().expect("validated");
                let (xi, f) = read_two_columns(path)?;
                Nonlinearity::Custom(CustomNonlinearity::new(xi, f, self.custom_c, self.custom_p)?)
            }
        })
    }

    pub fn gl_config(&self) -> GlConfig {
        GlConfig {
            t_final: self.t_final,
            dt: self.dt,
            picard_tol: self.picard_tol,
            picard_max_iters: self.picard_max_iters,
            ball_radius: self.ball_radius,
            t_local: self.t_local,
            record_every: self.record_every,
            seed: self.seed,
            ..GlConfig::default()
        }
    }

    pub fn drift_profile(&self) -> DriftProfile {
        match self.drift {
            DriftPreset::Zero => DriftProfile::Zero,
            DriftPreset::Sine => DriftProfile::Sine {
                amplitude: self.drift_amplitude,
                frequency: self.drift_frequency,
            },
            DriftPreset::Polynomial => DriftProfile::Polynomial {
                coeffs: self.drift_coeffs.clone(),
            },
        }
    }

    pub fn drift(&self) -> Result<Drift> {
        Drift::from_profile(self.grid()?, &self.drift_profile())
    }

    pub fn schedule(&self) -> Result<ViscositySchedule> {
        match &self.viscosities {
            Some(eps) => ViscositySchedule::new(eps.clone()),
            None => Ok(ViscositySchedule::dyadic(self.viscosity_levels)),
        }
    }
}

/// Two-column numeric CSV with a header row.
fn read_two_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let get = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("missing column {k}"),
                })?
                .trim()
                .parse()
                .map_err(|e| Error::Parse {
                    line,
                    message: format!("{e}"),
                })
        };
        a.push(get(0)?);
        b.push(get(1)?);
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(RunConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_and_bad_alpha_are_rejected() {
        let err = RunConfig::from_json(r#"{"alpah": 1.0}"#).unwrap_err();
        assert!(err.to_string().contains("alpah"));
        let err = RunConfig::from_json(r#"{"alpha": 2.5}"#).unwrap_err();
        assert!(err.to_string().contains("(0, 2)"));
        assert_eq!(err.exit_code(), 2);
        assert!(RunConfig::from_json(r#"{"viscosities": []}"#).is_err());
    }

    #[test]
    fn presets_build() {
        let cfg = RunConfig::from_json(
            r#"{"equation": "linear", "n": 31, "initial": "sine", "initial_amplitude": 10.0, "initial_mode": 3}"#,
        )
        .unwrap();
        assert!(matches!(cfg.nonlinearity().unwrap(), Nonlinearity::Zero));
        let u = cfg.initial_field().unwrap();
        assert!((u.amax() - 10.0).abs() < 0.1);
        assert_eq!(cfg.schedule().unwrap().epsilons().len(), 11);
        assert!((cfg.drift().unwrap().b_prime_sup - std::f64::consts::PI).abs() < 1e-12);
    }
}
