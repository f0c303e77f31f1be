//! Nonlocal Ginzburg-Landau and Fokker-Planck equations on (0,1) with the
//! exterior condition `u = 0`, solved on a uniform grid and checked against
//! their energy and Gronwall estimates.

pub mod acceptance;
pub mod cli;
pub mod config;
pub mod error;
pub mod fp;
pub mod gl;
pub mod gronwall;
pub mod mc;
pub mod nonlocal;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
