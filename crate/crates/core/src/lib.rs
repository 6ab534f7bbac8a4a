//! Numerical core for amplitude-equation reduction of a cubic SPDE with
//! multiplicative noise near a change of stability.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs: spectral representation of `H^alpha`, the
//! Ginzburg–Landau / Allen–Cahn model instance, counter-based Wiener
//! increments, the exponential Euler–Maruyama solver for the full equation,
//! the Euler–Maruyama solver for the reduced amplitude SDE, and the
//! diagnostics that turn trajectories into scaling verdicts.
//!
//! IO, configuration files, and parallel orchestration live in the `ampred`
//! companion crate.
#![no_std]
#![deny(missing_debug_implementations)]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod model;
pub mod noise;
pub mod solver;
pub mod spectral;
pub mod transform;

pub use error::{Error, Result};
pub use model::{ModelSpec, NoiseConvention, NoiseSpectrum, ReducedCoefficients};
pub use noise::{NoisePath, ReducedPath};
pub use solver::{AmplitudeSeries, SolverConfig, StepPlan, TrajectoryRecord};
pub use spectral::{SpectralField, SpectrumSpec};
