//! Pulse-level simulation and tuning of error-divisible two-qubit gates on
//! coupled anharmonic oscillators, plus a density-matrix benchmark of an
//! adiabatic Trotter circuit under stock, continuous and error-divisible
//! gate sets.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision types used by the tuner and CLI.

pub mod circuits;
pub mod error;
pub mod metrics;
pub mod model;
pub mod propagate;
pub mod scalar;
pub mod tuner;
pub mod vqe;
pub mod waveform;

pub use error::{Error, Result};
pub use scalar::Real;

pub type DeviceParams64 = model::DeviceParams<f64>;
pub type Hamiltonian64 = model::Hamiltonian<f64>;
pub type WaveformSpec64 = waveform::WaveformSpec<f64>;
pub type EnvelopeSpec64 = waveform::EnvelopeSpec<f64>;
pub type ModulationSpec64 = waveform::ModulationSpec<f64>;
pub type PropagationSettings64 = propagate::PropagationSettings<f64>;
pub type PropagationResult64 = propagate::PropagationResult<f64>;
pub type GateTarget64 = metrics::GateTarget<f64>;
pub type ErrorReport64 = metrics::ErrorReport<f64>;
pub type NoisePolicy64 = circuits::NoisePolicy<f64>;
pub type DensityState64 = circuits::DensityState<f64>;
pub type CircuitOp64 = circuits::CircuitOp<f64>;
pub type ScheduleParams64 = vqe::ScheduleParams<f64>;
pub type BenchmarkResult64 = vqe::BenchmarkResult<f64>;
