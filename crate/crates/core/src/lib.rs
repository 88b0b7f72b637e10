//! Simulation and calibration toolkit for a cross-resonance CNOT between two
//! capacitively coupled fluxonium qubits.
//!
//! Frequencies are in GHz, times in ns, coherence times in µs. Spectrum, pulse
//! and readout code is generic over `f32`/`f64`; the time-domain engine and the
//! protocols built on it run in `f64`.

pub mod benchmarking;
pub mod calibration;
pub mod dynamics;
pub mod error;
pub mod gates;
pub mod pulse;
pub mod readout;
pub mod rng;
pub mod scalar;
pub mod spectrum;

pub use error::{Error, Result};
pub use scalar::Real;

pub type FluxoniumParamsF64 = spectrum::FluxoniumParams<f64>;
pub type FluxoniumParamsF32 = spectrum::FluxoniumParams<f32>;
pub type SpectrumResultF64 = spectrum::SpectrumResult<f64>;
pub type SpectrumResultF32 = spectrum::SpectrumResult<f32>;
pub type CoupledParamsF64 = spectrum::CoupledParams<f64>;
pub type CoupledParamsF32 = spectrum::CoupledParams<f32>;
pub type DressedSystemF64 = spectrum::DressedSystem<f64>;
pub type DressedSystemF32 = spectrum::DressedSystem<f32>;
pub type PulseEnvelopeF64 = pulse::PulseEnvelope<f64>;
pub type PulseEnvelopeF32 = pulse::PulseEnvelope<f32>;
pub type ReflectionModelF64 = pulse::ReflectionModel<f64>;
pub type ReflectionModelF32 = pulse::ReflectionModel<f32>;
pub type ReadoutModelF64 = readout::ReadoutModel<f64>;
pub type ReadoutModelF32 = readout::ReadoutModel<f32>;
