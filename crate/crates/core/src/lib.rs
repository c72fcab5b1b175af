//! Behavioral models for power-supply rejection in Wheatstone-bridge sensor
//! front ends.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It covers:
//!
//! - [`model`]: domain types, physical constants and configuration validation
//! - [`bridge`]: closed-form statics of the stand-alone bridge
//! - [`mos`]: MOS transistor used as a voltage-controlled resistor (triode)
//! - [`closed_loop`]: small-signal algebra of the mismatch-cancelling feedback
//!   loop plus a nonlinear DC operating-point solver
//! - [`transient`]: fixed-step RK4 simulation of the four bridge topologies
//! - [`spectral`]: tone extraction, PSD estimation, PSRR measurement and
//!   noise budgets
//! - [`presets`]: the default scenarios of the canned experiments
//!
//! Units are SI throughout (Ω, V, A, F, Hz, s, K). PSRR figures that take the
//! logarithm of a signal gain in V/Ω against a supply gain in V/V depend on
//! that convention; differences between two such figures do not.
#![no_std]

extern crate alloc;

pub mod bridge;
mod circuit;
pub mod closed_loop;
mod error;
pub mod model;
pub mod mos;
pub mod presets;
pub mod spectral;
pub mod transient;

pub use error::{Error, Result, Violation};
pub use model::{
    AmpParams, BridgeParams, LnaParams, MosParams, NoiseSpec, Polarity, RcParams, SensorParams,
    SimConfig, SourceKind, SourceSpec, Target, Topology, BOLTZMANN,
};
pub use transient::{Channel, TimeSeries};

/// `20·log10(x)`.
#[inline]
pub fn db20(x: f64) -> f64 {
    20.0 * libm::log10(x)
}
