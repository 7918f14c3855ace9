//! Stochastic-annealing Max-Cut solver on simulated PCMO-RRAM neurons.
//!
//! * [`device`]: lognormal Set-time model, surface fitting, HRS drift schemes.
//! * [`maxcut`]: instances and the integer Boltzmann energy form.
//! * [`sampler`]: Gibbs sampling driven by device firing probabilities.
//! * [`experiments`]: drift, scaling and variability studies.
//! * [`io`]: instance files, registries, result tables and manifests.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod device;
pub mod error;
pub mod experiments;
pub mod io;
pub mod maxcut;
pub mod sampler;
pub mod stats;

pub use device::{DeviceParams, DeviceSurface, DriftModel, HrsAxis, NeuronDevice, Scheme};
pub use error::{Error, Result};
pub use maxcut::{BoltzmannForm, Configuration, Edge, MaxCutInstance};
pub use sampler::{BoltzmannConfig, RunTrace};
