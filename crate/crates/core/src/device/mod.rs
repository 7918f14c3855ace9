//! The PCMO-RRAM stochastic neuron.
//!
//! The Set time of a device is lognormal: `log10(t_Set)` is normal with mean
//! μ and standard deviation σ, both bi-quadratic functions of the applied
//! `|V_Set|` and the device's internal state (its HRS before Set). A neuron
//! "fires" when the device sets within the pulse width `t_pw`, so the
//! activation is `Φ((log10 t_pw − μ_eff) / σ)`.
//!
//! HRS evolves per Reset-Set cycle according to a [`Scheme`]: unchanged
//! (ideal), drifting under fixed electrical inputs, or restored to a target
//! by a monitored Reset actuator.

mod fit;
mod neuron;
mod params;
mod surface;

pub use fit::{fit_surface, FitOptions, Measurement, SurfaceFit};
pub use neuron::{DriftModel, NeuronDevice, Scheme};
pub use params::{sha256_hex, DeviceParams, PARAMS_ENV};
pub use surface::{normal_cdf, BiQuadratic, DeviceSurface, HrsAxis};
