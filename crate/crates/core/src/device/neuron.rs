use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::surface::{normal_cdf, DeviceSurface};
use crate::error::{Error, Result};

/// How a device's HRS evolves across Reset-Set cycles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// HRS never moves.
    #[default]
    Ideal,
    /// Fixed Reset/Set voltages, no state read-back: HRS drifts.
    FixedInput,
    /// Reset-with-verify back to `target_hrs` within a tolerance.
    Monitored,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Ideal => "ideal",
            Scheme::FixedInput => "fixed-input",
            Scheme::Monitored => "monitored",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Scheme::Ideal),
            "fixed-input" | "fixed" => Ok(Scheme::FixedInput),
            "monitored" => Ok(Scheme::Monitored),
            other => Err(Error::InvalidParameter(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Per-cycle HRS dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    /// Deterministic slope, kΩ per cycle. Sign sets the drift direction.
    pub m_hrs: f64,
    /// Random-walk standard deviation, kΩ per cycle (fixed-input only).
    pub s_rw: f64,
    /// Fractional half-width of the monitored Reset actuator.
    pub hrs_tolerance: f64,
}

impl Default for DriftModel {
    fn default() -> Self {
        DriftModel {
            m_hrs: 0.01,
            s_rw: 0.0,
            hrs_tolerance: 0.1,
        }
    }
}

impl DriftModel {
    pub fn validate(&self) -> Result<()> {
        if !self.m_hrs.is_finite() || !(self.s_rw >= 0.0) || !self.s_rw.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "drift needs finite m_hrs and s_rw >= 0, got {self:?}"
            )));
        }
        if !(self.hrs_tolerance > 0.0 && self.hrs_tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "hrs_tolerance must lie in (0, 1), got {}",
                self.hrs_tolerance
            )));
        }
        Ok(())
    }

    /// Same model with the random-walk term removed.
    pub fn linear_only(self) -> Self {
        DriftModel { s_rw: 0.0, ..self }
    }
}

/// One RRAM stochastic neuron.
#[derive(Clone, Debug)]
pub struct NeuronDevice {
    pub surface: Arc<DeviceSurface>,
    /// kΩ.
    pub hrs: f64,
    pub cycles: u64,
    /// Device-to-device shift of μ, decades.
    pub mu_offset: f64,
    pub scheme: Scheme,
    /// kΩ, used by the monitored scheme.
    pub target_hrs: f64,
    pub clamp_events: u64,
}

impl NeuronDevice {
    pub fn new(surface: Arc<DeviceSurface>, hrs: f64, scheme: Scheme) -> Self {
        let hrs = surface.clamp_hrs(hrs);
        NeuronDevice {
            surface,
            hrs,
            cycles: 0,
            mu_offset: 0.0,
            scheme,
            target_hrs: hrs,
            clamp_events: 0,
        }
    }

    pub fn with_offset(mut self, mu_offset: f64) -> Self {
        self.mu_offset = mu_offset;
        self
    }

    /// (μ_eff, σ) of log10(t_Set) at voltage `v` and the current HRS.
    pub fn lognormal_params(&self, v: f64) -> Result<(f64, f64)> {
        let (mu, sigma) = self.surface.eval(v, self.hrs)?;
        Ok((mu + self.mu_offset, sigma))
    }

    pub fn mu_eff(&self, v: f64) -> Result<f64> {
        Ok(self.surface.eval_mu(v, self.hrs)? + self.mu_offset)
    }

    /// Draws one Set time in seconds. Leaves the device untouched.
    pub fn sample_tset<R: Rng + ?Sized>(&self, v: f64, rng: &mut R) -> Result<f64> {
        let (mu, sigma) = self.lognormal_params(v)?;
        let z: f64 = StandardNormal.sample(rng);
        Ok(10f64.powf(mu + sigma * z))
    }

    /// P(t_Set <= t_pw).
    pub fn p_switch(&self, v: f64, t_pw: f64) -> Result<f64> {
        if !(t_pw > 0.0) {
            return Err(Error::NonPositivePulse(t_pw));
        }
        let (mu, sigma) = self.lognormal_params(v)?;
        Ok(normal_cdf((t_pw.log10() - mu) / sigma))
    }

    /// Same as [`p_switch`](Self::p_switch) with `log10(t_pw)` precomputed.
    #[inline]
    pub(crate) fn p_switch_log(&self, v: f64, log_tpw: f64) -> Result<f64> {
        let (mu, sigma) = self.lognormal_params(v)?;
        Ok(normal_cdf((log_tpw - mu) / sigma))
    }

    /// One Reset-Set cycle.
    pub fn apply_cycle<R: Rng + ?Sized>(&mut self, drift: &DriftModel, rng: &mut R) {
        self.cycles += 1;
        let next = match self.scheme {
            Scheme::Ideal => return,
            Scheme::FixedInput => {
                let walk = if drift.s_rw > 0.0 {
                    let z: f64 = StandardNormal.sample(rng);
                    drift.s_rw * z
                } else {
                    0.0
                };
                self.hrs + drift.m_hrs + walk
            }
            Scheme::Monitored => {
                let tol = drift.hrs_tolerance;
                self.target_hrs * (1.0 + rng.random_range(-tol..=tol))
            }
        };
        self.set_hrs(next);
    }

    fn set_hrs(&mut self, r: f64) {
        let clamped = self.surface.clamp_hrs(r);
        if clamped != r {
            self.clamp_events += 1;
        }
        self.hrs = clamped;
    }

    /// Programs the HRS so μ_eff(v_ref) lands on `mu_target`, within the
    /// actuator's multiplicative `precision`. Returns the exact solution r*.
    pub fn calibrate_hrs_for_mu<R: Rng + ?Sized>(
        &mut self,
        mu_target: f64,
        v_ref: f64,
        precision: f64,
        rng: &mut R,
    ) -> Result<f64> {
        if !(0.0..1.0).contains(&precision) {
            return Err(Error::InvalidParameter(format!(
                "precision must lie in [0, 1), got {precision}"
            )));
        }
        let r_star = self.surface.hrs_for_mu(v_ref, mu_target - self.mu_offset)?;
        let u = if precision > 0.0 {
            rng.random_range(-precision..=precision)
        } else {
            0.0
        };
        self.set_hrs(r_star * (1.0 + u));
        self.target_hrs = self.hrs;
        Ok(r_star)
    }
}
