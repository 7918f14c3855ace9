//! Boltzmann-machine sampling with device-backed stochastic neurons.
//!
//! Every iteration one unit `i` is picked, its local field `u_i` is scaled
//! and shifted onto the device's Set-voltage window, and the device attempts
//! a Set within `t_pw`. The outcome is assigned to `x_i` (Gibbs assignment,
//! not a flip), the fields are updated incrementally, and the device goes
//! through one Reset-Set cycle of its scheme.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{DeviceSurface, DriftModel, NeuronDevice, Scheme};
use crate::error::{Error, Result};
use crate::maxcut::{BoltzmannForm, Configuration, MaxCutInstance};
use crate::stats;

/// Independent random streams of one run. Keeping them apart means paired
/// runs (same seed, different scheme or offsets) see identical unit picks
/// and Bernoulli draws.
#[derive(Clone, Copy, Debug)]
enum Stream {
    Sampling = 0,
    Offsets = 1,
    Calibration = 2,
    Cycling = 3,
    Init = 4,
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed of run `index` under `seed`: two SplitMix64 finalisations,
/// so children are independent of evaluation order and platform.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Source of the firing probability.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Activation {
    /// RRAM Set attempt: `P = Φ((log10 t_pw − μ_eff(v, HRS)) / σ(v, HRS))`.
    #[default]
    Device,
    /// `P = 1 / (1 + exp(−u / temperature))`, bypassing the device model.
    Logistic { temperature: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Uniform with replacement.
    #[default]
    Random,
    RoundRobin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoltzmannConfig {
    /// Volts.
    pub v_center: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Volts per unit of normalised field `u / u_scale`.
    pub gain: f64,
    /// Optional linear gain schedule end point; off by default.
    pub gain_final: Option<f64>,
    /// Seconds; defaults to the centred pulse width at the nominal HRS.
    pub t_pw: Option<f64>,
    pub max_iters: u64,
    pub runs: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub drift: DriftModel,
    /// Fractional standard deviation of per-device μ offsets, relative to `|mu_target|`.
    pub d2d_cv: f64,
    pub calibrate: bool,
    /// Nominal μ at `v_center`, decades. Sets the nominal HRS and calibration target.
    pub mu_target: f64,
    /// Multiplicative precision of the HRS calibration actuator.
    pub calibration_precision: f64,
    pub convergence_fraction: f64,
    /// Fail with `MissingBestKnown` rather than skipping convergence detection.
    pub require_best_known: bool,
    pub selection: Selection,
    pub activation: Activation,
    /// Iterations between recorded energies. Default: 1 for n <= 512, n above.
    pub trace_stride: Option<u64>,
    /// Moving-average width in iterations. Default: 2% of `max_iters`.
    pub smoothing_window: Option<u64>,
}

impl Default for BoltzmannConfig {
    fn default() -> Self {
        BoltzmannConfig {
            v_center: 1.8,
            v_min: 1.6,
            v_max: 2.2,
            gain: 1.0,
            gain_final: None,
            t_pw: None,
            max_iters: 100_000,
            runs: 25,
            seed: 1,
            scheme: Scheme::Ideal,
            drift: DriftModel::default(),
            d2d_cv: 0.0,
            calibrate: false,
            mu_target: -5.0,
            calibration_precision: 0.2,
            convergence_fraction: 0.9,
            require_best_known: false,
            selection: Selection::Random,
            activation: Activation::Device,
            trace_stride: None,
            smoothing_window: None,
        }
    }
}

impl BoltzmannConfig {
    pub fn validate(&self, surface: &DeviceSurface) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.v_min <= self.v_center && self.v_center <= self.v_max) {
            return bad(format!(
                "need v_min <= v_center <= v_max, got {} / {} / {}",
                self.v_min, self.v_center, self.v_max
            ));
        }
        if self.v_min < surface.v_range[0] || self.v_max > surface.v_range[1] {
            return bad(format!(
                "voltage window [{}, {}] exceeds device range {:?}",
                self.v_min, self.v_max, surface.v_range
            ));
        }
        if !(self.gain > 0.0) || self.gain_final.is_some_and(|g| !(g > 0.0)) {
            return bad("gain must be > 0".into());
        }
        if !(self.convergence_fraction > 0.0 && self.convergence_fraction <= 1.0) {
            return bad(format!(
                "convergence_fraction must lie in (0, 1], got {}",
                self.convergence_fraction
            ));
        }
        if self.t_pw.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::NonPositivePulse(self.t_pw.unwrap_or(0.0)));
        }
        if !(self.d2d_cv >= 0.0) {
            return bad("d2d_cv must be >= 0".into());
        }
        if let Activation::Logistic { temperature } = self.activation {
            if !(temperature > 0.0) {
                return bad("logistic temperature must be > 0".into());
            }
        }
        if self.trace_stride == Some(0) {
            return bad("trace_stride must be >= 1".into());
        }
        self.drift.validate()
    }

    /// HRS at which a zero-offset device has μ = `mu_target` at `v_center`.
    pub fn nominal_hrs(&self, surface: &DeviceSurface) -> Result<f64> {
        surface.hrs_for_mu(self.v_center, self.mu_target)
    }

    pub fn pulse_width(&self, surface: &DeviceSurface) -> Result<f64> {
        match self.t_pw {
            Some(t) => Ok(t),
            None => surface.center_pulse_width(self.v_center, self.nominal_hrs(surface)?),
        }
    }

    pub fn stride_for(&self, n: usize) -> u64 {
        self.trace_stride.unwrap_or(if n <= 512 { 1 } else { n as u64 })
    }

    pub fn window_iters(&self) -> u64 {
        self.smoothing_window.unwrap_or_else(|| (self.max_iters / 50).max(1))
    }

    fn gain_at(&self, t: u64) -> f64 {
        match self.gain_final {
            Some(g1) if self.max_iters > 1 => {
                let f = t as f64 / (self.max_iters - 1) as f64;
                self.gain + (g1 - self.gain) * f
            }
            _ => self.gain,
        }
    }
}

/// `clamp(v_center + gain · u / u_scale, v_min, v_max)`.
pub fn map_field_to_voltage(cfg: &BoltzmannConfig, u: f64, u_scale: f64) -> f64 {
    map_with_gain(cfg, cfg.gain, u, u_scale)
}

#[inline]
fn map_with_gain(cfg: &BoltzmannConfig, gain: f64, u: f64, u_scale: f64) -> f64 {
    (cfg.v_center + gain * (u / u_scale)).clamp(cfg.v_min, cfg.v_max)
}

/// Nearest-rank 95th percentile of `|u_i|`; 1 when every field is zero.
pub fn field_scale(u: &[i64]) -> f64 {
    if u.is_empty() {
        return 1.0;
    }
    let mut a: Vec<i64> = u.iter().map(|v| v.abs()).collect();
    a.sort_unstable();
    let rank = ((0.95 * a.len() as f64).ceil() as usize).clamp(1, a.len());
    let s = a[rank - 1] as f64;
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Devices for one run, plus how many offsets could not be calibrated.
#[derive(Clone, Debug)]
pub struct DeviceBank {
    pub devices: Vec<NeuronDevice>,
    pub unattainable: usize,
}

/// Builds the `n` devices of a run: nominal HRS, optional μ offsets drawn from
/// `N(0, d2d_cv·|mu_target|)`, optional per-device calibration.
pub fn build_devices(surface: &Arc<DeviceSurface>, cfg: &BoltzmannConfig, n: usize, seed: u64) -> Result<DeviceBank> {
    let nominal = cfg.nominal_hrs(surface)?;
    let spread = cfg.d2d_cv * cfg.mu_target.abs();
    let mut offset_rng = stream_rng(seed, Stream::Offsets);
    let mut cal_rng = stream_rng(seed, Stream::Calibration);
    let mut devices = Vec::with_capacity(n);
    let mut unattainable = 0;
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut offset_rng);
        let offset = if spread > 0.0 { spread * z } else { 0.0 };
        let mut dev = NeuronDevice::new(Arc::clone(surface), nominal, cfg.scheme).with_offset(offset);
        if cfg.calibrate {
            match dev.calibrate_hrs_for_mu(cfg.mu_target, cfg.v_center, cfg.calibration_precision, &mut cal_rng) {
                Ok(_) => {}
                Err(Error::Unattainable { .. }) => {
                    // park at the range end closest to the target
                    let [lo, hi] = surface.r_range;
                    let mu_lo = surface.eval_mu(cfg.v_center, lo)? + offset;
                    let mu_hi = surface.eval_mu(cfg.v_center, hi)? + offset;
                    let r = if (mu_lo - cfg.mu_target).abs() < (mu_hi - cfg.mu_target).abs() {
                        lo
                    } else {
                        hi
                    };
                    dev.hrs = r;
                    dev.target_hrs = r;
                    unattainable += 1;
                }
                Err(e) => return Err(e),
            }
        }
        devices.push(dev);
    }
    if unattainable > 0 {
        log::warn!("{unattainable} of {n} devices could not reach μ = {}", cfg.mu_target);
    }
    Ok(DeviceBank { devices, unattainable })
}

/// Mutable state of one run.
pub struct SamplerState<'a> {
    form: &'a BoltzmannForm,
    pub x: Configuration,
    pub u: Vec<i64>,
    pub energy: i64,
    pub u_scale: f64,
    pub iteration: u64,
    next_rr: usize,
    log_tpw: f64,
}

impl<'a> SamplerState<'a> {
    pub fn new(form: &'a BoltzmannForm, x: Configuration, t_pw: f64) -> Result<Self> {
        let u = form.fields(&x)?;
        let energy = form.energy(&x)?;
        let u_scale = field_scale(&u);
        Ok(SamplerState {
            form,
            x,
            u,
            energy,
            u_scale,
            iteration: 0,
            next_rr: 0,
            log_tpw: t_pw.log10(),
        })
    }

    /// Firing probability of unit `i` under the current field.
    pub fn fire_probability(&self, devices: &[NeuronDevice], cfg: &BoltzmannConfig, i: usize) -> Result<f64> {
        let u = self.u[i] as f64;
        match cfg.activation {
            Activation::Device => {
                let v = map_with_gain(cfg, cfg.gain_at(self.iteration), u, self.u_scale);
                devices[i].p_switch_log(v, self.log_tpw)
            }
            Activation::Logistic { temperature } => Ok(1.0 / (1.0 + (-u / temperature).exp())),
        }
    }

    /// One iteration. Returns the unit that was sampled. `devices` may be
    /// empty under logistic activation.
    pub fn step<R: Rng + ?Sized, C: Rng + ?Sized>(
        &mut self,
        devices: &mut [NeuronDevice],
        cfg: &BoltzmannConfig,
        rng: &mut R,
        cycle_rng: &mut C,
    ) -> Result<usize> {
        let n = self.x.len();
        let i = match cfg.selection {
            Selection::Random => rng.random_range(0..n),
            Selection::RoundRobin => {
                let i = self.next_rr;
                self.next_rr = (i + 1) % n;
                i
            }
        };
        let p = self.fire_probability(devices, cfg, i)?;
        let fire = rng.random::<f64>() < p;
        self.energy += self
            .form
            .update_fields_after_assign(&mut self.u, &mut self.x, i, fire as u8);
        if cfg.activation == Activation::Device {
            devices[i].apply_cycle(&cfg.drift, cycle_rng);
        }
        self.iteration += 1;
        Ok(i)
    }
}

/// Record of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    pub initial_energy: i64,
    /// Energy after iterations `stride, 2·stride, …`.
    pub energy_series: Vec<i64>,
    pub stride: u64,
    pub iterations: u64,
    pub best_cut: i64,
    pub best_x: Configuration,
    /// Iterations executed when the cut first reached the convergence threshold.
    pub converged_at: Option<u64>,
    /// Minimum of the smoothed energy series.
    pub settling_energy: f64,
    pub cycles_per_device: Vec<u64>,
    pub clamp_events: u64,
    pub unattainable: usize,
    pub u_scale: f64,
}

fn convergence_threshold(inst: &MaxCutInstance, cfg: &BoltzmannConfig) -> Result<Option<f64>> {
    match inst.best_known {
        Some(b) => Ok(Some(cfg.convergence_fraction * b as f64)),
        None if cfg.require_best_known => Err(Error::MissingBestKnown(inst.name.clone())),
        None => Ok(None),
    }
}

/// One full run with `seed` (usually a child seed of `cfg.seed`).
pub fn run_seeded(
    inst: &MaxCutInstance,
    form: &BoltzmannForm,
    surface: &Arc<DeviceSurface>,
    cfg: &BoltzmannConfig,
    seed: u64,
) -> Result<RunTrace> {
    cfg.validate(surface)?;
    let threshold = convergence_threshold(inst, cfg)?;
    let n = inst.n;
    let mut bank = match cfg.activation {
        Activation::Device => build_devices(surface, cfg, n, seed)?,
        Activation::Logistic { .. } => DeviceBank {
            devices: Vec::new(),
            unattainable: 0,
        },
    };
    let t_pw = match cfg.activation {
        Activation::Device => cfg.pulse_width(surface)?,
        Activation::Logistic { .. } => 1.0,
    };

    let mut init_rng = stream_rng(seed, Stream::Init);
    let x0 = Configuration((0..n).map(|_| init_rng.random_range(0..=1u8)).collect());
    let mut state = SamplerState::new(form, x0, t_pw)?;
    let mut rng = stream_rng(seed, Stream::Sampling);
    let mut cycle_rng = stream_rng(seed, Stream::Cycling);

    let stride = cfg.stride_for(n);
    let mut series = Vec::with_capacity((cfg.max_iters / stride) as usize);
    let initial_energy = state.energy;
    let mut best_cut = -state.energy;
    let mut best_x = state.x.clone();
    let mut converged_at = threshold.filter(|&t| best_cut as f64 >= t).map(|_| 0);
    let mut cycles = vec![0u64; n];

    if n > 0 {
        for t in 1..=cfg.max_iters {
            let i = state.step(&mut bank.devices, cfg, &mut rng, &mut cycle_rng)?;
            cycles[i] += 1;
            let cut = -state.energy;
            if cut > best_cut {
                best_cut = cut;
                best_x.clone_from(&state.x);
            }
            if converged_at.is_none() && threshold.is_some_and(|th| cut as f64 >= th) {
                converged_at = Some(t);
            }
            if t % stride == 0 {
                series.push(state.energy);
            }
        }
    }

    let window = (cfg.window_iters() / stride).max(1) as usize;
    let settling_energy = if series.is_empty() {
        initial_energy as f64
    } else {
        let smoothed = stats::moving_average(&series.iter().map(|&e| e as f64).collect::<Vec<_>>(), window);
        smoothed.iter().copied().fold(f64::INFINITY, f64::min)
    };

    Ok(RunTrace {
        seed,
        initial_energy,
        energy_series: series,
        stride,
        iterations: if n > 0 { cfg.max_iters } else { 0 },
        best_cut,
        best_x,
        converged_at,
        settling_energy,
        cycles_per_device: cycles,
        clamp_events: bank.devices.iter().map(|d| d.clamp_events).sum(),
        unattainable: bank.unattainable,
        u_scale: state.u_scale,
    })
}

/// Single run seeded directly with `cfg.seed`.
pub fn run(inst: &MaxCutInstance, surface: &Arc<DeviceSurface>, cfg: &BoltzmannConfig) -> Result<RunTrace> {
    let form = BoltzmannForm::build(inst);
    run_seeded(inst, &form, surface, cfg, cfg.seed)
}

/// Aggregates over the runs of an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub runs: usize,
    pub converged_runs: usize,
    /// Quantiles (25/50/75%) of `converged_at`, unconverged runs counted as +∞.
    /// `None` where the quantile falls on an unconverged run.
    pub converged_at_q: [Option<f64>; 3],
    pub best_cut_median: f64,
    pub best_cut_min: i64,
    pub best_cut_max: i64,
    /// Median of per-run settling energies.
    pub settling_energy_median: f64,
    /// Minimum of the smoothed ensemble-mean energy series.
    pub ensemble_settling_energy: f64,
}

/// `cfg.runs` runs with child seeds `child_seed(cfg.seed, k)`, in parallel.
/// Output is ordered by run index.
pub fn ensemble(
    inst: &MaxCutInstance,
    surface: &Arc<DeviceSurface>,
    cfg: &BoltzmannConfig,
) -> Result<(Vec<RunTrace>, EnsembleSummary)> {
    if cfg.runs == 0 {
        return Err(Error::InvalidConfig("runs must be >= 1".into()));
    }
    let form = BoltzmannForm::build(inst);
    let traces: Vec<RunTrace> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|k| run_seeded(inst, &form, surface, cfg, child_seed(cfg.seed, k)))
        .collect::<Result<_>>()?;
    let summary = summarize(&traces, cfg);
    Ok((traces, summary))
}

/// Element-wise mean of the runs' energy series (truncated to the shortest).
pub fn mean_energy_series(traces: &[RunTrace]) -> Vec<f64> {
    let len = traces.iter().map(|t| t.energy_series.len()).min().unwrap_or(0);
    let mut out = vec![0.0; len];
    for t in traces {
        for (o, &e) in out.iter_mut().zip(&t.energy_series) {
            *o += e as f64;
        }
    }
    let k = traces.len().max(1) as f64;
    out.iter_mut().for_each(|o| *o /= k);
    out
}

pub fn summarize(traces: &[RunTrace], cfg: &BoltzmannConfig) -> EnsembleSummary {
    let conv: Vec<f64> = traces
        .iter()
        .map(|t| t.converged_at.map_or(f64::INFINITY, |c| c as f64))
        .collect();
    let q = |p: f64| {
        let v = stats::quantile(&conv, p);
        v.is_finite().then_some(v)
    };
    let cuts: Vec<f64> = traces.iter().map(|t| t.best_cut as f64).collect();
    let settles: Vec<f64> = traces.iter().map(|t| t.settling_energy).collect();
    let ensemble_settling_energy = match traces.first() {
        Some(first) if !first.energy_series.is_empty() => {
            let window = (cfg.window_iters() / first.stride).max(1) as usize;
            stats::moving_average(&mean_energy_series(traces), window)
                .into_iter()
                .fold(f64::INFINITY, f64::min)
        }
        Some(first) => first.initial_energy as f64,
        None => f64::NAN,
    };
    EnsembleSummary {
        runs: traces.len(),
        converged_runs: traces.iter().filter(|t| t.converged_at.is_some()).count(),
        converged_at_q: [q(0.25), q(0.5), q(0.75)],
        best_cut_median: stats::quantile(&cuts, 0.5),
        best_cut_min: traces.iter().map(|t| t.best_cut).min().unwrap_or(0),
        best_cut_max: traces.iter().map(|t| t.best_cut).max().unwrap_or(0),
        settling_energy_median: stats::quantile(&settles, 0.5),
        ensemble_settling_energy,
    }
}
