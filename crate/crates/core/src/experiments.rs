//! Drift, scaling and device-variability studies built on the sampler.
//!
//! Every comparison reuses the same child seeds, so paired runs differ only in
//! the manipulated variable.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{DeviceSurface, DriftModel, NeuronDevice, Scheme};
use crate::error::{Error, Result};
use crate::io::ResultRow;
use crate::maxcut::MaxCutInstance;
use crate::sampler::{self, child_seed, BoltzmannConfig, RunTrace};
use crate::stats;

/// Minimum ensemble size for meaningful-iteration estimates.
pub const MIN_TRACES: usize = 5;

/// Drift of one device (or the median over several) across Reset-Set cycling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CyclingStats {
    /// |mean μ_eff(last window) − mean μ_eff(first window)|, decades.
    pub mu_drift: f64,
    /// Same for the spread of log10(t_Set) pooled over each window, decades.
    pub sigma_drift: f64,
    /// μ_eff at `v_ref` after each cycle.
    pub mu_series: Vec<f64>,
    pub final_hrs: f64,
    pub clamp_events: u64,
}

/// Window length used by [`cycling_stats`]: a tenth of the run.
pub fn cycling_window(cycles: u64) -> usize {
    ((cycles / 10).max(1)) as usize
}

fn window_moments(mus: &[f64], sigmas: &[f64]) -> (f64, f64) {
    let m = stats::mean(mus);
    let var_mu = mus.iter().map(|x| (x - m).powi(2)).sum::<f64>() / mus.len() as f64;
    let mean_s2 = sigmas.iter().map(|s| s * s).sum::<f64>() / sigmas.len() as f64;
    (m, (mean_s2 + var_mu).sqrt())
}

/// Cycles one device `cycles` times under `scheme`, tracking μ_eff and σ at
/// `v_ref` after every cycle.
pub fn cycling_stats(
    surface: &Arc<DeviceSurface>,
    scheme: Scheme,
    cycles: u64,
    drift: &DriftModel,
    v_ref: f64,
    hrs0: f64,
    seed: u64,
) -> Result<CyclingStats> {
    if cycles < 2 {
        return Err(Error::InvalidParameter(format!("cycles must be >= 2, got {cycles}")));
    }
    drift.validate()?;
    let mut dev = NeuronDevice::new(Arc::clone(surface), hrs0, scheme);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mus = Vec::with_capacity(cycles as usize);
    let mut sigmas = Vec::with_capacity(cycles as usize);
    for _ in 0..cycles {
        dev.apply_cycle(drift, &mut rng);
        let (mu, sigma) = dev.lognormal_params(v_ref)?;
        mus.push(mu);
        sigmas.push(sigma);
    }
    let w = cycling_window(cycles);
    let k = mus.len();
    let (m0, s0) = window_moments(&mus[..w], &sigmas[..w]);
    let (m1, s1) = window_moments(&mus[k - w..], &sigmas[k - w..]);
    Ok(CyclingStats {
        mu_drift: (m1 - m0).abs(),
        sigma_drift: (s1 - s0).abs(),
        mu_series: mus,
        final_hrs: dev.hrs,
        clamp_events: dev.clamp_events,
    })
}

/// Population view of [`cycling_stats`] over `devices` independently seeded devices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CyclingSummary {
    pub scheme: Scheme,
    pub cycles: u64,
    pub mu_drift_median: f64,
    pub sigma_drift_median: f64,
    pub per_device: Vec<CyclingStats>,
}

#[allow(clippy::too_many_arguments)]
pub fn cycling_population(
    surface: &Arc<DeviceSurface>,
    scheme: Scheme,
    cycles: u64,
    drift: &DriftModel,
    v_ref: f64,
    hrs0: f64,
    devices: usize,
    seed: u64,
) -> Result<CyclingSummary> {
    if devices == 0 {
        return Err(Error::InvalidParameter("devices must be >= 1".into()));
    }
    let per_device: Vec<CyclingStats> = (0..devices as u64)
        .into_par_iter()
        .map(|k| cycling_stats(surface, scheme, cycles, drift, v_ref, hrs0, child_seed(seed, k)))
        .collect::<Result<_>>()?;
    let mu: Vec<f64> = per_device.iter().map(|s| s.mu_drift).collect();
    let sg: Vec<f64> = per_device.iter().map(|s| s.sigma_drift).collect();
    Ok(CyclingSummary {
        scheme,
        cycles,
        mu_drift_median: stats::quantile(&mu, 0.5),
        sigma_drift_median: stats::quantile(&sg, 0.5),
        per_device,
    })
}

/// Iterations-to-converge distribution of one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub instance: String,
    pub n: usize,
    pub converged_at: Vec<Option<u64>>,
    /// 25/50/75% quantiles, unconverged runs as +∞ (`None`).
    pub quantiles: [Option<f64>; 3],
}

impl ScalingPoint {
    pub fn median(&self) -> Option<f64> {
        self.quantiles[1]
    }
}

fn scaling_point(inst: &MaxCutInstance, traces: &[RunTrace], cfg: &BoltzmannConfig) -> ScalingPoint {
    let summary = sampler::summarize(traces, cfg);
    ScalingPoint {
        instance: inst.name.clone(),
        n: inst.n,
        converged_at: traces.iter().map(|t| t.converged_at).collect(),
        quantiles: summary.converged_at_q,
    }
}

/// Ideal-scheme ensembles on each instance; every instance needs a best-known cut.
pub fn convergence_scaling(
    instances: &[MaxCutInstance],
    surface: &Arc<DeviceSurface>,
    cfg: &BoltzmannConfig,
) -> Result<Vec<ScalingPoint>> {
    let cfg = BoltzmannConfig {
        scheme: Scheme::Ideal,
        require_best_known: true,
        ..cfg.clone()
    };
    instances
        .iter()
        .map(|inst| {
            let (traces, _) = sampler::ensemble(inst, surface, &cfg)?;
            Ok(scaling_point(inst, &traces, &cfg))
        })
        .collect()
}

/// Argmin of the smoothed ensemble-mean energy, in iterations. When the mean
/// never rises significantly after its minimum (final value within two
/// standard errors of it, estimated from the spread of the runs' own smoothed
/// series at the minimum), the descent is still meaningful at the end of the
/// run and the full length is returned. `window` is in iterations.
pub fn max_meaningful_iterations(traces: &[RunTrace], window: u64) -> Result<u64> {
    if traces.len() < MIN_TRACES {
        return Err(Error::InsufficientTraces {
            needed: MIN_TRACES,
            got: traces.len(),
        });
    }
    if window == 0 {
        return Err(Error::InvalidParameter("window must be >= 1".into()));
    }
    let stride = traces[0].stride;
    let w = (window / stride).max(1) as usize;
    let smoothed_runs: Vec<Vec<f64>> = traces
        .iter()
        .map(|t| stats::moving_average(&t.energy_series.iter().map(|&e| e as f64).collect::<Vec<_>>(), w))
        .collect();
    let len = smoothed_runs.iter().map(Vec::len).min().unwrap_or(0);
    if len == 0 {
        return Ok(0);
    }
    let k = traces.len() as f64;
    let mean: Vec<f64> = (0..len)
        .map(|j| smoothed_runs.iter().map(|s| s[j]).sum::<f64>() / k)
        .collect();
    let kmin = stats::argmin(&mean).unwrap_or(0);
    let at_min: Vec<f64> = smoothed_runs.iter().map(|s| s[kmin]).collect();
    let band = 2.0 * stats::std_dev(&at_min) / k.sqrt();
    let end = if mean[len - 1] > mean[kmin] + band {
        kmin
    } else {
        len - 1
    };
    Ok((end as u64 + 1) * stride)
}

/// Outcome at one rung of the size ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeCheck {
    pub instance: String,
    pub n: usize,
    /// Median ideal-scheme iterations to converge; `None` if the median run never converged.
    pub required: Option<f64>,
    pub meaningful: u64,
    pub solvable: bool,
    pub drift_traces: Vec<RunTrace>,
    pub ideal: ScalingPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolvableSize {
    pub scheme: Scheme,
    pub drift: DriftModel,
    /// Largest n such that every rung up to and including it is solvable; 0 when none.
    pub size: usize,
    /// Largest solvable rung regardless of the rungs below it.
    pub largest_passing: usize,
    pub ladder: Vec<SizeCheck>,
}

/// Iteration budget of one rung: `sweeps · n`, capped at `cfg.max_iters`.
pub fn rung_iterations(cfg: &BoltzmannConfig, sweeps: Option<u64>, n: usize) -> u64 {
    match sweeps {
        Some(s) => s.saturating_mul(n as u64).clamp(1, cfg.max_iters),
        None => cfg.max_iters,
    }
}

/// For each instance (ascending n): paired ideal and drifting ensembles.
/// An instance is solvable when the ideal median iterations-to-converge does
/// not exceed the drifting ensemble's meaningful iterations. The ladder stops
/// at its first unsolvable rung.
pub fn max_solvable_size(
    ladder: &[MaxCutInstance],
    surface: &Arc<DeviceSurface>,
    scheme: Scheme,
    drift: &DriftModel,
    cfg: &BoltzmannConfig,
    sweeps: Option<u64>,
) -> Result<SolvableSize> {
    if ladder.windows(2).any(|p| p[0].n > p[1].n) {
        return Err(Error::InvalidConfig("size ladder must be sorted by n".into()));
    }
    if cfg.runs < MIN_TRACES {
        return Err(Error::InsufficientTraces {
            needed: MIN_TRACES,
            got: cfg.runs,
        });
    }
    let ideal_cfg = BoltzmannConfig {
        scheme: Scheme::Ideal,
        require_best_known: true,
        ..cfg.clone()
    };
    let drift_cfg = BoltzmannConfig {
        scheme,
        drift: *drift,
        ..ideal_cfg.clone()
    };
    let mut checks = Vec::with_capacity(ladder.len());
    for inst in ladder {
        let max_iters = rung_iterations(cfg, sweeps, inst.n);
        let ideal_cfg = BoltzmannConfig {
            max_iters,
            ..ideal_cfg.clone()
        };
        let drift_cfg = BoltzmannConfig {
            max_iters,
            ..drift_cfg.clone()
        };
        let (ideal_traces, _) = sampler::ensemble(inst, surface, &ideal_cfg)?;
        let ideal = scaling_point(inst, &ideal_traces, &ideal_cfg);
        let drift_traces = if scheme == Scheme::Ideal {
            ideal_traces
        } else {
            sampler::ensemble(inst, surface, &drift_cfg)?.0
        };
        let meaningful = max_meaningful_iterations(&drift_traces, drift_cfg.window_iters())?;
        let required = ideal.median();
        let solvable = required.is_some_and(|r| r <= meaningful as f64);
        log::info!(
            "{} n={} scheme={} required={:?} meaningful={}",
            inst.name,
            inst.n,
            scheme,
            required,
            meaningful
        );
        checks.push(SizeCheck {
            instance: inst.name.clone(),
            n: inst.n,
            required,
            meaningful,
            solvable,
            drift_traces,
            ideal,
        });
    }
    let size = checks
        .iter()
        .take_while(|c| c.solvable)
        .map(|c| c.n)
        .last()
        .unwrap_or(0);
    let largest_passing = checks.iter().filter(|c| c.solvable).map(|c| c.n).max().unwrap_or(0);
    Ok(SolvableSize {
        scheme,
        drift: *drift,
        size,
        largest_passing,
        ladder: checks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftPoint {
    pub m_hrs: f64,
    pub scheme: Scheme,
    pub solvable: SolvableSize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftSweepResult {
    pub points: Vec<DriftPoint>,
}

impl DriftSweepResult {
    /// Spearman ρ between m_hrs and meaningful iterations at rung `k`, over points of `scheme`.
    pub fn meaningful_trend(&self, scheme: Scheme, k: usize) -> f64 {
        let pts: Vec<&DriftPoint> = self.points.iter().filter(|p| p.scheme == scheme).collect();
        let m: Vec<f64> = pts.iter().map(|p| p.m_hrs).collect();
        let it: Vec<f64> = pts.iter().map(|p| p.solvable.ladder[k].meaningful as f64).collect();
        stats::spearman(&m, &it)
    }
}

/// `max_solvable_size` for every (m_hrs, scheme) pair; other drift fields come from `base`.
pub fn drift_sweep(
    ladder: &[MaxCutInstance],
    surface: &Arc<DeviceSurface>,
    m_list: &[f64],
    schemes: &[Scheme],
    base: &DriftModel,
    cfg: &BoltzmannConfig,
    sweeps: Option<u64>,
) -> Result<DriftSweepResult> {
    let mut points = Vec::new();
    for &m_hrs in m_list {
        for &scheme in schemes {
            let drift = DriftModel { m_hrs, ..*base };
            let solvable = max_solvable_size(ladder, surface, scheme, &drift, cfg, sweeps)?;
            points.push(DriftPoint {
                m_hrs,
                scheme,
                solvable,
            });
        }
    }
    Ok(DriftSweepResult { points })
}

/// One (cv, calibrated) cell of the variability study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct D2DPoint {
    pub cv: f64,
    pub calibrated: bool,
    /// Minimum of the smoothed ensemble-mean energy.
    pub settling_energy: f64,
    /// `100·(E − E_ideal)/|E_ideal|` against the cv = 0 ensemble on the same seeds.
    pub error_pct: f64,
    /// Standard deviation of per-device μ_eff at `v_center`, pooled over runs.
    pub mu_spread: f64,
    pub unattainable: usize,
    pub traces: Vec<RunTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct D2DSweepResult {
    pub ideal_settling_energy: f64,
    pub points: Vec<D2DPoint>,
}

impl D2DSweepResult {
    pub fn get(&self, cv: f64, calibrated: bool) -> Option<&D2DPoint> {
        self.points.iter().find(|p| p.cv == cv && p.calibrated == calibrated)
    }
}

/// Best cut over `runs` long ideal-scheme runs at a high gain (nearly greedy
/// descent). Used as a proxy best-known value where brute force is out of reach.
pub fn proxy_best_cut(
    inst: &MaxCutInstance,
    surface: &Arc<DeviceSurface>,
    iters: u64,
    runs: usize,
    seed: u64,
) -> Result<i64> {
    let cfg = BoltzmannConfig {
        gain: 3.0,
        max_iters: iters,
        runs,
        seed,
        trace_stride: Some(iters.div_ceil(1000).max(1)),
        ..BoltzmannConfig::default()
    };
    Ok(sampler::ensemble(inst, surface, &cfg)?.1.best_cut_max)
}

/// Per-device μ_eff at `v_center` for the devices a run with `seed` would use.
pub fn device_mu_values(surface: &Arc<DeviceSurface>, cfg: &BoltzmannConfig, n: usize, seed: u64) -> Result<Vec<f64>> {
    let bank = sampler::build_devices(surface, cfg, n, seed)?;
    bank.devices.iter().map(|d| d.mu_eff(cfg.v_center)).collect()
}

/// Uncalibrated and calibrated ensembles at every cv, scored against cv = 0.
pub fn d2d_experiment(
    inst: &MaxCutInstance,
    surface: &Arc<DeviceSurface>,
    cv_list: &[f64],
    cfg: &BoltzmannConfig,
) -> Result<D2DSweepResult> {
    if cfg.runs < 10 {
        return Err(Error::InvalidConfig(format!("d2d needs runs >= 10, got {}", cfg.runs)));
    }
    let ideal_cfg = BoltzmannConfig {
        d2d_cv: 0.0,
        calibrate: false,
        ..cfg.clone()
    };
    let (_, ideal) = sampler::ensemble(inst, surface, &ideal_cfg)?;
    let e_ideal = ideal.ensemble_settling_energy;
    let mut points = Vec::new();
    for &cv in cv_list {
        for calibrated in [false, true] {
            let c = BoltzmannConfig {
                d2d_cv: cv,
                calibrate: calibrated,
                ..cfg.clone()
            };
            let (traces, summary) = sampler::ensemble(inst, surface, &c)?;
            let mut mus = Vec::with_capacity(inst.n * c.runs);
            for t in &traces {
                mus.extend(device_mu_values(surface, &c, inst.n, t.seed)?);
            }
            let e = summary.ensemble_settling_energy;
            points.push(D2DPoint {
                cv,
                calibrated,
                settling_energy: e,
                error_pct: 100.0 * (e - e_ideal) / e_ideal.abs(),
                mu_spread: stats::std_dev(&mus),
                unattainable: traces.iter().map(|t| t.unattainable).sum(),
                traces,
            });
        }
    }
    Ok(D2DSweepResult {
        ideal_settling_energy: e_ideal,
        points,
    })
}

/// One result row per trace, numbered from `first_id`.
pub fn result_rows(inst: &MaxCutInstance, cfg: &BoltzmannConfig, traces: &[RunTrace], first_id: u64) -> Vec<ResultRow> {
    traces
        .iter()
        .enumerate()
        .map(|(k, t)| ResultRow {
            run_id: first_id + k as u64,
            instance: inst.name.clone(),
            n: inst.n,
            scheme: cfg.scheme.to_string(),
            m_hrs: if cfg.scheme == Scheme::FixedInput {
                cfg.drift.m_hrs
            } else {
                0.0
            },
            d2d_cv: cfg.d2d_cv,
            calibrated: cfg.calibrate,
            seed: t.seed,
            converged_at: t.converged_at,
            best_cut: t.best_cut,
            settling_energy: t.settling_energy,
            iterations: t.iterations,
            clamp_events: t.clamp_events,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::HrsAxis;
    use crate::maxcut::Configuration;

    fn surface() -> Arc<DeviceSurface> {
        Arc::new(
            DeviceSurface::new(
                [-7.8, 0.0, 0.02, 0.0, 0.0, 0.0],
                [0.3, 0.0, 0.0, 0.0, 0.0, 0.0],
                [1.6, 2.2],
                [10.0, 300.0],
                0.05,
                HrsAxis::Linear,
            )
            .unwrap(),
        )
    }

    fn trace(series: Vec<i64>) -> RunTrace {
        RunTrace {
            seed: 0,
            initial_energy: 0,
            iterations: series.len() as u64,
            energy_series: series,
            stride: 1,
            best_cut: 0,
            best_x: Configuration::zeros(0),
            converged_at: None,
            settling_energy: 0.0,
            cycles_per_device: Vec::new(),
            clamp_events: 0,
            unattainable: 0,
            u_scale: 1.0,
        }
    }

    #[test]
    fn ideal_cycling_has_no_drift() {
        let s = surface();
        let st = cycling_stats(&s, Scheme::Ideal, 100, &DriftModel::default(), 1.8, 140.0, 3).unwrap();
        assert_eq!(st.mu_drift, 0.0);
        assert_eq!(st.sigma_drift, 0.0);
        assert!(cycling_stats(&s, Scheme::Ideal, 1, &DriftModel::default(), 1.8, 140.0, 3).is_err());
    }

    #[test]
    fn linear_cycling_drift_matches_slope() {
        let s = surface();
        let drift = DriftModel {
            m_hrs: 1.0,
            s_rw: 0.0,
            hrs_tolerance: 0.1,
        };
        // windows of 10 cycles, centres 90 cycles apart, 0.02 decades per kΩ
        let st = cycling_stats(&s, Scheme::FixedInput, 100, &drift, 1.8, 100.0, 0).unwrap();
        assert!((st.mu_drift - 1.8).abs() < 1e-9, "{}", st.mu_drift);
        assert!(st.sigma_drift.abs() < 1e-12);
    }

    #[test]
    fn decreasing_mean_gives_last_index() {
        let traces: Vec<RunTrace> = (0..5).map(|_| trace((0..200).map(|k| -k).collect())).collect();
        assert_eq!(max_meaningful_iterations(&traces, 9).unwrap(), 200);
    }

    #[test]
    fn v_shape_gives_its_vertex() {
        let k = 120i64;
        let series: Vec<i64> = (0..300).map(|t| (t - k).abs()).collect();
        let traces: Vec<RunTrace> = (0..6).map(|_| trace(series.clone())).collect();
        let got = max_meaningful_iterations(&traces, 11).unwrap() as i64 - 1;
        assert!((got - k).abs() <= 5, "{got}");
    }

    #[test]
    fn too_few_traces() {
        let traces: Vec<RunTrace> = (0..4).map(|_| trace(vec![0, -1])).collect();
        assert!(matches!(
            max_meaningful_iterations(&traces, 1),
            Err(Error::InsufficientTraces { needed: 5, got: 4 })
        ));
    }
}
