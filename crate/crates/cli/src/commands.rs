use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use stochanneal::device::{fit_surface, sha256_hex, FitOptions, HrsAxis, PARAMS_ENV};
use stochanneal::experiments::{self, cycling_population, d2d_experiment, drift_sweep, proxy_best_cut, result_rows};
use stochanneal::io::{
    self as sio, brute_force_maxcut, generate_instance, load_instance, write_manifest, write_results,
    BestKnownRegistry, Manifest, Provenance, BRUTE_FORCE_MAX_N,
};
use stochanneal::sampler::{self, build_devices, child_seed};
use stochanneal::{BoltzmannConfig, DeviceParams, DeviceSurface, DriftModel, Error, MaxCutInstance, Scheme};

use crate::args::*;

/// Failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub msg: String,
}

pub const EXIT_INPUT: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Malformed { .. }
            | Error::DuplicateEdge { .. }
            | Error::SelfLoop { .. }
            | Error::NodeOutOfRange { .. }
            | Error::InvalidDegree { .. }
            | Error::TooLarge { .. }
            | Error::InvalidConfig(_)
            | Error::InvalidParameter(_)
            | Error::MissingBestKnown(_)
            | Error::NonPositivePulse(_)
            | Error::OutOfDomain { .. } => EXIT_INPUT,
            _ => EXIT_RUNTIME,
        };
        CliError {
            code,
            msg: e.to_string(),
        }
    }
}

type Res<T> = std::result::Result<T, CliError>;

fn input_error(msg: String) -> CliError {
    CliError { code: EXIT_INPUT, msg }
}

/// Names the file an error came from, keeping the module tag in front.
fn at_path(path: &Path, e: Error) -> CliError {
    let mut err = CliError::from(e);
    let (tag, rest) = err.msg.split_once(": ").unwrap_or(("io_ingest", err.msg.as_str()));
    err.msg = format!("{tag}: {}: {rest}", path.display());
    err
}

/// Parameter file, its hash and where it came from.
pub struct Params {
    pub params: DeviceParams,
    pub sha256: String,
    pub source: String,
}

impl Params {
    pub fn resolve(flag: Option<&Path>) -> Res<Self> {
        let path = flag
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(PARAMS_ENV).map(PathBuf::from));
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|e| at_path(&p, e.into()))?;
                let params = DeviceParams::from_json(&text).map_err(|e| at_path(&p, e))?;
                Ok(Params {
                    params,
                    sha256: sha256_hex(text.as_bytes()),
                    source: p.display().to_string(),
                })
            }
            None => Ok(Params {
                params: DeviceParams::reference(),
                sha256: sha256_hex(DeviceParams::reference_json().as_bytes()),
                source: "bundled reference".into(),
            }),
        }
    }

    fn surface(&self) -> Arc<DeviceSurface> {
        Arc::new(self.params.surface.clone())
    }
}

pub struct Ctx {
    pub params: Params,
    pub config_file: Option<Value>,
    pub argv: Vec<String>,
    pub command: &'static str,
}

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o.clone(),
    }
}

impl Ctx {
    /// Built-in defaults, then the config file, then flags.
    fn sampler_config(&self, defaults: BoltzmannConfig, flags: &SamplerArgs) -> Res<BoltzmannConfig> {
        let mut cfg = defaults;
        if let Some(over) = &self.config_file {
            let mut v = serde_json::to_value(&cfg).map_err(Error::from)?;
            merge(&mut v, over);
            cfg = serde_json::from_value(v).map_err(|e| input_error(format!("cli: config file: {e}")))?;
        }
        flags.apply(&mut cfg);
        cfg.validate(&self.params.params.surface)?;
        Ok(cfg)
    }

    fn base_config(&self) -> BoltzmannConfig {
        BoltzmannConfig {
            drift: self.params.params.drift,
            ..BoltzmannConfig::default()
        }
    }

    fn finish(&self, out: Option<&Path>, seed: u64, config: Value) -> Res<()> {
        let Some(out) = out else { return Ok(()) };
        let manifest = Manifest {
            tool: "stochanneal".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.into(),
            argv: self.argv.clone(),
            seed,
            params_sha256: self.params.sha256.clone(),
            config,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let path = manifest_path(out);
        write_manifest(&path, &manifest).map_err(|e| at_path(&path, e))?;
        log::info!("manifest written to {}", path.display());
        Ok(())
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn sink(out: Option<&Path>) -> Res<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).map_err(|e| at_path(p, e.into()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn table(out: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Res<()> {
    sio::write_table(sink(out)?, header, rows).map_err(|e| match out {
        Some(p) => at_path(p, e),
        None => e.into(),
    })
}

fn load(path: &Path) -> Res<MaxCutInstance> {
    load_instance(path).map_err(|e| at_path(path, e))
}

fn load_registry(path: &Path) -> Res<BestKnownRegistry> {
    BestKnownRegistry::load(path).map_err(|e| at_path(path, e))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn say_seed(seed: u64) {
    eprintln!("seed: {seed}");
}

pub fn solve(ctx: &Ctx, a: &SolveArgs) -> Res<()> {
    let mut inst = load(&a.instance)?;
    if let Some(reg) = &a.registry {
        load_registry(reg)?.annotate(&mut inst);
    }
    if let Some(b) = a.best_known {
        inst.best_known = Some(b);
    }
    let cfg = ctx.sampler_config(ctx.base_config(), &a.sampler)?;
    say_seed(cfg.seed);
    let (traces, summary) = sampler::ensemble(&inst, &ctx.params.surface(), &cfg)?;
    let rows = result_rows(&inst, &cfg, &traces, 0);
    write_results(sink(a.out.as_deref())?, &rows)?;
    if let Some(path) = &a.trace {
        let mut trows = Vec::new();
        for (k, t) in traces.iter().enumerate() {
            trows.push(vec![k.to_string(), "0".into(), t.initial_energy.to_string()]);
            for (j, e) in t.energy_series.iter().enumerate() {
                trows.push(vec![
                    k.to_string(),
                    ((j as u64 + 1) * t.stride).to_string(),
                    e.to_string(),
                ]);
            }
        }
        table(Some(path), &["run_id", "iteration", "energy"], &trows)?;
    }
    eprintln!(
        "{}: n={} best cut {} (median {}), converged {}/{}",
        inst.name, inst.n, summary.best_cut_max, summary.best_cut_median, summary.converged_runs, summary.runs
    );
    ctx.finish(
        a.out.as_deref(),
        cfg.seed,
        json!({"instance": a.instance, "best_known": inst.best_known, "params": ctx.params.source, "sampler": cfg}),
    )
}

/// Best-known cut for a generated instance: registry, then brute force, then a proxy run.
fn ladder_best_known(
    inst: &MaxCutInstance,
    reg: Option<&BestKnownRegistry>,
    surface: &Arc<DeviceSurface>,
    l: &LadderArgs,
) -> Res<(i64, Provenance)> {
    if let Some(b) = reg.and_then(|r| r.get(&inst.name)) {
        return Ok((b.cut, b.provenance));
    }
    if inst.n <= BRUTE_FORCE_MAX_N {
        return Ok((brute_force_maxcut(inst)?.0, Provenance::Exact));
    }
    let cut = proxy_best_cut(
        inst,
        surface,
        l.proxy_iters,
        l.proxy_runs,
        child_seed(l.instance_seed, inst.n as u64),
    )?;
    log::info!("{}: proxy best-known cut {cut}", inst.name);
    Ok((cut, Provenance::Proxy))
}

pub fn build_ladder(l: &LadderArgs, surface: &Arc<DeviceSurface>) -> Res<Vec<MaxCutInstance>> {
    let reg = l.registry.as_deref().map(load_registry).transpose()?;
    let mut sizes = l.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .iter()
        .map(|&n| {
            let inst = generate_instance(n, l.degree, l.weights.set(), l.instance_seed + n as u64)?;
            let (cut, _) = ladder_best_known(&inst, reg.as_ref(), surface, l)?;
            Ok(inst.with_best_known(cut))
        })
        .collect()
}

pub fn sweep_drift(ctx: &Ctx, a: &SweepDriftArgs) -> Res<()> {
    let defaults = BoltzmannConfig {
        max_iters: 1_000_000,
        runs: 10,
        ..ctx.base_config()
    };
    let cfg = ctx.sampler_config(defaults, &a.sampler)?;
    say_seed(cfg.seed);
    let surface = ctx.params.surface();
    let ladder = build_ladder(&a.ladder, &surface)?;
    let schemes: Vec<Scheme> = a.schemes.iter().map(|&s| s.into()).collect();
    let sweeps = (a.sweeps > 0).then_some(a.sweeps);
    let result = drift_sweep(&ladder, &surface, &a.mhrs, &schemes, &cfg.drift, &cfg, sweeps)?;
    let mut rows = Vec::new();
    for p in &result.points {
        eprintln!(
            "m_hrs={} {}: solvable size {} (largest passing rung {})",
            p.m_hrs, p.scheme, p.solvable.size, p.solvable.largest_passing
        );
        for (c, inst) in p.solvable.ladder.iter().zip(&ladder) {
            rows.push(vec![
                p.m_hrs.to_string(),
                p.scheme.to_string(),
                c.instance.clone(),
                c.n.to_string(),
                opt(inst.best_known),
                experiments::rung_iterations(&cfg, sweeps, c.n).to_string(),
                opt(c.required),
                c.meaningful.to_string(),
                c.solvable.to_string(),
                p.solvable.size.to_string(),
                p.solvable.largest_passing.to_string(),
            ]);
        }
    }
    table(
        a.out.as_deref(),
        &[
            "m_hrs",
            "scheme",
            "instance",
            "n",
            "best_known",
            "iterations",
            "required",
            "meaningful",
            "solvable",
            "size",
            "largest_passing",
        ],
        &rows,
    )?;
    ctx.finish(
        a.out.as_deref(),
        cfg.seed,
        json!({
            "sizes": a.ladder.sizes, "degree": a.ladder.degree, "instance_seed": a.ladder.instance_seed,
            "weights": a.ladder.weights.set(), "proxy_iters": a.ladder.proxy_iters, "proxy_runs": a.ladder.proxy_runs,
            "mhrs": a.mhrs, "schemes": schemes, "sweeps": sweeps, "params": ctx.params.source, "sampler": cfg,
        }),
    )
}

pub fn sweep_d2d(ctx: &Ctx, a: &SweepD2dArgs) -> Res<()> {
    let cfg = ctx.sampler_config(ctx.base_config(), &a.sampler)?;
    say_seed(cfg.seed);
    let inst = match &a.instance {
        Some(p) => load(p)?,
        None => generate_instance(a.nodes, a.degree, &[-1, 1], a.instance_seed)?,
    };
    let r = d2d_experiment(&inst, &ctx.params.surface(), &a.cv_list, &cfg)?;
    let rows: Vec<Vec<String>> = r
        .points
        .iter()
        .map(|p| {
            eprintln!(
                "cv={} calibrated={}: error {:.3}%, μ spread {:.4}",
                p.cv, p.calibrated, p.error_pct, p.mu_spread
            );
            vec![
                p.cv.to_string(),
                p.calibrated.to_string(),
                p.settling_energy.to_string(),
                p.error_pct.to_string(),
                p.mu_spread.to_string(),
                p.unattainable.to_string(),
                r.ideal_settling_energy.to_string(),
            ]
        })
        .collect();
    table(
        a.out.as_deref(),
        &[
            "cv",
            "calibrated",
            "settling_energy",
            "error_pct",
            "mu_spread",
            "unattainable",
            "ideal_settling_energy",
        ],
        &rows,
    )?;
    ctx.finish(
        a.out.as_deref(),
        cfg.seed,
        json!({
            "instance": a.instance.as_ref().map_or(inst.name.clone(), |p| p.display().to_string()),
            "cv": a.cv_list, "params": ctx.params.source, "sampler": cfg,
        }),
    )
}

fn drift_with(base: DriftModel, m: Option<f64>, s: Option<f64>, tol: Option<f64>) -> Res<DriftModel> {
    let d = DriftModel {
        m_hrs: m.unwrap_or(base.m_hrs),
        s_rw: s.unwrap_or(base.s_rw),
        hrs_tolerance: tol.unwrap_or(base.hrs_tolerance),
    };
    d.validate()?;
    Ok(d)
}

pub fn cycling(ctx: &Ctx, a: &CyclingArgs) -> Res<()> {
    say_seed(a.seed);
    let surface = ctx.params.surface();
    let drift = drift_with(ctx.params.params.drift, a.m_hrs, a.s_rw, a.hrs_tolerance)?;
    let hrs0 = match a.hrs0 {
        Some(h) => h,
        None => surface.hrs_for_mu(a.v_ref, -5.0)?,
    };
    let scheme: Scheme = a.scheme.into();
    let pop = cycling_population(&surface, scheme, a.cycles, &drift, a.v_ref, hrs0, a.devices, a.seed)?;
    eprintln!(
        "{scheme}: median μ drift {:.4} decades, median σ drift {:.4} decades over {} cycles",
        pop.mu_drift_median, pop.sigma_drift_median, a.cycles
    );
    let rows: Vec<Vec<String>> = pop
        .per_device
        .iter()
        .enumerate()
        .map(|(k, s)| {
            vec![
                k.to_string(),
                scheme.to_string(),
                s.mu_drift.to_string(),
                s.sigma_drift.to_string(),
                s.final_hrs.to_string(),
                s.clamp_events.to_string(),
            ]
        })
        .collect();
    table(
        a.out.as_deref(),
        &[
            "device",
            "scheme",
            "mu_drift",
            "sigma_drift",
            "final_hrs",
            "clamp_events",
        ],
        &rows,
    )?;
    if let Some(path) = &a.series {
        let mut srows = Vec::new();
        for (k, s) in pop.per_device.iter().enumerate() {
            for (c, mu) in s.mu_series.iter().enumerate() {
                srows.push(vec![k.to_string(), (c + 1).to_string(), mu.to_string()]);
            }
        }
        table(Some(path), &["device", "cycle", "mu"], &srows)?;
    }
    ctx.finish(
        a.out.as_deref(),
        a.seed,
        json!({
            "scheme": scheme, "cycles": a.cycles, "devices": a.devices, "v_ref": a.v_ref, "hrs0": hrs0,
            "drift": drift, "params": ctx.params.source,
        }),
    )
}

pub fn calibrate(ctx: &Ctx, a: &CalibrateArgs) -> Res<()> {
    say_seed(a.seed);
    let surface = ctx.params.surface();
    let cfg = BoltzmannConfig {
        v_center: a.v_ref,
        mu_target: a.mu_target,
        calibration_precision: a.precision,
        d2d_cv: a.cv,
        calibrate: true,
        seed: a.seed,
        ..ctx.base_config()
    };
    cfg.validate(&surface)?;
    let bank = build_devices(&surface, &cfg, a.devices, a.seed)?;
    let mut rows = Vec::new();
    for (k, d) in bank.devices.iter().enumerate() {
        let mu = d.mu_eff(a.v_ref)?;
        rows.push(vec![
            k.to_string(),
            d.mu_offset.to_string(),
            d.hrs.to_string(),
            mu.to_string(),
            (mu - a.mu_target).to_string(),
        ]);
    }
    eprintln!(
        "{} devices programmed, {} targets unattainable",
        a.devices, bank.unattainable
    );
    table(
        a.out.as_deref(),
        &["device", "mu_offset", "hrs_kohm", "mu_eff", "mu_error"],
        &rows,
    )?;
    ctx.finish(
        a.out.as_deref(),
        a.seed,
        json!({
            "mu_target": a.mu_target, "precision": a.precision, "v_ref": a.v_ref, "devices": a.devices,
            "cv": a.cv, "params": ctx.params.source,
        }),
    )
}

pub fn fit(ctx: &Ctx, a: &FitArgs) -> Res<()> {
    let file = File::open(&a.data).map_err(|e| at_path(&a.data, e.into()))?;
    let samples = sio::read_measurements(file).map_err(|e| at_path(&a.data, e))?;
    let opts = FitOptions {
        hrs_axis: match a.axis {
            AxisArg::Linear => HrsAxis::Linear,
            AxisArg::Log10 => HrsAxis::Log10,
        },
        grid: (a.v_bins, a.r_bins),
        min_per_cell: a.min_per_cell,
        sigma_floor: a.sigma_floor,
    };
    let f = fit_surface(&samples, &opts)?;
    println!("R² = {:.6}", f.r_squared);
    eprintln!("{} samples, {} σ cells", samples.len(), f.sigma_cells);
    let terms = ["1", "V", "x", "V^2", "x^2", "V*x"];
    let rows: Vec<Vec<String>> = terms
        .iter()
        .enumerate()
        .map(|(k, t)| {
            vec![
                t.to_string(),
                f.surface.mu_coeffs.0[k].to_string(),
                f.surface.sigma_coeffs.0[k].to_string(),
            ]
        })
        .collect();
    if let Some(p) = &a.params_out {
        let params = DeviceParams {
            surface: f.surface.clone(),
            drift: ctx.params.params.drift,
        };
        std::fs::write(p, params.to_json()? + "\n").map_err(|e| at_path(p, e.into()))?;
    }
    if a.out.is_some() {
        table(a.out.as_deref(), &["term", "mu", "sigma"], &rows)?;
    }
    ctx.finish(
        a.out.as_deref(),
        0,
        json!({"data": a.data, "fit": opts, "r_squared": f.r_squared, "sigma_cells": f.sigma_cells}),
    )
}

pub fn gen(ctx: &Ctx, a: &GenArgs) -> Res<()> {
    say_seed(a.seed);
    let inst = generate_instance(a.nodes, a.degree, a.weights.set(), a.seed)?;
    let text = sio::write_rudy(&inst);
    match &a.out {
        Some(p) => std::fs::write(p, text).map_err(|e| at_path(p, e.into()))?,
        None => io::stdout().write_all(text.as_bytes()).map_err(Error::from)?,
    }
    eprintln!("{}: {} nodes, {} edges", inst.name, inst.n, inst.edges.len());
    ctx.finish(
        a.out.as_deref(),
        a.seed,
        json!({"nodes": a.nodes, "degree": a.degree, "weights": a.weights.set()}),
    )
}

pub fn brute(ctx: &Ctx, a: &BruteArgs) -> Res<()> {
    let inst = load(&a.instance)?;
    let (cut, x) = brute_force_maxcut(&inst)?;
    println!("{cut}");
    if let Some(p) = &a.registry {
        let mut reg = if p.exists() {
            load_registry(p)?
        } else {
            BestKnownRegistry::default()
        };
        reg.insert(inst.name.clone(), cut, Provenance::Exact);
        reg.save(p).map_err(|e| at_path(p, e))?;
    }
    if let Some(out) = &a.out {
        let bits: String = x.0.iter().map(|b| char::from(b'0' + b)).collect();
        table(
            Some(out),
            &["instance", "n", "cut", "assignment"],
            &[vec![inst.name.clone(), inst.n.to_string(), cut.to_string(), bits]],
        )?;
    }
    ctx.finish(a.out.as_deref(), 0, json!({"instance": a.instance}))
}
