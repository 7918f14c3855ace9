//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! each and exits non-zero if any failed. Run with
//! `cargo test --release -p stochanneal-cli --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use stochanneal::device::{fit_surface, normal_cdf, FitOptions, HrsAxis, Measurement};
use stochanneal::experiments::{cycling_population, d2d_experiment, max_solvable_size, proxy_best_cut};
use stochanneal::io::{brute_force_maxcut, generate_instance, write_measurements};
use stochanneal::sampler::{self, Activation, BoltzmannConfig, SamplerState};
use stochanneal::stats::{ks_critical, ks_statistic};
use stochanneal::{BoltzmannForm, Configuration, DeviceParams, DeviceSurface, MaxCutInstance, NeuronDevice, Scheme};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn reference() -> (DeviceParams, Arc<DeviceSurface>) {
    let p = DeviceParams::reference();
    let s = Arc::new(p.surface.clone());
    (p, s)
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize, weights: &[i64]) -> MaxCutInstance {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let w = weights[rng.random_range(0..weights.len())];
            if w != 0 {
                edges.push((i, j, w));
            }
        }
    }
    MaxCutInstance::new("rand", n, edges).unwrap()
}

fn within(limit: Duration, t: Duration) -> bool {
    t <= limit
}

fn energy_identity() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0u64;
    let mut bad = 0u64;
    for _ in 0..50 {
        let n = rng.random_range(1..=12);
        let inst = random_instance(&mut rng, n, &[-3, -1, 0, 1, 2]);
        let form = BoltzmannForm::build(&inst);
        for mask in 0..(1u64 << n) {
            let x = Configuration::from_mask(n, mask);
            if form.energy(&x).unwrap() != -inst.cut_value(&x).unwrap() {
                bad += 1;
            }
            checked += 1;
        }
    }
    let t = t0.elapsed();
    outcome(
        bad == 0 && within(Duration::from_secs(10), t),
        format!(
            "{checked} configurations, {bad} mismatches, {:.2} s (limit 10 s)",
            t.as_secs_f64()
        ),
    )
}

fn local_field_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=30);
        let inst = random_instance(&mut rng, n, &[-2, -1, 0, 0, 1, 3]);
        let form = BoltzmannForm::build(&inst);
        let x = Configuration((0..n).map(|_| rng.random_range(0..=1u8)).collect());
        let i = rng.random_range(0..n);
        let mut on = x.clone();
        on.0[i] = 1;
        let mut off = x.clone();
        off.0[i] = 0;
        let de = form.energy(&on).unwrap() - form.energy(&off).unwrap();
        if form.local_field(&x, i).unwrap() != -de {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("1000 triples, {bad} mismatches"))
}

fn sigmoid_centering() -> Outcome {
    let (_, s) = reference();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v = 1.8;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let hrs = rng.random_range(s.r_range[0]..=s.r_range[1]);
        let dev = NeuronDevice::new(Arc::clone(&s), hrs, Scheme::Ideal);
        let t = s.center_pulse_width(v, hrs).unwrap();
        worst = worst.max((dev.p_switch(v, t).unwrap() - 0.5).abs());
    }
    outcome(
        worst <= 1e-12,
        format!("max |P - 0.5| = {worst:.2e} over 100 HRS values (limit 1e-12)"),
    )
}

fn distribution_fidelity() -> Outcome {
    let (_, s) = reference();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let crit = ks_critical(100_000, 0.01);
    let (mut worst_d, mut worst_p) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let v = rng.random_range(s.v_range[0]..=s.v_range[1]);
        let hrs = rng.random_range(s.r_range[0]..=s.r_range[1]);
        let dev = NeuronDevice::new(Arc::clone(&s), hrs, Scheme::Ideal);
        let (mu, sigma) = dev.lognormal_params(v).unwrap();
        let t_pw = 10f64.powf(mu + sigma * rng.random_range(-1.5..1.5));
        let draws: Vec<f64> = (0..100_000).map(|_| dev.sample_tset(v, &mut rng).unwrap()).collect();
        let logs: Vec<f64> = draws.iter().map(|t| t.log10()).collect();
        worst_d = worst_d.max(ks_statistic(&logs, |x| normal_cdf((x - mu) / sigma)));
        let freq = draws.iter().filter(|&&t| t <= t_pw).count() as f64 / draws.len() as f64;
        worst_p = worst_p.max((freq - dev.p_switch(v, t_pw).unwrap()).abs());
    }
    outcome(
        worst_d < crit && worst_p <= 0.01,
        format!("max KS D = {worst_d:.5} (critical {crit:.5}), max |freq - P| = {worst_p:.4} (limit 0.01)"),
    )
}

fn surface_fit_recovery() -> Outcome {
    let t0 = Instant::now();
    let truth = [40.0, -45.0, 0.02, 10.0, -1e-5, -0.006];
    let mu = |v: f64, r: f64| {
        truth[0] + truth[1] * v + truth[2] * r + truth[3] * v * v + truth[4] * r * r + truth[5] * v * r
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<Measurement> = (0..10_000)
        .map(|_| {
            let v = rng.random_range(1.6..=2.2);
            let r = rng.random_range(10.0..=1000.0);
            let z: f64 = rng.sample(StandardNormal);
            Measurement {
                v_set: v,
                hrs_kohm: r,
                t_set_s: 10f64.powf(mu(v, r) + 0.3 * z),
            }
        })
        .collect();
    let fit = fit_surface(
        &samples,
        &FitOptions {
            hrs_axis: HrsAxis::Linear,
            ..FitOptions::default()
        },
    )
    .unwrap();
    let worst = fit
        .surface
        .mu_coeffs
        .0
        .iter()
        .zip(truth)
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max);
    let t = t0.elapsed();
    outcome(
        worst <= 0.05 && fit.r_squared >= 0.85 && within(Duration::from_secs(5), t),
        format!(
            "max relative coefficient error {:.2}% (limit 5%), R² = {:.4} (min 0.85), {:.2} s (limit 5 s)",
            100.0 * worst,
            fit.r_squared,
            t.as_secs_f64()
        ),
    )
}

fn gibbs_validation() -> Outcome {
    let t0 = Instant::now();
    let inst = MaxCutInstance::new(
        "g4",
        4,
        [(0, 1, 1), (0, 2, -1), (0, 3, 2), (1, 2, 1), (1, 3, 1), (2, 3, -1)],
    )
    .unwrap();
    let form = BoltzmannForm::build(&inst);
    let temperature = 1.5;
    let cfg = BoltzmannConfig {
        activation: Activation::Logistic { temperature },
        ..BoltzmannConfig::default()
    };
    let weights: Vec<f64> = (0..16u64)
        .map(|m| (-(form.energy(&Configuration::from_mask(4, m)).unwrap() as f64) / temperature).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let mut state = SamplerState::new(&form, Configuration::zeros(4), 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut cycle_rng = ChaCha8Rng::seed_from_u64(60);
    let iters = 1_000_000u64;
    let mut counts = [0u64; 16];
    for _ in 0..iters {
        state.step(&mut [], &cfg, &mut rng, &mut cycle_rng).unwrap();
        let idx = state
            .x
            .0
            .iter()
            .enumerate()
            .map(|(i, &b)| (b as usize) << i)
            .sum::<usize>();
        counts[idx] += 1;
    }
    let tv = 0.5
        * counts
            .iter()
            .zip(&weights)
            .map(|(&c, &w)| (c as f64 / iters as f64 - w / z).abs())
            .sum::<f64>();
    let t = t0.elapsed();
    outcome(
        tv <= 0.05 && within(Duration::from_secs(60), t),
        format!(
            "total variation {tv:.4} (limit 0.05) at T = {temperature}, {:.2} s (limit 60 s)",
            t.as_secs_f64()
        ),
    )
}

fn small_instance_optimality() -> Outcome {
    let t0 = Instant::now();
    let (_, s) = reference();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut hit, mut total) = (0usize, 0usize);
    for k in 0..20u64 {
        let n = rng.random_range(6..=16);
        let inst = generate_instance(n, 3.0, &[-1, 1], 700 + k).unwrap();
        let opt = brute_force_maxcut(&inst).unwrap().0;
        let cfg = BoltzmannConfig {
            max_iters: 100_000,
            runs: 25,
            seed: 70 + k,
            trace_stride: Some(100),
            ..BoltzmannConfig::default()
        };
        let (traces, _) = sampler::ensemble(&inst, &s, &cfg).unwrap();
        hit += traces.iter().filter(|t| t.best_cut as f64 >= 0.9 * opt as f64).count();
        total += traces.len();
    }
    let frac = hit as f64 / total as f64;
    let t = t0.elapsed();
    outcome(
        frac >= 0.95 && within(Duration::from_secs(300), t),
        format!(
            "{hit}/{total} runs within 10% of the optimum ({:.1}%, min 95%), {:.1} s (limit 300 s)",
            100.0 * frac,
            t.as_secs_f64()
        ),
    )
}

fn drift_contrast() -> Outcome {
    let (p, s) = reference();
    let hrs0 = s.hrs_for_mu(1.8, -5.0).unwrap();
    let run = |scheme| cycling_population(&s, scheme, 100, &p.drift, 1.8, hrs0, 200, 8).unwrap();
    let fixed = run(Scheme::FixedInput);
    let monitored = run(Scheme::Monitored);
    let (f, m) = (fixed.mu_drift_median, monitored.mu_drift_median);
    outcome(
        (0.5..=2.0).contains(&f) && m <= 0.05 && f >= 10.0 * m,
        format!(
            "median μ drift over 100 cycles: fixed-input {f:.3} decades (range 0.5-2.0), monitored {m:.4} (max 0.05), ratio {:.0}x (min 10x); σ drift {:.3} / {:.4}",
            f / m,
            fixed.sigma_drift_median,
            monitored.sigma_drift_median
        ),
    )
}

fn solvable_size_separation() -> Outcome {
    let t0 = Instant::now();
    let (p, s) = reference();
    let ladder: Vec<MaxCutInstance> = [25usize, 50, 125, 250, 500, 1000, 2000]
        .iter()
        .map(|&n| {
            let inst = generate_instance(n, 4.0, &[-1, 1], 1000 + n as u64).unwrap();
            let best = proxy_best_cut(&inst, &s, 4_000_000, 8, 99).unwrap();
            inst.with_best_known(best)
        })
        .collect();
    let cfg = BoltzmannConfig {
        max_iters: 1_000_000,
        runs: 10,
        seed: 5,
        ..BoltzmannConfig::default()
    };
    let fixed = max_solvable_size(&ladder, &s, Scheme::FixedInput, &p.drift, &cfg, Some(500)).unwrap();
    let monitored = max_solvable_size(&ladder, &s, Scheme::Monitored, &p.drift, &cfg, Some(500)).unwrap();
    for (name, r) in [("fixed-input", &fixed), ("monitored", &monitored)] {
        for c in &r.ladder {
            println!(
                "    {name:>11} n={:>4}: required {:>9} meaningful {:>7} {}",
                c.n,
                c.required.map_or("never".into(), |x| format!("{x:.0}")),
                c.meaningful,
                if c.solvable { "solvable" } else { "-" }
            );
        }
    }
    let t = t0.elapsed();
    outcome(
        monitored.size > 0 && monitored.size >= 10 * fixed.size && within(Duration::from_secs(1800), t),
        format!(
            "solvable size monitored {} vs fixed-input {} at m_hrs = {} (need >= 10x); largest passing rung {} / {}; {:.0} s (limit 1800 s)",
            monitored.size,
            fixed.size,
            p.drift.m_hrs,
            monitored.largest_passing,
            fixed.largest_passing,
            t.as_secs_f64()
        ),
    )
}

fn d2d_calibration() -> Outcome {
    let (_, s) = reference();
    let inst = generate_instance(125, 4.0, &[-1, 1], 77).unwrap();
    let cfg = BoltzmannConfig {
        max_iters: 100_000,
        runs: 20,
        seed: 10,
        ..BoltzmannConfig::default()
    };
    let r = d2d_experiment(&inst, &s, &[0.2], &cfg).unwrap();
    let raw = r.get(0.2, false).unwrap();
    let cal = r.get(0.2, true).unwrap();
    let spread_ratio = raw.mu_spread / cal.mu_spread;
    let err_ratio = cal.error_pct.abs() / raw.error_pct.abs();
    outcome(
        spread_ratio >= 5.0 && err_ratio <= 0.5,
        format!(
            "μ spread {:.3} -> {:.3} decades ({spread_ratio:.1}x, min 5x); settling error {:.2}% -> {:.2}% (ratio {err_ratio:.3}, max 0.5); {} unattainable",
            raw.mu_spread, cal.mu_spread, raw.error_pct, cal.error_pct, cal.unattainable
        ),
    )
}

fn cli(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_stochanneal"))
        .args(args)
        .env_remove("STOCHANNEAL_PARAMS")
        .current_dir(dir)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn cli_reproducibility() -> Outcome {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    let mut samples = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let v: f64 = rng.random_range(1.6..=2.2);
        let r: f64 = rng.random_range(10.0..=1000.0);
        let mu = -2.0 - 2.5 * v + 0.002 * r + rng.random_range(-0.4..0.4);
        samples.push(Measurement {
            v_set: v,
            hrs_kohm: r,
            t_set_s: 10f64.powf(mu),
        });
    }
    write_measurements(fs::File::create(dir.join("m.csv")).unwrap(), &samples).unwrap();
    let setup = cli(dir, &["gen", "--nodes", "40", "--seed", "3", "--out", "g.rudy"])
        && cli(dir, &["gen", "--nodes", "12", "--seed", "4", "--out", "small.rudy"]);
    let invocations: Vec<Vec<&str>> = vec![
        vec![
            "solve",
            "--instance",
            "g.rudy",
            "--scheme",
            "fixed-input",
            "--runs",
            "6",
            "--iters",
            "20000",
            "--seed",
            "9",
        ],
        vec![
            "solve",
            "--instance",
            "g.rudy",
            "--d2d-cv",
            "0.2",
            "--calibrate",
            "--runs",
            "6",
            "--jobs",
            "2",
        ],
        vec![
            "sweep-drift",
            "--sizes",
            "10,14",
            "--mhrs",
            "0.01,1",
            "--runs",
            "5",
            "--iters",
            "5000",
        ],
        vec![
            "sweep-d2d",
            "--instance",
            "g.rudy",
            "--cv",
            "0,0.2",
            "--runs",
            "10",
            "--iters",
            "5000",
        ],
        vec!["cycling", "--devices", "20", "--seed", "2"],
        vec!["calibrate", "--devices", "20", "--cv", "0.2"],
        vec!["fit", "--data", "m.csv"],
        vec!["gen", "--nodes", "30", "--seed", "8"],
        vec!["brute", "--instance", "small.rudy"],
    ];
    let mut failed = Vec::new();
    for (k, args) in invocations.iter().enumerate() {
        let first = format!("r{k}.csv");
        let again = format!("r{k}_replay.csv");
        let mut full = args.clone();
        full.extend(["--out", first.as_str()]);
        let manifest = format!("{first}.manifest.json");
        let ok = cli(dir, &full)
            && cli(dir, &["replay", manifest.as_str(), "--out", again.as_str()])
            && fs::read(dir.join(&first)).ok() == fs::read(dir.join(&again)).ok();
        if !ok {
            failed.push(args[0]);
        }
    }
    outcome(
        setup && failed.is_empty(),
        format!(
            "{} invocations replayed from their manifests, byte-identical outputs; failures: {:?}",
            invocations.len(),
            failed
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    // libtest flags such as --nocapture or a name filter are accepted and ignored
    let criteria: [Criterion; 11] = [
        ("energy identity", energy_identity),
        ("local field equals energy drop", local_field_identity),
        ("sigmoid centering", sigmoid_centering),
        ("Set-time distribution fidelity", distribution_fidelity),
        ("surface fit recovery", surface_fit_recovery),
        ("Gibbs loop against Boltzmann", gibbs_validation),
        ("small-instance optimality", small_instance_optimality),
        ("drift contrast", drift_contrast),
        ("solvable-size separation", solvable_size_separation),
        ("d2d calibration", d2d_calibration),
        ("CLI reproducibility", cli_reproducibility),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = check();
        if !o.pass {
            failures += 1;
        }
        println!(
            "acceptance {:>2} [{}] {name}: {} ({:.1} s)",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
