use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use stochanneal::device::{fit_surface, FitOptions, Measurement};
use stochanneal::io::generate_instance;
use stochanneal::sampler;
use stochanneal::{BoltzmannConfig, DeviceParams, Scheme};

fn sampler_steps(c: &mut Criterion) {
    let surface = Arc::new(DeviceParams::reference().surface);
    let iters = 100_000;
    let mut group = c.benchmark_group("sampler");
    group.throughput(Throughput::Elements(iters));
    for n in [125usize, 2000] {
        let inst = generate_instance(n, 4.0, &[-1, 1], n as u64).unwrap();
        for scheme in [Scheme::Ideal, Scheme::FixedInput] {
            let cfg = BoltzmannConfig {
                max_iters: iters,
                scheme,
                drift: DeviceParams::reference().drift,
                ..BoltzmannConfig::default()
            };
            group.bench_with_input(BenchmarkId::new(scheme.as_str(), n), &inst, |b, inst| {
                b.iter(|| sampler::run(black_box(inst), &surface, &cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn surface_fit(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let samples: Vec<Measurement> = (0..10_000)
        .map(|k| {
            let v = 1.6 + 0.6 * (k % 97) as f64 / 96.0;
            let r = 10.0 + 990.0 * (k % 101) as f64 / 100.0;
            let z: f64 = StandardNormal.sample(&mut rng);
            Measurement {
                v_set: v,
                hrs_kohm: r,
                t_set_s: 10f64.powf(-2.0 - 2.0 * v + 0.002 * r + 0.3 * z),
            }
        })
        .collect();
    c.bench_function("fit_surface/10k", |b| {
        b.iter(|| fit_surface(black_box(&samples), &FitOptions::default()).unwrap())
    });
}

criterion_group!(benches, sampler_steps, surface_fit);
criterion_main!(benches);
