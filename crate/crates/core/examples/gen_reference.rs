//! Regenerates `data/anchor_measurements.csv` and `data/reference_params.json`.
//!
//! The anchor table is drawn from a smooth lognormal Set-time surface on a
//! 13 × 13 (V, log10 HRS) grid and then fitted exactly as a user's measurements
//! would be. Run with `cargo run -p stochanneal --example gen_reference`.

use std::fs::File;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use stochanneal::device::{fit_surface, DeviceParams, DriftModel, FitOptions, HrsAxis, Measurement};
use stochanneal::io::write_measurements;

const SAMPLES_PER_POINT: usize = 30;

fn anchor_mu(v: f64, l: f64) -> f64 {
    let (dv, dl) = (v - 1.8, l - 2.0);
    -5.0 - 4.0 * dv + 2.1 * dl + 2.5 * dv * dv - 0.1 * dl * dl - 1.5 * dv * dl
}

fn anchor_sigma(v: f64, l: f64) -> f64 {
    0.4 - 0.08 * (v - 1.8) + 0.22 * (l - 2.0)
}

fn main() -> stochanneal::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_617);
    let mut samples = Vec::new();
    for i in 0..13 {
        let v = 1.6 + 0.05 * i as f64;
        for j in 0..13 {
            let l = 1.0 + j as f64 / 6.0;
            let r = 10f64.powf(l);
            for _ in 0..SAMPLES_PER_POINT {
                let z: f64 = StandardNormal.sample(&mut rng);
                samples.push(Measurement {
                    v_set: v,
                    hrs_kohm: r,
                    t_set_s: 10f64.powf(anchor_mu(v, l) + anchor_sigma(v, l) * z),
                });
            }
        }
    }
    write_measurements(File::create(data.join("anchor_measurements.csv"))?, &samples)?;

    let fit = fit_surface(
        &samples,
        &FitOptions {
            hrs_axis: HrsAxis::Log10,
            ..FitOptions::default()
        },
    )?;
    eprintln!("R² = {:.4}, σ cells = {}", fit.r_squared, fit.sigma_cells);
    let params = DeviceParams {
        surface: fit.surface,
        drift: DriftModel {
            m_hrs: 0.01,
            s_rw: 40.0,
            hrs_tolerance: 0.1,
        },
    };
    std::fs::write(data.join("reference_params.json"), params.to_json()? + "\n")?;
    Ok(())
}
