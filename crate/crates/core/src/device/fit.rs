use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::surface::{BiQuadratic, DeviceSurface, HrsAxis};
use crate::error::{Error, Result};

/// One Set-time measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    /// |V_Set| in volts.
    pub v_set: f64,
    /// Initial HRS in kΩ.
    pub hrs_kohm: f64,
    /// Set time in seconds.
    pub t_set_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub hrs_axis: HrsAxis,
    /// (voltage bins, HRS bins) for the σ estimate.
    pub grid: (usize, usize),
    /// Cells with fewer points are skipped.
    pub min_per_cell: usize,
    pub sigma_floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            hrs_axis: HrsAxis::Linear,
            grid: (5, 5),
            min_per_cell: 5,
            sigma_floor: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFit {
    pub surface: DeviceSurface,
    /// Coefficient of determination of the μ fit on log10(t_Set).
    pub r_squared: f64,
    /// Cells that contributed to the σ fit.
    pub sigma_cells: usize,
}

const MIN_SAMPLES: usize = 12;

fn distinct(values: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Least-squares bi-quadratic in a column-scaled basis; rank-checked via SVD.
fn least_squares(rows: &[[f64; 6]], y: &[f64]) -> Result<[f64; 6]> {
    let n = rows.len();
    let mut scale = [0.0f64; 6];
    for row in rows {
        for (s, x) in scale.iter_mut().zip(row) {
            *s = s.max(x.abs());
        }
    }
    for s in scale.iter_mut() {
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let a = DMatrix::from_fn(n, 6, |i, j| rows[i][j] / scale[j]);
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-10) {
        return Err(Error::DegenerateDesign(format!(
            "design matrix is rank deficient (singular values {smin:.3e} / {smax:.3e})"
        )));
    }
    let sol = svd.solve(&b, 0.0).map_err(|e| Error::DegenerateDesign(e.to_string()))?;
    let mut out = [0.0; 6];
    for j in 0..6 {
        out[j] = sol[j] / scale[j];
    }
    Ok(out)
}

/// Fits μ (least squares on log10 t) and σ (per-cell residual spread) surfaces.
pub fn fit_surface(samples: &[Measurement], opts: &FitOptions) -> Result<SurfaceFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::DegenerateDesign(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if let Some(bad) = samples.iter().find(|s| !(s.t_set_s > 0.0)) {
        return Err(Error::NonPositiveTime(bad.t_set_s));
    }
    if opts.hrs_axis == HrsAxis::Log10 {
        if let Some(bad) = samples.iter().find(|s| !(s.hrs_kohm > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "log10 axis needs positive HRS, got {}",
                bad.hrs_kohm
            )));
        }
    }
    if distinct(samples.iter().map(|s| s.v_set)) < 3 || distinct(samples.iter().map(|s| s.hrs_kohm)) < 3 {
        return Err(Error::DegenerateDesign(
            "need at least 3 distinct voltages and 3 distinct HRS values".into(),
        ));
    }

    let coords: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (s.v_set, opts.hrs_axis.coordinate(s.hrs_kohm)))
        .collect();
    let y: Vec<f64> = samples.iter().map(|s| s.t_set_s.log10()).collect();
    let rows: Vec<[f64; 6]> = coords.iter().map(|&(v, x)| BiQuadratic::basis(v, x)).collect();
    let mu = BiQuadratic(least_squares(&rows, &y)?);

    let residuals: Vec<f64> = coords.iter().zip(&y).map(|(&(v, x), &t)| t - mu.eval(v, x)).collect();
    let mean_y = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|t| (t - mean_y).powi(2)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    let (sigma, sigma_cells) = fit_sigma(&coords, &residuals, opts)?;

    let v_range = minmax(samples.iter().map(|s| s.v_set));
    let r_range = minmax(samples.iter().map(|s| s.hrs_kohm));
    let surface = DeviceSurface::new(mu.0, sigma.0, v_range, r_range, opts.sigma_floor, opts.hrs_axis)?;
    Ok(SurfaceFit {
        surface,
        r_squared,
        sigma_cells,
    })
}

fn minmax(it: impl Iterator<Item = f64>) -> [f64; 2] {
    it.fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], x| [lo.min(x), hi.max(x)])
}

fn bin(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    (((x - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1)
}

/// σ surface from residual standard deviations binned on a (V, HRS) grid.
/// Falls back to the pooled residual spread when too few cells qualify.
fn fit_sigma(coords: &[(f64, f64)], residuals: &[f64], opts: &FitOptions) -> Result<(BiQuadratic, usize)> {
    let (nv, nx) = (opts.grid.0.max(1), opts.grid.1.max(1));
    let [v_lo, v_hi] = minmax(coords.iter().map(|c| c.0));
    let [x_lo, x_hi] = minmax(coords.iter().map(|c| c.1));
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); nv * nx];
    for (k, &(v, x)) in coords.iter().enumerate() {
        cells[bin(v, v_lo, v_hi, nv) * nx + bin(x, x_lo, x_hi, nx)].push(k);
    }

    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for members in cells.iter().filter(|c| c.len() >= opts.min_per_cell.max(2)) {
        let m = members.len() as f64;
        let mean_r = members.iter().map(|&k| residuals[k]).sum::<f64>() / m;
        let var = members.iter().map(|&k| (residuals[k] - mean_r).powi(2)).sum::<f64>() / (m - 1.0);
        let cv = members.iter().map(|&k| coords[k].0).sum::<f64>() / m;
        let cx = members.iter().map(|&k| coords[k].1).sum::<f64>() / m;
        rows.push(BiQuadratic::basis(cv, cx));
        targets.push(var.sqrt());
    }

    if rows.len() >= 6 {
        if let Ok(c) = least_squares(&rows, &targets) {
            return Ok((BiQuadratic(c), rows.len()));
        }
    }
    let n = residuals.len() as f64;
    let pooled = (residuals.iter().map(|r| r * r).sum::<f64>() / (n - 6.0).max(1.0)).sqrt();
    log::warn!(
        "σ surface: only {} usable cells, falling back to pooled σ = {pooled:.4}",
        rows.len()
    );
    Ok((BiQuadratic::constant(pooled), rows.len()))
}
