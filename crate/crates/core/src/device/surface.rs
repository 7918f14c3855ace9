use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the HRS coordinate enters the bi-quadratic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HrsAxis {
    /// HRS in kΩ.
    #[default]
    Linear,
    /// log10 of HRS in kΩ.
    Log10,
}

impl HrsAxis {
    #[inline]
    pub fn coordinate(self, r_kohm: f64) -> f64 {
        match self {
            HrsAxis::Linear => r_kohm,
            HrsAxis::Log10 => r_kohm.log10(),
        }
    }
}

/// Bi-quadratic in (V, x): `c00 + c10·V + c01·x + c20·V² + c02·x² + c11·V·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BiQuadratic(pub [f64; 6]);

impl BiQuadratic {
    pub const fn constant(c: f64) -> Self {
        BiQuadratic([c, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    #[inline]
    pub fn eval(&self, v: f64, x: f64) -> f64 {
        let [c00, c10, c01, c20, c02, c11] = self.0;
        c00 + c10 * v + c01 * x + c20 * v * v + c02 * x * x + c11 * v * x
    }

    /// Regressor row matching the coefficient order.
    #[inline]
    pub fn basis(v: f64, x: f64) -> [f64; 6] {
        [1.0, v, x, v * v, x * x, v * x]
    }
}

/// Fitted μ and σ surfaces of log10(t_Set) over (|V_Set|, HRS).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceSurface {
    pub mu_coeffs: BiQuadratic,
    pub sigma_coeffs: BiQuadratic,
    /// Volts.
    pub v_range: [f64; 2],
    /// kΩ.
    pub r_range: [f64; 2],
    /// Decades.
    pub sigma_floor: f64,
    #[serde(default)]
    pub hrs_axis: HrsAxis,
}

impl DeviceSurface {
    pub fn new(
        mu_coeffs: [f64; 6],
        sigma_coeffs: [f64; 6],
        v_range: [f64; 2],
        r_range: [f64; 2],
        sigma_floor: f64,
        hrs_axis: HrsAxis,
    ) -> Result<Self> {
        let surface = DeviceSurface {
            mu_coeffs: BiQuadratic(mu_coeffs),
            sigma_coeffs: BiQuadratic(sigma_coeffs),
            v_range,
            r_range,
            sigma_floor,
            hrs_axis,
        };
        surface.validate()?;
        Ok(surface)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self
            .mu_coeffs
            .0
            .iter()
            .chain(self.sigma_coeffs.0.iter())
            .all(|c| c.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite surface coefficient".into()));
        }
        if !(self.v_range[0] < self.v_range[1]) || !self.v_range.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad v_range {:?}", self.v_range)));
        }
        if !(self.r_range[0] < self.r_range[1]) || !self.r_range.iter().all(|r| r.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad r_range {:?}", self.r_range)));
        }
        if self.hrs_axis == HrsAxis::Log10 && self.r_range[0] <= 0.0 {
            return Err(Error::InvalidParameter("log10 HRS axis needs r_range > 0".into()));
        }
        if !(self.sigma_floor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_floor must be > 0, got {}",
                self.sigma_floor
            )));
        }
        Ok(())
    }

    pub fn contains(&self, v: f64, r: f64) -> bool {
        v >= self.v_range[0] && v <= self.v_range[1] && r >= self.r_range[0] && r <= self.r_range[1]
    }

    fn check(&self, v: f64, r: f64) -> Result<()> {
        if self.contains(v, r) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                v,
                r,
                v_lo: self.v_range[0],
                v_hi: self.v_range[1],
                r_lo: self.r_range[0],
                r_hi: self.r_range[1],
            })
        }
    }

    pub fn clamp_hrs(&self, r: f64) -> f64 {
        r.clamp(self.r_range[0], self.r_range[1])
    }

    /// μ of log10(t_Set / s) at `v` volts and `r` kΩ.
    pub fn eval_mu(&self, v: f64, r: f64) -> Result<f64> {
        self.check(v, r)?;
        Ok(self.mu_unchecked(v, r))
    }

    /// σ of log10(t_Set / s), clamped below at `sigma_floor`.
    pub fn eval_sigma(&self, v: f64, r: f64) -> Result<f64> {
        self.check(v, r)?;
        Ok(self.sigma_unchecked(v, r))
    }

    /// Both parameters in one pass, sharing the axis transform.
    pub fn eval(&self, v: f64, r: f64) -> Result<(f64, f64)> {
        self.check(v, r)?;
        let x = self.hrs_axis.coordinate(r);
        Ok((
            self.mu_coeffs.eval(v, x),
            self.sigma_coeffs.eval(v, x).max(self.sigma_floor),
        ))
    }

    #[inline]
    pub(crate) fn mu_unchecked(&self, v: f64, r: f64) -> f64 {
        self.mu_coeffs.eval(v, self.hrs_axis.coordinate(r))
    }

    #[inline]
    pub(crate) fn sigma_unchecked(&self, v: f64, r: f64) -> f64 {
        self.sigma_coeffs
            .eval(v, self.hrs_axis.coordinate(r))
            .max(self.sigma_floor)
    }

    /// Pulse width that centres the switching sigmoid at `v_center` for a
    /// zero-offset device at `hrs`: the median of t_Set there.
    pub fn center_pulse_width(&self, v_center: f64, hrs: f64) -> Result<f64> {
        Ok(10f64.powf(self.eval_mu(v_center, hrs)?))
    }

    /// HRS at which μ(v, ·) hits `mu`, searched by bisection over `r_range`.
    pub fn hrs_for_mu(&self, v: f64, mu: f64) -> Result<f64> {
        let [lo, hi] = self.r_range;
        self.check(v, lo)?;
        let samples = 256;
        let mut prev = self.mu_unchecked(v, lo);
        let mut dir = 0i8;
        for k in 1..=samples {
            let r = lo + (hi - lo) * k as f64 / samples as f64;
            let cur = self.mu_unchecked(v, r);
            let d = if cur > prev {
                1
            } else if cur < prev {
                -1
            } else {
                0
            };
            if d != 0 {
                if dir != 0 && d != dir {
                    return Err(Error::NonMonotone(v));
                }
                dir = d;
            }
            prev = cur;
        }
        let (m_lo, m_hi) = (self.mu_unchecked(v, lo), self.mu_unchecked(v, hi));
        let (min, max) = (m_lo.min(m_hi), m_lo.max(m_hi));
        if !(mu >= min && mu <= max) {
            return Err(Error::Unattainable {
                target: mu,
                lo: min,
                hi: max,
            });
        }
        let increasing = m_hi >= m_lo;
        let (mut a, mut b) = (lo, hi);
        let mut mid = 0.5 * (a + b);
        for _ in 0..200 {
            mid = 0.5 * (a + b);
            let m = self.mu_unchecked(v, mid);
            if (m - mu).abs() <= 1e-9 {
                break;
            }
            if (m < mu) == increasing {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(mid)
    }
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}
