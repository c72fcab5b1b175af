//! Second-order mechanical resonator with unity static gain:
//! `x'' + (ω₀/Q)·x' + ω₀²·x = ω₀²·drive(t)`, `ΔR = force_to_dr · x`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::SensorParams;

#[inline]
pub(crate) fn derivative(s: &SensorParams, x: f64, v: f64, drive: f64) -> (f64, f64) {
    let w0 = 2.0 * core::f64::consts::PI * s.f_res;
    (v, w0 * w0 * (drive - x) - w0 / s.q_factor * v)
}

/// `ΔR(t)` on the grid `t_k = k / sample_rate`, `k < samples`, starting from
/// rest. `drive` is evaluated at the RK4 stage times.
pub fn mech_delta_r<F>(s: &SensorParams, drive: F, sample_rate: f64, samples: usize) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64,
{
    let dt = 1.0 / sample_rate;
    let (mut x, mut v) = (0.0, 0.0);
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = k as f64 * dt;
        out.push(s.force_to_dr * x);
        let d_mid = drive(t + 0.5 * dt);
        let (k1x, k1v) = derivative(s, x, v, drive(t));
        let (k2x, k2v) = derivative(s, x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, d_mid);
        let (k3x, k3v) = derivative(s, x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, d_mid);
        let (k4x, k4v) = derivative(s, x + dt * k3x, v + dt * k3v, drive(t + dt));
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if !(x.is_finite() && v.is_finite()) || libm::fabs(x) > 1e12 {
            return Err(Error::Diverged { time_s: t + dt });
        }
    }
    Ok(out)
}

/// Steady-state amplitude gain of the resonator at `f`.
pub fn gain_at(s: &SensorParams, f: f64) -> f64 {
    let r = f / s.f_res;
    let re = 1.0 - r * r;
    let im = r / s.q_factor;
    1.0 / libm::sqrt(re * re + im * im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sensor() -> SensorParams {
        SensorParams {
            f_res: 22e3,
            q_factor: 100.0,
            force_to_dr: 2.0,
            drive_amp: 1.0,
        }
    }

    #[test]
    fn dc_drive_settles_to_static_gain() {
        let s = SensorParams {
            q_factor: 2.0,
            ..sensor()
        };
        let dr = mech_delta_r(&s, |_| 0.5, 2.2e6, 20_000).unwrap();
        assert!((dr.last().unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn analytic_gain_values() {
        let s = sensor();
        assert!((gain_at(&s, s.f_res) - 100.0).abs() < 1e-9);
        let g = gain_at(&s, s.f_res / 10.0);
        assert!((g - 1.0101).abs() < 1e-3, "{g}");
    }
}
