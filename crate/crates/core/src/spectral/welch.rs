use alloc::vec::Vec;

use super::fft::fft_in_place;
use crate::error::{Error, Result};

/// One-sided power spectral density, V²/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub density: Vec<f64>,
    /// Number of averaged segments.
    pub segments: usize,
}

impl Psd {
    /// Mean density over bins with `lo <= f <= hi`.
    pub fn mean_in_band(&self, lo: f64, hi: f64) -> f64 {
        let (sum, count) = self
            .freqs
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| (lo..=hi).contains(*f))
            .fold((0.0, 0usize), |(s, c), (_, d)| (s + d, c + 1));
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Trapezoidal integral over the whole grid, V².
    pub fn integrate(&self) -> f64 {
        self.freqs
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(f, d)| 0.5 * (d[0] + d[1]) * (f[1] - f[0]))
            .sum()
    }
}

/// Hann-windowed averaged periodogram.
///
/// `segment_len` must be a power of two no longer than `x`; `overlap` is the
/// fraction of each segment shared with the next, in `[0, 1)`. Normalized so
/// white noise of one-sided density `d` reads `d²` in every bin but DC.
pub fn welch_psd(x: &[f64], sample_rate: f64, segment_len: usize, overlap: f64) -> Result<Psd> {
    if !segment_len.is_power_of_two() || segment_len < 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "segment length {segment_len} is not a power of two"
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidArgument(alloc::format!(
            "overlap {overlap} outside [0, 1)"
        )));
    }
    if x.len() < segment_len {
        return Err(Error::RecordTooShort {
            len: x.len(),
            segment_len,
        });
    }
    let n = segment_len;
    let step = (libm::round(n as f64 * (1.0 - overlap)) as usize).max(1);
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * libm::cos(2.0 * core::f64::consts::PI * i as f64 / n as f64))
        .collect();
    let power: f64 = window.iter().map(|w| w * w).sum();
    let bins = n / 2 + 1;
    let mut acc = alloc::vec![0.0; bins];
    let mut re = alloc::vec![0.0; n];
    let mut im = alloc::vec![0.0; n];
    let mut segments = 0;
    let mut start = 0;
    while start + n <= x.len() {
        for i in 0..n {
            re[i] = x[start + i] * window[i];
            im[i] = 0.0;
        }
        fft_in_place(&mut re, &mut im);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += re[k] * re[k] + im[k] * im[k];
        }
        segments += 1;
        start += step;
    }
    let scale = 1.0 / (sample_rate * power * segments as f64);
    let density = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
            a * scale * one_sided
        })
        .collect();
    let freqs = (0..bins).map(|k| k as f64 * sample_rate / n as f64).collect();
    Ok(Psd {
        freqs,
        density,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transient::Gaussian;

    #[test]
    fn zero_record_gives_zero_psd() {
        let p = welch_psd(&[0.0; 4096], 1e3, 1024, 0.5).unwrap();
        assert!(p.density.iter().all(|d| *d == 0.0));
        assert_eq!(p.segments, 7);
    }

    #[test]
    fn white_noise_calibration() {
        let fs = 100e3;
        let d = 3e-6;
        let sigma = d * libm::sqrt(fs / 2.0);
        let mut g = Gaussian::new(11);
        let x: Vec<f64> = (0..1 << 18).map(|_| sigma * g.sample()).collect();
        let p = welch_psd(&x, fs, 1024, 0.5).unwrap();
        assert!(p.segments >= 64);
        let m = p.mean_in_band(1e3, 45e3);
        assert!((m / (d * d) - 1.0).abs() < 0.1, "{}", m / (d * d));
    }

    #[test]
    fn tone_power_by_parseval() {
        let fs = 48e3;
        let a = 0.3;
        let x: Vec<f64> = (0..1 << 16)
            .map(|i| a * libm::sin(2.0 * core::f64::consts::PI * 1234.5 * i as f64 / fs))
            .collect();
        let p = welch_psd(&x, fs, 4096, 0.5).unwrap();
        let total = p.integrate();
        assert!((total / (a * a / 2.0) - 1.0).abs() < 0.05, "{total}");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            welch_psd(&[0.0; 100], 1.0, 128, 0.5),
            Err(Error::RecordTooShort { .. })
        ));
        assert!(welch_psd(&[0.0; 1000], 1.0, 100, 0.5).is_err());
        assert!(welch_psd(&[0.0; 1000], 1.0, 64, 1.0).is_err());
    }
}
