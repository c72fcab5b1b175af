use crate::error::{Error, Result};

/// Amplitude and cosine phase of one tone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneEstimate {
    pub amplitude: f64,
    /// Phase of `a·cos(2π·f·t + φ)`, rad.
    pub phase: f64,
}

/// Periods of `f` that `n` samples must hold to within this many cycles.
const COHERENCE_TOL: f64 = 1e-6;

/// Single-bin DFT of `x` at `freq_hz`, scaled so a sine of amplitude `a`
/// returns `a`.
///
/// The window must hold a whole number of periods of `freq_hz`. The record
/// mean is removed first; in a coherent window it is orthogonal to the bin.
pub fn goertzel(x: &[f64], sample_rate: f64, freq_hz: f64) -> Result<ToneEstimate> {
    let n = x.len();
    if n == 0 || !(freq_hz > 0.0 && freq_hz < sample_rate / 2.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "need a non-empty record and 0 < f < fs/2 (f = {freq_hz}, fs = {sample_rate})"
        )));
    }
    let periods = n as f64 * freq_hz / sample_rate;
    let k = libm::round(periods);
    if libm::fabs(periods - k) > COHERENCE_TOL || k < 1.0 {
        return Err(Error::NonCoherentWindow {
            freq_hz,
            samples: n,
            periods,
        });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let w = 2.0 * core::f64::consts::PI * k / n as f64;
    let (sw, cw) = libm::sincos(w);
    let coeff = 2.0 * cw;
    let (mut s1, mut s2) = (0.0, 0.0);
    for &v in x {
        let s0 = (v - mean) + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    // X[k] = e^{jω}·s1 − s2
    let re = cw * s1 - s2;
    let im = sw * s1;
    let scale = 2.0 / n as f64;
    Ok(ToneEstimate {
        amplitude: scale * libm::hypot(re, im),
        phase: libm::atan2(im, re),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn tone(n: usize, fs: f64, parts: &[(f64, f64)]) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                parts.iter().map(|(a, f)| a * libm::sin(2.0 * PI * f * t)).sum()
            })
            .collect()
    }

    #[test]
    fn unit_sine() {
        let fs = 100e3;
        let x = tone(10_000, fs, &[(1.0, 1e3)]);
        let e = goertzel(&x, fs, 1e3).unwrap();
        assert!((e.amplitude - 1.0).abs() < 1e-6);
        assert!((e.phase + PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn dc_is_invisible() {
        let x = alloc::vec![0.75; 10_000];
        assert!(goertzel(&x, 100e3, 1e3).unwrap().amplitude <= 1e-12);
    }

    #[test]
    fn separates_two_tones() {
        let fs = 1e6;
        let x = tone(100_000, fs, &[(1.0, 1e3), (0.1, 9e3)]);
        let e = goertzel(&x, fs, 9e3).unwrap();
        assert!((e.amplitude - 0.1).abs() < 1e-6);
    }

    #[test]
    fn rejects_partial_periods() {
        let x = alloc::vec![0.0; 1050];
        assert!(matches!(
            goertzel(&x, 100e3, 1e3),
            Err(Error::NonCoherentWindow { .. })
        ));
    }

    fn dft_bin(x: &[f64], k: usize) -> f64 {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (i, v) in x.iter().enumerate() {
            let a = -2.0 * PI * ((k * i) % n) as f64 / n as f64;
            re += (v - mean) * libm::cos(a);
            im += (v - mean) * libm::sin(a);
        }
        2.0 / n as f64 * libm::hypot(re, im)
    }

    proptest! {
        #[test]
        fn agrees_with_direct_dft(
            x in prop::collection::vec(-1.0..1.0f64, 256..1024),
            k in 1usize..100,
        ) {
            let n = x.len();
            prop_assume!(2 * k < n);
            let fs = 1000.0;
            let f = k as f64 * fs / n as f64;
            let g = goertzel(&x, fs, f).unwrap().amplitude;
            let d = dft_bin(&x, k);
            prop_assert!((g - d).abs() <= 1e-9 * d.max(1e-3), "{} vs {}", g, d);
        }
    }
}
