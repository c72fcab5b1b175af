use alloc::vec::Vec;

use super::goertzel::goertzel;
use crate::error::{Error, Result};
use crate::model::{SimConfig, SourceKind, SourceSpec, Target, Topology};
use crate::transient::{self, Channel, TimeSeries};

/// Stimulus and analysis settings of a transient PSRR measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsrrOptions {
    /// Mismatch tone amplitude `δ`, Ω.
    pub signal_amplitude: f64,
    /// Rail tone amplitude `ε`, V.
    pub supply_amplitude: f64,
    /// Rail carrying the supply tone.
    pub supply_target: Target,
    /// Leading fraction of the record discarded before analysis.
    pub settle_fraction: f64,
    /// Largest PSRR change allowed when both tones are halved, dB.
    pub linearity_tol_db: f64,
    /// Supply-tone amplitude below this fraction of the signal-tone
    /// amplitude is reported as infinite rejection.
    pub floor_ratio: f64,
}

impl Default for PsrrOptions {
    fn default() -> Self {
        Self {
            signal_amplitude: 0.1,
            supply_amplitude: 1e-3,
            supply_target: Target::Vcc,
            settle_fraction: 0.5,
            linearity_tol_db: 0.1,
            floor_ratio: 1e-7,
        }
    }
}

/// One PSRR measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsrrReport {
    /// Supply-tone frequency after snapping to the analysis grid, Hz.
    pub freq_hz: f64,
    pub signal_freq_hz: f64,
    /// Output tone per ohm of mismatch, V/Ω.
    pub gain_signal: f64,
    /// Output tone per volt on the rail, V/V.
    pub gain_supply: f64,
    /// `20·log10(gain_signal/gain_supply)`; `+inf` below the floor.
    pub psrr_db: f64,
    pub topology: Topology,
}

impl PsrrReport {
    pub fn psrr_inv_db(&self) -> f64 {
        -self.psrr_db
    }
}

/// Nearest frequency with a whole number of periods in the analysis window
/// of `config`.
pub fn coherent_frequency(config: &SimConfig, settle_fraction: f64, f: f64) -> f64 {
    let bin = analysis_bin(config, settle_fraction);
    libm::round(f / bin).max(1.0) * bin
}

fn analysis_bin(config: &SimConfig, settle_fraction: f64) -> f64 {
    let n = config.samples();
    let start = libm::floor(settle_fraction * n as f64) as usize;
    config.sample_rate / (n - start) as f64
}

/// Channel a topology is judged on: the bridge output without feedback, the
/// differential amplifier output with it.
pub fn measured_output(ts: &TimeSeries, topology: Topology) -> Vec<f64> {
    if topology.has_feedback() {
        ts.differential_output()
    } else {
        ts.channel(Channel::VDiff).to_vec()
    }
}

/// Measures PSRR by injecting a mismatch tone at `f_signal` and a rail tone
/// at `f_supply` in the same run.
///
/// Every AC source of `config` is replaced by the two tones; DC sources are
/// kept. Both frequencies are snapped to the analysis grid first. The
/// measurement is repeated with both tones halved and must agree within the
/// linearity tolerance.
pub fn psrr_from_transient(
    config: &SimConfig,
    f_signal: f64,
    f_supply: f64,
    opts: &PsrrOptions,
) -> Result<PsrrReport> {
    let bin = analysis_bin(config, opts.settle_fraction);
    let k_sig = libm::round(f_signal / bin).max(1.0) as u64;
    let k_sup = libm::round(f_supply / bin).max(1.0) as u64;
    if k_sig == k_sup {
        return Err(Error::InvalidArgument(alloc::format!(
            "signal and supply tones share a bin ({f_signal} Hz, {f_supply} Hz)"
        )));
    }
    for n in 2..=5 {
        if k_sup == n * k_sig || k_sig == n * k_sup {
            return Err(Error::InvalidArgument(alloc::format!(
                "signal tone {f_signal} Hz and supply tone {f_supply} Hz are harmonically related (order {n})"
            )));
        }
    }
    let (fs_sig, fs_sup) = (k_sig as f64 * bin, k_sup as f64 * bin);
    let full = measure_once(config, fs_sig, fs_sup, opts, 1.0)?;
    let half = measure_once(config, fs_sig, fs_sup, opts, 0.5)?;
    let delta = full.psrr_db - half.psrr_db;
    let agree = (full.psrr_db.is_infinite() && full.psrr_db == half.psrr_db)
        || libm::fabs(delta) <= opts.linearity_tol_db;
    if !agree {
        return Err(Error::NonlinearRegime {
            delta_db: if delta.is_nan() { f64::INFINITY } else { delta },
        });
    }
    Ok(full)
}

fn measure_once(
    config: &SimConfig,
    f_signal: f64,
    f_supply: f64,
    opts: &PsrrOptions,
    scale: f64,
) -> Result<PsrrReport> {
    let delta = opts.signal_amplitude * scale;
    let eps = opts.supply_amplitude * scale;
    let mut cfg = config.clone();
    cfg.sources.retain(|s| s.kind == SourceKind::Dc);
    cfg.sources.push(SourceSpec::tone(Target::DeltaR, delta, f_signal));
    cfg.sources.push(SourceSpec::tone(opts.supply_target, eps, f_supply));
    let ts = transient::run(&cfg)?;
    let window = transient::settle_and_window(&ts, opts.settle_fraction, &[f_signal, f_supply])?;
    let y = measured_output(&window, cfg.topology);
    let fs = window.sample_rate();
    let a_sig = goertzel(&y, fs, f_signal)?.amplitude;
    let a_sup = goertzel(&y, fs, f_supply)?.amplitude;
    let gain_signal = a_sig / delta;
    let gain_supply = a_sup / eps;
    let psrr_db = if a_sup <= opts.floor_ratio * a_sig {
        f64::INFINITY
    } else {
        crate::db20(gain_signal / gain_supply)
    };
    Ok(PsrrReport {
        freq_hz: f_supply,
        signal_freq_hz: f_signal,
        gain_signal,
        gain_supply,
        psrr_db,
        topology: cfg.topology,
    })
}

/// [`psrr_from_transient`] at every supply frequency of `f_grid`, keeping the
/// signal tone fixed.
pub fn psrr_sweep(
    config: &SimConfig,
    f_signal: f64,
    f_grid: &[f64],
    opts: &PsrrOptions,
) -> Result<Vec<PsrrReport>> {
    if f_grid.is_empty() {
        return Err(Error::InvalidArgument("frequency grid is empty".into()));
    }
    f_grid
        .iter()
        .map(|&f| psrr_from_transient(config, f_signal, f, opts))
        .collect()
}
