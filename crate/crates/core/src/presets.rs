//! Default scenarios behind the canned experiments.
//!
//! Amplitudes, device sizes and amplifier parameters are desk-scale
//! assumptions chosen so each scenario is well inside the triode region and
//! the fixed-step integrator's stability margin. Frequencies follow the
//! figures they reproduce.

use crate::bridge::mismatch_for_attenuation;
use crate::model::{
    AmpParams, BridgeParams, LnaParams, MosParams, Polarity, RcParams, SensorParams, SimConfig,
    SourceSpec, Target, Topology,
};

pub const R_NOMINAL: f64 = 1000.0;
pub const VCC: f64 = 5.0;

/// Stand-alone supply attenuation the default mismatch produces, dB.
pub const ATTENUATION_DB: f64 = 49.5;

/// Mismatch giving [`ATTENUATION_DB`] on a 1 kΩ bridge (about 13.5 Ω).
pub fn default_mismatch() -> f64 {
    mismatch_for_attenuation(R_NOMINAL, ATTENUATION_DB)
}

/// Mismatch of the transient demonstration.
pub const FIG7_MISMATCH: f64 = 13.4;
pub const FIG7_SIGNAL_HZ: f64 = 1e3;
pub const FIG7_NOISE_HZ: f64 = 9e3;
/// Mismatch tone amplitude, Ω.
pub const FIG7_SIGNAL_OHM: f64 = 1.0;
/// Rail tone amplitude, V.
pub const FIG7_NOISE_V: f64 = 10e-3;

/// Triode device for the directly driven loops (100 Ω at bias, β = 100 Ω/V).
pub fn fig7_mos(polarity: Polarity) -> MosParams {
    MosParams {
        polarity,
        kprime_wl: 1e-2,
        vth_abs: 0.7,
        vgs_bias_abs: 1.7,
    }
}

/// Slow amplifier that keeps the directly driven loop within the
/// integrator's bandwidth (closed-loop bandwidth about 11 kHz).
pub fn fig7_amp() -> AmpParams {
    AmpParams {
        gain_dc: 1000.0,
        pole_hz: 100.0,
        sat_v: 1.5,
        input_noise_density: 6.4e-9,
    }
}

/// Mismatch tone at 1 kHz plus a 9 kHz tone on `noise_rail`.
pub fn fig7(topology: Topology, noise_rail: Target) -> SimConfig {
    let mut c = SimConfig::new(
        topology,
        BridgeParams::with_mismatch(R_NOMINAL, FIG7_MISMATCH, VCC),
        fig7_amp(),
    )
    .with_timing(1e6, 50e-3)
    .with_source(SourceSpec::tone(Target::DeltaR, FIG7_SIGNAL_OHM, FIG7_SIGNAL_HZ))
    .with_source(SourceSpec::tone(noise_rail, FIG7_NOISE_V, FIG7_NOISE_HZ));
    if let Some(p) = topology.device_polarity() {
        c = c.with_mos(fig7_mos(p));
    }
    c
}

/// PMOS device for the gate-filtered loop: 2.5 V overdrive, 100 Ω at bias,
/// β = 40 Ω/V.
pub fn compensated_mos() -> MosParams {
    MosParams {
        polarity: Polarity::Pmos,
        kprime_wl: 4e-3,
        vth_abs: 0.7,
        vgs_bias_abs: 3.2,
    }
}

/// Gate filter corner, Hz.
pub const RC_CORNER_HZ: f64 = 10.0;
pub const RC_RESISTOR: f64 = 1e6;

pub fn compensated_rc(corner_hz: f64) -> RcParams {
    RcParams::with_corner(RC_RESISTOR, corner_hz)
}

pub const FIG9_SIGNAL_HZ: f64 = 720.0;

/// Stand-alone or gate-compensated bridge with the default mismatch; no
/// sources (the PSRR harness adds its own tones).
pub fn fig9(topology: Topology) -> SimConfig {
    let amp = AmpParams {
        gain_dc: 2500.0,
        pole_hz: 100e3,
        sat_v: 4.0,
        input_noise_density: 0.0,
    };
    let mut c = SimConfig::new(
        topology,
        BridgeParams::with_mismatch(R_NOMINAL, default_mismatch(), VCC),
        amp,
    )
    .with_timing(5e6, 50e-3);
    if topology.has_feedback() {
        c = c.with_mos(compensated_mos());
    }
    if topology == Topology::RcCompensated {
        c = c.with_rc(compensated_rc(RC_CORNER_HZ));
    }
    c
}

/// Resonant carrier of the sensor, Hz.
pub const CARRIER_HZ: f64 = 22e3;
pub const TABLE1_SIGNAL_HZ: f64 = 15e3;
/// Overall chain gain all three architectures are normalized to, dB.
pub const TABLE1_GAIN_DB: f64 = 87.0;

/// The three architectures of the noise comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    OpenLoop,
    FeedbackNoLna,
    FeedbackWithLna,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [
        Architecture::OpenLoop,
        Architecture::FeedbackNoLna,
        Architecture::FeedbackWithLna,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::OpenLoop => "open_loop",
            Architecture::FeedbackNoLna => "feedback_no_lna",
            Architecture::FeedbackWithLna => "feedback_with_lna",
        }
    }
}

/// Shared low-noise stage (open loop and feedback with LNA).
pub fn table1_lna() -> LnaParams {
    LnaParams {
        gain: 10.0,
        noise_density: 5.8e-9,
    }
}

/// Differential amplifier; its input noise matters only without the LNA.
pub fn table1_amp() -> AmpParams {
    AmpParams {
        gain_dc: 250.0,
        pole_hz: 100e3,
        sat_v: 4.0,
        input_noise_density: 17e-9,
    }
}

pub fn table1(arch: Architecture) -> SimConfig {
    let bridge = BridgeParams::with_mismatch(R_NOMINAL, default_mismatch(), VCC);
    let base = |topology| SimConfig::new(topology, bridge, table1_amp()).with_timing(2e6, 50e-3);
    match arch {
        Architecture::OpenLoop => base(Topology::OpenBridge).with_lna(table1_lna()),
        Architecture::FeedbackNoLna => base(Topology::RcCompensated)
            .with_mos(compensated_mos())
            .with_rc(compensated_rc(RC_CORNER_HZ)),
        Architecture::FeedbackWithLna => base(Topology::RcCompensated)
            .with_mos(compensated_mos())
            .with_rc(compensated_rc(RC_CORNER_HZ))
            .with_lna(table1_lna()),
    }
}

/// Cantilever with the resonance used as carrier.
pub fn sensor() -> SensorParams {
    SensorParams {
        f_res: CARRIER_HZ,
        q_factor: 100.0,
        force_to_dr: 1.0,
        drive_amp: 1e-3,
    }
}
