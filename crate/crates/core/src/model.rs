//! Domain types shared by every engine, and configuration validation.
//!
//! All quantities are plain `f64` in SI units; the unit of each field is fixed
//! by its name and documented on the field. Nothing here parses units.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result, Violation};
use crate::mos;

/// Boltzmann constant (CODATA 2018, exact), J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Minimum ratio between the sample rate and the highest source frequency.
pub const OVERSAMPLING: f64 = 50.0;

/// Fastest allowed dynamic pole, as a fraction of the sample rate.
pub const MAX_POLE_FRACTION: f64 = 1.0 / 20.0;

/// Minimum number of samples in a simulation record.
pub const MIN_SAMPLES: usize = 1024;

/// The four bridge resistances and the DC excitation.
///
/// `r1` is the top of the left branch, `r3` its bottom; `r2` is the top of the
/// right branch, `r4` its bottom. The differential output is the left
/// mid-node minus the right mid-node. The mismatch `ΔR` is `r1 - r_nominal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeParams {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub r_nominal: f64,
    pub vcc_dc: f64,
}

impl BridgeParams {
    /// A bridge with `ΔR` on `r1` and every other arm at `r_nominal`.
    pub fn with_mismatch(r_nominal: f64, delta_r: f64, vcc_dc: f64) -> Self {
        Self {
            r1: r_nominal + delta_r,
            r2: r_nominal,
            r3: r_nominal,
            r4: r_nominal,
            r_nominal,
            vcc_dc,
        }
    }

    pub fn balanced(r_nominal: f64, vcc_dc: f64) -> Self {
        Self::with_mismatch(r_nominal, 0.0, vcc_dc)
    }

    pub fn delta_r(&self) -> f64 {
        self.r1 - self.r_nominal
    }

    fn check(&self, out: &mut Vec<Violation>) {
        for (name, value) in [
            ("r1", self.r1),
            ("r2", self.r2),
            ("r3", self.r3),
            ("r4", self.r4),
            ("r_nominal", self.r_nominal),
            ("vcc_dc", self.vcc_dc),
        ] {
            positive(out, "bridge", name, value);
        }
        if !self.delta_r().is_finite() {
            push(out, "bridge.r1", "r1 - r_nominal is finite");
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Pmos,
    Nmos,
}

/// Lumped triode-region device model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MosParams {
    pub polarity: Polarity,
    /// μ·Cox·W/L, A/V².
    pub kprime_wl: f64,
    /// |V_th|, V.
    pub vth_abs: f64,
    /// |V_GS| at the DC bias point (zero amplifier output), V.
    pub vgs_bias_abs: f64,
}

impl MosParams {
    /// Gate overdrive at the bias point.
    pub fn overdrive(&self) -> f64 {
        self.vgs_bias_abs - self.vth_abs
    }

    fn check(&self, out: &mut Vec<Violation>) {
        positive(out, "mos", "kprime_wl", self.kprime_wl);
        positive(out, "mos", "vth_abs", self.vth_abs);
        if !(self.vgs_bias_abs > self.vth_abs) {
            push(out, "mos.vgs_bias_abs", "vgs_bias_abs > vth_abs");
        }
    }
}

/// Single-pole differential amplifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpParams {
    /// Differential DC gain, V/V.
    pub gain_dc: f64,
    pub pole_hz: f64,
    /// Clamp on the differential output, V.
    pub sat_v: f64,
    /// Input-referred voltage noise, V/√Hz.
    pub input_noise_density: f64,
}

impl AmpParams {
    fn check(&self, out: &mut Vec<Violation>) {
        positive(out, "amp", "gain_dc", self.gain_dc);
        positive(out, "amp", "pole_hz", self.pole_hz);
        positive(out, "amp", "sat_v", self.sat_v);
        non_negative(out, "amp", "input_noise_density", self.input_noise_density);
    }
}

/// Low-noise gain stage placed ahead of the differential amplifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LnaParams {
    pub gain: f64,
    /// V/√Hz.
    pub noise_density: f64,
}

impl LnaParams {
    fn check(&self, out: &mut Vec<Violation>) {
        positive(out, "lna", "gain", self.gain);
        non_negative(out, "lna", "noise_density", self.noise_density);
    }
}

/// Gate filter: resistor from the amplifier output, capacitor to the supply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcParams {
    pub r_filter: f64,
    pub c_filter: f64,
}

impl RcParams {
    /// Builds the filter with the given corner frequency using `r_filter`.
    pub fn with_corner(r_filter: f64, corner_hz: f64) -> Self {
        Self {
            r_filter,
            c_filter: 1.0 / (2.0 * core::f64::consts::PI * r_filter * corner_hz),
        }
    }

    pub fn tau(&self) -> f64 {
        self.r_filter * self.c_filter
    }

    pub fn corner_hz(&self) -> f64 {
        1.0 / (2.0 * core::f64::consts::PI * self.tau())
    }

    fn check(&self, out: &mut Vec<Violation>) {
        positive(out, "rc", "r_filter", self.r_filter);
        positive(out, "rc", "c_filter", self.c_filter);
        let fc = self.corner_hz();
        if !(fc.is_finite() && fc > 0.0) {
            push(out, "rc", "corner frequency 1/(2*pi*r_filter*c_filter) is finite");
        }
    }
}

/// Second-order mechanical resonator that turns a drive into `ΔR`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorParams {
    pub f_res: f64,
    pub q_factor: f64,
    /// Static sensitivity, Ω per unit drive.
    pub force_to_dr: f64,
    /// Normalized drive amplitude (coil current times field).
    pub drive_amp: f64,
}

impl SensorParams {
    fn check(&self, out: &mut Vec<Violation>) {
        positive(out, "sensor", "f_res", self.f_res);
        if !(self.q_factor > 0.5) {
            push(out, "sensor.q_factor", "q_factor > 0.5");
        }
        finite(out, "sensor", "force_to_dr", self.force_to_dr);
        finite(out, "sensor", "drive_amp", self.drive_amp);
    }
}

/// Noise environment used by the noise budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// K.
    pub temperature: f64,
    /// V/√Hz.
    pub supply_noise_density: f64,
    /// Hz.
    pub supply_noise_band: f64,
    /// V/√Hz.
    pub ground_noise_density: f64,
}

impl NoiseSpec {
    pub const fn boltzmann(&self) -> f64 {
        BOLTZMANN
    }

    fn check(&self, out: &mut Vec<Violation>) {
        positive(out, "noise", "temperature", self.temperature);
        non_negative(out, "noise", "supply_noise_density", self.supply_noise_density);
        positive(out, "noise", "supply_noise_band", self.supply_noise_band);
        non_negative(out, "noise", "ground_noise_density", self.ground_noise_density);
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            temperature: 300.0,
            supply_noise_density: 10e-6,
            supply_noise_band: 1e6,
            ground_noise_density: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    Dc,
    Tone,
    WhiteNoise,
    MechResonator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Vcc,
    Gnd,
    DeltaR,
}

/// One stimulus applied during a transient run.
///
/// `amplitude` is in volts for `Vcc`/`Gnd` and ohms for `DeltaR`. White noise
/// reads it as a one-sided density (V/√Hz or Ω/√Hz). A mechanical resonator
/// source reads it as the normalized drive amplitude and drives the sensor at
/// `frequency`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub target: Target,
    pub amplitude: f64,
    pub frequency: f64,
    pub seed: Option<u64>,
}

impl SourceSpec {
    pub fn dc(target: Target, amplitude: f64) -> Self {
        Self {
            kind: SourceKind::Dc,
            target,
            amplitude,
            frequency: 0.0,
            seed: None,
        }
    }

    pub fn tone(target: Target, amplitude: f64, frequency: f64) -> Self {
        Self {
            kind: SourceKind::Tone,
            target,
            amplitude,
            frequency,
            seed: None,
        }
    }

    pub fn white_noise(target: Target, density: f64, seed: u64) -> Self {
        Self {
            kind: SourceKind::WhiteNoise,
            target,
            amplitude: density,
            frequency: 0.0,
            seed: Some(seed),
        }
    }

    pub fn mech_resonator(drive_amp: f64, frequency: f64) -> Self {
        Self {
            kind: SourceKind::MechResonator,
            target: Target::DeltaR,
            amplitude: drive_amp,
            frequency,
            seed: None,
        }
    }

    /// Whether the source varies in time.
    pub fn is_ac(&self) -> bool {
        self.kind != SourceKind::Dc
    }

    fn check(&self, idx: usize, has_sensor: bool, out: &mut Vec<Violation>) {
        let path = format!("sources[{idx}]");
        if !self.amplitude.is_finite() {
            push(out, &path, "amplitude is finite");
        }
        match self.kind {
            SourceKind::Tone | SourceKind::MechResonator => {
                if !(self.frequency > 0.0 && self.frequency.is_finite()) {
                    push(out, &path, "frequency > 0");
                }
            }
            SourceKind::WhiteNoise => {
                if self.seed.is_none() {
                    push(out, &path, "WHITE_NOISE requires seed");
                }
                if !(self.amplitude >= 0.0) {
                    push(out, &path, "noise density >= 0");
                }
            }
            SourceKind::Dc => {}
        }
        if self.kind == SourceKind::MechResonator {
            if self.target != Target::DeltaR {
                push(out, &path, "MECH_RESONATOR targets DELTA_R");
            }
            if !has_sensor {
                push(out, &path, "MECH_RESONATOR requires a [sensor] section");
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    /// Bridge followed by the amplifier chain, no feedback.
    OpenBridge,
    /// PMOS resistors between the supply and the top arms, gates driven
    /// directly by the amplifier.
    PmosFeedback,
    /// NMOS resistors between the bottom arms and ground.
    NmosFeedback,
    /// PMOS feedback with an RC filter per gate (capacitor to the supply).
    RcCompensated,
}

impl Topology {
    pub fn has_feedback(self) -> bool {
        self != Topology::OpenBridge
    }

    /// Device polarity the topology is built from, if any.
    pub fn device_polarity(self) -> Option<Polarity> {
        match self {
            Topology::OpenBridge => None,
            Topology::PmosFeedback | Topology::RcCompensated => Some(Polarity::Pmos),
            Topology::NmosFeedback => Some(Polarity::Nmos),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Topology::OpenBridge => "OPEN_BRIDGE",
            Topology::PmosFeedback => "PMOS_FEEDBACK",
            Topology::NmosFeedback => "NMOS_FEEDBACK",
            Topology::RcCompensated => "RC_COMPENSATED",
        }
    }
}

/// Complete description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub topology: Topology,
    pub bridge: BridgeParams,
    pub mos: Option<MosParams>,
    pub amp: AmpParams,
    pub lna: Option<LnaParams>,
    pub rc: Option<RcParams>,
    pub sensor: Option<SensorParams>,
    pub noise: NoiseSpec,
    pub sources: Vec<SourceSpec>,
    /// Fraction of the amplifier output applied to the gates; `0` opens the
    /// loop while keeping the devices in place.
    pub feedback_gain: f64,
    /// Gain after the loop, used only by the noise budget.
    pub post_gain: f64,
    pub sample_rate: f64,
    pub duration: f64,
}

impl SimConfig {
    pub fn new(topology: Topology, bridge: BridgeParams, amp: AmpParams) -> Self {
        Self {
            topology,
            bridge,
            mos: None,
            amp,
            lna: None,
            rc: None,
            sensor: None,
            noise: NoiseSpec::default(),
            sources: Vec::new(),
            feedback_gain: 1.0,
            post_gain: 1.0,
            sample_rate: 1e6,
            duration: 50e-3,
        }
    }

    pub fn with_mos(mut self, mos: MosParams) -> Self {
        self.mos = Some(mos);
        self
    }

    pub fn with_rc(mut self, rc: RcParams) -> Self {
        self.rc = Some(rc);
        self
    }

    pub fn with_lna(mut self, lna: LnaParams) -> Self {
        self.lna = Some(lna);
        self
    }

    pub fn with_source(mut self, source: SourceSpec) -> Self {
        self.sources.push(source);
        self
    }

    pub fn with_timing(mut self, sample_rate: f64, duration: f64) -> Self {
        self.sample_rate = sample_rate;
        self.duration = duration;
        self
    }

    /// Number of samples in a run, `duration × sample_rate` rounded.
    pub fn samples(&self) -> usize {
        libm::round(self.duration * self.sample_rate) as usize
    }

    /// Total forward gain of the amplifier chain (LNA times amplifier).
    pub fn forward_gain(&self) -> f64 {
        self.amp.gain_dc * self.lna.map_or(1.0, |l| l.gain)
    }

    /// Amplifier parameters with the LNA gain folded in.
    pub fn forward_amp(&self) -> AmpParams {
        AmpParams {
            gain_dc: self.forward_gain(),
            ..self.amp
        }
    }

    /// Input-referred noise of the first gain stage.
    pub fn first_stage_noise(&self) -> f64 {
        self.lna.map_or(self.amp.input_noise_density, |l| l.noise_density)
    }

    /// Highest frequency among the configured sources, 0 when none oscillate.
    pub fn max_source_frequency(&self) -> f64 {
        self.sources
            .iter()
            .filter(|s| matches!(s.kind, SourceKind::Tone | SourceKind::MechResonator))
            .map(|s| s.frequency)
            .fold(0.0, f64::max)
    }

    /// Rough DC loop gain, used to bound the closed-loop bandwidth.
    fn loop_gain_estimate(&self) -> Option<f64> {
        let m = self.mos?;
        let beta = mos::effective_beta(&m, m.vgs_bias_abs).ok()?;
        let rds = mos::rds(&m, m.vgs_bias_abs).ok()?.rds;
        let r = self.bridge.r_nominal;
        let sens = self.bridge.vcc_dc * r / ((2.0 * r + rds) * (2.0 * r + rds));
        Some(self.forward_gain() * self.feedback_gain.abs() * beta * sens)
    }
}

/// Checks every invariant of `config` and returns it unchanged if all hold.
///
/// On failure the error lists every violation, not only the first.
pub fn validate(config: &SimConfig) -> Result<SimConfig> {
    let violations = violations(config);
    if violations.is_empty() {
        Ok(config.clone())
    } else {
        Err(Error::ValidationFailed(violations))
    }
}

/// All invariant violations of `config`.
pub fn violations(config: &SimConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    config.bridge.check(&mut out);
    config.amp.check(&mut out);
    config.noise.check(&mut out);
    if let Some(lna) = &config.lna {
        lna.check(&mut out);
    }
    if let Some(sensor) = &config.sensor {
        sensor.check(&mut out);
    }

    match (config.topology.device_polarity(), &config.mos) {
        (Some(pol), Some(m)) => {
            m.check(&mut out);
            let swing = libm::fabs(config.feedback_gain) * config.amp.sat_v / 2.0;
            if m.overdrive() > 0.0 && swing >= m.overdrive() {
                push(
                    &mut out,
                    "amp.sat_v",
                    "feedback_gain*sat_v/2 < vgs_bias_abs - vth_abs (devices stay in triode at full swing)",
                );
            }
            if m.polarity != pol {
                push(
                    &mut out,
                    "mos.polarity",
                    &format!("{} requires {:?} devices", config.topology.name(), pol),
                );
            }
        }
        (Some(_), None) => push(
            &mut out,
            "mos",
            &format!("{} requires a [mos] section", config.topology.name()),
        ),
        (None, _) => {}
    }
    match (config.topology, &config.rc) {
        (Topology::RcCompensated, Some(rc)) => rc.check(&mut out),
        (Topology::RcCompensated, None) => {
            push(&mut out, "rc", "RC_COMPENSATED requires an [rc] section")
        }
        _ => {}
    }
    finite(&mut out, "config", "feedback_gain", config.feedback_gain);
    positive(&mut out, "config", "post_gain", config.post_gain);

    for (i, s) in config.sources.iter().enumerate() {
        s.check(i, config.sensor.is_some(), &mut out);
    }

    let fs = config.sample_rate;
    if !(fs > 0.0 && fs.is_finite()) {
        push(&mut out, "sample_rate", "sample_rate > 0");
    } else {
        let f_max = config.max_source_frequency();
        if fs < OVERSAMPLING * f_max {
            push(
                &mut out,
                "sample_rate",
                &format!(
                    "sample_rate >= 50 x max source frequency (needs >= {} Hz)",
                    OVERSAMPLING * f_max
                ),
            );
        }
        let pole_limit = fs * MAX_POLE_FRACTION;
        if config.amp.pole_hz > pole_limit {
            push(
                &mut out,
                "amp.pole_hz",
                &format!("pole_hz <= sample_rate/20 ({pole_limit} Hz)"),
            );
        }
        if let (Topology::RcCompensated, Some(rc)) = (config.topology, &config.rc) {
            if rc.corner_hz() > pole_limit {
                push(
                    &mut out,
                    "rc",
                    &format!("RC corner <= sample_rate/20 ({pole_limit} Hz)"),
                );
            }
        }
        if let Some(sensor) = &config.sensor {
            if sensor.f_res > pole_limit {
                push(
                    &mut out,
                    "sensor.f_res",
                    &format!("f_res <= sample_rate/20 ({pole_limit} Hz)"),
                );
            }
        }
        // The direct-drive loops close around the amplifier pole only, so the
        // closed-loop pole is what RK4 has to resolve.
        if matches!(
            config.topology,
            Topology::PmosFeedback | Topology::NmosFeedback
        ) {
            if let Some(l) = config.loop_gain_estimate() {
                let f_cl = config.amp.pole_hz * (1.0 + l);
                if f_cl > pole_limit {
                    push(
                        &mut out,
                        "amp.pole_hz",
                        &format!(
                            "closed-loop pole pole_hz*(1+L) = {f_cl} Hz <= sample_rate/20 ({pole_limit} Hz)"
                        ),
                    );
                }
            }
        }
    }

    let d = config.duration;
    if !(d > 0.0 && d.is_finite()) {
        push(&mut out, "duration", "duration > 0");
    } else if fs > 0.0 && fs.is_finite() {
        let n = d * fs;
        let rounded = libm::round(n);
        if libm::fabs(n - rounded) > 1e-6 * rounded.max(1.0) {
            push(&mut out, "duration", "duration x sample_rate is an integer");
        }
        if rounded < MIN_SAMPLES as f64 {
            push(
                &mut out,
                "duration",
                &format!("duration x sample_rate >= {MIN_SAMPLES} samples"),
            );
        }
    }
    out
}

fn push(out: &mut Vec<Violation>, field: &str, rule: &str) {
    out.push(Violation {
        field: field.to_string(),
        rule: String::from(rule),
    });
}

fn positive(out: &mut Vec<Violation>, section: &str, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        push(out, &format!("{section}.{name}"), &format!("{name} > 0"));
    }
}

fn non_negative(out: &mut Vec<Violation>, section: &str, name: &str, v: f64) {
    if !(v >= 0.0 && v.is_finite()) {
        push(out, &format!("{section}.{name}"), &format!("{name} >= 0"));
    }
}

fn finite(out: &mut Vec<Violation>, section: &str, name: &str, v: f64) {
    if !v.is_finite() {
        push(out, &format!("{section}.{name}"), &format!("{name} is finite"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SimConfig {
        let amp = AmpParams {
            gain_dc: 1000.0,
            pole_hz: 100.0,
            sat_v: 5.0,
            input_noise_density: 6.4e-9,
        };
        SimConfig::new(Topology::OpenBridge, BridgeParams::balanced(1000.0, 5.0), amp)
            .with_source(SourceSpec::tone(Target::Vcc, 0.01, 1e3))
    }

    #[test]
    fn accepts_balanced_bridge() {
        let c = base();
        assert_eq!(validate(&c).unwrap(), c);
    }

    #[test]
    fn negative_resistance_is_named() {
        let mut c = base();
        c.bridge.r1 = -1000.0;
        let Err(Error::ValidationFailed(v)) = validate(&c) else {
            panic!("expected failure")
        };
        assert!(v.iter().any(|v| v.rule == "r1 > 0"), "{v:?}");
    }

    #[test]
    fn oversampling_rule_reports_required_rate() {
        let mut c = base();
        c.sources = alloc::vec![SourceSpec::tone(Target::Gnd, 0.01, 9e3)];
        c.sample_rate = 100e3;
        c.duration = 0.1;
        let Err(Error::ValidationFailed(v)) = validate(&c) else {
            panic!("expected failure")
        };
        let rule = v.iter().find(|v| v.field == "sample_rate").unwrap();
        assert!(rule.rule.contains("450000"), "{}", rule.rule);
    }

    #[test]
    fn collects_every_violation() {
        let mut c = base();
        c.bridge.r1 = -1.0;
        c.bridge.r4 = 0.0;
        c.amp.gain_dc = -3.0;
        c.duration = 1e-4;
        let Err(Error::ValidationFailed(v)) = validate(&c) else {
            panic!("expected failure")
        };
        assert!(v.len() >= 4, "{v:?}");
    }

    #[test]
    fn feedback_topologies_need_devices() {
        let mut c = base();
        c.topology = Topology::RcCompensated;
        let Err(Error::ValidationFailed(v)) = validate(&c) else {
            panic!("expected failure")
        };
        assert!(v.iter().any(|v| v.field == "mos"));
        assert!(v.iter().any(|v| v.field == "rc"));
    }

    #[test]
    fn noise_source_without_seed_is_rejected() {
        let mut c = base();
        c.sources.push(SourceSpec {
            seed: None,
            ..SourceSpec::white_noise(Target::Vcc, 1e-5, 0)
        });
        assert!(validate(&c).is_err());
    }

    #[test]
    fn validate_is_idempotent_and_bit_exact() {
        let mut c = base();
        c.bridge.r1 = 1000.0 + core::f64::consts::PI * 1e-7;
        let once = validate(&c).unwrap();
        let twice = validate(&once).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.bridge.r1.to_bits(), c.bridge.r1.to_bits());
    }
}
