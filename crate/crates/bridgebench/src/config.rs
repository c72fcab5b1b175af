//! TOML configuration files.
//!
//! A file overlays a base configuration: every key is optional and only the
//! keys present replace the base values. A section that the base lacks (for
//! example `[mos]` on an open bridge) must then be complete. `[[sources]]`
//! replaces the whole source list. Unknown keys are errors.
//!
//! ```toml
//! topology = "RC_COMPENSATED"
//!
//! [bridge]
//! r_nominal = 1000.0
//! delta_r = 13.5
//! vcc_dc = 5.0
//!
//! [rc]
//! r_filter = 1e6
//! corner_hz = 10.0
//!
//! [[sources]]
//! kind = "TONE"
//! target = "VCC"
//! amplitude = 0.01
//! frequency = 9000.0
//! ```

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use bridgebench_core::spectral::PsrrOptions;
use bridgebench_core::{
    AmpParams, BridgeParams, LnaParams, MosParams, Polarity, RcParams, SensorParams, SimConfig, SourceKind,
    SourceSpec, Target, Topology,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopologyName {
    #[serde(rename = "OPEN_BRIDGE")]
    OpenBridge,
    #[serde(rename = "PMOS_FEEDBACK")]
    PmosFeedback,
    #[serde(rename = "NMOS_FEEDBACK")]
    NmosFeedback,
    #[serde(rename = "RC_COMPENSATED")]
    RcCompensated,
}

impl From<TopologyName> for Topology {
    fn from(t: TopologyName) -> Self {
        match t {
            TopologyName::OpenBridge => Topology::OpenBridge,
            TopologyName::PmosFeedback => Topology::PmosFeedback,
            TopologyName::NmosFeedback => Topology::NmosFeedback,
            TopologyName::RcCompensated => Topology::RcCompensated,
        }
    }
}

impl From<Topology> for TopologyName {
    fn from(t: Topology) -> Self {
        match t {
            Topology::OpenBridge => TopologyName::OpenBridge,
            Topology::PmosFeedback => TopologyName::PmosFeedback,
            Topology::NmosFeedback => TopologyName::NmosFeedback,
            Topology::RcCompensated => TopologyName::RcCompensated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PolarityName {
    Pmos,
    Nmos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SourceKindName {
    Dc,
    Tone,
    WhiteNoise,
    MechResonator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TargetName {
    Vcc,
    Gnd,
    DeltaR,
}

impl From<TargetName> for Target {
    fn from(t: TargetName) -> Self {
        match t {
            TargetName::Vcc => Target::Vcc,
            TargetName::Gnd => Target::Gnd,
            TargetName::DeltaR => Target::DeltaR,
        }
    }
}

impl From<Target> for TargetName {
    fn from(t: Target) -> Self {
        match t {
            Target::Vcc => TargetName::Vcc,
            Target::Gnd => TargetName::Gnd,
            Target::DeltaR => TargetName::DeltaR,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_nominal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vcc_dc: Option<f64>,
    /// Sets `r1 = r_nominal + delta_r` and the other arms to `r_nominal`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r4: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MosSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polarity: Option<PolarityName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kprime_wl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vth_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vgs_bias_abs: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmpSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_dc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pole_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sat_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_noise_density: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LnaSection {
    /// `false` removes the stage.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enabled: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_density: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_filter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_filter: Option<f64>,
    /// Alternative to `c_filter`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corner_hz: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_res: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_to_dr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive_amp: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supply_noise_density: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supply_noise_band: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_noise_density: Option<f64>,
}

/// Parameters of the closed-form gain sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSection {
    /// Controlled-resistor slope, Ω/V.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<f64>>,
    /// Explicit mismatch grid, Ω; overrides the log grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_r: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// Replaces the seed of every noise source.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Settings of the two-tone PSRR measurement.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsrrSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_signal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supply_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supply_target: Option<TargetName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settle_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceEntry {
    pub kind: SourceKindName,
    #[serde(default = "default_target")]
    pub target: TargetName,
    pub amplitude: f64,
    #[serde(default)]
    pub frequency: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_target() -> TargetName {
    TargetName::DeltaR
}

impl From<&SourceEntry> for SourceSpec {
    fn from(e: &SourceEntry) -> Self {
        SourceSpec {
            kind: match e.kind {
                SourceKindName::Dc => SourceKind::Dc,
                SourceKindName::Tone => SourceKind::Tone,
                SourceKindName::WhiteNoise => SourceKind::WhiteNoise,
                SourceKindName::MechResonator => SourceKind::MechResonator,
            },
            target: e.target.into(),
            amplitude: e.amplitude,
            frequency: e.frequency,
            seed: e.seed,
        }
    }
}

impl From<&SourceSpec> for SourceEntry {
    fn from(s: &SourceSpec) -> Self {
        SourceEntry {
            kind: match s.kind {
                SourceKind::Dc => SourceKindName::Dc,
                SourceKind::Tone => SourceKindName::Tone,
                SourceKind::WhiteNoise => SourceKindName::WhiteNoise,
                SourceKind::MechResonator => SourceKindName::MechResonator,
            },
            target: s.target.into(),
            amplitude: s.amplitude,
            frequency: s.frequency,
            seed: s.seed,
        }
    }
}

/// Contents of one configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologyName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub post_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bridge: Option<BridgeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mos: Option<MosSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amp: Option<AmpSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lna: Option<LnaSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rc: Option<RcSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensor: Option<SensorSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(rename = "loop", skip_serializing_if = "Option::is_none")]
    pub loop_: Option<LoopSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psrr: Option<PsrrSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<SourceEntry>>,
}

fn need(value: Option<f64>, base: Option<f64>, key: &str) -> Result<f64> {
    value
        .or(base)
        .ok_or_else(|| anyhow!("missing key `{key}` (section not present in the base configuration)"))
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Applies every present key onto `base`.
    pub fn overlay(&self, base: &SimConfig) -> Result<SimConfig> {
        let mut c = base.clone();
        if let Some(t) = self.topology {
            c.topology = t.into();
        }
        if let Some(g) = self.feedback_gain {
            c.feedback_gain = g;
        }
        if let Some(g) = self.post_gain {
            c.post_gain = g;
        }
        if let Some(b) = &self.bridge {
            self.overlay_bridge(b, &mut c)?;
        }
        if let Some(m) = &self.mos {
            let prev = c.mos;
            c.mos = Some(MosParams {
                polarity: match m.polarity {
                    Some(PolarityName::Pmos) => Polarity::Pmos,
                    Some(PolarityName::Nmos) => Polarity::Nmos,
                    None => prev
                        .map(|p| p.polarity)
                        .ok_or_else(|| anyhow!("missing key `mos.polarity`"))?,
                },
                kprime_wl: need(m.kprime_wl, prev.map(|p| p.kprime_wl), "mos.kprime_wl")?,
                vth_abs: need(m.vth_abs, prev.map(|p| p.vth_abs), "mos.vth_abs")?,
                vgs_bias_abs: need(m.vgs_bias_abs, prev.map(|p| p.vgs_bias_abs), "mos.vgs_bias_abs")?,
            });
        }
        if let Some(a) = &self.amp {
            c.amp = AmpParams {
                gain_dc: a.gain_dc.unwrap_or(c.amp.gain_dc),
                pole_hz: a.pole_hz.unwrap_or(c.amp.pole_hz),
                sat_v: a.sat_v.unwrap_or(c.amp.sat_v),
                input_noise_density: a.input_noise_density.unwrap_or(c.amp.input_noise_density),
            };
        }
        if let Some(l) = &self.lna {
            if l.enabled == Some(false) {
                c.lna = None;
            } else {
                let prev = c.lna;
                c.lna = Some(LnaParams {
                    gain: need(l.gain, prev.map(|p| p.gain), "lna.gain")?,
                    noise_density: need(
                        l.noise_density,
                        prev.map(|p| p.noise_density),
                        "lna.noise_density",
                    )?,
                });
            }
        }
        if let Some(r) = &self.rc {
            let prev = c.rc;
            let r_filter = need(r.r_filter, prev.map(|p| p.r_filter), "rc.r_filter")?;
            c.rc = Some(match (r.c_filter, r.corner_hz) {
                (Some(_), Some(_)) => bail!("set either `rc.c_filter` or `rc.corner_hz`, not both"),
                (Some(c_filter), None) => RcParams { r_filter, c_filter },
                (None, Some(fc)) => RcParams::with_corner(r_filter, fc),
                (None, None) => match prev {
                    // Keep the corner when only the resistor changes.
                    Some(p) => RcParams::with_corner(r_filter, p.corner_hz()),
                    None => bail!("missing key `rc.c_filter` or `rc.corner_hz`"),
                },
            });
        }
        if let Some(s) = &self.sensor {
            let prev = c.sensor;
            c.sensor = Some(SensorParams {
                f_res: need(s.f_res, prev.map(|p| p.f_res), "sensor.f_res")?,
                q_factor: need(s.q_factor, prev.map(|p| p.q_factor), "sensor.q_factor")?,
                force_to_dr: need(s.force_to_dr, prev.map(|p| p.force_to_dr), "sensor.force_to_dr")?,
                drive_amp: need(s.drive_amp, prev.map(|p| p.drive_amp), "sensor.drive_amp")?,
            });
        }
        if let Some(n) = &self.noise {
            let d = &mut c.noise;
            d.temperature = n.temperature.unwrap_or(d.temperature);
            d.supply_noise_density = n.supply_noise_density.unwrap_or(d.supply_noise_density);
            d.supply_noise_band = n.supply_noise_band.unwrap_or(d.supply_noise_band);
            d.ground_noise_density = n.ground_noise_density.unwrap_or(d.ground_noise_density);
        }
        if let Some(s) = &self.sim {
            c.sample_rate = s.sample_rate.unwrap_or(c.sample_rate);
            c.duration = s.duration.unwrap_or(c.duration);
        }
        if let Some(sources) = &self.sources {
            c.sources = sources.iter().map(SourceSpec::from).collect();
        }
        Ok(c)
    }

    fn overlay_bridge(&self, b: &BridgeSection, c: &mut SimConfig) -> Result<()> {
        let br = &mut c.bridge;
        let explicit = [b.r1, b.r2, b.r3, b.r4].iter().any(Option::is_some);
        if b.delta_r.is_some() && explicit {
            bail!("`bridge.delta_r` cannot be combined with explicit r1..r4");
        }
        let prev_dr = br.delta_r();
        br.vcc_dc = b.vcc_dc.unwrap_or(br.vcc_dc);
        if explicit {
            br.r_nominal = b.r_nominal.unwrap_or(br.r_nominal);
            br.r1 = b.r1.unwrap_or(br.r1);
            br.r2 = b.r2.unwrap_or(br.r2);
            br.r3 = b.r3.unwrap_or(br.r3);
            br.r4 = b.r4.unwrap_or(br.r4);
        } else if b.delta_r.is_some() || b.r_nominal.is_some() {
            // A new nominal alone keeps the mismatch.
            let r = b.r_nominal.unwrap_or(br.r_nominal);
            *br = BridgeParams::with_mismatch(r, b.delta_r.unwrap_or(prev_dr), br.vcc_dc);
        }
        Ok(())
    }

    pub fn seed(&self) -> Option<u64> {
        self.sim.as_ref().and_then(|s| s.seed)
    }

    /// PSRR options with the file's `[psrr]` keys applied to the defaults.
    pub fn psrr_options(&self) -> PsrrOptions {
        let mut o = PsrrOptions::default();
        if let Some(p) = &self.psrr {
            o.signal_amplitude = p.signal_amplitude.unwrap_or(o.signal_amplitude);
            o.supply_amplitude = p.supply_amplitude.unwrap_or(o.supply_amplitude);
            o.settle_fraction = p.settle_fraction.unwrap_or(o.settle_fraction);
            if let Some(t) = p.supply_target {
                o.supply_target = t.into();
            }
        }
        o
    }

    pub fn f_signal(&self) -> Option<f64> {
        self.psrr.as_ref().and_then(|p| p.f_signal)
    }

    pub fn f_grid(&self) -> Option<Vec<f64>> {
        self.psrr.as_ref().and_then(|p| p.f_grid.clone())
    }

    pub fn loop_section(&self) -> LoopSection {
        self.loop_.clone().unwrap_or_default()
    }
}

/// Complete description of `config`; loading it over the base it was derived
/// from reproduces `config` exactly.
pub fn snapshot(config: &SimConfig) -> ConfigFile {
    let b = &config.bridge;
    ConfigFile {
        topology: Some(config.topology.into()),
        feedback_gain: Some(config.feedback_gain),
        post_gain: Some(config.post_gain),
        bridge: Some(BridgeSection {
            r_nominal: Some(b.r_nominal),
            vcc_dc: Some(b.vcc_dc),
            delta_r: None,
            r1: Some(b.r1),
            r2: Some(b.r2),
            r3: Some(b.r3),
            r4: Some(b.r4),
        }),
        mos: config.mos.map(|m| MosSection {
            polarity: Some(match m.polarity {
                Polarity::Pmos => PolarityName::Pmos,
                Polarity::Nmos => PolarityName::Nmos,
            }),
            kprime_wl: Some(m.kprime_wl),
            vth_abs: Some(m.vth_abs),
            vgs_bias_abs: Some(m.vgs_bias_abs),
        }),
        amp: Some(AmpSection {
            gain_dc: Some(config.amp.gain_dc),
            pole_hz: Some(config.amp.pole_hz),
            sat_v: Some(config.amp.sat_v),
            input_noise_density: Some(config.amp.input_noise_density),
        }),
        lna: Some(match config.lna {
            Some(l) => LnaSection {
                enabled: Some(true),
                gain: Some(l.gain),
                noise_density: Some(l.noise_density),
            },
            None => LnaSection {
                enabled: Some(false),
                ..LnaSection::default()
            },
        }),
        rc: config.rc.map(|r| RcSection {
            r_filter: Some(r.r_filter),
            c_filter: Some(r.c_filter),
            corner_hz: None,
        }),
        sensor: config.sensor.map(|s| SensorSection {
            f_res: Some(s.f_res),
            q_factor: Some(s.q_factor),
            force_to_dr: Some(s.force_to_dr),
            drive_amp: Some(s.drive_amp),
        }),
        noise: Some(NoiseSection {
            temperature: Some(config.noise.temperature),
            supply_noise_density: Some(config.noise.supply_noise_density),
            supply_noise_band: Some(config.noise.supply_noise_band),
            ground_noise_density: Some(config.noise.ground_noise_density),
        }),
        loop_: None,
        sim: Some(SimSection {
            sample_rate: Some(config.sample_rate),
            duration: Some(config.duration),
            seed: None,
        }),
        psrr: None,
        sources: Some(config.sources.iter().map(SourceEntry::from).collect()),
    }
}

pub fn to_toml(file: &ConfigFile) -> Result<String> {
    Ok(toml::to_string(file)?)
}
