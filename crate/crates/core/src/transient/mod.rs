//! Fixed-step time-domain simulation of the bridge topologies.
//!
//! Classical RK4 at `dt = 1/sample_rate`. Inside every derivative evaluation
//! the bridge is resolved algebraically from the rail voltages, the mismatch
//! and the device resistances; the amplifier pole is what makes the loop
//! dynamic, so no per-step Newton solve is needed.
//!
//! State: the two single-pole amplifier outputs, the two RC gate states
//! (`u = V_gate − Vcc`, RC topology only) and the resonator displacement and
//! velocity. A run starts from rest: amplifier outputs at zero, gates at
//! their bias, resonator still.
//!
//! White-noise sources are redrawn once per step and held for all four RK4
//! stages, with variance `density²·sample_rate/2` so that the one-sided PSD
//! of the held sequence equals `density²`.

mod mech;
mod noise;

use alloc::vec::Vec;

pub use mech::{gain_at as resonator_gain, mech_delta_r};
pub use noise::Gaussian;

use crate::circuit::Arms;
use crate::error::{Error, Result};
use crate::model::{self, MosParams, SimConfig, SourceKind, Target, Topology};
use crate::mos;

/// Named channels of a [`TimeSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    Vcc,
    Gnd,
    /// Positive amplifier output, relative to its common mode.
    OutP,
    OutN,
    /// Bridge differential output (left mid-node minus right), V.
    VDiff,
    /// Absolute gate voltage of the device driven by `out_p`.
    VGateP,
    VGateN,
}

impl Channel {
    pub const ALL: [Channel; 7] = [
        Channel::Vcc,
        Channel::Gnd,
        Channel::OutP,
        Channel::OutN,
        Channel::VDiff,
        Channel::VGateP,
        Channel::VGateN,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Vcc => "vcc",
            Channel::Gnd => "gnd",
            Channel::OutP => "out_p",
            Channel::OutN => "out_n",
            Channel::VDiff => "v_diff",
            Channel::VGateP => "v_gate_p",
            Channel::VGateN => "v_gate_n",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Uniformly sampled record with one vector per [`Channel`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    sample_rate: f64,
    channels: [Vec<f64>; 7],
}

impl TimeSeries {
    /// Builds a record from explicit channels; missing ones are zero-filled.
    pub fn from_channels(sample_rate: f64, data: &[(Channel, Vec<f64>)]) -> Result<Self> {
        let len = data.first().map_or(0, |(_, v)| v.len());
        if data.iter().any(|(_, v)| v.len() != len) {
            return Err(Error::InvalidArgument("channels differ in length".into()));
        }
        let mut channels: [Vec<f64>; 7] = core::array::from_fn(|_| alloc::vec![0.0; len]);
        for (c, v) in data {
            channels[c.index()] = v.clone();
        }
        Ok(Self {
            sample_rate,
            channels,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, c: Channel) -> &[f64] {
        &self.channels[c.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Channel, &[f64])> {
        Channel::ALL.into_iter().map(move |c| (c, self.channel(c)))
    }

    /// `out_p − out_n`.
    pub fn differential_output(&self) -> Vec<f64> {
        self.channel(Channel::OutP)
            .iter()
            .zip(self.channel(Channel::OutN))
            .map(|(p, n)| p - n)
            .collect()
    }

    /// Time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 / self.sample_rate
    }

    fn slice(&self, start: usize, len: usize) -> Self {
        Self {
            sample_rate: self.sample_rate,
            channels: core::array::from_fn(|i| self.channels[i][start..start + len].to_vec()),
        }
    }
}

/// Fewest periods of the lowest tone an analysis window may hold.
pub const MIN_WINDOW_PERIODS: usize = 16;

/// Drops the leading `settle_fraction` of the record, then trims the rest to
/// a whole number of periods of the lowest of `tones` (when given).
pub fn settle_and_window(ts: &TimeSeries, settle_fraction: f64, tones: &[f64]) -> Result<TimeSeries> {
    if !(0.0..1.0).contains(&settle_fraction) {
        return Err(Error::InvalidArgument(alloc::format!(
            "settle fraction {settle_fraction} outside [0, 1)"
        )));
    }
    let start = libm::floor(settle_fraction * ts.len() as f64) as usize;
    let remaining = ts.len() - start;
    let Some(f_low) = tones.iter().copied().filter(|f| *f > 0.0).reduce(f64::min) else {
        return Ok(ts.slice(start, remaining));
    };
    let fs = ts.sample_rate;
    // Tolerate rounding in the period count.
    let periods = libm::floor(remaining as f64 * f_low / fs + 1e-9);
    if periods < MIN_WINDOW_PERIODS as f64 {
        return Err(Error::WindowTooShort {
            freq_hz: f_low,
            periods: remaining as f64 * f_low / fs,
            required: MIN_WINDOW_PERIODS,
        });
    }
    let len = (libm::round(periods * fs / f_low) as usize).min(remaining);
    Ok(ts.slice(start, len))
}

#[derive(Debug, Clone, Copy)]
struct Tone {
    target: Target,
    amplitude: f64,
    omega: f64,
}

#[derive(Debug, Clone)]
struct NoiseSource {
    target: Target,
    sigma: f64,
    gen: Gaussian,
}

#[derive(Debug, Clone, Copy, Default)]
struct Rails {
    vcc: f64,
    gnd: f64,
    delta_r: f64,
    drive: f64,
}

/// Algebraic quantities at one state.
#[derive(Debug, Clone, Copy)]
struct Probe {
    rails: Rails,
    v_diff: f64,
    v_gate_n: f64,
    v_gate_p: f64,
}

type State = [f64; 6];
const AMP_P: usize = 0;
const AMP_N: usize = 1;
const U_P: usize = 2;
const U_N: usize = 3;
const MECH_X: usize = 4;
const MECH_V: usize = 5;

struct Engine<'a> {
    cfg: &'a SimConfig,
    dc: Rails,
    tones: Vec<Tone>,
    mech_tones: Vec<(f64, f64)>,
    noise: Vec<NoiseSource>,
    held: [f64; 3],
    gain: f64,
    omega_amp: f64,
}

fn slot(t: Target) -> usize {
    match t {
        Target::Vcc => 0,
        Target::Gnd => 1,
        Target::DeltaR => 2,
    }
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig, seed_override: Option<u64>) -> Self {
        let mut dc = Rails {
            vcc: cfg.bridge.vcc_dc,
            ..Rails::default()
        };
        let mut tones = Vec::new();
        let mut mech_tones = Vec::new();
        let mut noise = Vec::new();
        for s in &cfg.sources {
            match s.kind {
                SourceKind::Dc => match s.target {
                    Target::Vcc => dc.vcc += s.amplitude,
                    Target::Gnd => dc.gnd += s.amplitude,
                    Target::DeltaR => dc.delta_r += s.amplitude,
                },
                SourceKind::Tone => tones.push(Tone {
                    target: s.target,
                    amplitude: s.amplitude,
                    omega: 2.0 * core::f64::consts::PI * s.frequency,
                }),
                SourceKind::WhiteNoise => noise.push(NoiseSource {
                    target: s.target,
                    sigma: s.amplitude * libm::sqrt(cfg.sample_rate / 2.0),
                    gen: Gaussian::new(seed_override.or(s.seed).unwrap_or(0)),
                }),
                SourceKind::MechResonator => {
                    mech_tones.push((s.amplitude, 2.0 * core::f64::consts::PI * s.frequency))
                }
            }
        }
        Self {
            cfg,
            dc,
            tones,
            mech_tones,
            noise,
            held: [0.0; 3],
            gain: cfg.forward_gain(),
            omega_amp: 2.0 * core::f64::consts::PI * cfg.amp.pole_hz,
        }
    }

    fn draw_noise(&mut self) {
        self.held = [0.0; 3];
        for n in &mut self.noise {
            self.held[slot(n.target)] += n.sigma * n.gen.sample();
        }
    }

    fn rails(&self, t: f64) -> Rails {
        let mut r = self.dc;
        let mut acc = [self.held[0], self.held[1], self.held[2]];
        for tone in &self.tones {
            acc[slot(tone.target)] += tone.amplitude * libm::sin(tone.omega * t);
        }
        r.vcc += acc[0];
        r.gnd += acc[1];
        r.delta_r += acc[2];
        r.drive = self
            .mech_tones
            .iter()
            .map(|(a, w)| a * libm::sin(w * t))
            .sum();
        r
    }

    /// Gate bias reference: where the gate sits with zero amplifier output.
    fn gate_reference(&self, m: &MosParams) -> f64 {
        match m.polarity {
            model::Polarity::Pmos => self.cfg.bridge.vcc_dc - m.vgs_bias_abs,
            model::Polarity::Nmos => m.vgs_bias_abs,
        }
    }

    fn initial_state(&self) -> State {
        let mut s = [0.0; 6];
        if let (Topology::RcCompensated, Some(m)) = (self.cfg.topology, &self.cfg.mos) {
            let u0 = self.gate_reference(m) - self.rails(0.0).vcc;
            s[U_P] = u0;
            s[U_N] = u0;
        }
        s
    }

    fn device(&self, m: &MosParams, vgs_abs: f64, t: f64) -> Result<f64> {
        mos::rds(m, vgs_abs).map(|p| p.rds).map_err(|e| match e {
            Error::Cutoff {
                vgs_abs, vth_abs, ..
            } => Error::Cutoff {
                vgs_abs,
                vth_abs,
                time_s: Some(t),
            },
            other => other,
        })
    }

    fn probe(&self, t: f64, s: &State) -> Result<Probe> {
        let rails = self.rails(t);
        let mut dr = rails.delta_r;
        if let Some(sensor) = &self.cfg.sensor {
            dr += sensor.force_to_dr * s[MECH_X];
        }
        let span = rails.vcc - rails.gnd;
        let arms = Arms::new(&self.cfg.bridge, dr);
        let fb = self.cfg.feedback_gain;
        let (arms, v_gate_n, v_gate_p) = match (self.cfg.topology, &self.cfg.mos) {
            (Topology::OpenBridge, _) | (_, None) => (arms, 0.0, 0.0),
            (Topology::RcCompensated, Some(m)) => {
                let l = self.device(m, -s[U_N], t)?;
                let r = self.device(m, -s[U_P], t)?;
                (
                    arms.with_devices(Some(m.polarity), l, r),
                    rails.vcc + s[U_N],
                    rails.vcc + s[U_P],
                )
            }
            (_, Some(m)) => {
                let reference = self.gate_reference(m);
                let vg_n = reference + fb * s[AMP_N];
                let vg_p = reference + fb * s[AMP_P];
                let vgs = |vg: f64| match m.polarity {
                    model::Polarity::Pmos => rails.vcc - vg,
                    model::Polarity::Nmos => vg - rails.gnd,
                };
                let l = self.device(m, vgs(vg_n), t)?;
                let r = self.device(m, vgs(vg_p), t)?;
                (arms.with_devices(Some(m.polarity), l, r), vg_n, vg_p)
            }
        };
        Ok(Probe {
            rails,
            v_diff: arms.output(span),
            v_gate_n,
            v_gate_p,
        })
    }

    fn derivative(&self, t: f64, s: &State) -> Result<(State, Probe)> {
        let p = self.probe(t, s)?;
        let sat = self.cfg.amp.sat_v;
        let target = (-self.gain * p.v_diff).clamp(-sat, sat);
        let mut d = [0.0; 6];
        d[AMP_P] = self.omega_amp * (0.5 * target - s[AMP_P]);
        d[AMP_N] = self.omega_amp * (-0.5 * target - s[AMP_N]);
        if let (Topology::RcCompensated, Some(rc), Some(m)) =
            (self.cfg.topology, &self.cfg.rc, &self.cfg.mos)
        {
            let reference = self.gate_reference(m);
            let fb = self.cfg.feedback_gain;
            let tau = rc.tau();
            d[U_P] = (reference + fb * s[AMP_P] - s[U_P] - p.rails.vcc) / tau;
            d[U_N] = (reference + fb * s[AMP_N] - s[U_N] - p.rails.vcc) / tau;
        }
        if let Some(sensor) = &self.cfg.sensor {
            let (dx, dv) = mech::derivative(sensor, s[MECH_X], s[MECH_V], p.rails.drive);
            d[MECH_X] = dx;
            d[MECH_V] = dv;
        }
        Ok((d, p))
    }
}

fn axpy(s: &State, k: &State, h: f64) -> State {
    core::array::from_fn(|i| s[i] + h * k[i])
}

/// Runs a validated configuration and returns every channel.
pub fn run(config: &SimConfig) -> Result<TimeSeries> {
    run_with_seed(config, None)
}

/// As [`run`], with `seed` replacing the seed of every noise source.
pub fn run_with_seed(config: &SimConfig, seed: Option<u64>) -> Result<TimeSeries> {
    let config = model::validate(config)?;
    let mut engine = Engine::new(&config, seed);
    let n = config.samples();
    let dt = 1.0 / config.sample_rate;
    let limit = 1e6 * libm::fabs(config.bridge.vcc_dc);
    let mut channels: [Vec<f64>; 7] = core::array::from_fn(|_| Vec::with_capacity(n));
    let mut s = engine.initial_state();
    for k in 0..n {
        let t = k as f64 * dt;
        engine.draw_noise();
        let (k1, p) = engine.derivative(t, &s)?;
        let out = [
            p.rails.vcc,
            p.rails.gnd,
            s[AMP_P],
            s[AMP_N],
            p.v_diff,
            p.v_gate_p,
            p.v_gate_n,
        ];
        for (c, v) in channels.iter_mut().zip(out) {
            c.push(v);
        }
        let (k2, _) = engine.derivative(t + 0.5 * dt, &axpy(&s, &k1, 0.5 * dt))?;
        let (k3, _) = engine.derivative(t + 0.5 * dt, &axpy(&s, &k2, 0.5 * dt))?;
        let (k4, _) = engine.derivative(t + dt, &axpy(&s, &k3, dt))?;
        for i in 0..6 {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if s.iter().any(|x| !x.is_finite() || libm::fabs(*x) > limit) {
            return Err(Error::Diverged { time_s: t + dt });
        }
    }
    Ok(TimeSeries {
        sample_rate: config.sample_rate,
        channels,
    })
}
