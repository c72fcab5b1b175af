//! Linearized noise and rejection analysis around the DC operating point.

use crate::closed_loop::{dc_problem, SmallSignal};
use crate::error::{Error, Result};
use crate::model::{Polarity, SimConfig, Target, Topology, BOLTZMANN};

/// Johnson noise density `√(4kTR)`, V/√Hz.
pub fn thermal_noise_density(temperature: f64, resistance: f64) -> f64 {
    libm::sqrt(4.0 * BOLTZMANN * temperature * resistance)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cx {
    re: f64,
    im: f64,
}

impl Cx {
    const ONE: Cx = Cx { re: 1.0, im: 0.0 };

    fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    /// `1/(1 + j·f/fc)`.
    fn lowpass(f: f64, fc: f64) -> Self {
        Self::ONE.div(Cx { re: 1.0, im: f / fc })
    }

    fn add(self, o: Cx) -> Cx {
        Cx {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }

    fn mul(self, o: Cx) -> Cx {
        Cx {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }

    fn scale(self, k: f64) -> Cx {
        Cx {
            re: self.re * k,
            im: self.im * k,
        }
    }

    fn div(self, o: Cx) -> Cx {
        let d = o.re * o.re + o.im * o.im;
        Cx {
            re: (self.re * o.re + self.im * o.im) / d,
            im: (self.im * o.re - self.re * o.im) / d,
        }
    }

    fn abs(self) -> f64 {
        libm::hypot(self.re, self.im)
    }
}

/// Small-signal model of a configuration at its DC operating point.
///
/// Disturbances are referred to the bridge output. With feedback the
/// amplifier output is `−A(f)/(1 + A(f)·k·G(f))` times that disturbance,
/// where `k` is the gate-to-bridge sensitivity and `G` the gate filter.
#[derive(Debug, Clone)]
pub struct LinearModel {
    ss: SmallSignal,
    topology: Topology,
    polarity: Option<Polarity>,
    gain: f64,
    pole_hz: f64,
    rc_corner: Option<f64>,
    post_gain: f64,
    resistors: [f64; 4],
    temperature: f64,
}

impl LinearModel {
    pub fn new(config: &SimConfig) -> Result<Self> {
        let config = crate::model::validate(config)?;
        let problem = dc_problem(&config);
        let op = problem.solve()?;
        if config.topology.has_feedback() && op.clamped {
            return Err(Error::InvalidArgument(
                "amplifier is clamped at the operating point; no small-signal gain".into(),
            ));
        }
        let ss = problem.small_signal(&op)?;
        let b = &problem.bridge;
        Ok(Self {
            ss,
            topology: config.topology,
            polarity: config.mos.map(|m| m.polarity),
            gain: config.forward_gain(),
            pole_hz: config.amp.pole_hz,
            rc_corner: match config.topology {
                Topology::RcCompensated => config.rc.map(|rc| rc.corner_hz()),
                _ => None,
            },
            post_gain: config.post_gain,
            resistors: [b.r1 + problem.extra_dr, b.r3, b.r2, b.r4],
            temperature: config.noise.temperature,
        })
    }

    fn amp(&self, f: f64) -> Cx {
        Cx::lowpass(f, self.pole_hz).scale(self.gain)
    }

    fn gate_filter(&self, f: f64) -> Cx {
        self.rc_corner.map_or(Cx::ONE, |fc| Cx::lowpass(f, fc))
    }

    fn loop_cx(&self, f: f64) -> Cx {
        self.amp(f).mul(self.gate_filter(f)).scale(self.ss.k_fb)
    }

    /// Loop gain magnitude `|A(f)·k·G(f)|`; zero without feedback.
    pub fn loop_gain(&self, f: f64) -> f64 {
        self.loop_cx(f).abs()
    }

    fn forward_cx(&self, f: f64) -> Cx {
        self.amp(f).div(Cx::ONE.add(self.loop_cx(f)))
    }

    /// From a disturbance at the bridge output to the amplifier output.
    pub fn forward_transfer(&self, f: f64) -> f64 {
        self.forward_cx(f).abs()
    }

    /// From the bridge output to the end of the chain, post gain included.
    pub fn chain_gain(&self, f: f64) -> f64 {
        self.forward_transfer(f) * self.post_gain
    }

    /// From the bridge output to the channel the topology is judged on.
    fn measured_transfer(&self, f: f64) -> f64 {
        if self.topology.has_feedback() {
            self.forward_transfer(f)
        } else {
            1.0
        }
    }

    /// ∂v_diff/∂ΔR, V/Ω.
    pub fn signal_sensitivity(&self) -> f64 {
        libm::fabs(self.ss.dv_ddr)
    }

    /// Bridge-output disturbance per volt on `rail` at `f`, V/V.
    ///
    /// Adds the direct divider term and the gate-source modulation of the
    /// devices whose gate does not follow the rail.
    pub fn rail_sensitivity(&self, rail: Target, f: f64) -> f64 {
        let direct = match rail {
            Target::Vcc => self.ss.dv_dspan,
            Target::Gnd => -self.ss.dv_dspan,
            Target::DeltaR => return self.signal_sensitivity(),
        };
        let leak = match (self.topology, self.polarity, rail) {
            (Topology::RcCompensated, _, Target::Vcc) => self.gate_filter(f),
            (Topology::PmosFeedback, _, Target::Vcc) => Cx::ONE,
            (Topology::NmosFeedback, _, Target::Gnd) => Cx::real(-1.0),
            _ => Cx::real(0.0),
        };
        Cx::real(direct).add(leak.scale(self.ss.common_gate)).abs()
    }

    /// PSRR the two-tone transient measurement should report, dB.
    pub fn predicted_psrr_db(&self, f_signal: f64, f_supply: f64, rail: Target) -> f64 {
        let sig = self.signal_sensitivity() * self.measured_transfer(f_signal);
        let sup = self.rail_sensitivity(rail, f_supply) * self.measured_transfer(f_supply);
        crate::db20(sig / sup)
    }

    /// Thermal noise of the four bridge resistors at the bridge output,
    /// devices noiseless, V/√Hz.
    pub fn bridge_thermal(&self) -> f64 {
        let a = &self.ss.arms;
        let [r1, r3, r2, r4] = self.resistors;
        let four_kt = 4.0 * BOLTZMANN * self.temperature;
        let node = |r_top: f64, r_bot: f64, top: f64, bot: f64| {
            four_kt * (r_top * bot * bot + r_bot * top * top) / ((top + bot) * (top + bot))
        };
        libm::sqrt(node(r1, r3, a.top_l, a.bot_l) + node(r2, r4, a.top_r, a.bot_r))
    }
}

/// Which contribution sets the resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseLimit {
    /// Bridge thermal and first-stage noise dominate.
    Intrinsic,
    /// Injected rail noise dominates.
    Supply,
}

/// Output noise densities at one frequency, V/√Hz at the end of the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    pub freq_hz: f64,
    pub bridge_thermal: f64,
    pub amp_input: f64,
    pub supply_injected: f64,
    pub ground_injected: f64,
    /// Root sum of squares of the four contributions.
    pub total_output: f64,
    /// `total_output` referred back to the bridge output.
    pub input_referred: f64,
    /// Bridge output to chain output, V/V.
    pub chain_gain: f64,
    /// ∂v_diff/∂ΔR at the operating point, V/Ω.
    pub signal_sensitivity: f64,
    pub limit: NoiseLimit,
}

impl NoiseBudget {
    /// Bridge thermal and amplifier noise combined.
    pub fn intrinsic_output(&self) -> f64 {
        libm::hypot(self.bridge_thermal, self.amp_input)
    }

    /// Mismatch resolution, Ω/√Hz.
    pub fn resolution_ohm(&self) -> f64 {
        self.input_referred / self.signal_sensitivity
    }
}

/// Noise budget of `config` at `freq_hz`, first-stage amplifier noise only.
pub fn noise_budget(config: &SimConfig, freq_hz: f64) -> Result<NoiseBudget> {
    if !(freq_hz > 0.0 && freq_hz.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "analysis frequency {freq_hz} must be positive"
        )));
    }
    let model = LinearModel::new(config)?;
    let chain = model.chain_gain(freq_hz);
    let bridge_thermal = model.bridge_thermal() * chain;
    let amp_input = config.first_stage_noise() * chain;
    let supply_injected =
        config.noise.supply_noise_density * model.rail_sensitivity(Target::Vcc, freq_hz) * chain;
    let ground_injected =
        config.noise.ground_noise_density * model.rail_sensitivity(Target::Gnd, freq_hz) * chain;
    let total_output = libm::sqrt(
        bridge_thermal * bridge_thermal
            + amp_input * amp_input
            + supply_injected * supply_injected
            + ground_injected * ground_injected,
    );
    let intrinsic = libm::hypot(bridge_thermal, amp_input);
    let injected = libm::hypot(supply_injected, ground_injected);
    Ok(NoiseBudget {
        freq_hz,
        bridge_thermal,
        amp_input,
        supply_injected,
        ground_injected,
        total_output,
        input_referred: total_output / chain,
        chain_gain: chain,
        signal_sensitivity: model.signal_sensitivity(),
        limit: if injected > intrinsic {
            NoiseLimit::Supply
        } else {
            NoiseLimit::Intrinsic
        },
    })
}
