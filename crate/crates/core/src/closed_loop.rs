//! Small-signal algebra of the mismatch-cancelling feedback loop.
//!
//! The closed forms use the half-bridge abstraction: a mismatch `ΔR`, an
//! amplifier of gain `A` and a controlled resistor of slope `β` (Ω/V) give
//!
//! ```text
//! V_s = ΔR · (A/2R)·Vcc / (1 + (Aβ/2R)·Vcc)
//! ```
//!
//! with loop gain `L = (Aβ/2R)·Vcc`. [`solve_dc`] is an independent check:
//! it finds the operating point of the full four-resistor bridge with the
//! triode law in the loop by Newton iteration.
//!
//! Mapping the full bridge onto the half-bridge forms: the bridge output moves
//! by `Vcc/4R` per ohm on one arm, half the `Vcc/2R` of the abstraction, so
//! [`LoopParams::from_devices`] uses `A/2` as the half-bridge gain.

use alloc::vec::Vec;

use crate::bridge;
use crate::circuit::{vgs_from_out, Arms};
use crate::db20;
use crate::error::{Error, Result};
use crate::model::{
    AmpParams, BridgeParams, MosParams, Polarity, SimConfig, SourceKind, Target, Topology,
};
use crate::mos;

/// Symbols of the half-bridge loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopParams {
    pub a_gain: f64,
    /// Ω/V, magnitude.
    pub beta: f64,
    pub r_nominal: f64,
    pub delta_r: f64,
    pub vcc: f64,
}

/// An exact value and its high-loop-gain asymptote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approx {
    pub exact: f64,
    pub asymptote: f64,
}

impl LoopParams {
    /// Half-bridge equivalent of a physical bridge, device and amplifier.
    pub fn from_devices(
        b: &BridgeParams,
        m: &MosParams,
        a: &AmpParams,
        feedback_gain: f64,
    ) -> Result<Self> {
        Ok(Self {
            a_gain: a.gain_dc * feedback_gain / 2.0,
            beta: mos::effective_beta(m, m.vgs_bias_abs)?,
            r_nominal: b.r_nominal,
            delta_r: b.delta_r(),
            vcc: b.vcc_dc,
        })
    }

    /// `L = (A·β/2R)·Vcc`.
    pub fn loop_gain(&self) -> f64 {
        self.a_gain * self.beta / (2.0 * self.r_nominal) * self.vcc
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a_gain > 0.0
            && self.beta > 0.0
            && self.r_nominal > 0.0
            && self.vcc > 0.0
            && self.delta_r.is_finite()
            && self.loop_gain().is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(alloc::format!(
                "loop parameters must be positive and finite: {self:?}"
            )))
        }
    }

    fn forward(&self) -> f64 {
        self.a_gain / (2.0 * self.r_nominal) * self.vcc
    }
}

pub fn vs_closed_form(p: &LoopParams) -> f64 {
    p.delta_r * p.forward() / (1.0 + p.loop_gain())
}

/// ∂V_s/∂ΔR, V/Ω; asymptote `1/β`.
pub fn signal_gain(p: &LoopParams) -> Approx {
    Approx {
        exact: p.forward() / (1.0 + p.loop_gain()),
        asymptote: 1.0 / p.beta,
    }
}

/// ∂V_s/∂Vcc, V/V; asymptote `2R·ΔR/(A·β²·Vcc²)`.
pub fn supply_gain(p: &LoopParams) -> Approx {
    let d = 1.0 + p.loop_gain();
    Approx {
        exact: p.a_gain * p.delta_r / (2.0 * p.r_nominal * d * d),
        asymptote: 2.0 * p.r_nominal * p.delta_r / (p.a_gain * p.beta * p.beta * p.vcc * p.vcc),
    }
}

/// Inverted PSRR, `20·log10(|∂V_s/∂Vcc| / |∂V_s/∂ΔR|)`; negative is good.
///
/// `exact` uses the exact gains, `asymptote` the closed form
/// `20·log10(2R·ΔR/(A·β·Vcc²))`. Both are `-inf` for a balanced bridge.
pub fn psrr_inv_db(p: &LoopParams) -> Approx {
    if p.delta_r == 0.0 {
        return Approx {
            exact: f64::NEG_INFINITY,
            asymptote: f64::NEG_INFINITY,
        };
    }
    let exact = libm::fabs(supply_gain(p).exact) / libm::fabs(signal_gain(p).exact);
    let asym = 2.0 * p.r_nominal * libm::fabs(p.delta_r) / (p.a_gain * p.beta * p.vcc * p.vcc);
    Approx {
        exact: db20(exact),
        asymptote: db20(asym),
    }
}

/// Settled DC state of a bridge and its feedback loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Differential amplifier output `out_p − out_n`, V.
    pub v_s: f64,
    /// Resistance of the left device (driven by `out_n`), Ω; 0 without devices.
    pub r_fb: f64,
    /// Resistance of the right device (driven by `out_p`), Ω.
    pub r_fb_right: f64,
    /// Fixed-point defect `v_s − clamp(−A·v_diff(v_s))`, V.
    pub residual: f64,
    /// Bridge differential output at the operating point, V.
    pub v_diff: f64,
    /// The amplifier clamp is engaged.
    pub clamped: bool,
    pub iterations: usize,
}

/// Small-signal sensitivities of the bridge output at an operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SmallSignal {
    /// ∂v_diff/∂v_s through the gates (zero without feedback devices).
    pub k_fb: f64,
    /// ∂v_diff per volt of common |V_GS| change on both devices.
    pub common_gate: f64,
    pub dv_ddr: f64,
    /// ∂v_diff/∂(Vcc − gnd) with the arms held fixed.
    pub dv_dspan: f64,
    /// Arm totals including the devices.
    pub arms: Arms,
}

const MAX_ITERATIONS: usize = 100;

/// Inputs of one DC solve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DcProblem {
    pub topology: Topology,
    pub bridge: BridgeParams,
    pub extra_dr: f64,
    pub vcc: f64,
    pub gnd: f64,
    pub mos: Option<MosParams>,
    pub gain: f64,
    pub sat_v: f64,
    pub feedback_gain: f64,
}

struct Eval {
    g: f64,
    dg: f64,
    v_diff: f64,
    rds: (f64, f64),
    clamped: bool,
    /// d(out)/dv ignoring the clamp; negative feedback makes it negative.
    loop_slope: f64,
}

impl DcProblem {
    fn device_point(&self, m: &MosParams, v: f64) -> Result<(mos::TriodePoint, mos::TriodePoint)> {
        let half = self.feedback_gain * v / 2.0;
        // Gates are referenced to the nominal rails; DC offsets on the rail
        // the source is tied to shift |V_GS|.
        let bias = match m.polarity {
            Polarity::Pmos => m.vgs_bias_abs + (self.vcc - self.bridge.vcc_dc),
            Polarity::Nmos => m.vgs_bias_abs - self.gnd,
        };
        let l = mos::rds(m, vgs_from_out(m.polarity, bias, -half))?;
        let r = mos::rds(m, vgs_from_out(m.polarity, bias, half))?;
        Ok((l, r))
    }

    fn eval(&self, v: f64) -> Result<Eval> {
        let span = self.vcc - self.gnd;
        let arms = Arms::new(&self.bridge, self.extra_dr);
        let (v_diff, dvdiff_dv, rds) = match (self.topology.has_feedback(), &self.mos) {
            (true, Some(m)) => {
                let (l, r) = self.device_point(m, v)?;
                let arms = arms.with_devices(Some(m.polarity), l.rds, r.rds);
                let (sl, sr) = arms.device_sensitivity(m.polarity, span);
                // d|V_GS|/dv = ∓ gate_sign·fb/2; dR/d|V_GS| = −R/overdrive.
                let s = mos::gate_sign(m.polarity) * self.feedback_gain / 2.0;
                let drl = (l.rds / (l.vgs_abs - m.vth_abs)) * s;
                let drr = -(r.rds / (r.vgs_abs - m.vth_abs)) * s;
                (arms.output(span), sl * drl + sr * drr, (l.rds, r.rds))
            }
            _ => (arms.output(span), 0.0, (0.0, 0.0)),
        };
        let target = -self.gain * v_diff;
        let clamped = libm::fabs(target) >= self.sat_v;
        let (out, dout) = if clamped {
            (self.sat_v.copysign(target), 0.0)
        } else {
            (target, -self.gain * dvdiff_dv)
        };
        Ok(Eval {
            g: v - out,
            dg: 1.0 - dout,
            v_diff,
            rds,
            clamped,
            loop_slope: -self.gain * dvdiff_dv,
        })
    }

    fn finish(&self, v: f64, e: Eval, iterations: usize) -> Result<OperatingPoint> {
        if self.topology.has_feedback() && e.loop_slope > 0.0 {
            return Err(Error::PositiveFeedback {
                slope: e.loop_slope,
            });
        }
        Ok(OperatingPoint {
            v_s: v,
            r_fb: e.rds.0,
            r_fb_right: e.rds.1,
            residual: e.g,
            v_diff: e.v_diff,
            clamped: e.clamped,
            iterations,
        })
    }

    /// Largest |v| keeping both devices in triode (and within the clamp).
    fn bracket(&self) -> f64 {
        match (&self.mos, self.topology.has_feedback()) {
            (Some(m), true) if self.feedback_gain != 0.0 => {
                let lim = 2.0 * m.overdrive() / libm::fabs(self.feedback_gain);
                self.sat_v.min(lim * (1.0 - 1e-9))
            }
            _ => self.sat_v,
        }
    }

    /// Linearization of the bridge around a solved operating point.
    pub fn small_signal(&self, op: &OperatingPoint) -> Result<SmallSignal> {
        let span = self.vcc - self.gnd;
        let arms = Arms::new(&self.bridge, self.extra_dr);
        let (arms, k_fb, cg) = match (self.topology.has_feedback(), &self.mos) {
            (true, Some(m)) => {
                let (l, r) = self.device_point(m, op.v_s)?;
                let arms = arms.with_devices(Some(m.polarity), l.rds, r.rds);
                let (sl, sr) = arms.device_sensitivity(m.polarity, span);
                let gl = -l.rds / (l.vgs_abs - m.vth_abs);
                let gr = -r.rds / (r.vgs_abs - m.vth_abs);
                let s = mos::gate_sign(m.polarity) * self.feedback_gain / 2.0;
                (arms, sl * gl * -s + sr * gr * s, sl * gl + sr * gr)
            }
            _ => (arms, 0.0, 0.0),
        };
        let sum_l = arms.top_l + arms.bot_l;
        Ok(SmallSignal {
            k_fb,
            common_gate: cg,
            dv_ddr: -span * arms.bot_l / (sum_l * sum_l),
            dv_dspan: arms.output(span) / span,
            arms,
        })
    }

    /// Residual accepted as converged. `g` carries the rounding error of
    /// `v_diff` amplified by the gain, so the floor grows with it.
    fn tolerance(&self) -> f64 {
        let scale = libm::fabs(self.vcc).max(libm::fabs(self.vcc - self.gnd));
        scale * 1e-12f64.max(16.0 * f64::EPSILON * libm::fabs(self.gain))
    }

    pub fn solve(&self) -> Result<OperatingPoint> {
        let tol = self.tolerance();
        let mut v = 0.0;
        let mut e = self.eval(v)?;
        let mut iterations = 0;
        while iterations < MAX_ITERATIONS {
            if libm::fabs(e.g) <= tol {
                return self.finish(v, e, iterations);
            }
            iterations += 1;
            let step = e.g / e.dg;
            let mut accepted = None;
            let mut scale = 1.0;
            for _ in 0..30 {
                let trial = v - scale * step;
                if let Ok(te) = self.eval(trial) {
                    if libm::fabs(te.g) < libm::fabs(e.g) {
                        accepted = Some((trial, te));
                        break;
                    }
                }
                scale *= 0.5;
            }
            match accepted {
                Some((nv, ne)) => {
                    v = nv;
                    e = ne;
                }
                None => return self.bisect(iterations),
            }
        }
        Err(Error::NoConvergence {
            iterations,
            residual: e.g,
        })
    }

    fn bisect(&self, mut iterations: usize) -> Result<OperatingPoint> {
        let tol = self.tolerance();
        let lim = self.bracket();
        let (mut lo, mut hi) = (-lim, lim);
        let mut last = f64::NAN;
        while iterations < MAX_ITERATIONS {
            iterations += 1;
            let mid = 0.5 * (lo + hi);
            let e = self.eval(mid)?;
            if libm::fabs(e.g) <= tol {
                return self.finish(mid, e, iterations);
            }
            last = e.g;
            if hi - lo <= 4.0 * f64::EPSILON * libm::fabs(mid).max(f64::MIN_POSITIVE) {
                return self.finish(mid, e, iterations);
            }
            if e.g > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::NoConvergence {
            iterations,
            residual: last,
        })
    }
}

/// DC operating point of the full nonlinear bridge and loop.
pub fn solve_dc(
    b: &BridgeParams,
    m: &MosParams,
    a: &AmpParams,
    topology: Topology,
) -> Result<OperatingPoint> {
    DcProblem {
        topology,
        bridge: *b,
        extra_dr: 0.0,
        vcc: b.vcc_dc,
        gnd: 0.0,
        mos: Some(*m),
        gain: a.gain_dc,
        sat_v: a.sat_v,
        feedback_gain: 1.0,
    }
    .solve()
}

/// DC operating point of a full configuration, with DC sources applied and
/// every AC source at zero.
pub fn operating_point(config: &SimConfig) -> Result<OperatingPoint> {
    dc_problem(config).solve()
}

pub(crate) fn dc_problem(config: &SimConfig) -> DcProblem {
    let mut vcc = config.bridge.vcc_dc;
    let mut gnd = 0.0;
    let mut extra_dr = 0.0;
    for s in config.sources.iter().filter(|s| s.kind == SourceKind::Dc) {
        match s.target {
            Target::Vcc => vcc += s.amplitude,
            Target::Gnd => gnd += s.amplitude,
            Target::DeltaR => extra_dr += s.amplitude,
        }
    }
    DcProblem {
        topology: config.topology,
        bridge: config.bridge,
        extra_dr,
        vcc,
        gnd,
        mos: config.mos,
        gain: config.forward_gain(),
        sat_v: config.amp.sat_v,
        feedback_gain: config.feedback_gain,
    }
}

/// One row of the gain sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub delta_r: f64,
    pub gain: f64,
    pub psrr_inv_db_exact: f64,
    pub psrr_inv_db_asymptotic: f64,
    /// Stand-alone bridge at the same `ΔR`, inverted orientation.
    pub psrr_inv_db_open_loop: f64,
}

/// Inverted PSRR against mismatch for several amplifier gains.
///
/// Rows are ordered gain-major. Both grids must be non-empty and strictly
/// increasing.
pub fn gain_sweep(mismatch_grid: &[f64], gains: &[f64], fixed: &LoopParams) -> Result<Vec<SweepRow>> {
    check_grid("mismatch grid", mismatch_grid)?;
    check_grid("gain list", gains)?;
    let mut rows = Vec::with_capacity(mismatch_grid.len() * gains.len());
    for &gain in gains {
        for &dr in mismatch_grid {
            let p = LoopParams {
                a_gain: gain,
                delta_r: dr,
                ..*fixed
            };
            p.validate()?;
            let closed = psrr_inv_db(&p);
            let open = -bridge::standalone_psrr_db(&BridgeParams::with_mismatch(
                fixed.r_nominal,
                dr,
                fixed.vcc,
            ));
            rows.push(SweepRow {
                delta_r: dr,
                gain,
                psrr_inv_db_exact: closed.exact,
                psrr_inv_db_asymptotic: closed.asymptote,
                psrr_inv_db_open_loop: open,
            });
        }
    }
    Ok(rows)
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument(alloc::format!("{name} is empty")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "{name} must be finite and strictly increasing"
        )));
    }
    Ok(())
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => {
            let (a, b) = (libm::log10(lo), libm::log10(hi));
            (0..n)
                .map(|i| libm::pow(10.0, a + (b - a) * i as f64 / (n - 1) as f64))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example() -> LoopParams {
        LoopParams {
            a_gain: 1000.0,
            beta: 1000.0,
            r_nominal: 1000.0,
            delta_r: 10.0,
            vcc: 5.0,
        }
    }

    #[test]
    fn closed_form_example() {
        let p = example();
        assert_eq!(p.loop_gain(), 2500.0);
        let vs = vs_closed_form(&p);
        assert!((vs - 25.0 / 2501.0).abs() < 1e-15);
        assert!(((vs - 1e-2) / 1e-2).abs() < 1.0 / p.loop_gain());
        assert_eq!(vs_closed_form(&LoopParams { delta_r: 0.0, ..p }), 0.0);
    }

    #[test]
    fn gains_example() {
        let p = example();
        let s = signal_gain(&p);
        assert!((s.exact - 2.5 / 2501.0).abs() < 1e-15);
        assert!((s.exact - 9.9960e-4).abs() < 1e-8);
        assert_eq!(s.asymptote, 1e-3);
        let q = supply_gain(&p);
        assert!((q.exact - 1000.0 * 10.0 / (2000.0 * 2501.0 * 2501.0)).abs() < 1e-18);
        assert!((q.exact - 7.9944e-7).abs() < 1e-10);
        assert!((q.asymptote - 8.0e-7).abs() < 1e-20);
        assert_eq!(supply_gain(&LoopParams { delta_r: 0.0, ..p }).exact, 0.0);
    }

    #[test]
    fn infinite_beta_kills_gain() {
        let p = LoopParams {
            beta: 1e30,
            ..example()
        };
        assert!(signal_gain(&p).exact < 1e-29);
    }

    #[test]
    fn psrr_inv_example() {
        let p = example();
        let r = psrr_inv_db(&p);
        assert!((r.asymptote - db20(8e-4)).abs() < 1e-12);
        assert!((r.asymptote + 61.94).abs() < 0.01);
        assert!((r.exact - r.asymptote).abs() < 0.1);
        let r10 = psrr_inv_db(&LoopParams {
            a_gain: 10_000.0,
            ..p
        });
        assert!((r10.exact - r.exact + 20.0).abs() < 0.1);
        let z = psrr_inv_db(&LoopParams { delta_r: 0.0, ..p });
        assert_eq!(z.exact, f64::NEG_INFINITY);
    }

    fn pmos() -> MosParams {
        MosParams {
            polarity: Polarity::Pmos,
            kprime_wl: 1e-2,
            vth_abs: 0.7,
            vgs_bias_abs: 1.7,
        }
    }

    fn amp(gain: f64) -> AmpParams {
        AmpParams {
            gain_dc: gain,
            pole_hz: 100.0,
            sat_v: 5.0,
            input_noise_density: 0.0,
        }
    }

    #[test]
    fn balanced_loop_sits_at_bias() {
        let b = BridgeParams::balanced(1000.0, 5.0);
        let op = solve_dc(&b, &pmos(), &amp(1000.0), Topology::PmosFeedback).unwrap();
        assert_eq!(op.v_s, 0.0);
        assert!((op.r_fb - 100.0).abs() < 1e-9);
        assert_eq!(op.r_fb, op.r_fb_right);
    }

    #[test]
    fn newton_matches_closed_form_small_mismatch() {
        for topo in [Topology::PmosFeedback, Topology::NmosFeedback, Topology::RcCompensated] {
            let mut m = pmos();
            if topo == Topology::NmosFeedback {
                m.polarity = Polarity::Nmos;
            }
            let b = BridgeParams::with_mismatch(1000.0, 1.0, 5.0);
            let a = amp(4000.0);
            let op = solve_dc(&b, &m, &a, topo).unwrap();
            let p = LoopParams::from_devices(&b, &m, &a, 1.0).unwrap();
            assert!(p.loop_gain() >= 100.0);
            let mut cf = vs_closed_form(&p);
            if topo == Topology::NmosFeedback {
                // Mismatch and devices sit on opposite arms, so their
                // sensitivities differ by (R + Rds)/R.
                cf *= (1000.0 + op.r_fb) / 1000.0;
            }
            assert!(((op.v_s - cf) / cf).abs() < 0.01, "{topo:?}: {} vs {}", op.v_s, cf);
            assert!(op.residual.abs() <= 1e-12 * 5.0);
            // The left branch is heavy on top: the loop lightens its top
            // device or loads its bottom one.
            if m.polarity == Polarity::Pmos {
                assert!(op.r_fb < op.r_fb_right);
            } else {
                assert!(op.r_fb > op.r_fb_right);
            }
        }
    }

    #[test]
    fn converges_at_very_high_gain() {
        let b = BridgeParams::with_mismatch(1000.0, 0.5, 5.0);
        let op = solve_dc(&b, &pmos(), &amp(1e7), Topology::PmosFeedback).unwrap();
        assert!(!op.clamped);
        assert!((op.v_s / (0.5 / 100.0) - 1.0).abs() < 0.01, "{}", op.v_s);
    }

    #[test]
    fn clamp_engages() {
        let b = BridgeParams::with_mismatch(1000.0, 50.0, 5.0);
        let a = AmpParams {
            sat_v: 1e-3,
            ..amp(1000.0)
        };
        let op = solve_dc(&b, &pmos(), &a, Topology::PmosFeedback).unwrap();
        assert!(op.clamped);
        assert_eq!(op.v_s, 1e-3);
    }

    #[test]
    fn reversed_feedback_is_detected() {
        let b = BridgeParams::with_mismatch(1000.0, 1.0, 5.0);
        let p = DcProblem {
            topology: Topology::PmosFeedback,
            bridge: b,
            extra_dr: 0.0,
            vcc: 5.0,
            gnd: 0.0,
            mos: Some(pmos()),
            gain: 1000.0,
            sat_v: 5.0,
            feedback_gain: -0.01,
        };
        let r = p.solve();
        assert!(matches!(r, Err(Error::PositiveFeedback { .. })), "{r:?}");
    }

    #[test]
    fn sweep_offsets_and_slopes() {
        let grid = log_grid(0.1, 100.0, 50);
        let fixed = LoopParams {
            delta_r: 0.0,
            ..example()
        };
        let rows = gain_sweep(&grid, &[1e2, 1e3, 1e4], &fixed).unwrap();
        assert_eq!(rows.len(), 150);
        for i in 0..50 {
            let a = rows[i].psrr_inv_db_exact;
            let b = rows[50 + i].psrr_inv_db_exact;
            let c = rows[100 + i].psrr_inv_db_exact;
            assert!((a - b - 20.0).abs() < 0.1 && (b - c - 20.0).abs() < 0.1);
        }
        let lowest = rows[0].psrr_inv_db_exact;
        assert!(rows.iter().all(|r| lowest < r.psrr_inv_db_open_loop));
        assert!(gain_sweep(&[], &[1.0], &fixed).is_err());
        assert!(gain_sweep(&[2.0, 1.0], &[1.0], &fixed).is_err());
    }

    fn random_params() -> impl Strategy<Value = LoopParams> {
        (
            1.0..7.0f64,
            10.0..1e4f64,
            100.0..1e5f64,
            -0.1..0.1f64,
            0.5..20.0f64,
        )
            .prop_filter_map("loop gain in [10, 1e6]", |(la, beta, r, frac, vcc)| {
                let p = LoopParams {
                    a_gain: libm::pow(10.0, la),
                    beta,
                    r_nominal: r,
                    delta_r: frac * r,
                    vcc,
                };
                let l = p.loop_gain();
                (p.delta_r.abs() > 1e-6 * r && (10.0..=1e6).contains(&l)).then_some(p)
            })
    }

    enum Wrt {
        DeltaR,
        Vcc,
    }

    /// Central difference of the closed form with relative step 1e-6, in
    /// exact rational arithmetic: at high loop gain the supply derivative
    /// is ~1e-12 of the value and cancels completely in f64.
    fn exact_central_difference(p: &LoopParams, wrt: Wrt) -> f64 {
        use num::{BigRational, ToPrimitive};
        let q = |x: f64| BigRational::from_float(x).unwrap();
        let two = BigRational::from_integer(2.into());
        let vs = |dr: &BigRational, vcc: &BigRational| {
            let k = q(p.a_gain) / (&two * q(p.r_nominal)) * vcc;
            let l = &k * q(p.beta);
            dr * k / (BigRational::from_integer(1.into()) + l)
        };
        let (dr, vcc) = (q(p.delta_r), q(p.vcc));
        let (up, dn, h) = match wrt {
            Wrt::DeltaR => {
                let h = q(libm::fabs(p.delta_r) * 1e-6);
                (vs(&(&dr + &h), &vcc), vs(&(&dr - &h), &vcc), h)
            }
            Wrt::Vcc => {
                let h = q(p.vcc * 1e-6);
                (vs(&dr, &(&vcc + &h)), vs(&dr, &(&vcc - &h)), h)
            }
        };
        ((up - dn) / (two * h)).to_f64().unwrap()
    }

    proptest! {
        #[test]
        fn gains_match_finite_differences(p in random_params()) {
            let ex = signal_gain(&p).exact;
            let fd = exact_central_difference(&p, Wrt::DeltaR);
            prop_assert!(((fd - ex) / ex).abs() < 1e-8, "{} vs {}", fd, ex);

            let ex = supply_gain(&p).exact;
            let fd = exact_central_difference(&p, Wrt::Vcc);
            prop_assert!(((fd - ex) / ex).abs() < 1e-8, "{} vs {}", fd, ex);
        }

        #[test]
        fn asymptotes_converge(p in random_params()) {
            let l = p.loop_gain();
            let s = signal_gain(&p);
            prop_assert!(((s.exact - s.asymptote) / s.asymptote).abs() <= 2.0 / l);
            let q = supply_gain(&p);
            prop_assert!(((q.exact - q.asymptote) / q.asymptote).abs() <= 2.0 / l);
        }
    }
}
