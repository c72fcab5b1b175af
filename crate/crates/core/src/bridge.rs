//! Statics of the stand-alone Wheatstone bridge.
//!
//! With `r1` over `r3` on the left and `r2` over `r4` on the right, the
//! differential output is
//!
//! ```text
//! V = Vcc · (r2·r3 − r1·r4) / ((r1 + r3)·(r2 + r4))
//! ```
//!
//! PSRR here is `20·log10(|∂V/∂ΔR| / |∂V/∂Vcc|)` with the signal gain in V/Ω
//! and the supply gain in V/V.

use crate::db20;
use crate::model::BridgeParams;

/// Small-signal figures of a bridge at its DC point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeSensitivities {
    /// ∂V/∂r1, V/Ω.
    pub dv_ddr: f64,
    /// ∂V/∂Vcc, V/V.
    pub dv_dvcc: f64,
    /// DC output, V.
    pub v_offset: f64,
}

/// Differential output of two dividers sharing a supply span.
///
/// `top_*` connect to the positive rail, `bot_*` to the negative one. Returns
/// left mid-node minus right mid-node.
#[inline]
pub fn divider_output(top_l: f64, bot_l: f64, top_r: f64, bot_r: f64, span: f64) -> f64 {
    span * (top_r * bot_l - top_l * bot_r) / ((top_l + bot_l) * (top_r + bot_r))
}

pub fn bridge_output(b: &BridgeParams) -> f64 {
    divider_output(b.r1, b.r3, b.r2, b.r4, b.vcc_dc)
}

/// `r2·r3 − r1·r4`, Ω². Zero exactly when the bridge is balanced.
pub fn balance_residual(b: &BridgeParams) -> f64 {
    b.r2 * b.r3 - b.r1 * b.r4
}

pub fn sensitivities(b: &BridgeParams) -> BridgeSensitivities {
    let left = b.r1 + b.r3;
    let v_offset = bridge_output(b);
    BridgeSensitivities {
        dv_ddr: -b.vcc_dc * b.r3 / (left * left),
        dv_dvcc: balance_residual(b) / (left * (b.r2 + b.r4)),
        v_offset,
    }
}

/// Stand-alone PSRR in dB; `+inf` when the bridge is exactly balanced.
pub fn standalone_psrr_db(b: &BridgeParams) -> f64 {
    let s = sensitivities(b);
    if s.dv_dvcc == 0.0 {
        return f64::INFINITY;
    }
    db20(libm::fabs(s.dv_ddr) / libm::fabs(s.dv_dvcc))
}

/// The `ΔR` on `r1` (others at `r_nominal`) for which the supply reaches the
/// output attenuated by `attenuation_db`, i.e. `|∂V/∂Vcc| = 10^(−dB/20)`.
pub fn mismatch_for_attenuation(r_nominal: f64, attenuation_db: f64) -> f64 {
    // |∂V/∂Vcc| = ΔR / (2·(2R + ΔR)) for ΔR > 0.
    let a = libm::pow(10.0, -attenuation_db / 20.0);
    4.0 * a * r_nominal / (1.0 - 2.0 * a)
}
