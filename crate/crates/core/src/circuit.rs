//! Algebraic resolution of the bridge with series feedback devices.
//!
//! The device driven by the amplifier's negative output sits in the left
//! branch (with `r1`/`r3`), the one driven by the positive output in the right
//! branch. PMOS devices sit between the supply and the top arms, NMOS devices
//! between the bottom arms and ground. With the amplifier wired inverting
//! (`out_p − out_n = −A·v_diff`) this closes the loop with negative feedback
//! for both polarities.

use crate::bridge::divider_output;
use crate::model::{BridgeParams, Polarity};

/// Total resistance in each of the four arms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Arms {
    pub top_l: f64,
    pub bot_l: f64,
    pub top_r: f64,
    pub bot_r: f64,
}

impl Arms {
    pub fn new(b: &BridgeParams, extra_dr: f64) -> Self {
        Self {
            top_l: b.r1 + extra_dr,
            bot_l: b.r3,
            top_r: b.r2,
            bot_r: b.r4,
        }
    }

    /// Inserts the left/right devices on the side given by `polarity`.
    pub fn with_devices(mut self, polarity: Option<Polarity>, rds_l: f64, rds_r: f64) -> Self {
        match polarity {
            Some(Polarity::Pmos) => {
                self.top_l += rds_l;
                self.top_r += rds_r;
            }
            Some(Polarity::Nmos) => {
                self.bot_l += rds_l;
                self.bot_r += rds_r;
            }
            None => {}
        }
        self
    }

    pub fn output(&self, span: f64) -> f64 {
        divider_output(self.top_l, self.bot_l, self.top_r, self.bot_r, span)
    }

    /// ∂v_diff/∂R_left-device and ∂v_diff/∂R_right-device.
    pub fn device_sensitivity(&self, polarity: Polarity, span: f64) -> (f64, f64) {
        let sl = self.top_l + self.bot_l;
        let sr = self.top_r + self.bot_r;
        match polarity {
            Polarity::Pmos => (
                -span * self.bot_l / (sl * sl),
                span * self.bot_r / (sr * sr),
            ),
            Polarity::Nmos => (
                span * self.top_l / (sl * sl),
                -span * self.top_r / (sr * sr),
            ),
        }
    }
}

/// |V_GS| of a device whose gate sits `out` volts above its bias point.
#[inline]
pub(crate) fn vgs_from_out(polarity: Polarity, vgs_bias_abs: f64, out: f64) -> f64 {
    vgs_bias_abs + crate::mos::gate_sign(polarity) * out
}
