//! MOS transistor in the triode region, used as a voltage-controlled resistor.
//!
//! First-order law, with the `V_DS/2` correction, body effect and
//! channel-length modulation all neglected:
//!
//! ```text
//! R_DS = 1 / (k'·(W/L)·(|V_GS| − |V_th|))
//! ```

use crate::error::{Error, Result};
use crate::model::{MosParams, Polarity};

/// Device state at one gate voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriodePoint {
    pub rds: f64,
    /// ∂R_DS/∂V_gate, Ω/V. Positive for PMOS (raising the gate towards the
    /// supply shrinks |V_GS|), negative for NMOS.
    pub drds_dvg: f64,
    pub vgs_abs: f64,
    pub in_triode: bool,
}

/// Sign of ∂|V_GS|/∂V_gate.
pub fn gate_sign(polarity: Polarity) -> f64 {
    match polarity {
        Polarity::Pmos => -1.0,
        Polarity::Nmos => 1.0,
    }
}

pub fn rds(m: &MosParams, vgs_abs: f64) -> Result<TriodePoint> {
    let overdrive = vgs_abs - m.vth_abs;
    if !(overdrive > 0.0) {
        return Err(Error::Cutoff {
            vgs_abs,
            vth_abs: m.vth_abs,
            time_s: None,
        });
    }
    let rds = 1.0 / (m.kprime_wl * overdrive);
    // ∂R/∂|V_GS| = −R/overdrive
    let drds_dvgs = -rds / overdrive;
    Ok(TriodePoint {
        rds,
        drds_dvg: drds_dvgs * gate_sign(m.polarity),
        vgs_abs,
        in_triode: true,
    })
}

/// Feedback coefficient β = |∂R_DS/∂V_gate| at `at_bias`, Ω/V.
pub fn effective_beta(m: &MosParams, at_bias: f64) -> Result<f64> {
    Ok(libm::fabs(rds(m, at_bias)?.drds_dvg))
}

/// Gate overdrive that yields `target_rds`.
pub fn overdrive_for(kprime_wl: f64, target_rds: f64) -> f64 {
    1.0 / (kprime_wl * target_rds)
}
