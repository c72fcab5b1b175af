use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// One violated configuration invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Dotted path of the offending field, e.g. `bridge.r1`.
    pub field: String,
    /// The rule that failed, e.g. `r1 > 0`.
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("validation failed: {}", ViolationList(.0))]
    ValidationFailed(Vec<Violation>),

    #[error("feedback device in cutoff (|V_GS| = {vgs_abs} V, V_th = {vth_abs} V){}", fmt_time(*.time_s))]
    Cutoff {
        vgs_abs: f64,
        vth_abs: f64,
        time_s: Option<f64>,
    },

    #[error("operating point did not converge after {iterations} iterations (residual {residual:e} V)")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("loop is wired for positive feedback at the operating point (loop slope {slope:e})")]
    PositiveFeedback { slope: f64 },

    #[error("simulation diverged at t = {time_s} s")]
    Diverged { time_s: f64 },

    #[error("analysis window too short: {periods} periods of {freq_hz} Hz retained, need {required}")]
    WindowTooShort {
        freq_hz: f64,
        periods: f64,
        required: usize,
    },

    #[error("window of {samples} samples holds {periods} periods of {freq_hz} Hz, not an integer")]
    NonCoherentWindow {
        freq_hz: f64,
        samples: usize,
        periods: f64,
    },

    #[error("record of {len} samples is too short for {segment_len}-point segments")]
    RecordTooShort { len: usize, segment_len: usize },

    #[error("tone amplitudes are outside the linear regime (halving them moved PSRR by {delta_db} dB)")]
    NonlinearRegime { delta_db: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn fmt_time(t: Option<f64>) -> String {
    match t {
        Some(t) => alloc::format!(" at t = {t} s"),
        None => String::new(),
    }
}

pub type Result<T> = core::result::Result<T, Error>;
