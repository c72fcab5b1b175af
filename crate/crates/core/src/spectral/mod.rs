//! Spectral measurement and noise analysis.

mod budget;
mod fft;
mod goertzel;
mod psrr;
mod welch;

pub use budget::*;
pub use fft::fft_in_place;
pub use goertzel::{goertzel, ToneEstimate};
pub use psrr::*;
pub use welch::{welch_psd, Psd};
