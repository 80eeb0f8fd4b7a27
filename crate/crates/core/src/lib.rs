//! Delay-separation bounds and delay-domain sidelobe analysis for
//! non-contiguous multiband Wi-Fi spectrum.
//!
//! * [`spectrum`]: frequency grids, the scenario catalog and spectral masks.
//! * [`channel`]: multipath CFR synthesis, noisy observations, SNR calibration.
//! * [`crlb`]: two-path Fisher information, Schur reduction and `Δτ` bounds.
//! * [`delay_response`]: single-path responses, matched-filter scans, peaks
//!   and leakage.
//! * [`export`]: CSV/JSON writers for the above.

pub mod channel;
pub mod crlb;
pub mod delay_response;
pub mod error;
pub mod export;
pub mod extrema;
pub mod phasor;
pub mod spectrum;

pub use error::{Error, Result};
