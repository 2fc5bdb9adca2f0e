//! Deterministic baseband simulator for in-band full-duplex radios.
//!
//! The crate models a single full-duplex transceiver at complex baseband:
//! an OFDM transmitter with extended cyclic prefix, a nonlinear power
//! amplifier described by a parallel Hammerstein (odd-order memory
//! polynomial) model, a time-varying self-interference channel, an analog
//! cancellation stage and receiver noise. On top of that it provides four
//! digital self-interference cancellers and link- and system-level
//! evaluation harnesses.
//!
//! Module map:
//!
//! * [`signal`]: numerology, resource grids, reference-signal patterns, OFDM.
//! * [`impairments`]: PA model, SI channel with fading, analog SIC, AWGN.
//! * [`estimation`]: least-squares fitters (time, frequency, Hammerstein,
//!   pre-calibrator).
//! * [`cancellers`]: the cancellation pipelines and the scenario builder.
//! * [`link_eval`]: link-level runs and sweeps.
//! * [`system_eval`]: SINR and Shannon throughput over a multi-cell topology.
//! * [`formats`]: PA coefficient files and binary waveform captures.

pub mod cancellers;
pub mod error;
pub mod estimation;
pub mod formats;
pub mod impairments;
mod linalg;
pub mod link_eval;
pub mod signal;
pub mod system_eval;

pub use error::{FdError, Result};

/// Complex baseband sample.
pub type C64 = num_complex::Complex64;

/// Convert a linear power ratio to dB.
#[inline]
pub fn lin_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

/// Convert dB to a linear power ratio.
#[inline]
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Mean sample power of `x` in dBm (0 dBm is unit mean power).
pub fn power_dbm(x: &[C64]) -> f64 {
    if x.is_empty() {
        return f64::NEG_INFINITY;
    }
    let p = x.iter().map(|s| s.norm_sqr()).sum::<f64>() / x.len() as f64;
    lin_to_db(p)
}

/// Stable 64-bit seed mixing (splitmix64 finalizer).
pub(crate) fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a
        .wrapping_add(b.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
