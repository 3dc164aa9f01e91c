//! Link-level simulation and configuration search for resolution-adaptive
//! all-digital massive MU-MIMO uplink receivers.
//!
//! The receive chain is: channel draw and power control ([`channel`]), I/Q ADC
//! quantization ([`frontend`]), finite-alphabet L-MMSE equalization
//! ([`equalizer`]) and hard detection ([`constellation`]). [`power`] prices a
//! `(q, k, B')` configuration, [`montecarlo`] measures the SNR it needs for a
//! target BER and [`adapt`] searches the design space for Pareto-optimal
//! configurations.

pub mod adapt;
pub mod channel;
pub mod config;
pub mod constellation;
pub mod engine;
pub mod equalizer;
pub mod error;
pub mod frontend;
pub mod io;
pub mod montecarlo;
pub mod power;
pub mod resolution;
pub mod seed;

pub use error::{Error, Result};
pub use resolution::Bits;
