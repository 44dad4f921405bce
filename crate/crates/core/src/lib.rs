//! Fatigue damage estimation toolkit.
//!
//! Four estimator families over a shared signal layer, usable both for
//! batch post-processing and online streaming:
//!
//! - [`rainflow`]: cycle counting and the rainflow matrix;
//! - [`damage`]: S-N material law, Palmgren-Miner accumulation, damage
//!   series, and equivalent damage load;
//! - [`spectral`]: PSD estimation, spectral moments, narrow-band and
//!   bandwidth-corrected damage rates;
//! - [`markov`]: rainflow matrix to turning-point Markov model, seeded
//!   simulation, and Monte-Carlo damage;
//! - [`hysteresis`]: Preisach relay banks with streaming variation-based
//!   damage.
//!
//! [`signal`] holds ingestion, turning-point extraction, and level
//! discretization; [`synth`] generates seeded reference signals so every
//! consumer can run without external data.

pub mod damage;
pub mod error;
pub mod hysteresis;
pub mod markov;
pub mod rainflow;
pub mod signal;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
