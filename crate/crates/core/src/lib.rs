//! Photon-statistics simulator and analysis toolkit.
//!
//! Photon emission streams are generated as point processes ([`emitters`]),
//! sent through a scanned Michelson interferometer and a beam splitter
//! ([`optics`]), detected by two imperfect single-photon detectors
//! ([`detection`]) and analysed both as a coincidence histogram / g²(τ)
//! estimate ([`correlator`]) and as a single-detector count-rate trace whose
//! fringe visibility is extracted ([`experiment`]).
//!
//! All timestamps are integer picoseconds. Every stochastic stage takes an
//! explicit seed, so a run is a pure function of its configuration.

pub mod correlator;
pub mod detection;
pub mod emitters;
pub mod error;
pub mod experiment;
pub mod export;
pub mod io;
pub mod optics;
pub mod plot;
pub mod presets;
pub mod rng;
pub mod stream;

pub use error::{Error, Result};
pub use stream::{Event, EventStream, Tag};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
