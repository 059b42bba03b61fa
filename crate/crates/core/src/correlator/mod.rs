//! Coincidence histograms, g²(τ) normalization and analysis.

mod analytic;
mod bounds;
mod g2;
mod histogram;
mod pulsed;

pub use analytic::{analytic_g2, model_names, pulse_integrated_g2, G2Model};
pub use bounds::{classical_bounds_check, BoundsOptions, BoundsReport, Verdict};
pub use g2::{normalize_g2, G2Bin, G2Estimate};
pub use histogram::{
    all_pairs_histogram, all_pairs_histogram_parallel, auto_pairs_histogram, build_histogram, start_stop_histogram,
    CoincidenceHistogram, HistogramMode, HistogramSettings, DEFAULT_BIN_WIDTH_PS, DEFAULT_RANGE_PS,
};
pub use pulsed::{pulse_window_g2, pulsed_peak_areas, PeakAreas, PulseWindowG2};
