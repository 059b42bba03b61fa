use serde::{Deserialize, Serialize};

use super::histogram::CoincidenceHistogram;
use crate::error::{ensure, Error, Result};
use crate::stream::EventStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakAreas {
    /// `(k, counts)` for the window of width T centered at k·T.
    pub peaks: Vec<(i64, u64)>,
    /// Central area divided by the mean side-peak area.
    pub central_ratio: f64,
    pub central_ratio_stderr: f64,
}

impl PeakAreas {
    pub fn central(&self) -> u64 {
        self.peaks.iter().find(|(k, _)| *k == 0).map_or(0, |p| p.1)
    }

    pub fn mean_side(&self) -> f64 {
        let sides: Vec<u64> = self.peaks.iter().filter(|(k, _)| *k != 0).map(|p| p.1).collect();
        sides.iter().sum::<u64>() as f64 / sides.len() as f64
    }
}

/// Integrate a pulsed-source histogram over windows of one repetition period
/// centered on each peak. Only windows lying completely inside the histogram
/// are reported; a bin belongs to the window containing its center.
pub fn pulsed_peak_areas(h: &CoincidenceHistogram, rep_period_ps: u64) -> Result<PeakAreas> {
    ensure(rep_period_ps > 0, || "rep_period_ps must be positive".into())?;
    if h.range_ps() < 2 * rep_period_ps {
        return Err(Error::RangeTooSmall {
            range_ps: h.range_ps(),
            rep_period_ps,
        });
    }
    let period = rep_period_ps as i64;
    let edge = h.range_ps() as i64 + h.bin_width_ps as i64 / 2;
    // Peak k is complete when k·T + T/2 does not exceed the histogram edge.
    let k_max = (2 * edge - period).div_euclid(2 * period);
    let mut areas = vec![0u64; (2 * k_max + 1) as usize];
    for (i, &c) in h.counts.iter().enumerate() {
        let k = (2 * h.tau_ps(i) + period).div_euclid(2 * period);
        if k.abs() <= k_max {
            areas[(k + k_max) as usize] += c;
        }
    }
    let peaks: Vec<(i64, u64)> = (-k_max..=k_max).zip(areas).collect();
    let central = peaks[k_max as usize].1 as f64;
    let side_total: u64 = peaks.iter().filter(|(k, _)| *k != 0).map(|p| p.1).sum();
    let side_mean = side_total as f64 / (2 * k_max) as f64;
    if side_total == 0 {
        return Err(Error::InsufficientData("no coincidences in the side peaks".into()));
    }
    let ratio = central / side_mean;
    let rel = (1.0 / central.max(1.0) + 1.0 / side_total as f64).sqrt();
    Ok(PeakAreas {
        peaks,
        central_ratio: ratio,
        central_ratio_stderr: ratio.max(1.0 / side_mean) * rel,
    })
}

/// Pulse-integrated g²(0) from a single stream.
///
/// Events are assigned to windows `[offset + kT, offset + (k+1)T)`. With
/// `N_k` events in window k, the estimate is the number of unordered
/// same-window pairs `Σ N_k(N_k−1)/2` divided by half the number of pairs
/// between adjacent windows `Σ N_k·N_{k+1}`, which gives `1 − 1/n` for
/// exactly n photons per pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseWindowG2 {
    pub same_window_pairs: u64,
    pub adjacent_window_pairs: u64,
    pub value: f64,
}

pub fn pulse_window_g2(stream: &EventStream, rep_period_ps: u64, offset_ps: u64) -> Result<PulseWindowG2> {
    ensure(rep_period_ps > 0, || "rep_period_ps must be positive".into())?;
    let mut counts: Vec<u64> = Vec::new();
    for &t in stream.times() {
        if t < offset_ps {
            continue;
        }
        let k = ((t - offset_ps) / rep_period_ps) as usize;
        if k >= counts.len() {
            counts.resize(k + 1, 0);
        }
        counts[k] += 1;
    }
    let same: u64 = counts.iter().map(|&n| n * n.saturating_sub(1) / 2).sum();
    let adjacent: u64 = counts.windows(2).map(|w| w[0] * w[1]).sum();
    if adjacent == 0 {
        return Err(Error::InsufficientData(
            "no pairs between adjacent pulse windows".into(),
        ));
    }
    Ok(PulseWindowG2 {
        same_window_pairs: same,
        adjacent_window_pairs: adjacent,
        value: 2.0 * same as f64 / adjacent as f64,
    })
}
