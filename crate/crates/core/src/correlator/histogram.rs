use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::stream::{ps_to_secs, EventStream};

/// How delays are collected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramMode {
    /// Time-to-amplitude converter: each start is paired with the first
    /// later stop only. The negative-delay half swaps the roles.
    #[default]
    StartStop,
    /// Every pair within range.
    AllPairs,
}

impl std::str::FromStr for HistogramMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "start-stop" | "start_stop" => Ok(HistogramMode::StartStop),
            "all-pairs" | "all_pairs" => Ok(HistogramMode::AllPairs),
            other => Err(crate::Error::config(format!("unknown histogram mode {other:?}"))),
        }
    }
}

/// TAC bin width, ps.
pub const DEFAULT_BIN_WIDTH_PS: u64 = 37;
/// Five 13.2 ns repetition periods.
pub const DEFAULT_RANGE_PS: u64 = 66_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSettings {
    #[serde(default = "default_bin_width")]
    pub bin_width_ps: u64,
    #[serde(default = "default_range")]
    pub range_ps: u64,
    #[serde(default)]
    pub mode: HistogramMode,
}

fn default_bin_width() -> u64 {
    DEFAULT_BIN_WIDTH_PS
}

fn default_range() -> u64 {
    DEFAULT_RANGE_PS
}

impl Default for HistogramSettings {
    fn default() -> Self {
        HistogramSettings {
            bin_width_ps: DEFAULT_BIN_WIDTH_PS,
            range_ps: DEFAULT_RANGE_PS,
            mode: HistogramMode::StartStop,
        }
    }
}

impl HistogramSettings {
    pub fn new(bin_width_ps: u64, range_ps: u64, mode: HistogramMode) -> Self {
        HistogramSettings {
            bin_width_ps,
            range_ps,
            mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.bin_width_ps > 0, || "bin_width_ps must be positive".into())?;
        ensure(self.range_ps >= self.bin_width_ps, || {
            format!(
                "range_ps ({}) must be at least one bin width ({})",
                self.range_ps, self.bin_width_ps
            )
        })?;
        ensure(self.range_ps / self.bin_width_ps <= 50_000_000, || {
            "histogram would need more than 1e8 bins".into()
        })
    }

    /// Bins on each side of the τ = 0 bin.
    pub fn half_bins(&self) -> usize {
        self.range_ps.div_ceil(self.bin_width_ps) as usize
    }
}

/// Delay histogram with τ = 0 at the center of bin `half_bins`.
///
/// Bin `i` is centered at `(i − half_bins)·bin_width` and covers delays in
/// `[center − w/2, center + w/2)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub bin_width_ps: u64,
    pub half_bins: usize,
    pub counts: Vec<u64>,
    /// Events on the start channel.
    pub n_starts: u64,
    /// Events on the stop channel.
    pub n_stops: u64,
    pub duration_ps: u64,
    pub mode: HistogramMode,
}

impl CoincidenceHistogram {
    pub fn empty(settings: &HistogramSettings, duration_ps: u64) -> Self {
        let half_bins = settings.half_bins();
        CoincidenceHistogram {
            bin_width_ps: settings.bin_width_ps,
            half_bins,
            counts: vec![0; 2 * half_bins + 1],
            n_starts: 0,
            n_stops: 0,
            duration_ps,
            mode: settings.mode,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Covered delay range on each side, ps (bin centers).
    pub fn range_ps(&self) -> u64 {
        self.half_bins as u64 * self.bin_width_ps
    }

    pub fn tau_ps(&self, index: usize) -> i64 {
        (index as i64 - self.half_bins as i64) * self.bin_width_ps as i64
    }

    pub fn taus_ps(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.n_bins()).map(|i| self.tau_ps(i))
    }

    pub fn center_index(&self) -> usize {
        self.half_bins
    }

    /// Bin holding delay `delay_ps`, if within range.
    pub fn bin_index(&self, delay_ps: i64) -> Option<usize> {
        bin_of(delay_ps, self.bin_width_ps as i64, self.half_bins as i64)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn duration_secs(&self) -> f64 {
        ps_to_secs(self.duration_ps)
    }

    /// Sum in the bins of another histogram with identical binning.
    pub fn accumulate(&mut self, other: &CoincidenceHistogram) {
        assert_eq!(self.bin_width_ps, other.bin_width_ps, "bin widths differ");
        assert_eq!(self.half_bins, other.half_bins, "ranges differ");
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
    }
}

#[inline]
fn bin_of(delay: i64, width: i64, half: i64) -> Option<usize> {
    let k = (2 * delay + width).div_euclid(2 * width);
    (-half..=half).contains(&k).then(|| (k + half) as usize)
}

/// Largest |delay| that can land in a bin, plus one.
fn reach(settings_width: i64, half: i64) -> i64 {
    half * settings_width + settings_width
}

/// Start-stop (TAC) histogram.
///
/// Positive delays: each start is paired with the first stop strictly after
/// it. Negative delays: each stop is paired with the first start strictly
/// after it, recorded at the negated delay. Pairs beyond range are dropped.
pub fn start_stop_histogram(
    start: &EventStream,
    stop: &EventStream,
    bin_width_ps: u64,
    range_ps: u64,
) -> Result<CoincidenceHistogram> {
    let settings = HistogramSettings::new(bin_width_ps, range_ps, HistogramMode::StartStop);
    settings.validate()?;
    let mut h = CoincidenceHistogram::empty(&settings, start.duration_ps().max(stop.duration_ps()));
    h.n_starts = start.len() as u64;
    h.n_stops = stop.len() as u64;
    let (w, half) = (bin_width_ps as i64, h.half_bins as i64);
    first_after_pass(start.times(), stop.times(), 1, w, half, &mut h.counts);
    first_after_pass(stop.times(), start.times(), -1, w, half, &mut h.counts);
    Ok(h)
}

fn first_after_pass(from: &[u64], to: &[u64], sign: i64, w: i64, half: i64, counts: &mut [u64]) {
    let mut j = 0;
    for &t in from {
        while j < to.len() && to[j] <= t {
            j += 1;
        }
        if j == to.len() {
            break;
        }
        let delay = sign * (to[j] - t) as i64;
        if let Some(i) = bin_of(delay, w, half) {
            counts[i] += 1;
        }
    }
}

/// Histogram of every pair `(ta, tb)` with `tb − ta` within range.
pub fn all_pairs_histogram(
    a: &EventStream,
    b: &EventStream,
    bin_width_ps: u64,
    range_ps: u64,
) -> Result<CoincidenceHistogram> {
    pairs_histogram(a, b, bin_width_ps, range_ps, false)
}

/// All ordered pairs `(i, j)`, `i ≠ j`, of a single stream.
pub fn auto_pairs_histogram(stream: &EventStream, bin_width_ps: u64, range_ps: u64) -> Result<CoincidenceHistogram> {
    pairs_histogram(stream, stream, bin_width_ps, range_ps, true)
}

fn pairs_histogram(
    a: &EventStream,
    b: &EventStream,
    bin_width_ps: u64,
    range_ps: u64,
    skip_self: bool,
) -> Result<CoincidenceHistogram> {
    let settings = HistogramSettings::new(bin_width_ps, range_ps, HistogramMode::AllPairs);
    settings.validate()?;
    let mut h = CoincidenceHistogram::empty(&settings, a.duration_ps().max(b.duration_ps()));
    h.n_starts = a.len() as u64;
    h.n_stops = b.len() as u64;
    let (w, half) = (bin_width_ps as i64, h.half_bins as i64);
    pairs_into(a.times(), 0, b.times(), w, half, skip_self, &mut h.counts);
    Ok(h)
}

/// Accumulate pairs for starts `a` (whose first element has global index
/// `a_offset`) against the full stop array `b`.
fn pairs_into(a: &[u64], a_offset: usize, b: &[u64], w: i64, half: i64, skip_self: bool, counts: &mut [u64]) {
    let reach = reach(w, half);
    let mut lo = match a.first() {
        Some(&t0) => b.partition_point(|&tb| (tb as i64) < t0 as i64 - reach),
        None => return,
    };
    for (ia, &ta) in a.iter().enumerate() {
        let ta = ta as i64;
        while lo < b.len() && (b[lo] as i64) < ta - reach {
            lo += 1;
        }
        for (jb, &tb) in b.iter().enumerate().skip(lo) {
            let delay = tb as i64 - ta;
            if delay > reach {
                break;
            }
            if skip_self && jb == ia + a_offset {
                continue;
            }
            if let Some(i) = bin_of(delay, w, half) {
                counts[i] += 1;
            }
        }
    }
}

/// [`all_pairs_histogram`] computed on `threads` time partitions of `a`.
/// Each partition sees the whole of `b`, so the merged result is identical
/// to the sequential one.
pub fn all_pairs_histogram_parallel(
    a: &EventStream,
    b: &EventStream,
    bin_width_ps: u64,
    range_ps: u64,
    threads: usize,
) -> Result<CoincidenceHistogram> {
    let settings = HistogramSettings::new(bin_width_ps, range_ps, HistogramMode::AllPairs);
    settings.validate()?;
    let mut h = CoincidenceHistogram::empty(&settings, a.duration_ps().max(b.duration_ps()));
    h.n_starts = a.len() as u64;
    h.n_stops = b.len() as u64;
    let (w, half) = (bin_width_ps as i64, h.half_bins as i64);
    let threads = threads.max(1);
    let chunk = a.len().div_ceil(threads).max(1);
    let n_bins = h.n_bins();
    let partials: Vec<Vec<u64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = a
            .times()
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    let mut counts = vec![0u64; n_bins];
                    pairs_into(part, 0, b.times(), w, half, false, &mut counts);
                    counts
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("histogram worker panicked"))
            .collect()
    });
    for p in partials {
        for (c, v) in h.counts.iter_mut().zip(p) {
            *c += v;
        }
    }
    Ok(h)
}

pub fn build_histogram(a: &EventStream, b: &EventStream, settings: &HistogramSettings) -> Result<CoincidenceHistogram> {
    match settings.mode {
        HistogramMode::StartStop => start_stop_histogram(a, b, settings.bin_width_ps, settings.range_ps),
        HistogramMode::AllPairs => all_pairs_histogram(a, b, settings.bin_width_ps, settings.range_ps),
    }
}
