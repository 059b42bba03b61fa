use serde::{Deserialize, Serialize};

use super::histogram::CoincidenceHistogram;
use crate::error::{Error, Result};
use crate::stream::ps_to_secs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Bin {
    pub tau_ps: i64,
    pub g2: f64,
    pub stderr: f64,
    pub counts: u64,
}

/// Normalized coincidence rate per delay bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Estimate {
    pub bin_width_ps: u64,
    /// Coincidences expected per bin for uncorrelated channels.
    pub accidentals_per_bin: f64,
    pub bins: Vec<G2Bin>,
}

/// Divide each bin by the accidental coincidences `r_a·r_b·Δτ·T`.
///
/// The standard error is Poisson, `sqrt(max(counts, 1))` over the
/// accidentals; an empty bin is treated as carrying one count of
/// uncertainty so that zero-count bins do not claim zero error.
pub fn normalize_g2(h: &CoincidenceHistogram) -> Result<G2Estimate> {
    if h.n_starts == 0 || h.n_stops == 0 || h.duration_ps == 0 {
        return Err(Error::UndefinedNormalization(format!(
            "start rate or stop rate is zero ({} starts, {} stops, {} ps)",
            h.n_starts, h.n_stops, h.duration_ps
        )));
    }
    let duration = ps_to_secs(h.duration_ps);
    let rate_a = h.n_starts as f64 / duration;
    let rate_b = h.n_stops as f64 / duration;
    let accidentals = rate_a * rate_b * ps_to_secs(h.bin_width_ps) * duration;
    Ok(G2Estimate::from_counts(h, accidentals))
}

impl G2Estimate {
    /// Normalize `h` by an externally computed accidental level.
    pub fn from_counts(h: &CoincidenceHistogram, accidentals_per_bin: f64) -> Self {
        let bins = h
            .counts
            .iter()
            .enumerate()
            .map(|(i, &c)| G2Bin {
                tau_ps: h.tau_ps(i),
                g2: c as f64 / accidentals_per_bin,
                stderr: (c.max(1) as f64).sqrt() / accidentals_per_bin,
                counts: c,
            })
            .collect();
        G2Estimate {
            bin_width_ps: h.bin_width_ps,
            accidentals_per_bin,
            bins,
        }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn center(&self) -> &G2Bin {
        &self.bins[self.bins.len() / 2]
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.bins.iter().map(|b| b.g2)
    }

    /// Pooled estimate over all bins with `|τ| <= half_width_ps`.
    pub fn window(&self, half_width_ps: u64) -> (f64, f64) {
        self.pooled(|b| b.tau_ps.unsigned_abs() <= half_width_ps)
    }

    /// Pooled estimate over the bins selected by `select`.
    pub fn pooled(&self, select: impl Fn(&G2Bin) -> bool) -> (f64, f64) {
        let (n, c) = self
            .bins
            .iter()
            .filter(|b| select(b))
            .fold((0usize, 0u64), |(n, c), b| (n + 1, c + b.counts));
        if n == 0 {
            return (f64::NAN, f64::NAN);
        }
        let expected = n as f64 * self.accidentals_per_bin;
        (c as f64 / expected, (c.max(1) as f64).sqrt() / expected)
    }

    /// Mean g² over all bins.
    pub fn mean(&self) -> f64 {
        self.pooled(|_| true).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlator::histogram::{HistogramMode, HistogramSettings};

    fn hist(counts: Vec<u64>, n_starts: u64, n_stops: u64, duration_ps: u64) -> CoincidenceHistogram {
        let half = counts.len() / 2;
        let mut h = CoincidenceHistogram::empty(
            &HistogramSettings::new(1_000, half as u64 * 1_000, HistogramMode::AllPairs),
            duration_ps,
        );
        h.counts = counts;
        h.n_starts = n_starts;
        h.n_stops = n_stops;
        h
    }

    #[test]
    fn flat_accidentals_normalize_to_one() {
        // 1e4 events per channel over 1 s, 1 ns bins: 1e4·1e4·1e-9 = 0.1 per bin.
        let h = hist(vec![1; 5], 10_000, 10_000, 1_000_000_000_000);
        let g = normalize_g2(&h).unwrap();
        assert!((g.accidentals_per_bin - 0.1).abs() < 1e-12);
        for b in &g.bins {
            assert!((b.g2 - 10.0).abs() < 1e-9);
            assert!((b.stderr - 10.0).abs() < 1e-9);
        }
        assert_eq!(g.center().tau_ps, 0);
    }

    #[test]
    fn zero_rate_is_error() {
        assert!(matches!(
            normalize_g2(&hist(vec![0; 3], 0, 10, 100)),
            Err(Error::UndefinedNormalization(_))
        ));
        assert!(normalize_g2(&hist(vec![0; 3], 10, 0, 100)).is_err());
        assert!(normalize_g2(&hist(vec![0; 3], 10, 10, 0)).is_err());
    }

    #[test]
    fn pooled_window() {
        let h = hist(vec![4, 0, 2, 0, 4], 1_000, 1_000, 1_000_000_000_000);
        let g = G2Estimate::from_counts(&h, 2.0);
        let (v, e) = g.window(1_000);
        assert!((v - 2.0 / 6.0).abs() < 1e-12);
        assert!((e - 2f64.sqrt() / 6.0).abs() < 1e-12);
        assert!((g.mean() - 1.0).abs() < 1e-12);
        assert!(g.bins.iter().all(|b| b.g2 >= 0.0 && b.stderr >= 0.0));
    }
}
