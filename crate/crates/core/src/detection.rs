//! Avalanche-photodiode model and windowed count-rate traces.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::emitters::poisson_times;
use crate::error::{ensure, ensure_nonnegative, ensure_probability, Result};
use crate::rng::seeded;
use crate::stream::{ps_to_secs, secs_to_ps, Event, EventStream, Tag};

/// FWHM of a Gaussian divided by its standard deviation, 2·sqrt(2 ln 2).
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

/// Timing resolution of the complete two-detector start-stop system, ps.
pub const SYSTEM_JITTER_FWHM_PS: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    #[serde(default = "default_efficiency")]
    pub efficiency: f64,
    /// Single-detector timing jitter (Gaussian FWHM), ps.
    #[serde(default = "default_jitter")]
    pub jitter_fwhm_ps: f64,
    /// Non-paralyzable dead time, ps.
    #[serde(default = "default_dead_time")]
    pub dead_time_ps: f64,
    /// Dark count rate, 1/s.
    #[serde(default)]
    pub dark_rate: f64,
}

fn default_efficiency() -> f64 {
    1.0
}

fn default_jitter() -> f64 {
    SYSTEM_JITTER_FWHM_PS / std::f64::consts::SQRT_2
}

fn default_dead_time() -> f64 {
    50_000.0
}

impl Default for DetectorConfig {
    /// Each detector carries 800/√2 ps of jitter so the start-stop delay
    /// response has the 800 ps system FWHM.
    fn default() -> Self {
        DetectorConfig {
            efficiency: default_efficiency(),
            jitter_fwhm_ps: default_jitter(),
            dead_time_ps: default_dead_time(),
            dark_rate: 0.0,
        }
    }
}

impl DetectorConfig {
    /// Unit efficiency, no jitter, no dead time, no dark counts.
    pub fn ideal() -> Self {
        DetectorConfig {
            efficiency: 1.0,
            jitter_fwhm_ps: 0.0,
            dead_time_ps: 0.0,
            dark_rate: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_probability("detector efficiency", self.efficiency)?;
        ensure_nonnegative("jitter_fwhm_ps", self.jitter_fwhm_ps)?;
        ensure_nonnegative("dead_time_ps", self.dead_time_ps)?;
        ensure_nonnegative("dark_rate", self.dark_rate)
    }

    pub fn jitter_sigma_ps(&self) -> f64 {
        self.jitter_fwhm_ps / FWHM_PER_SIGMA
    }
}

/// Turn incident photons into detector clicks.
///
/// Photons are thinned by the efficiency and displaced by Gaussian jitter
/// (clamped to the stream window); Poisson dark counts are merged in; then
/// any click closer than `dead_time` to the previous accepted click is lost.
pub fn detect(stream: &EventStream, cfg: &DetectorConfig, seed: u64) -> Result<EventStream> {
    cfg.validate()?;
    let mut rng = seeded(seed);
    let duration = stream.duration_ps();
    let sigma = cfg.jitter_sigma_ps();

    let mut events: Vec<Event> = Vec::with_capacity((stream.len() as f64 * cfg.efficiency) as usize + 16);
    for e in stream.iter() {
        if cfg.efficiency < 1.0 && rng.random::<f64>() >= cfg.efficiency {
            continue;
        }
        let time = if sigma > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            (e.time as f64 + z * sigma).round().clamp(0.0, duration as f64) as u64
        } else {
            e.time
        };
        events.push(Event::new(time, e.tag));
    }
    for t in poisson_times(&mut rng, cfg.dark_rate, duration) {
        events.push(Event::new(t, Tag::Dark));
    }
    // Jitter only reorders neighbours, so the stable sort is near-linear.
    let clicks = EventStream::from_unsorted(events, duration);
    Ok(apply_dead_time(&clicks, cfg.dead_time_ps))
}

/// Non-paralyzable dead time: a click is registered only if it comes at
/// least `dead_time_ps` after the previous registered click.
pub fn apply_dead_time(stream: &EventStream, dead_time_ps: f64) -> EventStream {
    if dead_time_ps <= 0.0 {
        return stream.clone();
    }
    let dead = dead_time_ps.ceil() as u64;
    let mut last: Option<u64> = None;
    stream.retain(|_, e| match last {
        Some(prev) if e.time - prev < dead => false,
        _ => {
            last = Some(e.time);
            true
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSample {
    pub start_ps: u64,
    pub counts: u64,
}

/// Counts in contiguous, disjoint windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeTrace {
    pub window_ps: u64,
    pub samples: Vec<TraceSample>,
}

impl FringeTrace {
    pub fn window_s(&self) -> f64 {
        ps_to_secs(self.window_ps)
    }

    pub fn total_counts(&self) -> u64 {
        self.samples.iter().map(|s| s.counts).sum()
    }

    /// Window center times, seconds.
    pub fn centers_s(&self) -> impl Iterator<Item = f64> + '_ {
        let half = self.window_ps / 2;
        self.samples.iter().map(move |s| ps_to_secs(s.start_ps + half))
    }

    pub fn mean_counts(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.total_counts() as f64 / self.samples.len() as f64
        }
    }
}

/// Count events in consecutive windows of `window_s` seconds covering the
/// stream duration. A trailing partial window is dropped; an event exactly
/// at the end of the last full window is counted in it.
pub fn count_rate_trace(stream: &EventStream, window_s: f64) -> Result<FringeTrace> {
    ensure(window_s.is_finite() && window_s > 0.0, || {
        format!("trace window must be positive, got {window_s}")
    })?;
    let window = secs_to_ps(window_s).max(1);
    let n = (stream.duration_ps() / window) as usize;
    let mut counts = vec![0u64; n];
    if n > 0 {
        for &t in stream.times() {
            let i = ((t / window) as usize).min(n - 1);
            if t <= n as u64 * window {
                counts[i] += 1;
            }
        }
    }
    Ok(FringeTrace {
        window_ps: window,
        samples: counts
            .into_iter()
            .enumerate()
            .map(|(i, counts)| TraceSample {
                start_ps: i as u64 * window,
                counts,
            })
            .collect(),
    })
}
