//! The combined measurement: one photon stream feeds both the coincidence
//! histogram (two detectors behind a beam splitter) and the interference
//! count-rate trace (detector A alone) while the Michelson arm is scanned.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::correlator::{
    build_histogram, classical_bounds_check, normalize_g2, pulsed_peak_areas, BoundsOptions, BoundsReport,
    CoincidenceHistogram, G2Estimate, HistogramSettings, PeakAreas, Verdict,
};
use crate::detection::{count_rate_trace, detect, DetectorConfig, FringeTrace};
use crate::emitters::{add_background, EmitterConfig};
use crate::error::{ensure, ensure_nonnegative, ensure_positive, ensure_probability, Error, Result, ResultExt};
use crate::optics::{bandpass_filter, beamsplitter_route, michelson_transmit, ScanWaveform, SpectralLine};
use crate::rng::{derive_indexed, derive_seed, seeded, RngAlgorithm};
use crate::stream::{ps_to_secs, secs_to_ps, EventStream, PS_PER_SECOND};
use crate::SPEED_OF_LIGHT;

/// Hard cap on the expected number of emitted photons in one run.
pub const MAX_EXPECTED_PHOTONS: f64 = 4e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(default = "one")]
    pub signal_transmission: f64,
    #[serde(default = "one")]
    pub background_transmission: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            signal_transmission: 1.0,
            background_transmission: 1.0,
        }
    }
}

/// Accidental-coincidence level used to normalize g².
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `r_a·r_b·Δτ·T` from the mean rates of the whole run.
    #[default]
    Global,
    /// Summed over fringe windows, `Σ n_a·n_b·Δτ/window`. Removes the
    /// `1 + v²/2` plateau that a fully modulated fringe pattern puts on the
    /// global normalization.
    Windowed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOptions {
    /// Half-width of the window pooled into the cw g²(0) estimate, ps.
    #[serde(default = "default_zero_window")]
    pub zero_window_ps: u64,
    #[serde(default = "default_k_sigma")]
    pub k_sigma: f64,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default)]
    pub normalization: Normalization,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            zero_window_ps: default_zero_window(),
            k_sigma: default_k_sigma(),
            bootstrap_resamples: default_resamples(),
            normalization: Normalization::Global,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn default_zero_window() -> u64 {
    400
}

fn default_k_sigma() -> f64 {
    3.0
}

fn default_resamples() -> usize {
    200
}

fn default_duration() -> f64 {
    60.0
}

fn default_fringe_window() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub rng: RngAlgorithm,
    /// Master seed; every stage derives its own seed from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    pub emitter: EmitterConfig,
    /// Uncorrelated background photons, 1/s, added before the filter.
    #[serde(default)]
    pub background_rate: f64,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub line: SpectralLine,
    #[serde(default)]
    pub scan: ScanWaveform,
    #[serde(default = "half")]
    pub splitter_reflectance: f64,
    #[serde(default)]
    pub detectors: [DetectorConfig; 2],
    #[serde(default)]
    pub histogram: HistogramSettings,
    #[serde(default = "default_fringe_window")]
    pub fringe_window_s: f64,
    #[serde(default)]
    pub analysis: AnalysisOptions,
}

impl ExperimentConfig {
    /// A config with default optics, detectors and analysis.
    pub fn new(emitter: EmitterConfig, duration_s: f64, seed: u64) -> Self {
        ExperimentConfig {
            rng: RngAlgorithm::default(),
            seed,
            duration_s,
            emitter,
            background_rate: 0.0,
            filter: FilterConfig::default(),
            line: SpectralLine::default(),
            scan: ScanWaveform::default(),
            splitter_reflectance: 0.5,
            detectors: [DetectorConfig::default(); 2],
            histogram: HistogramSettings::default(),
            fringe_window_s: default_fringe_window(),
            analysis: AnalysisOptions::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("duration_s", self.duration_s)?;
        self.emitter.validate().context(|| "emitter".into())?;
        let expected = (self.emitter.mean_rate() + self.background_rate) * self.duration_s;
        ensure(expected <= MAX_EXPECTED_PHOTONS, || {
            format!("run would emit about {expected:.3e} photons; the limit is {MAX_EXPECTED_PHOTONS:.0e}")
        })?;
        if let Some(period) = self.emitter.rep_period_ps() {
            ensure(secs_to_ps(self.duration_s) >= period, || {
                "duration_s is shorter than one repetition period".into()
            })?;
        }
        ensure_nonnegative("background_rate", self.background_rate)?;
        ensure_probability("filter.signal_transmission", self.filter.signal_transmission)?;
        ensure_probability("filter.background_transmission", self.filter.background_transmission)?;
        self.line.validate().context(|| "line".into())?;
        self.scan.validate().context(|| "scan".into())?;
        ensure_probability("splitter_reflectance", self.splitter_reflectance)?;
        for (name, d) in ["detectors[0]", "detectors[1]"].iter().zip(&self.detectors) {
            d.validate().context(|| (*name).into())?;
        }
        self.histogram.validate().context(|| "histogram".into())?;
        ensure_positive("fringe_window_s", self.fringe_window_s)?;
        ensure(self.fringe_window_s <= self.duration_s, || {
            "fringe_window_s exceeds duration_s".into()
        })?;
        ensure_positive("analysis.k_sigma", self.analysis.k_sigma)?;
        ensure(self.analysis.bootstrap_resamples >= 2, || {
            "analysis.bootstrap_resamples must be at least 2".into()
        })
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        crate::export::sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }

    fn stage_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityFit {
    pub visibility: f64,
    pub stderr: f64,
    /// Fringe neighborhoods that entered the fit.
    pub neighborhoods: usize,
    /// Common fringe phase relative to cos(2π·x/λ), rad.
    pub phase_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum G2ZeroMethod {
    /// Pooled bins with |τ| ≤ zero_window_ps.
    ZeroWindow,
    /// Central over mean side peak area.
    PeakArea,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub seed: u64,
    pub emitter: String,
    pub duration_s: f64,
    pub emitted_photons: u64,
    pub clicks_a: u64,
    pub clicks_b: u64,
    pub coincidences: u64,
    pub g2_zero: f64,
    pub g2_zero_stderr: f64,
    pub g2_zero_method: G2ZeroMethod,
    pub verdict: Verdict,
    pub classical_bound_violation: bool,
    pub visibility: Option<f64>,
    pub visibility_stderr: Option<f64>,
    /// Why the visibility is missing, if it is.
    pub visibility_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub provenance: Provenance,
    pub histogram: CoincidenceHistogram,
    pub g2: G2Estimate,
    pub fringe: FringeTrace,
    pub visibility: Option<VisibilityFit>,
    pub bounds: BoundsReport,
    pub peak_areas: Option<PeakAreas>,
    pub summary: Summary,
}

/// A run together with the intermediate click records.
#[derive(Debug, Clone)]
pub struct CombinedRun {
    pub result: RunResult,
    /// Photons leaving the interferometer.
    pub transmitted: EventStream,
    pub channel_a: EventStream,
    pub channel_b: EventStream,
}

struct Photons {
    emitted: u64,
    transmitted: EventStream,
}

fn photons(cfg: &ExperimentConfig) -> Result<Photons> {
    let emitted = cfg
        .emitter
        .generate(cfg.duration_s, cfg.stage_seed("emitter"))
        .context(|| "emitter".into())?;
    let n_emitted = emitted.len() as u64;
    let with_bg = add_background(&emitted, cfg.background_rate, cfg.stage_seed("background"))?;
    drop(emitted);
    let filtered = bandpass_filter(
        &with_bg,
        cfg.filter.signal_transmission,
        cfg.filter.background_transmission,
        cfg.stage_seed("bandpass"),
    )?;
    drop(with_bg);
    let transmitted = michelson_transmit(&filtered, &cfg.line, &cfg.scan, cfg.stage_seed("michelson"))
        .context(|| "michelson".into())?;
    Ok(Photons {
        emitted: n_emitted,
        transmitted,
    })
}

fn detect_channels(cfg: &ExperimentConfig, transmitted: &EventStream) -> Result<(EventStream, EventStream)> {
    let (a, b) = beamsplitter_route(transmitted, cfg.splitter_reflectance, cfg.stage_seed("splitter"))?;
    let a = detect(&a, &cfg.detectors[0], cfg.stage_seed("detector_a")).context(|| "detector A".into())?;
    let b = detect(&b, &cfg.detectors[1], cfg.stage_seed("detector_b")).context(|| "detector B".into())?;
    Ok((a, b))
}

fn fit_trace(cfg: &ExperimentConfig, trace: &FringeTrace) -> Result<VisibilityFit> {
    let opts = VisibilityOptions {
        bootstrap_resamples: cfg.analysis.bootstrap_resamples,
        seed: cfg.stage_seed("bootstrap"),
        ..VisibilityOptions::default()
    };
    extract_visibility_with(trace, &cfg.scan, &cfg.line, &opts)
}

pub fn run_combined(cfg: &ExperimentConfig) -> Result<RunResult> {
    run_combined_detailed(cfg).map(|r| r.result)
}

pub fn run_combined_detailed(cfg: &ExperimentConfig) -> Result<CombinedRun> {
    cfg.validate()?;
    let Photons { emitted, transmitted } = photons(cfg)?;
    let (a, b) = detect_channels(cfg, &transmitted)?;
    let histogram = build_histogram(&a, &b, &cfg.histogram).context(|| "histogram".into())?;
    let g2 = match cfg.analysis.normalization {
        Normalization::Global => normalize_g2(&histogram),
        Normalization::Windowed => normalize_g2_windowed(&histogram, &a, &b, cfg.fringe_window_s),
    }
    .context(|| "g2 normalization".into())?;
    let fringe = count_rate_trace(&a, cfg.fringe_window_s)?;
    let visibility = fit_trace(cfg, &fringe);

    let opts = BoundsOptions {
        k_sigma: cfg.analysis.k_sigma,
        zero_window_ps: cfg.analysis.zero_window_ps,
        family_wise: true,
    };
    let bounds = classical_bounds_check(&g2, &opts);
    let peak_areas = match cfg.emitter.rep_period_ps() {
        Some(period) if histogram.range_ps() >= 2 * period => pulsed_peak_areas(&histogram, period).ok(),
        _ => None,
    };
    let (g2_zero, g2_zero_stderr, method) = match &peak_areas {
        Some(p) => (p.central_ratio, p.central_ratio_stderr, G2ZeroMethod::PeakArea),
        None => (bounds.g2_zero, bounds.g2_zero_stderr, G2ZeroMethod::ZeroWindow),
    };
    let config_hash = cfg.hash();
    let summary = Summary {
        config_hash: config_hash.clone(),
        seed: cfg.seed,
        emitter: cfg.emitter_name().into(),
        duration_s: cfg.duration_s,
        emitted_photons: emitted,
        clicks_a: a.len() as u64,
        clicks_b: b.len() as u64,
        coincidences: histogram.total(),
        g2_zero,
        g2_zero_stderr,
        g2_zero_method: method,
        verdict: Verdict::classify(g2_zero, g2_zero_stderr, cfg.analysis.k_sigma),
        classical_bound_violation: bounds.violates_classical_bounds(),
        visibility: visibility.as_ref().ok().map(|v| v.visibility),
        visibility_stderr: visibility.as_ref().ok().map(|v| v.stderr),
        visibility_note: visibility.as_ref().err().map(|e| e.root().to_string()),
    };
    let result = RunResult {
        provenance: Provenance {
            config_hash,
            seed: cfg.seed,
            config: cfg.clone(),
        },
        histogram,
        g2,
        fringe,
        visibility: visibility.ok(),
        bounds,
        peak_areas,
        summary,
    };
    Ok(CombinedRun {
        result,
        transmitted,
        channel_a: a,
        channel_b: b,
    })
}

impl ExperimentConfig {
    fn emitter_name(&self) -> &'static str {
        match self.emitter {
            EmitterConfig::Coherent(_) => "coherent",
            EmitterConfig::Thermal(_) => "thermal",
            EmitterConfig::TwoLevelCw(_) => "two_level_cw",
            EmitterConfig::Pulsed(_) => "pulsed",
            EmitterConfig::Fock(_) => "fock",
        }
    }
}

/// Fringe trace of detector A only, produced with the same stage seeds as
/// [`run_combined`], so the trace is identical to the combined run's.
pub fn run_fringe(cfg: &ExperimentConfig) -> Result<(FringeTrace, Result<VisibilityFit>)> {
    cfg.validate()?;
    let Photons { transmitted, .. } = photons(cfg)?;
    let (a, _) = beamsplitter_route(&transmitted, cfg.splitter_reflectance, cfg.stage_seed("splitter"))?;
    drop(transmitted);
    let a = detect(&a, &cfg.detectors[0], cfg.stage_seed("detector_a")).context(|| "detector A".into())?;
    let trace = count_rate_trace(&a, cfg.fringe_window_s)?;
    let fit = fit_trace(cfg, &trace);
    Ok((trace, fit))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Center path difference, m.
    pub delay_m: f64,
    pub tau_s: f64,
    pub visibility: f64,
    pub stderr: f64,
    /// Visibility of the configured line at this delay.
    pub expected: f64,
}

/// Fringe measurement at each center path difference. Point `i` uses the
/// scan of `cfg` shifted to `delays_m[i]` and its own derived seed; points
/// run in parallel.
pub fn sweep_visibility(cfg: &ExperimentConfig, delays_m: &[f64]) -> Result<Vec<SweepPoint>> {
    for &d in delays_m {
        ensure(d.is_finite() && d >= 0.0, || {
            format!("delays must be nonnegative, got {d}")
        })?;
    }
    cfg.validate()?;
    let point = |i: usize| -> Result<SweepPoint> {
        let delay_m = delays_m[i];
        let mut c = cfg.clone();
        c.scan.offset_m = delay_m;
        c.seed = derive_indexed(cfg.seed, "sweep", i as u64);
        let (_, fit) = run_fringe(&c)?;
        let fit = fit.context(|| format!("sweep point {i} (delay {delay_m} m)"))?;
        let tau_s = delay_m / SPEED_OF_LIGHT;
        Ok(SweepPoint {
            delay_m,
            tau_s,
            visibility: fit.visibility,
            stderr: fit.stderr,
            expected: cfg.line.visibility(tau_s),
        })
    };
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(delays_m.len().max(1));
    let results: Vec<Result<SweepPoint>> = std::thread::scope(|s| {
        let workers: Vec<_> = (0..threads)
            .map(|w| {
                let point = &point;
                s.spawn(move || {
                    (w..delays_m.len())
                        .step_by(threads)
                        .map(|i| (i, point(i)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut all: Vec<(usize, Result<SweepPoint>)> = workers
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect();
        all.sort_by_key(|(i, _)| *i);
        all.into_iter().map(|(_, r)| r).collect()
    });
    results.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityOptions {
    pub bootstrap_resamples: usize,
    pub seed: u64,
    /// Minimum path span of a neighborhood, in wavelengths.
    pub min_span_fringes: f64,
    /// Sub-samples per window used to average the fringe basis.
    pub subsamples: usize,
}

impl Default for VisibilityOptions {
    fn default() -> Self {
        VisibilityOptions {
            bootstrap_resamples: 200,
            seed: 0,
            min_span_fringes: 0.75,
            subsamples: 16,
        }
    }
}

pub fn extract_visibility(trace: &FringeTrace, scan: &ScanWaveform, line: &SpectralLine) -> Result<VisibilityFit> {
    extract_visibility_with(trace, scan, line, &VisibilityOptions::default())
}

/// Per-neighborhood fringe fit.
struct Neighborhood {
    counts: f64,
    /// Fitted cos and sin amplitudes relative to the mean level.
    u: f64,
    w: f64,
}

/// Fit `counts ≈ a + b·⟨cos kx⟩ + c·⟨sin kx⟩` in each fringe neighborhood,
/// where ⟨·⟩ averages over the path swept during the window. Neighborhoods
/// are runs of consecutive windows whose center path lies in the same
/// wavelength interval. A common phase φ is estimated from all
/// neighborhoods and each contributes `v = (b cos φ + c sin φ)/a`, which is
/// (I_max − I_min)/(I_max + I_min) of the fitted sinusoid. The result is the
/// count-weighted mean; its error is a bootstrap over neighborhoods.
pub fn extract_visibility_with(
    trace: &FringeTrace,
    scan: &ScanWaveform,
    line: &SpectralLine,
    opts: &VisibilityOptions,
) -> Result<VisibilityFit> {
    scan.validate()?;
    line.validate()?;
    let lambda = line.wavelength_m();
    let m = opts.subsamples.max(1);
    let window = trace.window_ps as f64;
    // (group key, counts, <cos>, <sin>, min x, max x) per window.
    let mut rows = Vec::with_capacity(trace.samples.len());
    for s in &trace.samples {
        let (mut c, mut sn) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..m {
            let t = (s.start_ps as f64 + (j as f64 + 0.5) / m as f64 * window) / PS_PER_SECOND;
            let x = scan.path_difference(t);
            let phase = 2.0 * PI * (x / lambda).rem_euclid(1.0);
            c += phase.cos();
            sn += phase.sin();
            lo = lo.min(x);
            hi = hi.max(x);
        }
        let center = scan.path_difference(ps_to_secs(s.start_ps) + 0.5 * window / PS_PER_SECOND);
        let key = (center / lambda).floor() as i64;
        rows.push((key, s.counts as f64, c / m as f64, sn / m as f64, lo, hi));
    }
    let mut groups = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let mut end = start + 1;
        while end < rows.len() && rows[end].0 == rows[start].0 {
            end += 1;
        }
        let g = &rows[start..end];
        let lo = g.iter().map(|r| r.4).fold(f64::INFINITY, f64::min);
        let hi = g.iter().map(|r| r.5).fold(f64::NEG_INFINITY, f64::max);
        if hi - lo >= opts.min_span_fringes * lambda {
            if let Some(n) = fit_neighborhood(g) {
                groups.push(n);
            }
        }
        start = end;
    }
    if groups.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "trace covers {} usable fringe neighborhoods; at least 3 are needed",
            groups.len()
        )));
    }
    let (visibility, phase_rad) = combine(groups.iter());
    let mut rng = seeded(opts.seed);
    let mut boot = Vec::with_capacity(opts.bootstrap_resamples);
    for _ in 0..opts.bootstrap_resamples {
        let sample: Vec<&Neighborhood> = (0..groups.len())
            .map(|_| &groups[rng.random_range(0..groups.len())])
            .collect();
        boot.push(combine(sample.into_iter()).0);
    }
    let mean = boot.iter().sum::<f64>() / boot.len() as f64;
    let var = boot.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (boot.len() as f64 - 1.0).max(1.0);
    Ok(VisibilityFit {
        visibility,
        stderr: var.sqrt(),
        neighborhoods: groups.len(),
        phase_rad,
    })
}

fn fit_neighborhood(rows: &[(i64, f64, f64, f64, f64, f64)]) -> Option<Neighborhood> {
    // Normal equations for y = a + b·c + d·s.
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    let mut total = 0.0;
    for &(_, y, c, s, _, _) in rows {
        let basis = [1.0, c, s];
        for i in 0..3 {
            aty[i] += basis[i] * y;
            for j in 0..3 {
                ata[i][j] += basis[i] * basis[j];
            }
        }
        total += y;
    }
    let [a, b, d] = solve3(ata, aty)?;
    if total <= 0.0 || a <= 0.0 {
        return None;
    }
    Some(Neighborhood {
        counts: total,
        u: b / a,
        w: d / a,
    })
}

fn combine<'a>(groups: impl Iterator<Item = &'a Neighborhood> + Clone) -> (f64, f64) {
    let (su, sw, sc) = groups.clone().fold((0.0, 0.0, 0.0), |(su, sw, sc), g| {
        (su + g.counts * g.u, sw + g.counts * g.w, sc + g.counts)
    });
    let phase = sw.atan2(su);
    let (cp, sp) = (phase.cos(), phase.sin());
    let v = groups.map(|g| g.counts * (g.u * cp + g.w * sp)).sum::<f64>() / sc;
    (v, phase)
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve3(mut a: [[f64; 3]; 3], mut y: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-10 * scale {
            return None;
        }
        a.swap(col, pivot);
        y.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            y[row] -= f * y[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let rest: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (y[row] - rest) / a[row][row];
    }
    Some(x)
}

/// Count intensity maxima between `start_s` and `end_s` as upward passes
/// through a hysteresis band around the mean level. A 5-window moving
/// average suppresses shot noise first.
pub fn count_fringes(trace: &FringeTrace, start_s: f64, end_s: f64) -> usize {
    let values: Vec<f64> = trace
        .samples
        .iter()
        .zip(trace.centers_s())
        .filter(|(_, t)| *t >= start_s && *t < end_s)
        .map(|(s, _)| s.counts as f64)
        .collect();
    if values.len() < 5 {
        return 0;
    }
    let smooth: Vec<f64> = values.windows(5).map(|w| w.iter().sum::<f64>() / 5.0).collect();
    let mean = smooth.iter().sum::<f64>() / smooth.len() as f64;
    let (lo, hi) = smooth.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let band = 0.25 * (hi - lo);
    let mut above = smooth[0] > mean;
    let mut count = 0;
    for &v in &smooth[1..] {
        if !above && v > mean + band {
            above = true;
            count += 1;
        } else if above && v < mean - band {
            above = false;
        }
    }
    count
}

/// Fringes counted over the first complete quarter period in which the
/// triangular scan rises from its offset to the crest.
pub fn fringes_per_quarter_period(trace: &FringeTrace, scan: &ScanWaveform) -> Result<usize> {
    let period = scan
        .period_s()
        .ok_or_else(|| Error::config("fringe counting needs a scanning waveform"))?;
    let start = (-scan.phase_cycles).rem_euclid(1.0) * period;
    let end = start + 0.25 * period;
    let covered = trace.samples.len() as f64 * trace.window_s();
    ensure(end <= covered, || {
        format!("trace ends at {covered} s, before the first rising quarter period ends at {end} s")
    })?;
    Ok(count_fringes(trace, start, end))
}

/// Normalize `h` (built from `a` and `b`) by accidentals summed over
/// windows of `window_s`: `Σ_w n_a,w·n_b,w·Δτ / window`.
pub fn normalize_g2_windowed(
    h: &CoincidenceHistogram,
    a: &EventStream,
    b: &EventStream,
    window_s: f64,
) -> Result<G2Estimate> {
    ensure_positive("window_s", window_s)?;
    let window = secs_to_ps(window_s).max(1);
    let accidentals = windowed_accidentals(a, b, window, h.bin_width_ps);
    if accidentals <= 0.0 {
        return Err(Error::UndefinedNormalization(
            "no window holds clicks on both channels".into(),
        ));
    }
    Ok(G2Estimate::from_counts(h, accidentals))
}

fn windowed_accidentals(a: &EventStream, b: &EventStream, window: u64, bin_width_ps: u64) -> f64 {
    let n = (a.duration_ps().max(b.duration_ps()) / window + 1) as usize;
    let (mut na, mut nb) = (vec![0u64; n], vec![0u64; n]);
    for &t in a.times() {
        na[(t / window) as usize] += 1;
    }
    for &t in b.times() {
        nb[(t / window) as usize] += 1;
    }
    let pairs: f64 = na.iter().zip(&nb).map(|(&x, &y)| x as f64 * y as f64).sum();
    pairs * bin_width_ps as f64 / window as f64
}

/// g² from the clicks recorded while `select(window_start_s)` holds, with
/// windows of `window_s` and windowed accidentals.
pub fn gated_g2(
    a: &EventStream,
    b: &EventStream,
    settings: &HistogramSettings,
    window_s: f64,
    select: impl Fn(f64) -> bool,
) -> Result<G2Estimate> {
    ensure_positive("window_s", window_s)?;
    let window = secs_to_ps(window_s).max(1);
    let keep = |t: u64| select(ps_to_secs(t / window * window));
    let ga = a.retain(|_, e| keep(e.time));
    let gb = b.retain(|_, e| keep(e.time));
    let h = build_histogram(&ga, &gb, settings)?;
    normalize_g2_windowed(&h, &ga, &gb, window_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::TraceSample;
    use crate::emitters::{CoherentSourceConfig, TwoLevelCwConfig};
    use crate::optics::michelson_exit_prob;

    /// Expected counts per window from integrating the exit probability.
    fn synthetic_trace(line: &SpectralLine, scan: &ScanWaveform, window_s: f64, n: usize, rate: f64) -> FringeTrace {
        let window_ps = secs_to_ps(window_s);
        let samples = (0..n)
            .map(|i| {
                let steps = 64;
                let mean_p: f64 = (0..steps)
                    .map(|j| {
                        let t = (i as f64 + (j as f64 + 0.5) / steps as f64) * window_s;
                        michelson_exit_prob(line, scan.path_difference(t))
                    })
                    .sum::<f64>()
                    / steps as f64;
                TraceSample {
                    start_ps: i as u64 * window_ps,
                    counts: (rate * window_s * mean_p).round() as u64,
                }
            })
            .collect();
        FringeTrace { window_ps, samples }
    }

    #[test]
    fn noiseless_trace_recovers_visibility() {
        // Lorentzian with v = 0.8 at the scan center; the 20 µm scan changes
        // the envelope by < 0.2%.
        let scan = ScanWaveform::triangular(20e-6, 0.01).with_offset(3e-3);
        let tau = 3e-3 / SPEED_OF_LIGHT;
        let line = SpectralLine::lorentzian(700.0, -(0.8f64).ln() / tau);
        assert!((line.visibility(tau) - 0.8).abs() < 1e-12);
        let trace = synthetic_trace(&line, &scan, 0.01, 2_000, 1e9);
        let fit = extract_visibility(&trace, &scan, &line).unwrap();
        assert!((fit.visibility - 0.8).abs() < 0.01, "{fit:?}");
        assert!(fit.phase_rad.abs() < 0.01);
        // Windows spanning a quarter fringe each are still corrected.
        let fast = ScanWaveform::triangular(20e-6, 0.1).with_offset(3e-3);
        let trace = synthetic_trace(&line, &fast, 0.005, 2_000, 1e9);
        let fit = extract_visibility(&trace, &fast, &line).unwrap();
        assert!((fit.visibility - 0.8).abs() < 0.01, "{fit:?}");
    }

    #[test]
    fn flat_trace_gives_zero() {
        let scan = ScanWaveform::default();
        let mut rng = seeded(3);
        let samples = (0..3_000)
            .map(|i| TraceSample {
                start_ps: i * 10_000_000_000,
                counts: 1_000 + rng.random_range(0..60u64),
            })
            .collect();
        let trace = FringeTrace {
            window_ps: 10_000_000_000,
            samples,
        };
        let fit = extract_visibility(&trace, &scan, &SpectralLine::default()).unwrap();
        assert!(fit.visibility.abs() < 3.0 * fit.stderr + 1e-3, "{fit:?}");
    }

    #[test]
    fn too_few_fringes() {
        let line = SpectralLine::delta(700.0);
        let scan = ScanWaveform::fixed(0.0);
        let trace = synthetic_trace(&line, &scan, 0.01, 100, 1e6);
        assert!(matches!(
            extract_visibility(&trace, &scan, &line),
            Err(Error::InsufficientData(_))
        ));
        // Two fringes only.
        let scan = ScanWaveform::triangular(1.4e-6, 0.01);
        let trace = synthetic_trace(&line, &scan, 0.01, 2_400, 1e6);
        assert!(matches!(
            extract_visibility(&trace, &scan, &line),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn fringe_count_on_synthetic_trace() {
        let line = SpectralLine::delta(700.0);
        let scan = ScanWaveform::default();
        let trace = synthetic_trace(&line, &scan, 0.01, 2_600, 1e5);
        // 20 µm / 700 nm ≈ 28.6 fringes.
        let n = fringes_per_quarter_period(&trace, &scan).unwrap();
        assert!((28..=29).contains(&n), "{n}");
        assert!(fringes_per_quarter_period(&trace, &ScanWaveform::fixed(0.0)).is_err());
    }

    #[test]
    fn config_defaults_and_validation() {
        let json = r#"{"emitter": {"kind": "coherent", "rate": 1e5}}"#;
        let cfg = ExperimentConfig::from_json(json).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.duration_s, 60.0);
        assert_eq!(cfg.histogram.bin_width_ps, 37);
        assert_eq!(cfg.splitter_reflectance, 0.5);
        assert_eq!(cfg.hash().len(), 64);
        let mut other = cfg.clone();
        other.seed = 1;
        assert_ne!(cfg.hash(), other.hash());

        assert!(ExperimentConfig::from_json(r#"{"emitter": {"kind": "coherent", "rate": 1e5}, "sede": 1}"#).is_err());
        let mut bad = cfg.clone();
        bad.duration_s = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = cfg.clone();
        bad.detectors[1].efficiency = 2.0;
        assert!(bad.validate().unwrap_err().to_string().contains("detectors[1]"));
        let mut bad = cfg;
        bad.emitter = EmitterConfig::Coherent(CoherentSourceConfig { rate: 1e12 });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn combined_run_is_reproducible() {
        let mut cfg = ExperimentConfig::new(
            EmitterConfig::TwoLevelCw(TwoLevelCwConfig {
                pump_rate: 1e8,
                decay_rate: 1e8,
                quantum_efficiency: 0.01,
            }),
            4.0,
            11,
        );
        cfg.detectors = [DetectorConfig::ideal(); 2];
        let a = run_combined_detailed(&cfg).unwrap();
        let b = run_combined(&cfg).unwrap();
        assert_eq!(a.result, b);
        let (trace, _) = run_fringe(&cfg).unwrap();
        assert_eq!(trace, a.result.fringe);
        assert_eq!(count_rate_trace(&a.channel_a, cfg.fringe_window_s).unwrap(), trace);
        let s = &a.result.summary;
        assert_eq!(s.g2_zero_method, G2ZeroMethod::ZeroWindow);
        assert_eq!(s.clicks_a + s.clicks_b, a.transmitted.len() as u64);
        assert!(s.visibility.unwrap() > 0.9, "{s:?}");
    }

    #[test]
    fn windowed_normalization_removes_fringe_plateau() {
        let mut cfg = ExperimentConfig::new(EmitterConfig::Coherent(CoherentSourceConfig { rate: 4e5 }), 25.0, 5);
        cfg.line = SpectralLine::delta(700.0);
        cfg.detectors = [DetectorConfig::ideal(); 2];
        cfg.histogram = HistogramSettings::new(1_000, 20_000, crate::correlator::HistogramMode::AllPairs);
        let global = run_combined(&cfg).unwrap();
        cfg.analysis.normalization = Normalization::Windowed;
        let windowed = run_combined(&cfg).unwrap();
        assert_eq!(global.histogram, windowed.histogram);
        // Fully modulated fringes: <I²>/<I>² = 1 + 1/2.
        assert!((global.g2.mean() - 1.5).abs() < 0.03, "{}", global.g2.mean());
        assert!((windowed.g2.mean() - 1.0).abs() < 0.02, "{}", windowed.g2.mean());
    }

    #[test]
    fn sweep_rejects_negative_delay() {
        let cfg = ExperimentConfig::new(EmitterConfig::Coherent(CoherentSourceConfig { rate: 1e4 }), 1.0, 0);
        assert!(sweep_visibility(&cfg, &[0.0, -1e-6]).is_err());
    }
}
