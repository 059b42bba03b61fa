//! Photon sources as stochastic point processes.
//!
//! * coherent: homogeneous Poisson process.
//! * thermal: Poisson process driven by the intensity `|E(t)|²` of a complex
//!   Ornstein–Uhlenbeck field (a Cox process), so g²(τ) = 1 + exp(−2|τ|/τc).
//! * two-level cw: renewal process whose cycle is excitation (rate P)
//!   followed by spontaneous decay (rate Γ), g²(τ) = 1 − exp(−(P+Γ)|τ|).
//! * pulsed: at most one exciton photon per excitation pulse plus an optional
//!   re-excitation photon.
//! * Fock train: exactly `n` photons per pulse.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, ensure_nonnegative, ensure_positive, ensure_probability, Result};
use crate::rng::{seeded, SimRng};
use crate::stream::{secs_to_ps, EventStream, Tag, PS_PER_SECOND};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherentSourceConfig {
    /// Mean photon rate, 1/s.
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalSourceConfig {
    /// Mean photon rate, 1/s.
    pub rate: f64,
    /// Field correlation time τc, s: |g¹(τ)| = exp(−|τ|/τc).
    pub coherence_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLevelCwConfig {
    /// Excitation rate P, 1/s.
    pub pump_rate: f64,
    /// Radiative decay rate Γ, 1/s.
    pub decay_rate: f64,
    /// Probability that an emitted photon leaves the source, in [0, 1].
    #[serde(default = "one")]
    pub quantum_efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulsedEmitterConfig {
    #[serde(default = "default_rep_period_ps")]
    pub rep_period_ps: u64,
    /// Exciton radiative lifetime, ps.
    #[serde(default = "default_lifetime_ps")]
    pub lifetime_ps: f64,
    #[serde(default = "one")]
    pub emission_prob: f64,
    #[serde(default)]
    pub reexcitation_prob: f64,
    /// Mean delay of the re-excitation photon after the first one, ps.
    #[serde(default = "default_reexcitation_delay_ps")]
    pub reexcitation_delay_ps: f64,
    /// Probability that each emitted photon is collected, independently.
    #[serde(default = "one")]
    pub collection_efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockPulseConfig {
    /// Photons per pulse.
    pub n: u32,
    #[serde(default = "default_rep_period_ps")]
    pub rep_period_ps: u64,
    #[serde(default = "default_lifetime_ps")]
    pub lifetime_ps: f64,
}

fn one() -> f64 {
    1.0
}

/// Ti:sapphire repetition period, 13.2 ns.
pub const DEFAULT_REP_PERIOD_PS: u64 = 13_200;
/// Placeholder exciton lifetime.
pub const DEFAULT_LIFETIME_PS: f64 = 1_000.0;
/// Placeholder re-excitation delay.
pub const DEFAULT_REEXCITATION_DELAY_PS: f64 = 3_000.0;

fn default_rep_period_ps() -> u64 {
    DEFAULT_REP_PERIOD_PS
}

fn default_lifetime_ps() -> f64 {
    DEFAULT_LIFETIME_PS
}

fn default_reexcitation_delay_ps() -> f64 {
    DEFAULT_REEXCITATION_DELAY_PS
}

impl Default for PulsedEmitterConfig {
    fn default() -> Self {
        PulsedEmitterConfig {
            rep_period_ps: DEFAULT_REP_PERIOD_PS,
            lifetime_ps: DEFAULT_LIFETIME_PS,
            emission_prob: 1.0,
            reexcitation_prob: 0.0,
            reexcitation_delay_ps: DEFAULT_REEXCITATION_DELAY_PS,
            collection_efficiency: 1.0,
        }
    }
}

impl CoherentSourceConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("coherent rate", self.rate)
    }
}

impl ThermalSourceConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("thermal rate", self.rate)?;
        ensure_positive("thermal coherence_time", self.coherence_time)
    }
}

impl TwoLevelCwConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("pump_rate", self.pump_rate)?;
        ensure_positive("decay_rate", self.decay_rate)?;
        ensure_probability("quantum_efficiency", self.quantum_efficiency)
    }

    /// Stationary photon output rate η·PΓ/(P+Γ).
    pub fn mean_rate(&self) -> f64 {
        self.quantum_efficiency * self.pump_rate * self.decay_rate / (self.pump_rate + self.decay_rate)
    }
}

impl PulsedEmitterConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.rep_period_ps > 0, || "rep_period_ps must be positive".into())?;
        ensure_positive("lifetime_ps", self.lifetime_ps)?;
        ensure_probability("emission_prob", self.emission_prob)?;
        ensure_probability("reexcitation_prob", self.reexcitation_prob)?;
        ensure_positive("reexcitation_delay_ps", self.reexcitation_delay_ps)?;
        ensure_probability("collection_efficiency", self.collection_efficiency)
    }

    /// Collected photons per pulse.
    pub fn mean_photons_per_pulse(&self) -> f64 {
        self.emission_prob * (1.0 + self.reexcitation_prob) * self.collection_efficiency
    }
}

impl FockPulseConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.n >= 1, || "Fock photon number n must be at least 1".into())?;
        ensure(self.rep_period_ps > 0, || "rep_period_ps must be positive".into())?;
        ensure_positive("lifetime_ps", self.lifetime_ps)
    }
}

/// Any supported source, as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmitterConfig {
    Coherent(CoherentSourceConfig),
    Thermal(ThermalSourceConfig),
    TwoLevelCw(TwoLevelCwConfig),
    Pulsed(PulsedEmitterConfig),
    Fock(FockPulseConfig),
}

impl EmitterConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            EmitterConfig::Coherent(c) => c.validate(),
            EmitterConfig::Thermal(c) => c.validate(),
            EmitterConfig::TwoLevelCw(c) => c.validate(),
            EmitterConfig::Pulsed(c) => c.validate(),
            EmitterConfig::Fock(c) => c.validate(),
        }
    }

    pub fn generate(&self, duration_s: f64, seed: u64) -> Result<EventStream> {
        match self {
            EmitterConfig::Coherent(c) => gen_coherent(c, duration_s, seed),
            EmitterConfig::Thermal(c) => gen_thermal(c, duration_s, seed),
            EmitterConfig::TwoLevelCw(c) => gen_two_level_cw(c, duration_s, seed),
            EmitterConfig::Pulsed(c) => gen_pulsed(c, duration_s, seed),
            EmitterConfig::Fock(c) => gen_fock_train(c, duration_s, seed),
        }
    }

    /// Expected photon output rate, 1/s.
    pub fn mean_rate(&self) -> f64 {
        match self {
            EmitterConfig::Coherent(c) => c.rate,
            EmitterConfig::Thermal(c) => c.rate,
            EmitterConfig::TwoLevelCw(c) => c.mean_rate(),
            EmitterConfig::Pulsed(c) => c.mean_photons_per_pulse() * PS_PER_SECOND / c.rep_period_ps as f64,
            EmitterConfig::Fock(c) => c.n as f64 * PS_PER_SECOND / c.rep_period_ps as f64,
        }
    }

    /// Repetition period for pulsed sources.
    pub fn rep_period_ps(&self) -> Option<u64> {
        match self {
            EmitterConfig::Pulsed(c) => Some(c.rep_period_ps),
            EmitterConfig::Fock(c) => Some(c.rep_period_ps),
            _ => None,
        }
    }

    /// Whether the source emits at most one photon at a time in the ideal case.
    pub fn is_single_emitter(&self) -> bool {
        match self {
            EmitterConfig::TwoLevelCw(_) | EmitterConfig::Pulsed(_) => true,
            EmitterConfig::Fock(c) => c.n == 1,
            EmitterConfig::Coherent(_) | EmitterConfig::Thermal(_) => false,
        }
    }
}

/// Pulsed emission with the index of the pulse that produced each photon.
#[derive(Debug, Clone)]
pub struct PulsedEmission {
    pub stream: EventStream,
    /// `pulse[i]` is the excitation pulse of event `i`.
    pub pulse: Vec<u64>,
    pub n_pulses: u64,
}

impl PulsedEmission {
    /// Photons per pulse, indexed by pulse.
    pub fn photons_per_pulse(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.n_pulses as usize];
        for &p in &self.pulse {
            counts[p as usize] += 1;
        }
        counts
    }
}

fn check_duration(duration_s: f64) -> Result<u64> {
    ensure_nonnegative("duration", duration_s)?;
    Ok(secs_to_ps(duration_s))
}

fn exp_ps(rng: &mut SimRng, mean_ps: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e * mean_ps
}

/// Arrival times of a homogeneous Poisson process on `[0, duration_ps]`.
pub(crate) fn poisson_times(rng: &mut SimRng, rate: f64, duration_ps: u64) -> Vec<u64> {
    if rate <= 0.0 || duration_ps == 0 {
        return Vec::new();
    }
    let mean_gap = PS_PER_SECOND / rate;
    let end = duration_ps as f64;
    let mut times = Vec::with_capacity((rate * end / PS_PER_SECOND * 1.01 + 16.0) as usize);
    let mut t = 0.0;
    loop {
        t += exp_ps(rng, mean_gap);
        if t > end {
            break;
        }
        times.push(t as u64);
    }
    times
}

pub fn gen_coherent(cfg: &CoherentSourceConfig, duration_s: f64, seed: u64) -> Result<EventStream> {
    cfg.validate()?;
    let duration = check_duration(duration_s)?;
    let mut rng = seeded(seed);
    let times = poisson_times(&mut rng, cfg.rate, duration);
    let tags = vec![Tag::Signal; times.len()];
    Ok(EventStream::from_sorted_unchecked(times, tags, duration))
}

/// Majorant of |E|² used for thinning; |E|² is Exp(1) distributed, so the
/// truncated mass e^{-32} is far below double-precision noise in any estimate.
const THERMAL_MAJORANT: f64 = 32.0;

pub fn gen_thermal(cfg: &ThermalSourceConfig, duration_s: f64, seed: u64) -> Result<EventStream> {
    cfg.validate()?;
    let duration = check_duration(duration_s)?;
    let mut rng = seeded(seed);
    let tau_c = cfg.coherence_time * PS_PER_SECOND;
    let half = 0.5f64.sqrt();
    let normal = |rng: &mut SimRng| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        z * half
    };
    // Stationary start: each quadrature ~ N(0, 1/2) so that <|E|²> = 1.
    let (mut re, mut im) = (normal(&mut rng), normal(&mut rng));
    let candidates = poisson_times_f64(&mut rng, cfg.rate * THERMAL_MAJORANT, duration);
    let mut times = Vec::with_capacity((candidates.len() as f64 / THERMAL_MAJORANT * 1.2) as usize + 16);
    let mut last = 0.0;
    for t in candidates {
        // Exact OU transition over the gap since the previous candidate.
        let rho = (-(t - last) / tau_c).exp();
        let kick = (1.0 - rho * rho).max(0.0).sqrt();
        re = rho * re + kick * normal(&mut rng);
        im = rho * im + kick * normal(&mut rng);
        last = t;
        let intensity = re * re + im * im;
        if rng.random::<f64>() * THERMAL_MAJORANT < intensity {
            times.push(t as u64);
        }
    }
    let tags = vec![Tag::Signal; times.len()];
    Ok(EventStream::from_sorted_unchecked(times, tags, duration))
}

fn poisson_times_f64(rng: &mut SimRng, rate: f64, duration_ps: u64) -> Vec<f64> {
    let mean_gap = PS_PER_SECOND / rate;
    let end = duration_ps as f64;
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        t += exp_ps(rng, mean_gap);
        if t > end {
            break;
        }
        times.push(t);
    }
    times
}

pub fn gen_two_level_cw(cfg: &TwoLevelCwConfig, duration_s: f64, seed: u64) -> Result<EventStream> {
    cfg.validate()?;
    let duration = check_duration(duration_s)?;
    if cfg.quantum_efficiency == 0.0 || duration == 0 {
        return Ok(EventStream::empty(duration));
    }
    let mut rng = seeded(seed);
    let excite_ps = PS_PER_SECOND / cfg.pump_rate;
    let decay_ps = PS_PER_SECOND / cfg.decay_rate;
    // Number of excitation/decay cycles between two escaping photons.
    let skip = Geometric::new(cfg.quantum_efficiency).expect("validated probability");
    let end = duration as f64;
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        let cycles = 1 + skip.sample(&mut rng);
        let gap = if cycles == 1 {
            exp_ps(&mut rng, excite_ps) + exp_ps(&mut rng, decay_ps)
        } else {
            // Sum of k i.i.d. Exp(P) and k i.i.d. Exp(Γ) waits.
            let k = cycles as f64;
            let a: f64 = Gamma::new(k, excite_ps).expect("positive shape").sample(&mut rng);
            let b: f64 = Gamma::new(k, decay_ps).expect("positive shape").sample(&mut rng);
            a + b
        };
        t += gap;
        if t > end {
            break;
        }
        times.push(t as u64);
    }
    let tags = vec![Tag::Signal; times.len()];
    Ok(EventStream::from_sorted_unchecked(times, tags, duration))
}

fn pulse_count(rep_period_ps: u64, duration_s: f64) -> Result<(u64, u64)> {
    let duration = check_duration(duration_s)?;
    ensure(duration >= rep_period_ps, || {
        format!("duration {duration} ps is shorter than the repetition period {rep_period_ps} ps")
    })?;
    Ok((duration, duration.div_ceil(rep_period_ps)))
}

fn finish_pulsed(mut photons: Vec<(u64, u64)>, duration: u64, n_pulses: u64) -> PulsedEmission {
    photons.retain(|&(t, _)| t <= duration);
    photons.sort_unstable();
    let (times, pulse): (Vec<u64>, Vec<u64>) = photons.into_iter().unzip();
    let tags = vec![Tag::Signal; times.len()];
    PulsedEmission {
        stream: EventStream::from_sorted_unchecked(times, tags, duration),
        pulse,
        n_pulses,
    }
}

pub fn gen_pulsed_labeled(cfg: &PulsedEmitterConfig, duration_s: f64, seed: u64) -> Result<PulsedEmission> {
    cfg.validate()?;
    let (duration, n_pulses) = pulse_count(cfg.rep_period_ps, duration_s)?;
    let mut rng = seeded(seed);
    let expected = (n_pulses as f64 * cfg.mean_photons_per_pulse() * 1.01) as usize + 16;
    let mut photons = Vec::with_capacity(expected);
    let (p, q, eta) = (cfg.emission_prob, cfg.reexcitation_prob, cfg.collection_efficiency);
    // Outcomes of a pulse that yields at least one collected photon:
    // lone exciton photon; re-excited pair with first, second or both kept.
    let weights = [
        (1.0 - q) * eta,
        q * eta * (1.0 - eta),
        q * (1.0 - eta) * eta,
        q * eta * eta,
    ];
    let any = weights.iter().sum::<f64>();
    let hit = p * any;
    if hit <= 0.0 {
        return Ok(finish_pulsed(photons, duration, n_pulses));
    }
    // Pulses until the next one with a collected photon, so sparse emission
    // costs O(photons) rather than O(pulses).
    let skip = Geometric::new(hit.min(1.0)).expect("validated probability");
    let mut k = 0u64;
    loop {
        k = k.saturating_add(skip.sample(&mut rng));
        if k >= n_pulses {
            break;
        }
        let mut u = rng.random::<f64>() * any;
        let outcome = weights
            .iter()
            .position(|&w| {
                u -= w;
                u < 0.0
            })
            .unwrap_or(3);
        let first = k * cfg.rep_period_ps + exp_ps(&mut rng, cfg.lifetime_ps) as u64;
        if outcome != 2 {
            photons.push((first, k));
        }
        if outcome >= 1 {
            let second = first + exp_ps(&mut rng, cfg.reexcitation_delay_ps) as u64;
            if outcome != 1 {
                photons.push((second, k));
            }
        }
        k += 1;
    }
    Ok(finish_pulsed(photons, duration, n_pulses))
}

pub fn gen_pulsed(cfg: &PulsedEmitterConfig, duration_s: f64, seed: u64) -> Result<EventStream> {
    gen_pulsed_labeled(cfg, duration_s, seed).map(|e| e.stream)
}

pub fn gen_fock_train_labeled(cfg: &FockPulseConfig, duration_s: f64, seed: u64) -> Result<PulsedEmission> {
    cfg.validate()?;
    let (duration, n_pulses) = pulse_count(cfg.rep_period_ps, duration_s)?;
    let mut rng = seeded(seed);
    let mut photons = Vec::with_capacity((n_pulses * cfg.n as u64) as usize);
    for k in 0..n_pulses {
        for _ in 0..cfg.n {
            photons.push((k * cfg.rep_period_ps + exp_ps(&mut rng, cfg.lifetime_ps) as u64, k));
        }
    }
    Ok(finish_pulsed(photons, duration, n_pulses))
}

pub fn gen_fock_train(cfg: &FockPulseConfig, duration_s: f64, seed: u64) -> Result<EventStream> {
    gen_fock_train_labeled(cfg, duration_s, seed).map(|e| e.stream)
}

/// Merge independent Poisson background photons at `rate` (1/s) into `stream`.
pub fn add_background(stream: &EventStream, rate: f64, seed: u64) -> Result<EventStream> {
    ensure_nonnegative("background rate", rate)?;
    if rate == 0.0 {
        return Ok(stream.clone());
    }
    let mut rng = seeded(seed);
    let times = poisson_times(&mut rng, rate, stream.duration_ps());
    let tags = vec![Tag::Background; times.len()];
    let background = EventStream::from_sorted_unchecked(times, tags, stream.duration_ps());
    Ok(stream.merge(&background))
}
