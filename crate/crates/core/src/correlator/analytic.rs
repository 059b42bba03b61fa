//! Closed-form g²(τ) for the supported sources.
//!
//! Pulsed sources are written as a train of peaks. With photon emission
//! offsets inside a pulse drawn from the lifetime (and re-excitation)
//! distributions, the coincidence density at delay τ is the same-pulse term
//! plus the cross-pulse terms `Σ_{k≠0} c(τ − kT)`, normalized by the squared
//! mean rate `(μ/T)²`.

use serde::{Deserialize, Serialize};

use crate::emitters::EmitterConfig;
use crate::error::{Error, Result};
use crate::stream::PS_PER_SECOND;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum G2Model {
    Coherent,
    Thermal {
        coherence_time_s: f64,
    },
    TwoLevelCw {
        pump_rate: f64,
        decay_rate: f64,
    },
    Pulsed {
        rep_period_s: f64,
        lifetime_s: f64,
        emission_prob: f64,
        reexcitation_prob: f64,
        reexcitation_delay_s: f64,
    },
    Fock {
        n: u32,
        rep_period_s: f64,
        lifetime_s: f64,
    },
}

impl From<&EmitterConfig> for G2Model {
    fn from(cfg: &EmitterConfig) -> Self {
        match *cfg {
            EmitterConfig::Coherent(_) => G2Model::Coherent,
            EmitterConfig::Thermal(c) => G2Model::Thermal {
                coherence_time_s: c.coherence_time,
            },
            EmitterConfig::TwoLevelCw(c) => G2Model::TwoLevelCw {
                pump_rate: c.pump_rate,
                decay_rate: c.decay_rate,
            },
            EmitterConfig::Pulsed(c) => G2Model::Pulsed {
                rep_period_s: c.rep_period_ps as f64 / PS_PER_SECOND,
                lifetime_s: c.lifetime_ps / PS_PER_SECOND,
                emission_prob: c.emission_prob,
                reexcitation_prob: c.reexcitation_prob,
                reexcitation_delay_s: c.reexcitation_delay_ps / PS_PER_SECOND,
            },
            EmitterConfig::Fock(c) => G2Model::Fock {
                n: c.n,
                rep_period_s: c.rep_period_ps as f64 / PS_PER_SECOND,
                lifetime_s: c.lifetime_ps / PS_PER_SECOND,
            },
        }
    }
}

impl G2Model {
    pub fn name(&self) -> &'static str {
        match self {
            G2Model::Coherent => "coherent",
            G2Model::Thermal { .. } => "thermal",
            G2Model::TwoLevelCw { .. } => "two_level_cw",
            G2Model::Pulsed { .. } => "pulsed",
            G2Model::Fock { .. } => "fock",
        }
    }
}

/// Time-resolved g²(τ), τ in seconds.
pub fn analytic_g2(model: &G2Model, tau_s: f64) -> f64 {
    let tau = tau_s.abs();
    match *model {
        G2Model::Coherent => 1.0,
        G2Model::Thermal { coherence_time_s } => 1.0 + (-2.0 * tau / coherence_time_s).exp(),
        G2Model::TwoLevelCw { pump_rate, decay_rate } => 1.0 - (-(pump_rate + decay_rate) * tau).exp(),
        G2Model::Fock {
            n,
            rep_period_s,
            lifetime_s,
        } => {
            let n = n as f64;
            let same = (1.0 - 1.0 / n) * laplace(tau_s, lifetime_s);
            let cross = sum_side_peaks(tau_s, rep_period_s, |s| laplace(s, lifetime_s));
            rep_period_s * (same + cross)
        }
        G2Model::Pulsed {
            rep_period_s,
            lifetime_s,
            emission_prob: p,
            reexcitation_prob: q,
            reexcitation_delay_s: d,
        } => {
            let mu = p * (1.0 + q);
            if mu == 0.0 {
                return f64::NAN;
            }
            let l = lifetime_s;
            // Same-pulse pairs: first/second photon separated by Exp(d).
            let same = p * q * (-tau / d).exp() / d;
            let cross_density = |s: f64| {
                p * p
                    * (laplace(s, l)
                        + q * laplace_exp(s, l, d)
                        + q * laplace_exp(-s, l, d)
                        + q * q * laplace_laplace(s, l, d))
            };
            let cross = sum_side_peaks(tau_s, rep_period_s, cross_density);
            rep_period_s * (same + cross) / (mu * mu)
        }
    }
}

/// Pulse-integrated g²(0): central-peak area over side-peak area.
pub fn pulse_integrated_g2(model: &G2Model) -> Result<f64> {
    match *model {
        G2Model::Fock { n, .. } => Ok(1.0 - 1.0 / n as f64),
        G2Model::Pulsed {
            emission_prob: p,
            reexcitation_prob: q,
            ..
        } => {
            // E[N(N−1)] / E[N]² with N = Bernoulli(p)·(1 + Bernoulli(q)).
            if p == 0.0 {
                return Err(Error::config("emission_prob is zero; no peaks"));
            }
            Ok(2.0 * q / (p * (1.0 + q) * (1.0 + q)))
        }
        other => Err(Error::UnsupportedModel(format!(
            "pulse-integrated g2 is defined only for pulsed sources, not {}",
            other.name()
        ))),
    }
}

/// Model names accepted on the command line.
pub fn model_names() -> &'static [&'static str] {
    &["coherent", "thermal", "two_level_cw", "pulsed", "fock"]
}

fn sum_side_peaks(tau: f64, period: f64, density: impl Fn(f64) -> f64) -> f64 {
    let k0 = (tau / period).round() as i64;
    (k0 - 3..=k0 + 3)
        .filter(|&k| k != 0)
        .map(|k| density(tau - k as f64 * period))
        .sum()
}

/// Density of the difference of two i.i.d. Exp(mean l) variables.
fn laplace(s: f64, l: f64) -> f64 {
    (-s.abs() / l).exp() / (2.0 * l)
}

/// Density of (X' − X) + Y with X, X' ~ Exp(l), Y ~ Exp(d).
fn laplace_exp(s: f64, l: f64, d: f64) -> f64 {
    if s <= 0.0 {
        return (s / l).exp() / (2.0 * (l + d));
    }
    let tail = (-s / d).exp() / (2.0 * (l + d));
    let body = if ((l - d) / l).abs() < 1e-9 {
        s * (-s / l).exp() / (2.0 * l * l)
    } else {
        ((-s / l).exp() - (-s / d).exp()) / (2.0 * (l - d))
    };
    body + tail
}

/// Density of (X' − X) + (Y' − Y) with X ~ Exp(l), Y ~ Exp(d).
fn laplace_laplace(s: f64, l: f64, d: f64) -> f64 {
    let a = s.abs();
    if ((l - d) / l).abs() < 1e-9 {
        return (l + a) * (-a / l).exp() / (4.0 * l * l);
    }
    (l * (-a / l).exp() - d * (-a / d).exp()) / (2.0 * (l * l - d * d))
}
