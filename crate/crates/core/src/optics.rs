//! Michelson interferometer, beam splitter and bandpass filter.
//!
//! A photon entering the Michelson leaves through the output port with
//! probability `½·[1 + v(τ)·cos(ω₀τ)]`, where τ is the arm delay and v(τ) is
//! the modulus of the Fourier transform of the normalized emission spectrum.

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, ensure_nonnegative, ensure_probability, Error, Result};
use crate::rng::seeded;
use crate::stream::{ps_to_secs, EventStream, Tag};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineShape {
    Lorentzian,
    Gaussian,
    Delta,
}

/// Emission line: center wavelength plus shape and angular half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralLine {
    pub center_wavelength_nm: f64,
    pub shape: LineShape,
    /// Half width at half maximum of S(ω), rad/s. Ignored for `delta`.
    #[serde(default)]
    pub linewidth: f64,
}

impl Default for SpectralLine {
    fn default() -> Self {
        SpectralLine {
            center_wavelength_nm: 700.0,
            shape: LineShape::Lorentzian,
            linewidth: 1e11,
        }
    }
}

impl SpectralLine {
    pub fn lorentzian(center_wavelength_nm: f64, linewidth: f64) -> Self {
        SpectralLine {
            center_wavelength_nm,
            shape: LineShape::Lorentzian,
            linewidth,
        }
    }

    pub fn gaussian(center_wavelength_nm: f64, linewidth: f64) -> Self {
        SpectralLine {
            center_wavelength_nm,
            shape: LineShape::Gaussian,
            linewidth,
        }
    }

    pub fn delta(center_wavelength_nm: f64) -> Self {
        SpectralLine {
            center_wavelength_nm,
            shape: LineShape::Delta,
            linewidth: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.center_wavelength_nm.is_finite() && self.center_wavelength_nm > 0.0,
            || {
                format!(
                    "center_wavelength_nm must be positive, got {}",
                    self.center_wavelength_nm
                )
            },
        )?;
        if self.shape != LineShape::Delta {
            ensure_nonnegative("linewidth", self.linewidth)?;
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        self.center_wavelength_nm * 1e-9
    }

    /// Center angular frequency ω₀ = 2πc/λ, rad/s.
    pub fn omega0(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength_m()
    }

    /// Unit-normalized spectral density at detuning `ω − ω₀` (rad/s).
    /// Returns `None` for the delta line, which has no density.
    pub fn density(&self, detuning: f64) -> Option<f64> {
        let g = self.linewidth;
        match self.shape {
            LineShape::Delta => None,
            _ if g == 0.0 => None,
            LineShape::Lorentzian => Some(g / PI / (detuning * detuning + g * g)),
            LineShape::Gaussian => {
                let sigma = g / (2.0 * LN_2).sqrt();
                Some((-0.5 * (detuning / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt()))
            }
        }
    }

    /// |∫S(ω)e^{−iωτ}dω| in closed form.
    pub fn visibility(&self, tau_s: f64) -> f64 {
        let tau = tau_s.abs();
        let g = self.linewidth;
        match self.shape {
            LineShape::Delta => 1.0,
            LineShape::Lorentzian => (-g * tau).exp(),
            LineShape::Gaussian => {
                let sigma = g / (2.0 * LN_2).sqrt();
                (-0.5 * (sigma * tau).powi(2)).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilitySample {
    pub tau_s: f64,
    pub visibility: f64,
}

pub fn visibility_from_spectrum(line: &SpectralLine, tau_s: f64) -> Result<VisibilitySample> {
    line.validate()?;
    ensure(tau_s.is_finite() && tau_s >= 0.0, || {
        format!("delay must be nonnegative, got {tau_s}")
    })?;
    Ok(VisibilitySample {
        tau_s,
        visibility: line.visibility(tau_s),
    })
}

/// Probability that a photon exits the interferometer output port at the
/// given arm path difference (meters).
pub fn michelson_exit_prob(line: &SpectralLine, path_difference_m: f64) -> f64 {
    let tau = path_difference_m / SPEED_OF_LIGHT;
    // ω₀τ = 2π·Δx/λ, evaluated in path units to keep the phase exact.
    let phase = 2.0 * PI * (path_difference_m / line.wavelength_m()).rem_euclid(1.0);
    (0.5 * (1.0 + line.visibility(tau) * phase.cos())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    Fixed,
    Triangular,
}

/// Arm path difference as a function of time.
///
/// The triangular scan rises from `offset` to `offset + amplitude` in the
/// first quarter period, falls to `offset − amplitude` by the third quarter
/// and returns to `offset` at the end of the period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanWaveform {
    pub kind: ScanKind,
    #[serde(default)]
    pub amplitude_m: f64,
    #[serde(default = "default_scan_frequency")]
    pub frequency_hz: f64,
    #[serde(default)]
    pub offset_m: f64,
    /// Start phase in cycles.
    #[serde(default)]
    pub phase_cycles: f64,
}

fn default_scan_frequency() -> f64 {
    0.01
}

impl Default for ScanWaveform {
    fn default() -> Self {
        ScanWaveform::triangular(20e-6, 0.01)
    }
}

impl ScanWaveform {
    pub fn fixed(offset_m: f64) -> Self {
        ScanWaveform {
            kind: ScanKind::Fixed,
            amplitude_m: 0.0,
            frequency_hz: default_scan_frequency(),
            offset_m,
            phase_cycles: 0.0,
        }
    }

    pub fn triangular(amplitude_m: f64, frequency_hz: f64) -> Self {
        ScanWaveform {
            kind: ScanKind::Triangular,
            amplitude_m,
            frequency_hz,
            offset_m: 0.0,
            phase_cycles: 0.0,
        }
    }

    pub fn with_offset(mut self, offset_m: f64) -> Self {
        self.offset_m = offset_m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.offset_m.is_finite(), || "scan offset must be finite".into())?;
        ensure(self.phase_cycles.is_finite(), || "scan phase must be finite".into())?;
        ensure_nonnegative("scan amplitude", self.amplitude_m)?;
        if self.kind == ScanKind::Triangular {
            ensure(self.frequency_hz.is_finite() && self.frequency_hz > 0.0, || {
                format!("triangular scan frequency must be positive, got {}", self.frequency_hz)
            })?;
        }
        Ok(())
    }

    pub fn period_s(&self) -> Option<f64> {
        match self.kind {
            ScanKind::Fixed => None,
            ScanKind::Triangular => Some(1.0 / self.frequency_hz),
        }
    }

    /// Path difference at time `t_s`, meters.
    pub fn path_difference(&self, t_s: f64) -> f64 {
        match self.kind {
            ScanKind::Fixed => self.offset_m,
            ScanKind::Triangular => {
                let phase = (t_s * self.frequency_hz + self.phase_cycles).rem_euclid(1.0);
                let tri = if phase < 0.25 {
                    4.0 * phase
                } else if phase < 0.75 {
                    2.0 - 4.0 * phase
                } else {
                    4.0 * phase - 4.0
                };
                self.offset_m + self.amplitude_m * tri
            }
        }
    }
}

/// Thin a stream by the interferometer exit probability at each photon's
/// emission time.
pub fn michelson_transmit(
    stream: &EventStream,
    line: &SpectralLine,
    scan: &ScanWaveform,
    seed: u64,
) -> Result<EventStream> {
    line.validate()?;
    scan.validate()?;
    let mut rng = seeded(seed);
    Ok(stream.retain(|_, e| {
        let p = michelson_exit_prob(line, scan.path_difference(ps_to_secs(e.time)));
        rng.random::<f64>() < p
    }))
}

/// Route each event to output A with probability `reflectance`, else to B.
pub fn beamsplitter_route(stream: &EventStream, reflectance: f64, seed: u64) -> Result<(EventStream, EventStream)> {
    ensure_probability("reflectance", reflectance)?;
    let mut rng = seeded(seed);
    let to_a: Vec<bool> = (0..stream.len()).map(|_| rng.random::<f64>() < reflectance).collect();
    let a = stream.retain(|i, _| to_a[i]);
    let b = stream.retain(|i, _| !to_a[i]);
    Ok((a, b))
}

/// Tag-dependent thinning. Dark counts are not photons and always pass.
pub fn bandpass_filter(
    stream: &EventStream,
    signal_transmission: f64,
    background_transmission: f64,
    seed: u64,
) -> Result<EventStream> {
    ensure_probability("signal_transmission", signal_transmission)?;
    ensure_probability("background_transmission", background_transmission)?;
    let mut rng = seeded(seed);
    Ok(stream.retain(|_, e| {
        let t = match e.tag {
            Tag::Signal => signal_transmission,
            Tag::Background => background_transmission,
            Tag::Dark => return true,
        };
        rng.random::<f64>() < t
    }))
}

impl From<LineShape> for &'static str {
    fn from(s: LineShape) -> Self {
        match s {
            LineShape::Lorentzian => "lorentzian",
            LineShape::Gaussian => "gaussian",
            LineShape::Delta => "delta",
        }
    }
}

impl std::str::FromStr for LineShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lorentzian" => Ok(LineShape::Lorentzian),
            "gaussian" => Ok(LineShape::Gaussian),
            "delta" => Ok(LineShape::Delta),
            other => Err(Error::UnsupportedModel(format!("line shape {other:?}"))),
        }
    }
}
