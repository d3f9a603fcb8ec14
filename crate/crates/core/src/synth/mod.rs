//! Detector time-trace synthesis.

mod bright;
mod chain;
mod vacuum;

pub use bright::{synth_bright, BrightTraces};
pub use chain::{apply_detection_chain, delay_samples};
pub use vacuum::{synth_vacuum, synth_vacuum_recording, VacuumRecording, VacuumTraces};

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::gaussian::{check_finite_nonneg, check_fraction, check_positive};
use crate::noise::{self, ids};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PulseTrainConfig {
    /// Seconds.
    pub pulse_width: f64,
    /// Seconds.
    pub period: f64,
    pub samples_per_pulse: usize,
    pub n_pulses: usize,
}

impl Default for PulseTrainConfig {
    fn default() -> Self {
        Self {
            pulse_width: 2e-6,
            period: 10e-6,
            samples_per_pulse: 200,
            n_pulses: 1000,
        }
    }
}

impl PulseTrainConfig {
    pub fn vacuum_default() -> Self {
        Self {
            n_pulses: 10_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("pulse_width", self.pulse_width)?;
        check_positive("period", self.period)?;
        if self.pulse_width >= self.period {
            return Err(Error::InvalidParameter {
                name: "pulse_width",
                reason: "must be shorter than the period",
            });
        }
        if self.samples_per_pulse < 2 {
            return Err(Error::InvalidParameter {
                name: "samples_per_pulse",
                reason: "must be at least 2",
            });
        }
        if self.n_pulses == 0 {
            return Err(Error::InvalidParameter {
                name: "n_pulses",
                reason: "must be positive",
            });
        }
        let p = self.period * self.sample_rate();
        if (p - libm::round(p)).abs() > 1e-6 * p {
            return Err(Error::InvalidParameter {
                name: "period",
                reason: "must span a whole number of samples",
            });
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.samples_per_pulse as f64 / self.pulse_width
    }

    pub fn period_samples(&self) -> usize {
        libm::round(self.period * self.sample_rate()) as usize
    }

    /// Offset of each pulse within its period; pulses sit mid-period.
    pub fn lead_samples(&self) -> usize {
        (self.period_samples() - self.samples_per_pulse) / 2
    }

    pub fn markers(&self) -> Vec<usize> {
        let (lead, p) = (self.lead_samples(), self.period_samples());
        (0..self.n_pulses).map(|k| lead + k * p).collect()
    }

    pub fn pulsed_samples(&self) -> usize {
        self.n_pulses * self.period_samples()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RingingConfig {
    /// Trace units per sample of probe/conjugate arrival mismatch.
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    /// Seconds.
    pub damping_time: f64,
}

impl Default for RingingConfig {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            frequency: 4e5,
            damping_time: 2e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DetectionChainConfig {
    /// Probe arrival lag behind the conjugate, seconds.
    pub delay_pc: f64,
    /// Per-pulse RMS fluctuation of the lag, seconds.
    pub delay_jitter_rms: f64,
    pub ringing: RingingConfig,
    /// First-order high-pass cutoff in Hz; 0 disables the filter.
    pub hpf_cutoff: f64,
    /// Trace units (the shot-noise variance is 1).
    pub electronic_noise_rms: f64,
    /// Residual field amplitude of the gated-off probe.
    pub aom_extinction: f64,
    /// Intensity transmission of the gated-on probe.
    pub aom_transmission: f64,
}

impl Default for DetectionChainConfig {
    fn default() -> Self {
        Self {
            delay_pc: 10e-9,
            delay_jitter_rms: 1e-9,
            ringing: RingingConfig::default(),
            hpf_cutoff: 3e5,
            electronic_noise_rms: 0.05,
            aom_extinction: libm::sqrt(0.03),
            aom_transmission: 0.95,
        }
    }
}

impl DetectionChainConfig {
    /// Chain with every artifact switched off and a perfect gate.
    pub fn ideal() -> Self {
        Self {
            delay_pc: 0.0,
            delay_jitter_rms: 0.0,
            ringing: RingingConfig {
                amplitude: 0.0,
                ..RingingConfig::default()
            },
            hpf_cutoff: 0.0,
            electronic_noise_rms: 0.0,
            aom_extinction: 0.0,
            aom_transmission: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite_nonneg("delay_pc", self.delay_pc)?;
        check_finite_nonneg("delay_jitter_rms", self.delay_jitter_rms)?;
        check_finite_nonneg("ringing.amplitude", self.ringing.amplitude)?;
        check_positive("ringing.frequency", self.ringing.frequency)?;
        check_positive("ringing.damping_time", self.ringing.damping_time)?;
        check_finite_nonneg("hpf_cutoff", self.hpf_cutoff)?;
        check_finite_nonneg("electronic_noise_rms", self.electronic_noise_rms)?;
        check_fraction("aom_extinction", self.aom_extinction)?;
        check_fraction("aom_transmission", self.aom_transmission)
    }

    pub fn check_nyquist(&self, sample_rate: f64) -> Result<()> {
        if self.hpf_cutoff > 0.0 && sample_rate < 2.0 * self.hpf_cutoff {
            return Err(Error::Nyquist {
                rate: sample_rate,
                cutoff: self.hpf_cutoff,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SweepConfig {
    pub phase_start: f64,
    pub phase_end: f64,
    pub phase_jitter_rms: f64,
    /// Seconds of shuttered two-beam vacuum appended after the pulses.
    pub shot_noise_tail: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            phase_start: -PI / 4.0,
            phase_end: 3.0 * PI / 4.0,
            phase_jitter_rms: PI / 180.0,
            shot_noise_tail: 10e-3,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.phase_start.is_finite() && self.phase_end.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "phase_start",
                reason: "sweep limits must be finite",
            });
        }
        if self.phase_end <= self.phase_start {
            return Err(Error::InvalidParameter {
                name: "phase_end",
                reason: "must exceed phase_start",
            });
        }
        check_finite_nonneg("phase_jitter_rms", self.phase_jitter_rms)?;
        check_finite_nonneg("shot_noise_tail", self.shot_noise_tail)
    }

    /// Commanded LO phase of pulse `k` out of `n`: a linear ramp in pulse index.
    pub fn commanded_phase(&self, k: usize, n: usize) -> f64 {
        self.phase_start + (self.phase_end - self.phase_start) * k as f64 / n as f64
    }

    /// Commanded phases plus the per-pulse jitter realization for `seed`.
    pub fn realized_phases(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = noise::stream(seed, ids::PHASE_JITTER);
        (0..n)
            .map(|k| self.commanded_phase(k, n) + self.phase_jitter_rms * noise::normal(&mut rng))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ProfileMode {
    #[default]
    White,
    Shaped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SpectralProfile {
    pub mode: ProfileMode,
    /// Hz.
    pub center: f64,
    /// Full width of the squeezing band, Hz.
    pub width: f64,
    /// Lorentzian roll-off of the gain process, Hz.
    pub process_bandwidth: f64,
    /// Added thermal photons at zero frequency.
    pub low_freq_excess: f64,
    /// Corner of the low-frequency excess, Hz.
    pub low_freq_corner: f64,
}

impl Default for SpectralProfile {
    fn default() -> Self {
        Self {
            mode: ProfileMode::White,
            center: 7.5e5,
            width: 3e5,
            process_bandwidth: 2e7,
            low_freq_excess: 0.0,
            low_freq_corner: 1e5,
        }
    }
}

impl SpectralProfile {
    pub fn shaped() -> Self {
        Self {
            mode: ProfileMode::Shaped,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("profile.center", self.center)?;
        check_positive("profile.width", self.width)?;
        check_positive("profile.process_bandwidth", self.process_bandwidth)?;
        check_finite_nonneg("profile.low_freq_excess", self.low_freq_excess)?;
        check_positive("profile.low_freq_corner", self.low_freq_corner)?;
        if self.width / 2.0 > self.center {
            return Err(Error::InvalidParameter {
                name: "profile.width",
                reason: "band must not extend below zero frequency",
            });
        }
        Ok(())
    }

    pub fn is_white(&self) -> bool {
        self.mode == ProfileMode::White
    }

    fn rolloff(&self, f: f64) -> f64 {
        let x = f / self.process_bandwidth;
        1.0 / (1.0 + x * x)
    }

    /// Fraction of the squeezing parameter realized at frequency `f`.
    pub fn squeezing_fraction(&self, f: f64) -> f64 {
        match self.mode {
            ProfileMode::White => 1.0,
            ProfileMode::Shaped => {
                let f = f.abs();
                if (f - self.center).abs() <= self.width / 2.0 {
                    self.rolloff(f)
                } else {
                    0.0
                }
            }
        }
    }

    /// Seeded gain at frequency `f` for the nominal gain `gain`.
    pub fn gain_at(&self, gain: f64, f: f64) -> f64 {
        match self.mode {
            ProfileMode::White => gain,
            ProfileMode::Shaped => 1.0 + (gain - 1.0) * self.rolloff(f.abs()),
        }
    }

    /// Added thermal photons per mode at frequency `f`.
    pub fn excess_at(&self, n_excess: f64, f: f64) -> f64 {
        match self.mode {
            ProfileMode::White => n_excess,
            ProfileMode::Shaped => {
                let x = f / self.low_freq_corner;
                n_excess + self.low_freq_excess / (1.0 + x * x)
            }
        }
    }
}
