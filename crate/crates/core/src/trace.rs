//! Sampled detector time series with pulse bookkeeping.

use alloc::vec::Vec;

use crate::gaussian::JointQuadrature;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TraceKind {
    /// Subtracted, amplified and filtered twin-beam photocurrent.
    BrightDiff,
    /// Same detection chain driven by a split shot-noise-limited pulse.
    BrightShot,
    /// Detector output with no light.
    Electronic,
    /// Probe photodiode before subtraction.
    BrightProbe,
    /// Conjugate photodiode before subtraction.
    BrightConjugate,
    ProbeHomodyne,
    ConjugateHomodyne,
    /// Shuttered two-beam vacuum record stored on its own.
    ShotCalibration,
}

impl TraceKind {
    pub const ALL: [TraceKind; 8] = [
        TraceKind::BrightDiff,
        TraceKind::BrightShot,
        TraceKind::Electronic,
        TraceKind::BrightProbe,
        TraceKind::BrightConjugate,
        TraceKind::ProbeHomodyne,
        TraceKind::ConjugateHomodyne,
        TraceKind::ShotCalibration,
    ];

    pub fn code(self) -> u8 {
        match self {
            TraceKind::BrightDiff => 1,
            TraceKind::BrightShot => 2,
            TraceKind::Electronic => 3,
            TraceKind::BrightProbe => 4,
            TraceKind::BrightConjugate => 5,
            TraceKind::ProbeHomodyne => 6,
            TraceKind::ConjugateHomodyne => 7,
            TraceKind::ShotCalibration => 8,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            TraceKind::BrightDiff => "bright_diff",
            TraceKind::BrightShot => "bright_shot",
            TraceKind::Electronic => "electronic",
            TraceKind::BrightProbe => "bright_probe",
            TraceKind::BrightConjugate => "bright_conjugate",
            TraceKind::ProbeHomodyne => "probe_homodyne",
            TraceKind::ConjugateHomodyne => "conjugate_homodyne",
            TraceKind::ShotCalibration => "shot_calibration",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_bright(self) -> bool {
        matches!(
            self,
            TraceKind::BrightDiff
                | TraceKind::BrightShot
                | TraceKind::Electronic
                | TraceKind::BrightProbe
                | TraceKind::BrightConjugate
        )
    }

    pub fn is_vacuum(self) -> bool {
        matches!(
            self,
            TraceKind::ProbeHomodyne | TraceKind::ConjugateHomodyne | TraceKind::ShotCalibration
        )
    }
}

/// Provenance carried alongside the samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TraceMeta {
    pub seed: u64,
    /// Digest of the generating configuration; all zero when unknown.
    pub config_digest: [u8; 32],
    /// LO configuration of a homodyne recording.
    pub joint: Option<JointQuadrature>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub sample_rate: f64,
    pub kind: TraceKind,
    pub samples: Vec<f64>,
    /// Sample index at which each pulse window begins.
    pub markers: Vec<usize>,
    pub samples_per_pulse: usize,
    pub period_samples: usize,
    /// First sample of the shuttered shot-noise tail, if one was recorded.
    pub tail_start: Option<usize>,
    pub meta: TraceMeta,
}

impl TraceRecord {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// End of the pulsed part of the record.
    pub fn pulsed_end(&self) -> usize {
        self.tail_start.unwrap_or(self.samples.len())
    }

    /// Checks the marker invariants: non-empty, strictly increasing with a
    /// spacing of exactly one period, and every pulse window in bounds.
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sample_rate",
                reason: "must be finite and positive",
            });
        }
        if self.samples_per_pulse < 2 || self.period_samples < self.samples_per_pulse {
            return Err(Error::InvalidParameter {
                name: "samples_per_pulse",
                reason: "need at least 2 samples per pulse and a period no shorter than the pulse",
            });
        }
        if self.markers.is_empty() {
            return Err(Error::MissingMarkers);
        }
        if self
            .markers
            .windows(2)
            .any(|w| w[1] != w[0] + self.period_samples)
        {
            return Err(Error::InvalidMarkers);
        }
        if let Some(t) = self.tail_start {
            if t > self.samples.len() {
                return Err(Error::InvalidMarkers);
            }
        }
        let last = *self.markers.last().expect("non-empty");
        if last + self.samples_per_pulse > self.pulsed_end() {
            return Err(Error::WindowOutOfBounds {
                start: last,
                len: self.samples_per_pulse,
                available: self.pulsed_end(),
            });
        }
        Ok(())
    }

    pub(crate) fn expect_kind(&self, kinds: &[TraceKind], expected: &'static str) -> Result<()> {
        if kinds.contains(&self.kind) {
            Ok(())
        } else {
            Err(Error::KindMismatch {
                expected,
                found: self.kind,
            })
        }
    }

    pub(crate) fn check_compatible(&self, other: &TraceRecord) -> Result<()> {
        if self.sample_rate != other.sample_rate {
            return Err(Error::Incompatible("sample rate"));
        }
        if self.markers != other.markers
            || self.samples_per_pulse != other.samples_per_pulse
            || self.samples.len() != other.samples.len()
        {
            return Err(Error::Incompatible("pulse layout"));
        }
        Ok(())
    }
}
