//! Segmented power-spectrum analysis of pulsed intensity-difference traces.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::filter::HighPass;
use crate::fourier::DirectDft;
use crate::gaussian::to_db;
use crate::trace::{TraceKind, TraceRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// The `samples_per_pulse` samples starting at each marker.
    InPulse,
    /// The gaps between consecutive pulses.
    OffPulse,
}

/// Equal-length sample windows of `region`. Off-pulse windows are the gaps
/// between consecutive pulses, truncated to the shortest gap.
pub fn extract_segments(trace: &TraceRecord, region: Region) -> Result<Vec<&[f64]>> {
    trace.validate()?;
    let n = trace.samples_per_pulse;
    let m = &trace.markers;
    match region {
        Region::InPulse => Ok(m.iter().map(|&s| &trace.samples[s..s + n]).collect()),
        Region::OffPulse => {
            let mut gaps: Vec<(usize, usize)> = m.windows(2).map(|w| (w[0] + n, w[1])).collect();
            if gaps.is_empty() {
                let start = m[0] + n;
                if start < trace.pulsed_end() {
                    gaps.push((start, trace.pulsed_end()));
                }
            }
            let len = gaps.iter().map(|(a, b)| b - a).min().unwrap_or(0);
            if len < 2 {
                return Err(Error::Empty("off-pulse region"));
            }
            Ok(gaps
                .iter()
                .map(|&(a, _)| &trace.samples[a..a + len])
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerSpectrum {
    /// Hz, `k·rate/len` for `k = 0..=len/2`.
    pub freqs: Vec<f64>,
    /// One-sided power per bin (trace units²).
    pub power: Vec<f64>,
    pub n_averaged: usize,
}

/// Reusable periodogram for windows of one length.
#[derive(Debug, Clone)]
pub struct SpectrumEstimator {
    dft: DirectDft,
    rate: f64,
    taper: Option<Vec<f64>>,
}

impl SpectrumEstimator {
    /// `taper` selects a Hann window; the default analysis is rectangular.
    pub fn new(len: usize, rate: f64, taper: bool) -> Result<Self> {
        if len < 2 {
            return Err(Error::TooFew {
                what: "samples per segment",
                needed: 2,
                got: len,
            });
        }
        let taper = taper.then(|| {
            (0..len)
                .map(|i| 0.5 - 0.5 * libm::cos(2.0 * PI * i as f64 / len as f64))
                .collect()
        });
        Ok(Self {
            dft: DirectDft::new(len),
            rate,
            taper,
        })
    }

    pub fn len(&self) -> usize {
        self.dft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dft.is_empty()
    }

    pub fn freqs(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (0..self.dft.bins())
            .map(|k| k as f64 * self.rate / n)
            .collect()
    }

    fn accumulate(
        &self,
        window: &[f64],
        buf: &mut Vec<f64>,
        power: &mut [f64],
        spec: &mut [f64],
    ) -> Result<()> {
        let n = self.len();
        if window.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: window.len(),
            });
        }
        let mean = window.iter().sum::<f64>() / n as f64;
        buf.clear();
        match &self.taper {
            Some(w) => buf.extend(window.iter().zip(w).map(|(x, w)| (x - mean) * w)),
            None => buf.extend(window.iter().map(|x| x - mean)),
        }
        let norm = match &self.taper {
            Some(w) => w.iter().map(|v| v * v).sum::<f64>(),
            None => n as f64,
        };
        self.dft.power_into(buf, spec)?;
        for (k, (p, s)) in power.iter_mut().zip(spec.iter()).enumerate() {
            let one_sided = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
            *p += one_sided * s / norm;
        }
        Ok(())
    }

    pub fn segment(&self, window: &[f64]) -> Result<PowerSpectrum> {
        self.average(&[window])
    }

    /// Mean periodogram over `windows`.
    pub fn average(&self, windows: &[&[f64]]) -> Result<PowerSpectrum> {
        if windows.is_empty() {
            return Err(Error::Empty("segment list"));
        }
        let mut power = vec![0.0; self.dft.bins()];
        let mut spec = vec![0.0; self.dft.bins()];
        let mut buf = Vec::with_capacity(self.len());
        for w in windows {
            self.accumulate(w, &mut buf, &mut power, &mut spec)?;
        }
        let n = windows.len() as f64;
        power.iter_mut().for_each(|p| *p /= n);
        Ok(PowerSpectrum {
            freqs: self.freqs(),
            power,
            n_averaged: windows.len(),
        })
    }
}

/// Periodogram of one window with its mean removed (rectangular, one-sided).
pub fn segment_power_spectrum(window: &[f64], sample_rate: f64) -> Result<PowerSpectrum> {
    SpectrumEstimator::new(window.len(), sample_rate, false)?.segment(window)
}

/// Mean of spectra on a common grid, weighted by their `n_averaged`.
pub fn average_spectra(list: &[PowerSpectrum]) -> Result<PowerSpectrum> {
    let first = list.first().ok_or(Error::Empty("spectrum list"))?;
    let mut power = vec![0.0; first.power.len()];
    let mut total = 0;
    for s in list {
        if s.freqs != first.freqs {
            return Err(Error::GridMismatch);
        }
        for (p, v) in power.iter_mut().zip(&s.power) {
            *p += v * s.n_averaged as f64;
        }
        total += s.n_averaged;
    }
    if total == 0 {
        return Err(Error::Empty("spectrum list"));
    }
    power.iter_mut().for_each(|p| *p /= total as f64);
    Ok(PowerSpectrum {
        freqs: first.freqs.clone(),
        power,
        n_averaged: total,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BrightReport {
    /// One-sided grid without the DC bin.
    pub freqs: Vec<f64>,
    /// `None` marks a bin whose corrected signal power is not positive.
    pub squeezing_db: Vec<Option<f64>>,
    pub corrected: bool,
    pub band: (f64, f64),
    /// Mean of the dB values inside `band`; `None` if the band holds no valid bin.
    pub band_summary: Option<f64>,
    pub n_averaged: usize,
    pub delay_comp_samples: i64,
}

impl BrightReport {
    pub fn flagged_bins(&self) -> Vec<f64> {
        self.freqs
            .iter()
            .zip(&self.squeezing_db)
            .filter(|(_, v)| v.is_none())
            .map(|(f, _)| *f)
            .collect()
    }

    pub fn band_mean(&self, lo: f64, hi: f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .freqs
            .iter()
            .zip(&self.squeezing_db)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .filter_map(|(_, v)| *v)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

pub const DEFAULT_BAND: (f64, f64) = (3e6, 10e6);

/// Noise of `diff` relative to `shot` per bin, optionally after subtracting
/// the electronic floor from both.
pub fn squeezing_spectrum(
    diff: &PowerSpectrum,
    shot: &PowerSpectrum,
    electronic: Option<&PowerSpectrum>,
    correct: bool,
    band: (f64, f64),
) -> Result<BrightReport> {
    if diff.freqs != shot.freqs {
        return Err(Error::GridMismatch);
    }
    if let Some(e) = electronic {
        if e.freqs != diff.freqs {
            return Err(Error::GridMismatch);
        }
    }
    let elec = match (correct, electronic) {
        (true, None) => return Err(Error::Empty("electronic spectrum for correction")),
        (true, Some(e)) => Some(e),
        (false, _) => None,
    };
    let mut db = Vec::with_capacity(diff.power.len().saturating_sub(1));
    for k in 1..diff.power.len() {
        let (mut d, mut s) = (diff.power[k], shot.power[k]);
        if let Some(e) = elec {
            if e.power[k] >= s {
                return Err(Error::ElectronicExceedsShot { bin: k });
            }
            d -= e.power[k];
            s -= e.power[k];
        }
        if s <= 0.0 {
            return Err(Error::Empty("shot-noise power"));
        }
        db.push((d > 0.0).then(|| to_db(d / s)));
    }
    let mut report = BrightReport {
        freqs: diff.freqs[1..].to_vec(),
        squeezing_db: db,
        corrected: correct,
        band,
        band_summary: None,
        n_averaged: diff.n_averaged,
        delay_comp_samples: 0,
    };
    report.band_summary = report.band_mean(band.0, band.1);
    Ok(report)
}

/// `probe[n + shift] − conjugate[n]`, passed through the same first-order
/// high-pass as the subtracted signal (`hpf_cutoff = 0` skips it).
pub fn compensated_difference(
    probe: &TraceRecord,
    conjugate: &TraceRecord,
    shift: i64,
    hpf_cutoff: f64,
) -> Result<TraceRecord> {
    probe.expect_kind(&[TraceKind::BrightProbe], "probe photocurrent")?;
    conjugate.expect_kind(&[TraceKind::BrightConjugate], "conjugate photocurrent")?;
    probe.check_compatible(conjugate)?;
    let len = probe.len() as i64;
    let mut samples: Vec<f64> = (0..len)
        .map(|n| {
            let j = n + shift;
            let p = if (0..len).contains(&j) {
                probe.samples[j as usize]
            } else {
                0.0
            };
            p - conjugate.samples[n as usize]
        })
        .collect();
    if hpf_cutoff > 0.0 {
        HighPass::new(hpf_cutoff, probe.sample_rate)?.apply(&mut samples);
    }
    Ok(TraceRecord {
        kind: TraceKind::BrightDiff,
        samples,
        ..conjugate.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BrightOptions {
    pub correct_electronic: bool,
    pub delay_comp_samples: i64,
    pub band: (f64, f64),
    pub taper: bool,
    /// Cutoff applied to a digitally formed difference, Hz (0 = none).
    pub hpf_cutoff: f64,
}

impl Default for BrightOptions {
    fn default() -> Self {
        Self {
            correct_electronic: false,
            delay_comp_samples: 0,
            band: DEFAULT_BAND,
            taper: false,
            hpf_cutoff: 3e5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum BrightSignal<'a> {
    Subtracted(&'a TraceRecord),
    PerDetector {
        probe: &'a TraceRecord,
        conjugate: &'a TraceRecord,
    },
}

/// Full pipeline: in-pulse segments of signal, shot and electronic records,
/// averaged periodograms and the squeezing spectrum.
pub fn analyze_bright(
    signal: BrightSignal<'_>,
    shot: &TraceRecord,
    electronic: Option<&TraceRecord>,
    opts: &BrightOptions,
) -> Result<BrightReport> {
    shot.expect_kind(&[TraceKind::BrightShot], "shot-noise record")?;
    let formed;
    let diff = match signal {
        BrightSignal::Subtracted(t) => {
            t.expect_kind(&[TraceKind::BrightDiff], "intensity-difference record")?;
            if opts.delay_comp_samples != 0 {
                return Err(Error::Incompatible(
                    "delay compensation, which needs per-detector channels",
                ));
            }
            t
        }
        BrightSignal::PerDetector { probe, conjugate } => {
            formed =
                compensated_difference(probe, conjugate, opts.delay_comp_samples, opts.hpf_cutoff)?;
            &formed
        }
    };
    diff.check_compatible(shot)?;
    if let Some(e) = electronic {
        e.expect_kind(&[TraceKind::Electronic], "electronic-noise record")?;
        diff.check_compatible(e)?;
    }
    let est = SpectrumEstimator::new(diff.samples_per_pulse, diff.sample_rate, opts.taper)?;
    let d = est.average(&extract_segments(diff, Region::InPulse)?)?;
    let s = est.average(&extract_segments(shot, Region::InPulse)?)?;
    let e = match electronic {
        Some(t) => Some(est.average(&extract_segments(t, Region::InPulse)?)?),
        None => None,
    };
    let mut report = squeezing_spectrum(&d, &s, e.as_ref(), opts.correct_electronic, opts.band)?;
    report.delay_comp_samples = opts.delay_comp_samples;
    Ok(report)
}
