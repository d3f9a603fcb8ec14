//! Windowed integration, phase binning and entanglement figures for pulsed
//! vacuum-squeezed beams.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::gaussian::{check_finite_nonneg, check_positive, to_db, JointQuadrature};
use crate::stats::{self, invert3, solve3};
use crate::trace::{TraceKind, TraceRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct WindowConfig {
    /// Seconds.
    pub sigma: f64,
    /// rad/s.
    pub omega0: f64,
    /// Integration span, seconds (the pulse width).
    pub tau: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            sigma: 0.5e-6,
            omega0: 2.0 * PI * 7.5e5,
            tau: 2e-6,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("window.sigma", self.sigma)?;
        check_finite_nonneg("window.omega0", self.omega0)?;
        check_positive("window.tau", self.tau)
    }
}

/// `W(t) = cos(ω₀(t−t₀))·exp(−(t−t₀)²/2σ²)·Θ(τ/2 − |t−t₀|) / (σ√(2π))`.
pub fn eval_window(t: f64, t0: f64, cfg: &WindowConfig) -> f64 {
    let dt = t - t0;
    if dt.abs() > cfg.tau / 2.0 {
        return 0.0;
    }
    let s = cfg.sigma;
    libm::cos(cfg.omega0 * dt) * libm::exp(-dt * dt / (2.0 * s * s)) / (s * libm::sqrt(2.0 * PI))
}

/// Integration weights `W(t_i)·Δt` for a pulse of `len` samples; `t₀` is
/// the pulse midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseWindow {
    weights: Vec<f64>,
}

impl PulseWindow {
    pub fn new(cfg: &WindowConfig, len: usize, sample_rate: f64) -> Result<Self> {
        cfg.validate()?;
        check_positive("sample_rate", sample_rate)?;
        if cfg.tau > len as f64 / sample_rate * (1.0 + 1e-9) {
            return Err(Error::InvalidParameter {
                name: "window.tau",
                reason: "pulse segment is shorter than the integration span",
            });
        }
        let dt = 1.0 / sample_rate;
        let mid = (len as f64 - 1.0) / 2.0;
        let weights = (0..len)
            .map(|i| eval_window((i as f64 - mid) * dt, 0.0, cfg) * dt)
            .collect();
        Ok(Self { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, segment: &[f64]) -> Result<f64> {
        if segment.len() < self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: segment.len(),
            });
        }
        Ok(self.integrate_unchecked(segment))
    }

    #[inline]
    fn integrate_unchecked(&self, segment: &[f64]) -> f64 {
        segment.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }
}

/// `Σ segment·W·Δt` over one pulse.
pub fn integrate_pulse(segment: &[f64], cfg: &WindowConfig, sample_rate: f64) -> Result<f64> {
    PulseWindow::new(cfg, segment.len(), sample_rate)?.integrate(segment)
}

/// Integrated joint quadrature `probe ± conjugate` of one pulse.
pub fn integrate_joint(
    probe: &[f64],
    conjugate: &[f64],
    window: &PulseWindow,
    sign: JointQuadrature,
) -> Result<f64> {
    Ok(window.integrate(probe)? + sign.conjugate_sign() * window.integrate(conjugate)?)
}

pub const MIN_SHOT_SEGMENTS: usize = 100;

/// Shot-noise level: unbiased variance of integrated shuttered segments.
pub fn estimate_snl(integrals: &[f64]) -> Result<f64> {
    if integrals.len() < MIN_SHOT_SEGMENTS {
        return Err(Error::TooFew {
            what: "shot-noise segments",
            needed: MIN_SHOT_SEGMENTS,
            got: integrals.len(),
        });
    }
    Ok(stats::variance(integrals))
}

/// Starts of pulse-length windows tiling the shuttered tail at `stride`.
pub fn shot_segment_starts(trace: &TraceRecord, stride: usize) -> Vec<usize> {
    let Some(tail) = trace.tail_start else {
        return Vec::new();
    };
    let n = trace.samples_per_pulse;
    if stride == 0 || trace.len() < tail + n {
        return Vec::new();
    }
    (tail..=trace.len() - n).step_by(stride).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureSample {
    /// Joint LO phase assigned to the pulse, radians.
    pub theta: f64,
    /// Integrated X⁻ in trace units (divide by the SNL for vacuum units).
    pub x_minus: f64,
    pub x_plus: f64,
    pub pulse_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseBin {
    pub theta_mean: f64,
    pub count: usize,
    /// SNL-normalized variances; `None` for bins with fewer than two samples.
    pub var_minus: Option<f64>,
    pub var_plus: Option<f64>,
}

/// Weighted fit `V(θ) = offset + c·cos θ + s·sin θ` to binned variances.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseFit {
    pub offset: f64,
    pub cos: f64,
    pub sin: f64,
    /// Fitted minimum with the noise-induced amplitude bias removed.
    pub minimum: f64,
    /// Phase of the minimum, radians.
    pub phase: f64,
}

impl PhaseFit {
    pub fn value(&self, theta: f64) -> f64 {
        self.offset + self.cos * libm::cos(theta) + self.sin * libm::sin(theta)
    }
}

/// Each bin variance from `m` samples has relative variance `2/(m−1)`;
/// weights follow the fitted curve (iteratively reweighted least squares).
/// The minimum is sought over the swept interval `range` only: when the
/// curve's extremum lies outside it, the lower edge value is reported.
pub fn fit_phase_curve(points: &[(f64, f64, usize)], range: (f64, f64)) -> Result<PhaseFit> {
    let pts: Vec<_> = points.iter().filter(|p| p.2 >= 2 && p.1 > 0.0).collect();
    if pts.len() < 3 {
        return Err(Error::TooFew {
            what: "populated phase bins",
            needed: 3,
            got: pts.len(),
        });
    }
    let mut model: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mut beta = [0.0; 3];
    let mut cov = [[0.0; 3]; 3];
    for _ in 0..8 {
        let mut a = [[0.0; 3]; 3];
        let mut b = [0.0; 3];
        for (p, mu) in pts.iter().zip(&model) {
            let w = (p.2 - 1) as f64 / (2.0 * mu * mu);
            let x = [1.0, libm::cos(p.0), libm::sin(p.0)];
            for i in 0..3 {
                b[i] += w * x[i] * p.1;
                for j in 0..3 {
                    a[i][j] += w * x[i] * x[j];
                }
            }
        }
        beta = solve3(a, b)?;
        cov = invert3(a)?;
        let floor = 1e-3 * pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        for (p, mu) in pts.iter().zip(model.iter_mut()) {
            *mu = (beta[0] + beta[1] * libm::cos(p.0) + beta[2] * libm::sin(p.0)).max(floor);
        }
    }
    let amp2 = beta[1] * beta[1] + beta[2] * beta[2] - (cov[1][1] + cov[2][2]);
    let mut fit = PhaseFit {
        offset: beta[0],
        cos: beta[1],
        sin: beta[2],
        minimum: beta[0] - libm::sqrt(amp2.max(0.0)),
        phase: libm::atan2(-beta[2], -beta[1]),
    };
    // Representative of the extremum at or above the lower edge.
    let turns = libm::ceil((range.0 - fit.phase) / (2.0 * PI));
    let inside = fit.phase + turns * 2.0 * PI;
    if inside <= range.1 {
        fit.phase = inside;
    } else {
        let (lo, hi) = (fit.value(range.0), fit.value(range.1));
        (fit.phase, fit.minimum) = if lo <= hi {
            (range.0, lo)
        } else {
            (range.1, hi)
        };
    }
    Ok(fit)
}

fn wrap(x: f64) -> f64 {
    let y = libm::fmod(x + PI, 2.0 * PI);
    if y < 0.0 {
        y + PI
    } else {
        y - PI
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureSummary {
    /// Minimum of the fitted phase curve (SNL units).
    pub variance: f64,
    pub squeezing_db: f64,
    /// Phase of the minimum, radians.
    pub phase: f64,
    /// Spread (standard deviation, dB) of the bin variances within ±π/40 of `phase`.
    pub uncertainty_db: f64,
    /// Lowest single-bin variance, in dB.
    pub min_bin_db: f64,
    pub fit: PhaseFit,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VacuumReport {
    pub bins: Vec<PhaseBin>,
    pub snl: f64,
    pub minus: QuadratureSummary,
    pub plus: QuadratureSummary,
    pub inseparability: f64,
    pub inseparability_uncertainty: f64,
    pub epr_product: f64,
    pub epr_uncertainty: f64,
    /// Probe shift applied before integration, in samples and seconds.
    pub delta_t_samples: i64,
    pub delta_t: f64,
    pub n_pulses: usize,
}

impl VacuumReport {
    pub fn is_inseparable(&self) -> bool {
        self.inseparability < 2.0
    }

    pub fn is_epr_entangled(&self) -> bool {
        self.epr_product < 1.0
    }
}

/// Width of the phase window used for the uncertainty estimate.
pub const UNCERTAINTY_SPAN: f64 = PI / 20.0;

fn summarize(
    bins: &[PhaseBin],
    range: (f64, f64),
    pick: impl Fn(&PhaseBin) -> Option<f64>,
) -> Result<QuadratureSummary> {
    let points: Vec<(f64, f64, usize)> = bins
        .iter()
        .filter_map(|b| pick(b).map(|v| (b.theta_mean, v, b.count)))
        .collect();
    let fit = fit_phase_curve(&points, range)?;
    if fit.minimum <= 0.0 {
        return Err(Error::SingularFit);
    }
    let near: Vec<f64> = points
        .iter()
        .filter(|p| wrap(p.0 - fit.phase).abs() <= UNCERTAINTY_SPAN / 2.0)
        .map(|p| to_db(p.1))
        .collect();
    let uncertainty_db = if near.len() >= 2 {
        libm::sqrt(stats::variance(&near))
    } else {
        0.0
    };
    let min_bin = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(QuadratureSummary {
        variance: fit.minimum,
        squeezing_db: to_db(fit.minimum),
        phase: fit.phase,
        uncertainty_db,
        min_bin_db: to_db(min_bin),
        fit,
    })
}

/// Half-open bin of `theta`; phases within 1e-9 of a bin width below an
/// edge count as on it, so ramp values that land on edges in exact
/// arithmetic are not split by round-off.
fn bin_index(theta: f64, start: f64, width: f64, n_bins: usize) -> usize {
    let idx = libm::floor((theta - start) / width + 1e-9);
    if idx < 0.0 {
        0
    } else {
        (idx as usize).min(n_bins - 1)
    }
}

/// Bins samples by phase over `range` into `n_bins` equal half-open
/// intervals (the upper edge joins the last bin), normalizes the per-bin
/// variances by `snl` and derives the squeezing and entanglement figures.
pub fn bin_and_report(
    samples: &[QuadratureSample],
    snl: f64,
    n_bins: usize,
    range: (f64, f64),
) -> Result<VacuumReport> {
    check_positive("snl", snl)?;
    if n_bins < 3 {
        return Err(Error::InvalidParameter {
            name: "bins",
            reason: "need at least 3 phase bins",
        });
    }
    if !(range.1 > range.0) {
        return Err(Error::InvalidParameter {
            name: "phase range",
            reason: "upper edge must exceed lower edge",
        });
    }
    if samples.len() < 10 * n_bins {
        return Err(Error::TooFew {
            what: "quadrature samples (10 per bin)",
            needed: 10 * n_bins,
            got: samples.len(),
        });
    }
    let width = (range.1 - range.0) / n_bins as f64;
    let mut groups: Vec<Vec<&QuadratureSample>> = vec![Vec::new(); n_bins];
    for s in samples {
        groups[bin_index(s.theta, range.0, width, n_bins)].push(s);
    }
    let bins: Vec<PhaseBin> = groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| {
            let theta_mean = g.iter().map(|s| s.theta).sum::<f64>() / g.len() as f64;
            let var = |f: fn(&QuadratureSample) -> f64| {
                (g.len() >= 2)
                    .then(|| stats::variance(&g.iter().map(|s| f(s)).collect::<Vec<_>>()) / snl)
            };
            PhaseBin {
                theta_mean,
                count: g.len(),
                var_minus: var(|s| s.x_minus),
                var_plus: var(|s| s.x_plus),
            }
        })
        .collect();
    let minus = summarize(&bins, range, |b| b.var_minus)?;
    let plus = summarize(&bins, range, |b| b.var_plus)?;
    let (vm, vp) = (minus.variance, plus.variance);
    let ln10 = core::f64::consts::LN_10 / 10.0;
    let epr = 4.0 * vm * vp;
    Ok(VacuumReport {
        bins,
        snl,
        inseparability: vm + vp,
        inseparability_uncertainty: ln10 * (vm * minus.uncertainty_db + vp * plus.uncertainty_db),
        epr_product: epr,
        epr_uncertainty: ln10 * epr * (minus.uncertainty_db + plus.uncertainty_db),
        minus,
        plus,
        delta_t_samples: 0,
        delta_t: 0.0,
        n_pulses: samples.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct VacuumOptions {
    pub window: WindowConfig,
    pub n_bins: usize,
    /// Commanded sweep limits, radians; pulses get the ramp value.
    pub phase_range: (f64, f64),
    /// Half-width of the Δt search, seconds.
    pub search_range: f64,
    /// Δt search step, samples.
    pub search_step: usize,
    /// Spacing of shot-noise windows in the tail, samples (0 = pulse length).
    pub snl_stride: usize,
}

impl Default for VacuumOptions {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            n_bins: 100,
            phase_range: (-PI / 4.0, 3.0 * PI / 4.0),
            search_range: 200e-9,
            search_step: 1,
            snl_stride: 0,
        }
    }
}

/// Commanded phase of pulse `k` out of `n` on the ramp over `range`.
pub fn ramp_phase(range: (f64, f64), k: usize, n: usize) -> f64 {
    range.0 + (range.1 - range.0) * k as f64 / n as f64
}

fn check_pair(
    probe: &TraceRecord,
    conjugate: &TraceRecord,
    quadrature: JointQuadrature,
) -> Result<()> {
    probe.expect_kind(&[TraceKind::ProbeHomodyne], "probe homodyne record")?;
    conjugate.expect_kind(&[TraceKind::ConjugateHomodyne], "conjugate homodyne record")?;
    probe.validate()?;
    probe.check_compatible(conjugate)?;
    for t in [probe, conjugate] {
        if t.meta.joint.is_some_and(|j| j != quadrature) {
            return Err(Error::Incompatible(
                "joint-quadrature configuration of the recording",
            ));
        }
    }
    Ok(())
}

/// Integrated probe and conjugate values per pulse with the probe shifted
/// by `shift` samples; pulses whose shifted window leaves the trace are
/// dropped (`None`).
fn pulse_integrals(
    probe: &TraceRecord,
    conjugate: &TraceRecord,
    starts: &[usize],
    window: &PulseWindow,
    shift: i64,
) -> Vec<Option<(f64, f64)>> {
    let n = window.len() as i64;
    let len = probe.len() as i64;
    starts
        .iter()
        .map(|&m| {
            let p = m as i64 + shift;
            (p >= 0 && p + n <= len).then(|| {
                (
                    window.integrate_unchecked(&probe.samples[p as usize..]),
                    window.integrate_unchecked(&conjugate.samples[m..]),
                )
            })
        })
        .collect()
}

/// Probe shift (samples) minimizing the fitted X⁻ variance minimum over a
/// grid of `±search` samples; ties go to the smallest |shift|.
pub fn align_delta_t(
    probe: &TraceRecord,
    conjugate: &TraceRecord,
    window: &PulseWindow,
    phase_range: (f64, f64),
    n_bins: usize,
    search: usize,
    step: usize,
) -> Result<i64> {
    if step == 0 {
        return Err(Error::InvalidParameter {
            name: "search_step",
            reason: "must be positive",
        });
    }
    let n = probe.markers.len();
    let conj: Vec<f64> = probe
        .markers
        .iter()
        .map(|&m| window.integrate_unchecked(&conjugate.samples[m..]))
        .collect();
    let mut shifts = vec![0i64];
    for s in (step..=search).step_by(step) {
        shifts.push(-(s as i64));
        shifts.push(s as i64);
    }
    let mut best: Option<(i64, f64)> = None;
    for &s in &shifts {
        let samples: Vec<QuadratureSample> =
            pulse_integrals(probe, conjugate, &probe.markers, window, s)
                .iter()
                .enumerate()
                .filter_map(|(k, v)| {
                    v.map(|(p, _)| QuadratureSample {
                        theta: ramp_phase(phase_range, k, n),
                        x_minus: p - conj[k],
                        x_plus: 0.0,
                        pulse_index: k,
                    })
                })
                .collect();
        let bins = bin_minus(&samples, n_bins, phase_range);
        let Ok(fit) = fit_phase_curve(&bins, phase_range) else {
            continue;
        };
        if best.is_none_or(|(_, v)| fit.minimum < v * (1.0 - 1e-12)) {
            best = Some((s, fit.minimum));
        }
    }
    best.map(|b| b.0).ok_or(Error::Empty("delta-t search"))
}

fn bin_minus(
    samples: &[QuadratureSample],
    n_bins: usize,
    range: (f64, f64),
) -> Vec<(f64, f64, usize)> {
    let width = (range.1 - range.0) / n_bins as f64;
    let mut acc = vec![(stats::Accumulator::default(), 0.0); n_bins];
    for s in samples {
        let idx = bin_index(s.theta, range.0, width, n_bins);
        acc[idx].0.push(s.x_minus);
        acc[idx].1 += s.theta;
    }
    acc.iter()
        .filter(|(a, _)| a.count() >= 2)
        .map(|(a, t)| (t / a.count() as f64, a.variance(), a.count()))
        .collect()
}

/// Full pipeline over the X⁻ and X⁺ recordings: Δt alignment on the X⁻
/// recording, windowed integration, SNL from the shuttered tails of both
/// recordings, phase binning and figures of merit.
pub fn analyze_vacuum(
    minus: (&TraceRecord, &TraceRecord),
    plus: (&TraceRecord, &TraceRecord),
    opts: &VacuumOptions,
) -> Result<VacuumReport> {
    analyze_vacuum_with_samples(minus, plus, opts).map(|(r, _)| r)
}

/// As [`analyze_vacuum`], also returning the per-pulse integrated values
/// (trace units; divide by `√snl` for vacuum units).
pub fn analyze_vacuum_with_samples(
    minus: (&TraceRecord, &TraceRecord),
    plus: (&TraceRecord, &TraceRecord),
    opts: &VacuumOptions,
) -> Result<(VacuumReport, Vec<QuadratureSample>)> {
    check_pair(minus.0, minus.1, JointQuadrature::Minus)?;
    check_pair(plus.0, plus.1, JointQuadrature::Plus)?;
    if minus.0.markers != plus.0.markers || minus.0.sample_rate != plus.0.sample_rate {
        return Err(Error::Incompatible(
            "pulse layout of the X- and X+ recordings",
        ));
    }
    let rate = minus.0.sample_rate;
    let window = PulseWindow::new(&opts.window, minus.0.samples_per_pulse, rate)?;
    let search = libm::round(opts.search_range * rate) as usize;
    let shift = align_delta_t(
        minus.0,
        minus.1,
        &window,
        opts.phase_range,
        opts.n_bins,
        search,
        opts.search_step,
    )?;

    let n = minus.0.markers.len();
    let xm = pulse_integrals(minus.0, minus.1, &minus.0.markers, &window, shift);
    let xp = pulse_integrals(plus.0, plus.1, &plus.0.markers, &window, shift);
    let samples: Vec<QuadratureSample> = xm
        .iter()
        .zip(&xp)
        .enumerate()
        .filter_map(|(k, (a, b))| {
            let ((pm, cm), (pp, cp)) = ((*a)?, (*b)?);
            Some(QuadratureSample {
                theta: ramp_phase(opts.phase_range, k, n),
                x_minus: pm - cm,
                x_plus: pp + cp,
                pulse_index: k,
            })
        })
        .collect();

    let stride = if opts.snl_stride == 0 {
        window.len()
    } else {
        opts.snl_stride
    };
    let mut pooled = (0.0, 0usize);
    for (rec, sign) in [(minus, -1.0), (plus, 1.0)] {
        let starts = shot_segment_starts(rec.0, stride);
        let vals: Vec<f64> = pulse_integrals(rec.0, rec.1, &starts, &window, shift)
            .into_iter()
            .flatten()
            .map(|(p, c)| p + sign * c)
            .collect();
        let v = estimate_snl(&vals)?;
        pooled.0 += v * (vals.len() - 1) as f64;
        pooled.1 += vals.len() - 1;
    }
    let snl = pooled.0 / pooled.1 as f64;

    let mut report = bin_and_report(&samples, snl, opts.n_bins, opts.phase_range)?;
    report.delta_t_samples = shift;
    report.delta_t = shift as f64 / rate;
    Ok((report, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise;

    #[test]
    fn window_value_at_center_and_cutoff() {
        let cfg = WindowConfig::default();
        let peak = 1.0 / (cfg.sigma * libm::sqrt(2.0 * PI));
        assert!((eval_window(3e-6, 3e-6, &cfg) - peak).abs() < 1e-12 * peak);
        assert_eq!(eval_window(3e-6 + 1.01e-6, 3e-6, &cfg), 0.0);
        assert_eq!(eval_window(3e-6 - 1.5e-6, 3e-6, &cfg), 0.0);
    }

    #[test]
    fn integration_basics() {
        let cfg = WindowConfig::default();
        let w = PulseWindow::new(&cfg, 200, 1e8).unwrap();
        assert_eq!(w.integrate(&[0.0; 200]).unwrap(), 0.0);
        let x: Vec<f64> = (0..200).map(|i| libm::sin(i as f64)).collect();
        assert_eq!(
            integrate_joint(&x, &x, &w, JointQuadrature::Minus).unwrap(),
            0.0
        );
        assert!(w.integrate(&x[..150]).is_err());
        assert!(PulseWindow::new(&cfg, 150, 1e8).is_err());
        // Symmetric weights: the window is even about the midpoint.
        let ws = w.weights();
        assert!((ws[0] - ws[199]).abs() < 1e-18);
    }

    #[test]
    fn tuned_tone_gives_the_largest_response() {
        let cfg = WindowConfig::default();
        let w = PulseWindow::new(&cfg, 200, 1e8).unwrap();
        let response = |omega: f64| {
            let x: Vec<f64> = (0..200)
                .map(|i| libm::cos(omega * (i as f64 - 99.5) / 1e8))
                .collect();
            w.integrate(&x).unwrap().abs()
        };
        let tuned = response(cfg.omega0);
        for f in [0.0, 2e5, 5e5, 1e6, 1.5e6, 3e6] {
            assert!(response(2.0 * PI * f) <= tuned * 1.0001 || f == 7.5e5);
        }
        let off = response(cfg.omega0 + 3.0 / cfg.sigma);
        assert!(
            off * core::f64::consts::E * core::f64::consts::E < tuned,
            "{off} vs {tuned}"
        );
    }

    #[test]
    fn snl_needs_enough_segments() {
        assert!(matches!(
            estimate_snl(&[1.0; 99]),
            Err(Error::TooFew { .. })
        ));
        let mut rng = noise::stream(2, 2);
        let x: Vec<f64> = (0..1000).map(|_| noise::normal(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let (a, b) = (estimate_snl(&x).unwrap(), estimate_snl(&y).unwrap());
        assert!((b - 9.0 * a).abs() < 1e-9 * b);
        // 10³ samples: relative sigma of the variance is √(2/999) ≈ 4.5%.
        assert!((a - 1.0).abs() < 0.1);
    }

    #[test]
    fn fit_recovers_a_clean_sinusoid() {
        let pts: Vec<(f64, f64, usize)> = (0..50)
            .map(|j| {
                let t = j as f64 * PI / 50.0;
                (t, 1.5 - 0.8 * libm::cos(t - 0.4), 1_000_000)
            })
            .collect();
        let fit = fit_phase_curve(&pts, (0.0, PI)).unwrap();
        assert!((fit.minimum - 0.7).abs() < 1e-4);
        assert!((fit.phase - 0.4).abs() < 1e-9);
        // Same curve seen through a window shifted by a full turn.
        let shifted: Vec<_> = pts.iter().map(|p| (p.0 + 2.0 * PI, p.1, p.2)).collect();
        let fit = fit_phase_curve(&shifted, (2.0 * PI, 3.0 * PI)).unwrap();
        assert!((fit.phase - 0.4 - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn minimum_outside_the_sweep_is_taken_at_the_edge() {
        let curve = |t: f64| 1.5 - 0.8 * libm::cos(t - 4.0);
        let pts: Vec<(f64, f64, usize)> = (0..50)
            .map(|j| {
                let t = j as f64 * PI / 50.0;
                (t, curve(t), 1_000_000)
            })
            .collect();
        let fit = fit_phase_curve(&pts, (0.0, PI)).unwrap();
        assert_eq!(fit.phase, PI);
        assert!((fit.minimum - curve(PI)).abs() < 1e-6);
    }

    fn synthetic_samples(
        n: usize,
        seed: u64,
        vm: impl Fn(f64) -> f64,
        vp: impl Fn(f64) -> f64,
    ) -> Vec<QuadratureSample> {
        let mut rng = noise::stream(seed, 77);
        let range = (-PI / 4.0, 3.0 * PI / 4.0);
        (0..n)
            .map(|k| {
                let theta = ramp_phase(range, k, n);
                QuadratureSample {
                    theta,
                    x_minus: libm::sqrt(vm(theta)) * noise::normal(&mut rng),
                    x_plus: libm::sqrt(vp(theta)) * noise::normal(&mut rng),
                    pulse_index: k,
                }
            })
            .collect()
    }

    #[test]
    fn vacuum_bins_sit_at_the_shot_noise_level() {
        let s = synthetic_samples(10_000, 3, |_| 1.0, |_| 1.0);
        let r = bin_and_report(&s, 1.0, 100, (-PI / 4.0, 3.0 * PI / 4.0)).unwrap();
        assert_eq!(r.bins.len(), 100);
        assert!(r.bins.iter().all(|b| b.count == 100));
        assert!((r.inseparability - 2.0).abs() < 0.1, "{}", r.inseparability);
        assert!(r.bins.windows(2).all(|w| w[1].theta_mean > w[0].theta_mean));
    }

    #[test]
    fn squeezed_curves_are_recovered() {
        let (ch, sh) = (libm::cosh(0.875), libm::sinh(0.875));
        let s = synthetic_samples(
            40_000,
            4,
            |t| ch - sh * libm::cos(t),
            |t| ch - sh * libm::cos(t - PI / 2.0),
        );
        let r = bin_and_report(&s, 1.0, 100, (-PI / 4.0, 3.0 * PI / 4.0)).unwrap();
        assert!(
            (r.minus.squeezing_db + 3.8).abs() < 0.2,
            "{}",
            r.minus.squeezing_db
        );
        assert!(
            (r.plus.squeezing_db + 3.8).abs() < 0.2,
            "{}",
            r.plus.squeezing_db
        );
        assert!(r.minus.phase.abs() < 0.05);
        assert!((r.plus.phase - PI / 2.0).abs() < 0.05);
        assert!(r.is_inseparable() && r.is_epr_entangled());
    }

    #[test]
    fn empty_bins_are_gaps() {
        let mut s = synthetic_samples(2_000, 5, |_| 1.0, |_| 1.0);
        let range = (-PI / 4.0, 3.0 * PI / 4.0);
        s.retain(|q| !(0.0..0.2).contains(&q.theta));
        let r = bin_and_report(&s, 1.0, 20, range).unwrap();
        assert!(r.bins.len() < 20);
        assert!(bin_and_report(&s[..50], 1.0, 20, range).is_err());
    }

    #[test]
    fn wrap_is_centered() {
        assert!((wrap(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap(-3.0 * PI / 2.0) - PI / 2.0).abs() < 1e-12);
        assert!(wrap(0.1) - 0.1 < 1e-15);
    }
}
