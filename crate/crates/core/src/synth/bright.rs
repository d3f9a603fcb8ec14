use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::chain::{add_white, delay_samples, high_pass, inject_ringing};
use super::{DetectionChainConfig, PulseTrainConfig, SpectralProfile};
use crate::fourier::{bin_frequency, fft_in_place, ifft_in_place, Complex32};
use crate::gaussian::TwinBeamModel;
use crate::noise::{self, ids};
use crate::trace::{TraceKind, TraceMeta, TraceRecord};
use crate::{Error, Result};

/// Records produced by one bright-beam run. `probe` and `conjugate` are the
/// individual photocurrents before subtraction (no high-pass, no ringing).
#[derive(Debug, Clone, PartialEq)]
pub struct BrightTraces {
    pub diff: TraceRecord,
    pub shot: TraceRecord,
    pub electronic: TraceRecord,
    pub probe: TraceRecord,
    pub conjugate: TraceRecord,
}

/// Margin on each side of a pulse inside the per-pulse synthesis block.
const GUARD: usize = 32;

struct Coefficients {
    probe: [f64; 3],
    conj: [f64; 3],
}

/// Linearized photocurrent fluctuations of the seeded amplifier with gain
/// `g`, in units where the seed amplitude is one: the probe mixes the seed
/// (`Xa`), the conjugate input vacuum (`Xb`) and its own loss vacuum.
fn coefficients(g: f64, eta_p: f64, eta_c: f64) -> Coefficients {
    let cross = libm::sqrt(g * (g - 1.0));
    Coefficients {
        probe: [
            eta_p * g,
            eta_p * cross,
            libm::sqrt(eta_p * (1.0 - eta_p) * g),
        ],
        conj: [
            eta_c * (g - 1.0),
            eta_c * cross,
            libm::sqrt(eta_c * (1.0 - eta_c) * (g - 1.0)),
        ],
    }
}

fn to_complex(x: &[f64], out: &mut [Complex32]) {
    for (c, &v) in out.iter_mut().zip(x) {
        *c = Complex32::new(v as f32, 0.0);
    }
}

pub fn synth_bright(
    model: &TwinBeamModel,
    pulses: &PulseTrainConfig,
    chain: &DetectionChainConfig,
    profile: &SpectralProfile,
    seed: u64,
) -> Result<BrightTraces> {
    model.validate()?;
    pulses.validate()?;
    chain.validate()?;
    profile.validate()?;
    let rate = pulses.sample_rate();
    chain.check_nyquist(rate)?;

    let n = pulses.samples_per_pulse;
    let block = (n + 2 * GUARD).next_power_of_two();
    if block > crate::fourier::MAX_FFT_LEN {
        return Err(Error::InvalidParameter {
            name: "samples_per_pulse",
            reason: "too many samples per pulse for the synthesis block",
        });
    }
    let g0 = (block - n) / 2;
    let total = pulses.pulsed_samples();
    let markers = pulses.markers();

    let (g, eta_p, eta_c) = (model.gain, model.eta_p, model.eta_c);
    let flux = eta_p * g + eta_c * (g - 1.0);
    if flux <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "eta_p",
            reason: "no detected photon flux",
        });
    }
    let norm = 1.0 / libm::sqrt(flux);
    let delays = delay_samples(chain, markers.len(), rate, seed);

    let mut streams = [
        noise::stream(seed, ids::BRIGHT_XA),
        noise::stream(seed, ids::BRIGHT_XB),
        noise::stream(seed, ids::BRIGHT_VP),
        noise::stream(seed, ids::BRIGHT_VC),
        noise::stream(seed, ids::BRIGHT_EXCESS),
    ];
    let mut inputs = vec![vec![0.0; block]; 5];
    let mut spectra = vec![vec![Complex32::new(0.0, 0.0); block]; 5];
    let mut probe_block = vec![Complex32::new(0.0, 0.0); block];
    let mut conj_block = vec![Complex32::new(0.0, 0.0); block];
    let white = profile.is_white();
    let fixed = coefficients(g, eta_p, eta_c);
    let has_excess = !white && profile.low_freq_excess > 0.0;

    let mut probe = vec![0.0; total];
    let mut conj = vec![0.0; total];

    for (&m, &d) in markers.iter().zip(&delays) {
        for (buf, rng) in inputs.iter_mut().zip(streams.iter_mut()) {
            noise::fill_normal(rng, buf);
        }
        if white {
            for i in 0..block {
                let (xa, xb) = (inputs[0][i], inputs[1][i]);
                let p = fixed.probe[0] * xa + fixed.probe[1] * xb + fixed.probe[2] * inputs[2][i];
                let c = fixed.conj[0] * xa + fixed.conj[1] * xb + fixed.conj[2] * inputs[3][i];
                probe_block[i] = Complex32::new(p as f32, 0.0);
                conj_block[i] = Complex32::new(c as f32, 0.0);
            }
            if d != 0.0 {
                fft_in_place(&mut probe_block)?;
            }
        } else {
            for (x, s) in inputs.iter().zip(spectra.iter_mut()) {
                to_complex(x, s);
                fft_in_place(s)?;
            }
            for j in 0..block {
                let f = bin_frequency(j, block, rate).abs();
                let c = coefficients(profile.gain_at(g, f), eta_p, eta_c);
                let mut p = spectra[0][j] * c.probe[0] as f32
                    + spectra[1][j] * c.probe[1] as f32
                    + spectra[2][j] * c.probe[2] as f32;
                if has_excess {
                    let e = libm::sqrt(profile.excess_at(0.0, f) * flux);
                    p += spectra[4][j] * e as f32;
                }
                probe_block[j] = p;
                conj_block[j] = spectra[0][j] * c.conj[0] as f32
                    + spectra[1][j] * c.conj[1] as f32
                    + spectra[3][j] * c.conj[2] as f32;
            }
            ifft_in_place(&mut conj_block)?;
        }
        if !white || d != 0.0 {
            for (j, c) in probe_block.iter_mut().enumerate() {
                let w = 2.0 * PI * bin_frequency(j, block, 1.0) * d;
                let (s, co) = libm::sincos(w);
                *c *= Complex32::new(co as f32, -s as f32);
            }
            ifft_in_place(&mut probe_block)?;
        }

        let shift = libm::round(d) as isize;
        if shift.unsigned_abs() > g0 {
            return Err(Error::InvalidParameter {
                name: "delay_pc",
                reason: "probe lag exceeds the synthesis guard band",
            });
        }
        for i in 0..n {
            conj[m + i] = conj_block[g0 + i].re as f64 * norm;
        }
        let start = m as isize + shift;
        for i in 0..n {
            let t = start + i as isize;
            if t >= 0 && (t as usize) < total {
                let src = (g0 as isize + shift + i as isize) as usize;
                probe[t as usize] = probe_block[src].re as f64 * norm;
            }
        }
    }

    let meta = TraceMeta {
        seed,
        ..TraceMeta::default()
    };
    let record = |kind, samples| TraceRecord {
        sample_rate: rate,
        kind,
        samples,
        markers: markers.clone(),
        samples_per_pulse: n,
        period_samples: pulses.period_samples(),
        tail_start: None,
        meta,
    };

    let mut diff: Vec<f64> = probe.iter().zip(&conj).map(|(p, c)| p - c).collect();
    inject_ringing(
        &mut diff,
        &markers,
        n,
        rate,
        &chain.ringing,
        &delays,
        -eta_c * (g - 1.0) / flux,
        eta_p * g / flux,
    );
    high_pass(&mut diff, chain, rate)?;
    let e = chain.electronic_noise_rms;
    add_white(&mut diff, e, noise::stream(seed, ids::ELECTRONIC_DIFF));

    let mut shot = vec![0.0; total];
    let mut rng = noise::stream(seed, ids::BRIGHT_SHOT);
    for &m in &markers {
        noise::fill_normal(&mut rng, &mut shot[m..m + n]);
    }
    high_pass(&mut shot, chain, rate)?;
    add_white(&mut shot, e, noise::stream(seed, ids::ELECTRONIC_SHOT));

    let mut elec = vec![0.0; total];
    add_white(&mut elec, e, noise::stream(seed, ids::ELECTRONIC_RECORD));

    let half = e / core::f64::consts::SQRT_2;
    add_white(
        &mut probe,
        half,
        noise::stream(seed, ids::ELECTRONIC_BRIGHT_PROBE),
    );
    add_white(
        &mut conj,
        half,
        noise::stream(seed, ids::ELECTRONIC_BRIGHT_CONJ),
    );

    Ok(BrightTraces {
        diff: record(TraceKind::BrightDiff, diff),
        shot: record(TraceKind::BrightShot, shot),
        electronic: record(TraceKind::Electronic, elec),
        probe: record(TraceKind::BrightProbe, probe),
        conjugate: record(TraceKind::BrightConjugate, conj),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::bright_nrf;
    use crate::stats;

    fn in_pulse(t: &TraceRecord) -> Vec<f64> {
        t.markers
            .iter()
            .flat_map(|&m| t.samples[m..m + t.samples_per_pulse].iter().copied())
            .collect()
    }

    #[test]
    fn duration_and_markers() {
        let out = synth_bright(
            &TwinBeamModel::default(),
            &PulseTrainConfig::default(),
            &DetectionChainConfig::default(),
            &SpectralProfile::default(),
            1,
        )
        .unwrap();
        assert!((out.diff.duration() - 10e-3).abs() < 1e-12);
        assert_eq!(out.diff.markers.len(), 1000);
        out.diff.validate().unwrap();
    }

    #[test]
    fn unity_gain_is_shot_noise_limited() {
        let model = TwinBeamModel {
            gain: 1.0,
            ..TwinBeamModel::default()
        };
        let out = synth_bright(
            &model,
            &PulseTrainConfig::default(),
            &DetectionChainConfig::ideal(),
            &SpectralProfile::default(),
            2,
        )
        .unwrap();
        let (d, s) = (
            stats::variance(&in_pulse(&out.diff)),
            stats::variance(&in_pulse(&out.shot)),
        );
        // 2·10⁵ samples each: relative sigma of a variance is ~0.3%.
        assert!((d / s - 1.0).abs() < 0.02, "{d} vs {s}");
    }

    #[test]
    fn ideal_chain_reproduces_the_noise_reduction_factor() {
        let model = TwinBeamModel::default();
        let out = synth_bright(
            &model,
            &PulseTrainConfig::default(),
            &DetectionChainConfig::ideal(),
            &SpectralProfile::default(),
            3,
        )
        .unwrap();
        let v = stats::variance(&in_pulse(&out.diff));
        let want = bright_nrf(model.gain, 1.0).unwrap();
        assert!((v / want - 1.0).abs() < 0.02, "{v} vs {want}");
        // Off-pulse the ideal chain is silent.
        assert_eq!(out.diff.samples[0], 0.0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let run = |seed| {
            synth_bright(
                &TwinBeamModel::default(),
                &PulseTrainConfig {
                    n_pulses: 20,
                    ..Default::default()
                },
                &DetectionChainConfig::default(),
                &SpectralProfile::shaped(),
                seed,
            )
            .unwrap()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9).diff.samples, run(10).diff.samples);
    }
}
