use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use super::chain::add_white;
use super::{DetectionChainConfig, PulseTrainConfig, SpectralProfile, SweepConfig};
use crate::gaussian::{apply_loss, CovarianceState, JointQuadrature, TwinBeamModel};
use crate::noise::{self, ids, FirFilter, NoiseStream};
use crate::trace::{TraceKind, TraceMeta, TraceRecord};
use crate::Result;

/// Probe and conjugate homodyne records taken with one LO configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct VacuumRecording {
    pub probe: TraceRecord,
    pub conjugate: TraceRecord,
}

/// The X⁻ and X⁺ recordings of one run; they share the LO phase sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct VacuumTraces {
    pub minus: VacuumRecording,
    pub plus: VacuumRecording,
}

pub fn synth_vacuum(
    model: &TwinBeamModel,
    pulses: &PulseTrainConfig,
    sweep: &SweepConfig,
    chain: &DetectionChainConfig,
    profile: &SpectralProfile,
    seed: u64,
) -> Result<VacuumTraces> {
    Ok(VacuumTraces {
        minus: synth_vacuum_recording(
            model,
            pulses,
            sweep,
            chain,
            profile,
            JointQuadrature::Minus,
            seed,
        )?,
        plus: synth_vacuum_recording(
            model,
            pulses,
            sweep,
            chain,
            profile,
            JointQuadrature::Plus,
            seed,
        )?,
    })
}

/// Angle of the conjugate LO in the state's own quadrature frame.
fn conjugate_angle(state: &CovarianceState, quadrature: JointQuadrature) -> f64 {
    match quadrature {
        JointQuadrature::Minus => 0.0,
        JointQuadrature::Plus => state.plus_reference,
    }
}

/// Lower-triangular factor of the (probe, conjugate) homodyne covariance
/// in trace units (vacuum variance 1).
fn pair_factor(state: &CovarianceState, theta: f64, beta: f64) -> [f64; 3] {
    let a = [libm::cos(theta), libm::sin(theta), 0.0, 0.0];
    let c = [0.0, 0.0, libm::cos(beta), libm::sin(beta)];
    let form = |u: &[f64; 4], v: &[f64; 4]| -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += u[i] * state.cov[i][j] * v[j];
            }
        }
        2.0 * s
    };
    let (pp, pc, cc) = (form(&a, &a), form(&a, &c), form(&c, &c));
    let l11 = libm::sqrt(pp);
    let l21 = if l11 > 0.0 { pc / l11 } else { 0.0 };
    let l22 = libm::sqrt((cc - l21 * l21).max(0.0));
    [l11, l21, l22]
}

/// Four quadrature streams (x_p, p_p, x_c, p_c) built from independently
/// coloured squeezed and anti-squeezed sum/difference modes.
struct ShapedModes {
    modes: [NoiseStream; 4],
    thermal: Option<[NoiseStream; 4]>,
}

impl ShapedModes {
    fn new(
        model: &TwinBeamModel,
        profile: &SpectralProfile,
        rate: f64,
        seed: u64,
        base: u64,
    ) -> Result<Self> {
        let r = model.r;
        let anti = FirFilter::design(|f| libm::exp(r * profile.squeezing_fraction(f)), rate)?;
        let squeezed = FirFilter::design(|f| libm::exp(-r * profile.squeezing_fraction(f)), rate)?;
        let filters = [&anti, &squeezed, &squeezed, &anti];
        let mut modes = Vec::with_capacity(4);
        for (i, fir) in filters.iter().enumerate() {
            modes.push(NoiseStream::shaped(
                noise::stream(seed, base + ids::MODE_0 + i as u64),
                fir,
            )?);
        }
        let thermal = if model.n_excess > 0.0 || profile.low_freq_excess > 0.0 {
            let fir = FirFilter::design(
                |f| libm::sqrt(2.0 * profile.excess_at(model.n_excess, f)),
                rate,
            )?;
            let mut t = Vec::with_capacity(4);
            for i in 0..4u64 {
                t.push(NoiseStream::shaped(
                    noise::stream(seed, base + ids::THERMAL_0 + i),
                    &fir,
                )?);
            }
            Some(t.try_into().ok().expect("four streams"))
        } else {
            None
        };
        Ok(Self {
            modes: modes.try_into().ok().expect("four streams"),
            thermal,
        })
    }

    fn next(&mut self) -> [f64; 4] {
        let [a, b, c, d] = &mut self.modes;
        let (u_sum, u_diff, v_sum, v_diff) = (a.next(), b.next(), c.next(), d.next());
        let mut q = [
            FRAC_1_SQRT_2 * (u_sum + u_diff),
            FRAC_1_SQRT_2 * (v_sum + v_diff),
            FRAC_1_SQRT_2 * (u_sum - u_diff),
            FRAC_1_SQRT_2 * (v_sum - v_diff),
        ];
        if let Some(t) = &mut self.thermal {
            for (v, s) in q.iter_mut().zip(t.iter_mut()) {
                *v += s.next();
            }
        }
        q
    }
}

/// One homodyne recording: the probe LO follows the sweep (plus jitter), the
/// conjugate LO is fixed by `quadrature`. The probe is gated by the AOM,
/// delayed by `delay_pc` rounded to whole samples, and both channels end
/// with a shuttered vacuum tail.
pub fn synth_vacuum_recording(
    model: &TwinBeamModel,
    pulses: &PulseTrainConfig,
    sweep: &SweepConfig,
    chain: &DetectionChainConfig,
    profile: &SpectralProfile,
    quadrature: JointQuadrature,
    seed: u64,
) -> Result<VacuumRecording> {
    model.validate()?;
    pulses.validate()?;
    sweep.validate()?;
    chain.validate()?;
    profile.validate()?;

    let rate = pulses.sample_rate();
    let (n, period, lead) = (
        pulses.samples_per_pulse,
        pulses.period_samples(),
        pulses.lead_samples(),
    );
    let pulsed = pulses.pulsed_samples();
    let total = pulsed + libm::round(sweep.shot_noise_tail * rate) as usize;
    let base = match quadrature {
        JointQuadrature::Minus => ids::MINUS_RECORDING,
        JointQuadrature::Plus => ids::PLUS_RECORDING,
    };
    let phases = sweep.realized_phases(pulses.n_pulses, seed);
    let gates = [
        chain.aom_transmission,
        chain.aom_extinction * chain.aom_extinction,
    ];

    let mut probe = vec![0.0; total];
    let mut conj = vec![0.0; total];
    let mut za = noise::stream(seed, base + ids::PAIR_A);
    let mut zb = noise::stream(seed, base + ids::PAIR_B);

    let source = crate::gaussian::build_tmsv(model)?;
    if profile.is_white() {
        let detected = apply_loss(&source, model.eta_p, model.eta_c)?;
        let beta = conjugate_angle(&detected, quadrature);
        let gated = [
            apply_loss(&detected, gates[0], 1.0)?,
            apply_loss(&detected, gates[1], 1.0)?,
        ];
        for (k, &theta) in phases.iter().enumerate() {
            let on = pair_factor(&gated[0], theta, beta);
            let off = pair_factor(&gated[1], theta, beta);
            let start = k * period;
            for i in 0..period {
                let l = if (lead..lead + n).contains(&i) {
                    &on
                } else {
                    &off
                };
                let (a, b) = (noise::normal(&mut za), noise::normal(&mut zb));
                probe[start + i] = l[0] * a;
                conj[start + i] = l[1] * a + l[2] * b;
            }
        }
    } else {
        // The modes carry the δ⁻ = 0 state; rotating the conjugate LO by
        // −δ⁻ realizes an arbitrary squeezing phase.
        let beta = conjugate_angle(&source, quadrature) - model.delta_minus;
        let (cb, sb) = (libm::cos(beta), libm::sin(beta));
        let mut modes = ShapedModes::new(model, profile, rate, seed, base)?;
        let mut admix_p = noise::stream(seed, base + ids::ADMIX_PROBE);
        let mut admix_c = noise::stream(seed, base + ids::ADMIX_CONJ);
        let tc = model.eta_c;
        for (k, &theta) in phases.iter().enumerate() {
            let (ct, st) = (libm::cos(theta), libm::sin(theta));
            let start = k * period;
            for i in 0..period {
                let g = if (lead..lead + n).contains(&i) {
                    gates[0]
                } else {
                    gates[1]
                };
                let tp = model.eta_p * g;
                let q = modes.next();
                let qp = q[0] * ct + q[1] * st;
                let qc = q[2] * cb + q[3] * sb;
                probe[start + i] =
                    libm::sqrt(tp) * qp + libm::sqrt(1.0 - tp) * noise::normal(&mut admix_p);
                conj[start + i] =
                    libm::sqrt(tc) * qc + libm::sqrt(1.0 - tc) * noise::normal(&mut admix_c);
            }
        }
    }
    for i in pulsed..total {
        probe[i] = noise::normal(&mut za);
        conj[i] = noise::normal(&mut zb);
    }

    let shift = (libm::round(chain.delay_pc * rate) as usize).min(total);
    if shift > 0 {
        probe.copy_within(..total - shift, shift);
        let mut fill = noise::stream(seed, base + ids::ADMIX_PROBE);
        noise::fill_normal(&mut fill, &mut probe[..shift]);
    }
    let e = chain.electronic_noise_rms;
    add_white(
        &mut probe,
        e,
        noise::stream(seed, base + ids::ELECTRONIC_PROBE),
    );
    add_white(
        &mut conj,
        e,
        noise::stream(seed, base + ids::ELECTRONIC_CONJ),
    );

    let meta = TraceMeta {
        seed,
        joint: Some(quadrature),
        ..TraceMeta::default()
    };
    let record = |kind, samples| TraceRecord {
        sample_rate: rate,
        kind,
        samples,
        markers: pulses.markers(),
        samples_per_pulse: n,
        period_samples: period,
        tail_start: Some(pulsed),
        meta,
    };
    Ok(VacuumRecording {
        probe: record(TraceKind::ProbeHomodyne, probe),
        conjugate: record(TraceKind::ConjugateHomodyne, conj),
    })
}
