use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;

use super::{DetectionChainConfig, RingingConfig};
use crate::filter::HighPass;
use crate::noise::{self, ids};
use crate::{Result, TraceRecord};

/// Probe lag behind the conjugate for each pulse, in (fractional) samples.
pub fn delay_samples(
    chain: &DetectionChainConfig,
    n_pulses: usize,
    rate: f64,
    seed: u64,
) -> Vec<f64> {
    let mut rng = noise::stream(seed, ids::DELAY_JITTER);
    (0..n_pulses)
        .map(|_| (chain.delay_pc + chain.delay_jitter_rms * noise::normal(&mut rng)) * rate)
        .collect()
}

fn ringing_kernel(ring: &RingingConfig, rate: f64, max_len: usize) -> Vec<f64> {
    let len = (libm::ceil(10.0 * ring.damping_time * rate) as usize).min(max_len);
    (0..len)
        .map(|j| {
            let t = j as f64 / rate;
            ring.amplitude
                * libm::exp(-t / ring.damping_time)
                * libm::sin(2.0 * PI * ring.frequency * t)
        })
        .collect()
}

/// Adds the damped ringing excited at both edges of every pulse. The edge
/// impulses are proportional to the arrival mismatch `delays[k]`, with
/// `rising`/`falling` the photocurrent fractions left unbalanced at each edge.
pub(crate) fn inject_ringing(
    samples: &mut [f64],
    markers: &[usize],
    spp: usize,
    rate: f64,
    ring: &RingingConfig,
    delays: &[f64],
    rising: f64,
    falling: f64,
) {
    if ring.amplitude == 0.0 {
        return;
    }
    let kernel = ringing_kernel(ring, rate, samples.len());
    for (&m, &d) in markers.iter().zip(delays) {
        for (edge, w) in [(m, rising * d), (m + spp, falling * d)] {
            if w == 0.0 || edge >= samples.len() {
                continue;
            }
            for (s, k) in samples[edge..].iter_mut().zip(&kernel) {
                *s += w * k;
            }
        }
    }
}

pub(crate) fn add_white(samples: &mut [f64], rms: f64, mut rng: ChaCha8Rng) {
    if rms == 0.0 {
        return;
    }
    for s in samples {
        *s += rms * noise::normal(&mut rng);
    }
}

pub(crate) fn high_pass(
    samples: &mut [f64],
    chain: &DetectionChainConfig,
    rate: f64,
) -> Result<()> {
    chain.check_nyquist(rate)?;
    if chain.hpf_cutoff > 0.0 {
        HighPass::new(chain.hpf_cutoff, rate)?.apply(samples);
    }
    Ok(())
}

/// Runs a trace through the detection chain: integer-sample delay, ringing
/// from a balanced pair of beams arriving `delay_pc` apart, high-pass filter
/// and additive electronic noise (seeded from `trace.meta.seed`).
pub fn apply_detection_chain(
    trace: &TraceRecord,
    chain: &DetectionChainConfig,
) -> Result<TraceRecord> {
    chain.validate()?;
    trace.validate()?;
    let rate = trace.sample_rate;
    chain.check_nyquist(rate)?;
    let mut out = trace.clone();
    let shift = libm::round(chain.delay_pc * rate) as usize;
    if shift > 0 {
        let n = out.samples.len();
        out.samples
            .copy_within(..n.saturating_sub(shift), shift.min(n));
        out.samples[..shift.min(n)].fill(0.0);
    }
    let delays = delay_samples(chain, trace.markers.len(), rate, trace.meta.seed);
    inject_ringing(
        &mut out.samples,
        &trace.markers,
        trace.samples_per_pulse,
        rate,
        &chain.ringing,
        &delays,
        -0.5,
        0.5,
    );
    high_pass(&mut out.samples, chain, rate)?;
    add_white(
        &mut out.samples,
        chain.electronic_noise_rms,
        noise::stream(trace.meta.seed, ids::CHAIN_ELECTRONIC),
    );
    Ok(out)
}
