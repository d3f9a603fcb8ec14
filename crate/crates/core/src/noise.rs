//! Seeded Gaussian noise sources.
//!
//! Every noise channel draws from its own ChaCha8 stream, selected with
//! `set_stream` from the run seed and a fixed channel id, so channels can be
//! generated in any order (or in parallel) without changing the output.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fourier::{fft_in_place, ifft_in_place, Complex32};
use crate::{Error, Result};

/// Name of the generator written into trace headers.
pub const RNG_ALGORITHM: &str = "chacha8-v1";

/// Stream ids. Values are part of the reproducibility contract.
pub mod ids {
    pub const PHASE_JITTER: u64 = 1;
    pub const DELAY_JITTER: u64 = 2;
    pub const CHAIN_ELECTRONIC: u64 = 3;

    pub const MINUS_RECORDING: u64 = 16;
    pub const PLUS_RECORDING: u64 = 32;
    // Offsets within a vacuum recording block.
    pub const PAIR_A: u64 = 0;
    pub const PAIR_B: u64 = 1;
    pub const ELECTRONIC_PROBE: u64 = 2;
    pub const ELECTRONIC_CONJ: u64 = 3;
    pub const ADMIX_PROBE: u64 = 4;
    pub const ADMIX_CONJ: u64 = 5;
    pub const MODE_0: u64 = 6;
    pub const THERMAL_0: u64 = 10;

    pub const BRIGHT_XA: u64 = 48;
    pub const BRIGHT_XB: u64 = 49;
    pub const BRIGHT_VP: u64 = 50;
    pub const BRIGHT_VC: u64 = 51;
    pub const BRIGHT_EXCESS: u64 = 52;
    pub const BRIGHT_SHOT: u64 = 53;
    pub const ELECTRONIC_DIFF: u64 = 54;
    pub const ELECTRONIC_SHOT: u64 = 55;
    pub const ELECTRONIC_RECORD: u64 = 56;
    pub const ELECTRONIC_BRIGHT_PROBE: u64 = 57;
    pub const ELECTRONIC_BRIGHT_CONJ: u64 = 58;
}

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[inline]
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn fill_normal(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for v in out {
        *v = rng.sample(StandardNormal);
    }
}

/// Length of the FIR used for spectral shaping.
pub const FIR_TAPS: usize = 4096;
const BLOCK: usize = 2 * FIR_TAPS;
const HOP: usize = BLOCK - FIR_TAPS + 1;

/// Linear-phase FIR designed by frequency sampling: the amplitude response
/// equals `response(f)` exactly on the grid `k·rate/FIR_TAPS`, so the
/// filtered white noise has power spectral density `response(f)²`.
#[derive(Debug, Clone)]
pub struct FirFilter {
    taps: Vec<f64>,
}

impl FirFilter {
    pub fn design(response: impl Fn(f64) -> f64, sample_rate: f64) -> Result<Self> {
        let n = FIR_TAPS;
        let amp: Vec<f64> = (0..=n / 2)
            .map(|k| response(k as f64 * sample_rate / n as f64))
            .collect();
        if amp.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidParameter {
                name: "spectral profile",
                reason: "response must be finite and non-negative",
            });
        }
        let cos: Vec<f64> = (0..n)
            .map(|m| libm::cos(2.0 * PI * m as f64 / n as f64))
            .collect();
        let taps = (0..n)
            .map(|j| {
                let shift = (j + n - n / 2) % n;
                let mut acc = amp[0];
                let mut idx = 0;
                for (k, &a) in amp.iter().enumerate().skip(1) {
                    idx = (idx + shift) % n;
                    let w = if k == n / 2 { 1.0 } else { 2.0 };
                    acc += w * a * cos[idx];
                }
                acc / n as f64
            })
            .collect();
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Autocorrelation `Σ_j h[j] h[j+lag]` of the impulse response.
    pub fn autocorrelation(&self, lag: usize) -> f64 {
        self.taps
            .iter()
            .zip(self.taps.iter().skip(lag))
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Unbounded stream of (optionally coloured) Gaussian noise.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    kind: StreamKind,
}

#[derive(Debug, Clone)]
enum StreamKind {
    White(f64),
    Shaped(Box<Shaped>),
}

#[derive(Debug, Clone)]
struct Shaped {
    spectrum: Vec<Complex32>,
    input: Vec<f64>,
    output: Vec<f64>,
    pos: usize,
    scratch: Vec<Complex32>,
}

impl NoiseStream {
    pub fn white(rng: ChaCha8Rng, scale: f64) -> Self {
        Self {
            rng,
            kind: StreamKind::White(scale),
        }
    }

    pub fn shaped(mut rng: ChaCha8Rng, fir: &FirFilter) -> Result<Self> {
        let mut spectrum = vec![Complex32::new(0.0, 0.0); BLOCK];
        for (s, &h) in spectrum.iter_mut().zip(fir.taps()) {
            s.re = h as f32;
        }
        fft_in_place(&mut spectrum)?;
        let mut input = vec![0.0; BLOCK];
        // Prime the history so the output is stationary from the first sample.
        fill_normal(&mut rng, &mut input[HOP..]);
        Ok(Self {
            rng,
            kind: StreamKind::Shaped(Box::new(Shaped {
                spectrum,
                input,
                output: vec![0.0; HOP],
                pos: HOP,
                scratch: vec![Complex32::new(0.0, 0.0); BLOCK],
            })),
        })
    }

    #[inline]
    pub fn next(&mut self) -> f64 {
        match &mut self.kind {
            StreamKind::White(scale) => *scale * normal(&mut self.rng),
            StreamKind::Shaped(s) => {
                if s.pos == HOP {
                    s.refill(&mut self.rng);
                }
                let v = s.output[s.pos];
                s.pos += 1;
                v
            }
        }
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next();
        }
    }
}

impl Shaped {
    fn refill(&mut self, rng: &mut ChaCha8Rng) {
        self.input.copy_within(HOP.., 0);
        fill_normal(rng, &mut self.input[FIR_TAPS - 1..]);
        for (c, &x) in self.scratch.iter_mut().zip(&self.input) {
            *c = Complex32::new(x as f32, 0.0);
        }
        fft_in_place(&mut self.scratch).expect("block is a power of two");
        for (c, h) in self.scratch.iter_mut().zip(&self.spectrum) {
            *c *= h;
        }
        ifft_in_place(&mut self.scratch).expect("block is a power of two");
        for (o, c) in self.output.iter_mut().zip(&self.scratch[FIR_TAPS - 1..]) {
            *o = c.re as f64;
        }
        self.pos = 0;
    }
}
