//! First-order digital high-pass filter.

use core::f64::consts::PI;

use crate::{Error, Result};

/// First-order high-pass obtained from `H(s) = s / (s + ω_c)` by the
/// bilinear transform, with the cutoff prewarped so the discrete filter has
/// exactly `1/√2` gain at `cutoff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighPass {
    b0: f64,
    a1: f64,
}

impl HighPass {
    pub fn new(cutoff: f64, sample_rate: f64) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(Error::InvalidParameter {
                name: "hpf_cutoff",
                reason: "must be finite and positive",
            });
        }
        if !(sample_rate.is_finite() && sample_rate >= 2.0 * cutoff) {
            return Err(Error::Nyquist {
                rate: sample_rate,
                cutoff,
            });
        }
        let k = libm::tan(PI * cutoff / sample_rate);
        Ok(Self {
            b0: 1.0 / (1.0 + k),
            a1: (1.0 - k) / (1.0 + k),
        })
    }

    /// Filters `x` in place from a zero initial state.
    pub fn apply(&self, x: &mut [f64]) {
        let (mut x_prev, mut y_prev) = (0.0, 0.0);
        for v in x.iter_mut() {
            let y = self.b0 * (*v - x_prev) + self.a1 * y_prev;
            x_prev = *v;
            y_prev = y;
            *v = y;
        }
    }

    /// Magnitude of the frequency response at `f`.
    pub fn gain(&self, f: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * f / sample_rate;
        // H(z) = b0 (1 - z^-1) / (1 - a1 z^-1)
        let (s, c) = libm::sincos(w);
        let num = self.b0 * libm::hypot(1.0 - c, s);
        let den = libm::hypot(1.0 - self.a1 * c, self.a1 * s);
        num / den
    }
}
