//! Discrete Fourier transforms.
//!
//! Segment spectra use [`DirectDft`], an `O(n²)` transform with a cached
//! twiddle table that accepts any length in full `f64` precision (pulse
//! windows are typically 200 samples). Noise synthesis works on
//! power-of-two blocks through `microfft`, which is table driven and
//! produces identical bits on every platform.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex;

use crate::{Error, Result};

pub type Complex32 = microfft::Complex32;

/// Largest block accepted by [`fft_in_place`].
pub const MAX_FFT_LEN: usize = 16384;

#[derive(Debug, Clone)]
pub struct DirectDft {
    n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl DirectDft {
    pub fn new(n: usize) -> Self {
        let (cos, sin) = (0..n)
            .map(|m| {
                let (s, c) = libm::sincos(2.0 * PI * m as f64 / n as f64);
                (c, s)
            })
            .unzip();
        Self { n, cos, sin }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of one-sided bins, `n/2 + 1`.
    pub fn bins(&self) -> usize {
        self.n / 2 + 1
    }

    /// Coefficient `X_k = Σ x_j e^{-2πi jk/n}`.
    pub fn coefficient(&self, x: &[f64], k: usize) -> Complex<f64> {
        debug_assert_eq!(x.len(), self.n);
        let (mut re, mut im) = (0.0, 0.0);
        let mut idx = 0;
        let step = k % self.n.max(1);
        for &v in x {
            re += v * self.cos[idx];
            im -= v * self.sin[idx];
            idx += step;
            if idx >= self.n {
                idx -= self.n;
            }
        }
        Complex::new(re, im)
    }

    /// `|X_k|²` for `k = 0..=n/2`, written into `out`.
    pub fn power_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if out.len() != self.bins() {
            return Err(Error::LengthMismatch {
                expected: self.bins(),
                got: out.len(),
            });
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.coefficient(x, k).norm_sqr();
        }
        Ok(())
    }
}

macro_rules! dispatch_pow2 {
    ($buf:expr, $module:ident, $( $n:literal => $f:ident ),* $(,)?) => {
        match $buf.len() {
            $( $n => {
                let arr: &mut [Complex32; $n] = $buf.try_into().expect("length checked");
                let _ = microfft::$module::$f(arr);
                Ok(())
            } )*
            _ => Err(Error::InvalidParameter {
                name: "fft length",
                reason: "must be a power of two between 2 and 16384",
            }),
        }
    };
}

/// Forward complex FFT of a power-of-two block.
pub fn fft_in_place(buf: &mut [Complex32]) -> Result<()> {
    dispatch_pow2!(buf, complex,
        2 => cfft_2, 4 => cfft_4, 8 => cfft_8, 16 => cfft_16, 32 => cfft_32,
        64 => cfft_64, 128 => cfft_128, 256 => cfft_256, 512 => cfft_512,
        1024 => cfft_1024, 2048 => cfft_2048, 4096 => cfft_4096,
        8192 => cfft_8192, 16384 => cfft_16384,
    )
}

/// Inverse complex FFT (normalized by `1/n`) of a power-of-two block.
pub fn ifft_in_place(buf: &mut [Complex32]) -> Result<()> {
    dispatch_pow2!(buf, inverse,
        2 => ifft_2, 4 => ifft_4, 8 => ifft_8, 16 => ifft_16, 32 => ifft_32,
        64 => ifft_64, 128 => ifft_128, 256 => ifft_256, 512 => ifft_512,
        1024 => ifft_1024, 2048 => ifft_2048, 4096 => ifft_4096,
        8192 => ifft_8192, 16384 => ifft_16384,
    )
}

/// Signed frequency of FFT bin `k` for a block of length `n` at `rate`.
pub fn bin_frequency(k: usize, n: usize, rate: f64) -> f64 {
    if k <= n / 2 {
        k as f64 * rate / n as f64
    } else {
        (k as f64 - n as f64) * rate / n as f64
    }
}
