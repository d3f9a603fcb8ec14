//! Simulation and analysis core for pulsed twin-beam squeezed light.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithm of
//! the toolkit:
//!
//! * [`gaussian`]: the two-mode Gaussian state model, joint-quadrature
//!   variances, the bright-beam noise reduction factor and the
//!   inseparability / EPR criteria.
//! * [`synth`]: detector time-trace synthesis for the bright
//!   (intensity-difference) and vacuum (homodyne) experiments, including
//!   the detection-chain artifacts.
//! * [`bright`]: segmented power-spectrum analysis of pulsed
//!   intensity-difference traces.
//! * [`vacuum`]: windowed integration, phase binning and the entanglement
//!   figures for pulsed vacuum-squeezed beams.
//!
//! File formats and the command-line front end live in the `twinbeam` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bright;
mod error;
pub mod filter;
pub mod fourier;
pub mod gaussian;
pub mod noise;
pub mod stats;
pub mod synth;
pub mod trace;
pub mod vacuum;

pub use error::{Error, Result};
pub use gaussian::{
    apply_loss, bright_nrf, build_tmsv, criteria, joint_variance, CovarianceState, CriteriaResult,
    JointQuadrature, TwinBeamModel,
};
pub use trace::{TraceKind, TraceMeta, TraceRecord};
