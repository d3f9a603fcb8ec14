use crate::trace::TraceKind;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("sample rate {rate} Hz is below twice the high-pass cutoff {cutoff} Hz")]
    Nyquist { rate: f64, cutoff: f64 },
    #[error("trace has no pulse markers")]
    MissingMarkers,
    #[error("pulse markers are not strictly increasing with the configured period")]
    InvalidMarkers,
    #[error("window starting at sample {start} needs {len} samples but the trace has {available}")]
    WindowOutOfBounds {
        start: usize,
        len: usize,
        available: usize,
    },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("frequency grids of the spectra differ")]
    GridMismatch,
    #[error("electronic noise is not below the shot noise at bin {bin}")]
    ElectronicExceedsShot { bin: usize },
    #[error("need at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("trace kind {found:?} cannot be used as {expected}")]
    KindMismatch {
        expected: &'static str,
        found: TraceKind,
    },
    #[error("traces disagree on {0}")]
    Incompatible(&'static str),
    #[error("phase-curve fit is singular")]
    SingularFit,
}
