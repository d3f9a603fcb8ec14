use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use twinbeam_core::bright::{BrightOptions, DEFAULT_BAND};
use twinbeam_core::synth::{DetectionChainConfig, PulseTrainConfig, SpectralProfile, SweepConfig};
use twinbeam_core::vacuum::{VacuumOptions, WindowConfig};
use twinbeam_core::TwinBeamModel;

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bright,
    Vacuum,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Bright => "bright",
            Mode::Vacuum => "vacuum",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pulse train as written in a config file. `n_pulses` left out means the
/// mode default: 10³ pulses for bright runs, 10⁴ for vacuum runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSection {
    pub pulse_width: f64,
    pub period: f64,
    pub samples_per_pulse: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_pulses: Option<usize>,
}

impl Default for PulseSection {
    fn default() -> Self {
        let p = PulseTrainConfig::default();
        Self {
            pulse_width: p.pulse_width,
            period: p.period,
            samples_per_pulse: p.samples_per_pulse,
            n_pulses: None,
        }
    }
}

impl PulseSection {
    pub fn resolve(&self, mode: Mode) -> PulseTrainConfig {
        let base = match mode {
            Mode::Bright => PulseTrainConfig::default(),
            Mode::Vacuum => PulseTrainConfig::vacuum_default(),
        };
        PulseTrainConfig {
            pulse_width: self.pulse_width,
            period: self.period,
            samples_per_pulse: self.samples_per_pulse,
            n_pulses: self.n_pulses.unwrap_or(base.n_pulses),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub correct_electronic: bool,
    pub delay_comp: i64,
    pub band: (f64, f64),
    pub taper: bool,
    pub bins: usize,
    /// Half-width of the Δt search, seconds.
    pub search_range: f64,
    pub search_step: usize,
    /// Spacing of shot-noise windows in the vacuum tail, samples (0 = pulse length).
    pub snl_stride: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let v = VacuumOptions::default();
        Self {
            correct_electronic: false,
            delay_comp: 0,
            band: DEFAULT_BAND,
            taper: false,
            bins: v.n_bins,
            search_range: v.search_range,
            search_step: v.search_step,
            snl_stride: v.snl_stride,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub model: TwinBeamModel,
    pub pulses: PulseSection,
    pub chain: DetectionChainConfig,
    pub sweep: SweepConfig,
    pub profile: SpectralProfile,
    pub window: WindowConfig,
    pub analysis: AnalysisSection,
}

/// The sections that determine synthesized samples, in digest order.
#[derive(Serialize)]
struct Generating<'a> {
    mode: Mode,
    model: &'a TwinBeamModel,
    pulses: PulseTrainConfig,
    chain: &'a DetectionChainConfig,
    sweep: &'a SweepConfig,
    profile: &'a SpectralProfile,
}

impl RunConfig {
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        text.parse()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> AppResult<()> {
        self.model.validate()?;
        for mode in [Mode::Bright, Mode::Vacuum] {
            self.pulses.resolve(mode).validate()?;
        }
        self.chain.validate()?;
        self.sweep.validate()?;
        self.profile.validate()?;
        self.window.validate()?;
        let a = &self.analysis;
        if a.bins < 3 {
            return Err(AppError::Config("analysis.bins must be at least 3".into()));
        }
        if a.search_step == 0 {
            return Err(AppError::Config(
                "analysis.search_step must be positive".into(),
            ));
        }
        if !(a.search_range.is_finite() && a.search_range >= 0.0) {
            return Err(AppError::Config(
                "analysis.search_range must be finite and non-negative".into(),
            ));
        }
        if !(a.band.0.is_finite() && a.band.1.is_finite() && a.band.0 < a.band.1) {
            return Err(AppError::Config(
                "analysis.band must be an increasing pair".into(),
            ));
        }
        let rate = self.pulses.resolve(Mode::Bright).sample_rate();
        self.chain.check_nyquist(rate)?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the generating sections.
    pub fn digest(&self, mode: Mode) -> [u8; 32] {
        let g = Generating {
            mode,
            model: &self.model,
            pulses: self.pulses.resolve(mode),
            chain: &self.chain,
            sweep: &self.sweep,
            profile: &self.profile,
        };
        let json = serde_json::to_vec(&g).expect("config serializes");
        Sha256::digest(&json).into()
    }

    pub fn bright_options(&self) -> BrightOptions {
        BrightOptions {
            correct_electronic: self.analysis.correct_electronic,
            delay_comp_samples: self.analysis.delay_comp,
            band: self.analysis.band,
            taper: self.analysis.taper,
            hpf_cutoff: self.chain.hpf_cutoff,
        }
    }

    pub fn vacuum_options(&self) -> VacuumOptions {
        VacuumOptions {
            window: self.window,
            n_bins: self.analysis.bins,
            phase_range: (self.sweep.phase_start, self.sweep.phase_end),
            search_range: self.analysis.search_range,
            search_step: self.analysis.search_step,
            snl_stride: self.analysis.snl_stride,
        }
    }
}

impl FromStr for RunConfig {
    type Err = AppError;

    fn from_str(s: &str) -> AppResult<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| AppError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn parse_hex(s: &str) -> Option<[u8; 32]> {
    if s.len() != 64 {
        return None;
    }
    let mut out = [0u8; 32];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(s.get(2 * i..2 * i + 2)?, 16).ok()?;
    }
    Some(out)
}
