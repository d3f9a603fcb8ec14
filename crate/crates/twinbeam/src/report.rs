use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twinbeam_core::bright::BrightReport;
use twinbeam_core::vacuum::{QuadratureSample, QuadratureSummary, VacuumReport};

use crate::config::{Mode, RunConfig};
use crate::error::{AppError, AppResult};

pub const TOOL: &str = "twinbeam";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRef {
    pub path: PathBuf,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub rng: String,
    /// Hex SHA-256 carried by the input traces.
    pub config_digest: String,
    pub traces: Vec<TraceRef>,
    /// Effective configuration, command-line overrides applied.
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "data", rename_all = "lowercase")]
pub enum Outcome {
    Bright(BrightReport),
    Vacuum(VacuumReport),
}

impl Outcome {
    pub fn mode(&self) -> Mode {
        match self {
            Outcome::Bright(_) => Mode::Bright,
            Outcome::Vacuum(_) => Mode::Vacuum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub provenance: Provenance,
    pub result: Outcome,
}

impl ReportFile {
    pub fn write(&self, path: &Path) -> AppResult<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, text + "\n").map_err(|e| AppError::io(path, e))
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| AppError::Inputs(format!("{}: not a report file: {e}", path.display())))
    }
}

/// Inseparability and EPR verdicts: `I < 2` and `4·V⁻·V⁺ < 1`.
pub fn verdicts(inseparability: f64, epr: f64) -> (bool, bool) {
    (inseparability < 2.0, epr < 1.0)
}

fn quadrature_line(out: &mut String, name: &str, q: &QuadratureSummary) {
    let _ = writeln!(
        out,
        "  {name}: {:+.2} ± {:.2} dB at θ = {:.3} rad (lowest bin {:+.2} dB)",
        q.squeezing_db, q.uncertainty_db, q.phase, q.min_bin_db
    );
}

pub fn render_summary(report: &ReportFile) -> String {
    let mut out = String::new();
    let p = &report.provenance;
    let _ = writeln!(
        out,
        "{} {} report, seed {}, config {}",
        p.tool,
        p.version,
        p.seed,
        short(&p.config_digest)
    );
    match &report.result {
        Outcome::Bright(b) => {
            let _ = writeln!(
                out,
                "bright intensity-difference noise, {} spectra averaged",
                b.n_averaged
            );
            let _ = writeln!(
                out,
                "  electronic correction: {}, delay compensation: {} samples",
                if b.corrected { "on" } else { "off" },
                b.delay_comp_samples
            );
            match b.band_summary {
                Some(v) => {
                    let _ = writeln!(
                        out,
                        "  {:.2}-{:.2} MHz band: {:+.2} dB",
                        b.band.0 / 1e6,
                        b.band.1 / 1e6,
                        v
                    );
                    let _ = writeln!(
                        out,
                        "  {}",
                        if v < 0.0 {
                            "below shot noise"
                        } else {
                            "not below shot noise"
                        }
                    );
                }
                None => {
                    let _ = writeln!(out, "  band holds no valid bin");
                }
            }
            let flagged = b.flagged_bins();
            if !flagged.is_empty() {
                let _ = writeln!(
                    out,
                    "  {} bins flagged (non-positive corrected power)",
                    flagged.len()
                );
            }
        }
        Outcome::Vacuum(v) => {
            let _ = writeln!(
                out,
                "vacuum joint quadratures, {} pulses, Δt = {} samples ({:.1} ns)",
                v.n_pulses,
                v.delta_t_samples,
                v.delta_t * 1e9
            );
            quadrature_line(&mut out, "X-", &v.minus);
            quadrature_line(&mut out, "X+", &v.plus);
            let (ent, epr) = verdicts(v.inseparability, v.epr_product);
            let _ = writeln!(
                out,
                "  I = {:.3} ± {:.3}: {}",
                v.inseparability,
                v.inseparability_uncertainty,
                if ent { "entangled" } else { "not entangled" }
            );
            let _ = writeln!(
                out,
                "  EPR = {:.3} ± {:.3}: {}",
                v.epr_product,
                v.epr_uncertainty,
                if epr {
                    "EPR-entangled"
                } else {
                    "not EPR-entangled"
                }
            );
        }
    }
    out
}

fn short(digest: &str) -> &str {
    &digest[..digest.len().min(12)]
}

fn table_path(report: &Path, suffix: &str) -> PathBuf {
    let stem = report
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");
    report.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.6}"))
}

/// Writes the plot tables next to `report_path` and returns their paths.
/// Writes the CSV plot tables for `outcome` next to the report. `samples`
/// are the per-pulse vacuum quadratures for the scatter table (ignored for
/// bright reports; no scatter table when empty).
pub fn write_tables(
    report_path: &Path,
    outcome: &Outcome,
    samples: &[QuadratureSample],
) -> AppResult<Vec<PathBuf>> {
    let mut tables = Vec::new();
    let mut emit = |suffix: &str, text: String| -> AppResult<()> {
        let p = table_path(report_path, suffix);
        std::fs::write(&p, text).map_err(|e| AppError::io(&p, e))?;
        tables.push(p);
        Ok(())
    };
    match outcome {
        Outcome::Bright(b) => {
            let mut t = String::from("freq_hz,squeezing_db\n");
            for (f, v) in b.freqs.iter().zip(&b.squeezing_db) {
                let _ = writeln!(t, "{f:.1},{}", opt(*v));
            }
            emit("spectrum", t)?;
        }
        Outcome::Vacuum(v) => {
            let mut t = String::from("theta_rad,var_minus,var_plus\n");
            for b in &v.bins {
                let _ = writeln!(
                    t,
                    "{:.6},{},{}",
                    b.theta_mean,
                    opt(b.var_minus),
                    opt(b.var_plus)
                );
            }
            emit("variance", t)?;
            let mut t = String::from("theta_rad,fit_minus,fit_plus\n");
            if let (Some(first), Some(last)) = (v.bins.first(), v.bins.last()) {
                let n = 200;
                for k in 0..=n {
                    let th = first.theta_mean
                        + (last.theta_mean - first.theta_mean) * k as f64 / n as f64;
                    let f = |q: &QuadratureSummary| {
                        q.fit.offset + q.fit.cos * th.cos() + q.fit.sin * th.sin()
                    };
                    let _ = writeln!(t, "{th:.6},{:.6},{:.6}", f(&v.minus), f(&v.plus));
                }
            }
            emit("fit", t)?;
            if !samples.is_empty() {
                let norm = 1.0 / v.snl.sqrt();
                let mut t = String::from("theta_rad,x_minus,x_plus\n");
                for q in samples {
                    let _ = writeln!(
                        t,
                        "{:.6},{:.6},{:.6}",
                        q.theta,
                        q.x_minus * norm,
                        q.x_plus * norm
                    );
                }
                emit("scatter", t)?;
            }
        }
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_thresholds() {
        assert_eq!(verdicts(0.83, 0.69), (true, true));
        assert_eq!(verdicts(2.0, 1.0), (false, false));
        assert_eq!(verdicts(1.5, 1.2), (true, false));
    }

    #[test]
    fn table_names_follow_the_report() {
        assert_eq!(
            table_path(Path::new("/a/run.json"), "fit"),
            PathBuf::from("/a/run.fit.csv")
        );
    }
}
