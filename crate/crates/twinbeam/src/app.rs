use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use twinbeam_core::bright::{analyze_bright, BrightSignal};
use twinbeam_core::synth::{synth_bright, synth_vacuum};
use twinbeam_core::vacuum::{analyze_vacuum_with_samples, QuadratureSample};
use twinbeam_core::{JointQuadrature, TraceKind, TraceRecord};

use crate::config::{hex, Mode, RunConfig};
use crate::error::{AppError, AppResult};
use crate::report::{write_tables, Outcome, Provenance, ReportFile, TraceRef, TOOL};
use crate::traceio::{file_name, read_trace, write_trace, Format, TraceFile};

/// Name of the resolved config written beside simulated traces.
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub mode: Mode,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub format: Format,
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeArgs {
    pub traces: Vec<PathBuf>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub correct_electronic: bool,
    pub delay_comp: Option<i64>,
    pub window_center_hz: Option<f64>,
    pub bins: Option<usize>,
}

pub fn load_config(path: Option<&Path>) -> AppResult<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

/// Synthesizes the traces of one run and writes them, plus the resolved
/// config, into `args.out`. Returns the trace paths.
pub fn simulate(args: &SimulateArgs) -> AppResult<Vec<PathBuf>> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let pulses = cfg.pulses.resolve(args.mode);
    cfg.chain.check_nyquist(pulses.sample_rate())?;
    let digest = cfg.digest(args.mode);
    let mut records = match args.mode {
        Mode::Bright => {
            let t = synth_bright(&cfg.model, &pulses, &cfg.chain, &cfg.profile, cfg.seed)?;
            vec![t.diff, t.shot, t.electronic, t.probe, t.conjugate]
        }
        Mode::Vacuum => {
            let t = synth_vacuum(
                &cfg.model,
                &pulses,
                &cfg.sweep,
                &cfg.chain,
                &cfg.profile,
                cfg.seed,
            )?;
            vec![
                t.minus.probe,
                t.minus.conjugate,
                t.plus.probe,
                t.plus.conjugate,
            ]
        }
    };
    std::fs::create_dir_all(&args.out).map_err(|e| AppError::io(&args.out, e))?;
    let cfg_path = args.out.join(CONFIG_FILE);
    std::fs::write(&cfg_path, cfg.to_toml()).map_err(|e| AppError::io(&cfg_path, e))?;
    let mut paths = Vec::with_capacity(records.len());
    for r in records.drain(..) {
        r.validate()?;
        let mut r = r;
        r.meta.config_digest = digest;
        let p = args.out.join(file_name(r.kind, r.meta.joint, args.format));
        write_trace(&p, &TraceFile::new(r))?;
        paths.push(p);
    }
    Ok(paths)
}

struct Loaded {
    path: PathBuf,
    file: TraceFile,
}

fn load_traces(paths: &[PathBuf]) -> AppResult<Vec<Loaded>> {
    if paths.is_empty() {
        return Err(AppError::Inputs("no trace files given".into()));
    }
    paths
        .iter()
        .map(|p| {
            Ok(Loaded {
                path: p.clone(),
                file: read_trace(p)?,
            })
        })
        .collect()
}

/// Every trace must carry the same digest, and it must match the config's
/// digest for `mode` unless the trace digest is all zero (external data).
fn check_digests(traces: &[Loaded], cfg: Option<&RunConfig>, mode: Mode) -> AppResult<[u8; 32]> {
    let first = traces[0].file.record.meta.config_digest;
    for t in &traces[1..] {
        let d = t.file.record.meta.config_digest;
        if d != first {
            return Err(AppError::DigestMismatch {
                path: t.path.clone(),
                expected: hex(&first),
                found: hex(&d),
            });
        }
    }
    if let Some(cfg) = cfg {
        let want = cfg.digest(mode);
        if first != [0; 32] && first != want {
            return Err(AppError::DigestMismatch {
                path: traces[0].path.clone(),
                expected: hex(&want),
                found: hex(&first),
            });
        }
    }
    Ok(first)
}

/// Config used for analysis: `--config`, else `config.toml` beside the
/// first trace, else built-in defaults (digest not checked).
fn analysis_config(args: &AnalyzeArgs) -> AppResult<(RunConfig, bool)> {
    if let Some(p) = &args.config {
        return Ok((RunConfig::load(p)?, true));
    }
    let sibling = args
        .traces
        .first()
        .and_then(|t| t.parent())
        .map(|d| d.join(CONFIG_FILE))
        .filter(|p| p.is_file());
    match sibling {
        Some(p) => Ok((RunConfig::load(&p)?, true)),
        None => Ok((RunConfig::default(), false)),
    }
}

fn apply_overrides(cfg: &mut RunConfig, args: &AnalyzeArgs) -> AppResult<()> {
    if args.correct_electronic {
        cfg.analysis.correct_electronic = true;
    }
    if let Some(d) = args.delay_comp {
        cfg.analysis.delay_comp = d;
    }
    if let Some(f) = args.window_center_hz {
        if !(f.is_finite() && f >= 0.0) {
            return Err(AppError::Config(
                "--window-center-hz must be finite and non-negative".into(),
            ));
        }
        cfg.window.omega0 = 2.0 * PI * f;
    }
    if let Some(b) = args.bins {
        cfg.analysis.bins = b;
    }
    cfg.validate()
}

fn take(slot: &mut Option<usize>, idx: usize, t: &Loaded) -> AppResult<()> {
    if slot.replace(idx).is_some() {
        return Err(AppError::Inputs(format!(
            "{}: a second `{}` trace was given",
            t.path.display(),
            t.file.record.kind.name()
        )));
    }
    Ok(())
}

fn run_bright(traces: &[Loaded], cfg: &RunConfig) -> AppResult<(Outcome, Vec<QuadratureSample>)> {
    let (mut diff, mut shot, mut elec, mut probe, mut conj) = (None, None, None, None, None);
    for (i, t) in traces.iter().enumerate() {
        let slot = match t.file.record.kind {
            TraceKind::BrightDiff => &mut diff,
            TraceKind::BrightShot => &mut shot,
            TraceKind::Electronic => &mut elec,
            TraceKind::BrightProbe => &mut probe,
            TraceKind::BrightConjugate => &mut conj,
            found => {
                return Err(AppError::KindMismatch {
                    path: t.path.clone(),
                    expected: "bright analysis".into(),
                    found,
                })
            }
        };
        take(slot, i, t)?;
    }
    let rec = |i: usize| -> &TraceRecord { &traces[i].file.record };
    let opts = cfg.bright_options();
    let shot =
        shot.ok_or_else(|| AppError::Inputs("bright analysis needs a `bright_shot` trace".into()))?;
    if opts.correct_electronic && elec.is_none() {
        return Err(AppError::Inputs(
            "electronic correction needs an `electronic` trace".into(),
        ));
    }
    let signal = match (diff, probe, conj) {
        (Some(d), _, _) if opts.delay_comp_samples == 0 => BrightSignal::Subtracted(rec(d)),
        (_, Some(p), Some(c)) => BrightSignal::PerDetector {
            probe: rec(p),
            conjugate: rec(c),
        },
        (Some(_), _, _) => {
            return Err(AppError::Inputs(
                "delay compensation needs the `bright_probe` and `bright_conjugate` traces".into(),
            ))
        }
        _ => {
            return Err(AppError::Inputs(
                "bright analysis needs `bright_diff` or both `bright_probe` and `bright_conjugate`"
                    .into(),
            ))
        }
    };
    let report = analyze_bright(signal, rec(shot), elec.map(rec), &opts)?;
    Ok((Outcome::Bright(report), Vec::new()))
}

fn run_vacuum(traces: &[Loaded], cfg: &RunConfig) -> AppResult<(Outcome, Vec<QuadratureSample>)> {
    let mut slots: [Option<usize>; 4] = [None; 4];
    for (i, t) in traces.iter().enumerate() {
        let r = &t.file.record;
        let base = match r.meta.joint {
            Some(JointQuadrature::Minus) => 0,
            Some(JointQuadrature::Plus) => 2,
            None if r.kind.is_vacuum() => {
                return Err(AppError::Inputs(format!(
                    "{}: homodyne trace does not say which joint quadrature it records",
                    t.path.display()
                )))
            }
            None => 4,
        };
        let idx = match r.kind {
            TraceKind::ProbeHomodyne if base < 4 => base,
            TraceKind::ConjugateHomodyne if base < 4 => base + 1,
            found => {
                return Err(AppError::KindMismatch {
                    path: t.path.clone(),
                    expected: "vacuum analysis".into(),
                    found,
                })
            }
        };
        take(&mut slots[idx], i, t)?;
    }
    let names = [
        "minus probe",
        "minus conjugate",
        "plus probe",
        "plus conjugate",
    ];
    let mut idx = [0usize; 4];
    for (k, s) in slots.iter().enumerate() {
        idx[k] = s.ok_or_else(|| {
            AppError::Inputs(format!(
                "vacuum analysis needs the {} homodyne trace",
                names[k]
            ))
        })?;
    }
    let rec = |k: usize| &traces[idx[k]].file.record;
    let (report, samples) =
        analyze_vacuum_with_samples((rec(0), rec(1)), (rec(2), rec(3)), &cfg.vacuum_options())?;
    Ok((Outcome::Vacuum(report), samples))
}

/// Analyzes traces and writes the report (JSON) to `args.out` with its plot
/// tables alongside.
pub fn analyze(mode: Mode, args: &AnalyzeArgs) -> AppResult<(ReportFile, Vec<PathBuf>)> {
    let (mut cfg, check) = analysis_config(args)?;
    apply_overrides(&mut cfg, args)?;
    let traces = load_traces(&args.traces)?;
    for t in &traces {
        let kind = t.file.record.kind;
        let fits = match mode {
            Mode::Bright => kind.is_bright(),
            Mode::Vacuum => kind.is_vacuum(),
        };
        if !fits {
            return Err(AppError::KindMismatch {
                path: t.path.clone(),
                expected: format!("{mode} analysis"),
                found: kind,
            });
        }
    }
    let digest = check_digests(&traces, check.then_some(&cfg), mode)?;
    let (result, samples) = match mode {
        Mode::Bright => run_bright(&traces, &cfg)?,
        Mode::Vacuum => run_vacuum(&traces, &cfg)?,
    };
    let first = &traces[0].file;
    cfg.seed = first.record.meta.seed;
    let report = ReportFile {
        provenance: Provenance {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: first.record.meta.seed,
            rng: first.rng.clone(),
            config_digest: hex(&digest),
            traces: traces
                .iter()
                .map(|t| TraceRef {
                    path: t.path.clone(),
                    kind: t.file.record.kind.name().into(),
                })
                .collect(),
            config: cfg,
        },
        result,
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    report.write(&args.out)?;
    let tables = write_tables(&args.out, &report.result, &samples)?;
    Ok((report, tables))
}

pub fn report(path: &Path) -> AppResult<String> {
    Ok(crate::report::render_summary(&ReportFile::load(path)?))
}
