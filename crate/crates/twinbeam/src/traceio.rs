//! Trace files: a little-endian binary layout (`.tbl`) and a CSV form with a
//! commented header (`.csv`).
//!
//! Binary layout:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4  | magic `TBL1` |
//! | 2  | format version (u16) |
//! | 1  | kind code (u8) |
//! | 1  | joint quadrature: 0 none, 1 minus, 2 plus |
//! | 8  | sample rate (f64) |
//! | 8  | n_samples (u64) |
//! | 8  | n_markers (u64) |
//! | 8  | samples per pulse (u64) |
//! | 8  | period in samples (u64) |
//! | 8  | tail start (u64, `u64::MAX` when absent) |
//! | 8  | seed (u64) |
//! | 16 | RNG algorithm id, NUL padded |
//! | 32 | config digest (SHA-256) |
//!
//! followed by `n_markers` u64 markers and `n_samples` f64 samples.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use twinbeam_core::noise::RNG_ALGORITHM;
use twinbeam_core::{JointQuadrature, TraceKind, TraceMeta, TraceRecord};

use crate::config::{hex, parse_hex};
use crate::error::{AppError, AppResult};

pub const MAGIC: &[u8; 4] = b"TBL1";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 1 + 8 * 7 + 16 + 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Binary,
    Csv,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Binary,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Binary => "tbl",
            Format::Csv => "csv",
        }
    }
}

/// A trace plus the RNG id recorded in its header.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub record: TraceRecord,
    pub rng: String,
}

impl TraceFile {
    pub fn new(record: TraceRecord) -> Self {
        Self {
            record,
            rng: RNG_ALGORITHM.to_string(),
        }
    }
}

fn joint_code(j: Option<JointQuadrature>) -> u8 {
    match j {
        None => 0,
        Some(JointQuadrature::Minus) => 1,
        Some(JointQuadrature::Plus) => 2,
    }
}

fn joint_from_code(c: u8) -> Option<Option<JointQuadrature>> {
    match c {
        0 => Some(None),
        1 => Some(Some(JointQuadrature::Minus)),
        2 => Some(Some(JointQuadrature::Plus)),
        _ => None,
    }
}

fn joint_name(j: Option<JointQuadrature>) -> &'static str {
    match j {
        None => "none",
        Some(JointQuadrature::Minus) => "minus",
        Some(JointQuadrature::Plus) => "plus",
    }
}

fn rng_bytes(id: &str) -> [u8; 16] {
    let mut out = [0u8; 16];
    let b = id.as_bytes();
    let n = b.len().min(16);
    out[..n].copy_from_slice(&b[..n]);
    out
}

pub fn write_trace(path: &Path, file: &TraceFile) -> AppResult<()> {
    match Format::from_path(path) {
        Format::Binary => write_binary(path, file),
        Format::Csv => write_csv(path, file),
    }
}

pub fn read_trace(path: &Path) -> AppResult<TraceFile> {
    match Format::from_path(path) {
        Format::Binary => read_binary(path),
        Format::Csv => read_csv(path),
    }
}

pub fn encode_binary(file: &TraceFile) -> Vec<u8> {
    let r = &file.record;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * (r.markers.len() + r.samples.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(r.kind.code());
    out.push(joint_code(r.meta.joint));
    out.extend_from_slice(&r.sample_rate.to_le_bytes());
    for v in [
        r.samples.len() as u64,
        r.markers.len() as u64,
        r.samples_per_pulse as u64,
        r.period_samples as u64,
        r.tail_start.map_or(u64::MAX, |t| t as u64),
        r.meta.seed,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&rng_bytes(&file.rng));
    out.extend_from_slice(&r.meta.config_digest);
    for &m in &r.markers {
        out.extend_from_slice(&(m as u64).to_le_bytes());
    }
    for &s in &r.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn write_binary(path: &Path, file: &TraceFile) -> AppResult<()> {
    std::fs::write(path, encode_binary(file)).map_err(|e| AppError::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.buf[self.pos..self.pos + N]
            .try_into()
            .expect("length checked");
        self.pos += N;
        out
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
}

pub fn decode_binary(path: &Path, buf: &[u8]) -> AppResult<TraceFile> {
    let bad = |reason: String| AppError::BadHeader {
        path: path.to_path_buf(),
        reason,
    };
    if buf.len() < HEADER_LEN {
        return Err(bad(format!(
            "{} bytes is shorter than the {HEADER_LEN}-byte header",
            buf.len()
        )));
    }
    let mut c = Cursor { buf, pos: 0 };
    if &c.take::<4>() != MAGIC {
        return Err(bad("magic is not TBL1".into()));
    }
    let version = u16::from_le_bytes(c.take());
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let [code] = c.take::<1>();
    let kind =
        TraceKind::from_code(code).ok_or_else(|| bad(format!("unknown kind code {code}")))?;
    let [jc] = c.take::<1>();
    let joint = joint_from_code(jc).ok_or_else(|| bad(format!("unknown joint code {jc}")))?;
    let sample_rate = f64::from_le_bytes(c.take());
    let n_samples = c.u64();
    let n_markers = c.u64();
    let spp = c.u64();
    let period = c.u64();
    let tail = c.u64();
    let seed = c.u64();
    let rng_raw = c.take::<16>();
    let config_digest = c.take::<32>();
    let rng = String::from_utf8_lossy(&rng_raw)
        .trim_end_matches('\0')
        .to_string();

    let body = (n_markers as u128 + n_samples as u128) * 8;
    if (buf.len() - HEADER_LEN) as u128 != body {
        return Err(bad(format!(
            "header announces {n_markers} markers and {n_samples} samples but the body holds {} bytes",
            buf.len() - HEADER_LEN
        )));
    }
    let markers = (0..n_markers).map(|_| c.u64() as usize).collect();
    let samples = (0..n_samples)
        .map(|_| f64::from_le_bytes(c.take()))
        .collect();
    let record = TraceRecord {
        sample_rate,
        kind,
        samples,
        markers,
        samples_per_pulse: spp as usize,
        period_samples: period as usize,
        tail_start: (tail != u64::MAX).then_some(tail as usize),
        meta: TraceMeta {
            seed,
            config_digest,
            joint,
        },
    };
    finish(path, record, rng)
}

fn finish(path: &Path, record: TraceRecord, rng: String) -> AppResult<TraceFile> {
    record.validate().map_err(|e| AppError::BadHeader {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(TraceFile { record, rng })
}

pub fn read_binary(path: &Path) -> AppResult<TraceFile> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| AppError::io(path, e))?;
    decode_binary(path, &buf)
}

/// Markers are stored as first index, period and count; readers require the
/// uniform spacing anyway.
pub fn write_csv(path: &Path, file: &TraceFile) -> AppResult<()> {
    let r = &file.record;
    let io = |e| AppError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let first = r.markers.first().copied().unwrap_or(0);
    let tail = r.tail_start.map_or("none".to_string(), |t| t.to_string());
    let header = format!(
        "# format: TBL1-csv\n# version: {VERSION}\n# kind: {}\n# joint: {}\n# sample_rate: {:e}\n\
         # n_samples: {}\n# markers: {first} {} {}\n# samples_per_pulse: {}\n# tail_start: {tail}\n\
         # seed: {}\n# rng: {}\n# config_digest: {}\nsample\n",
        r.kind.name(),
        joint_name(r.meta.joint),
        r.sample_rate,
        r.samples.len(),
        r.period_samples,
        r.markers.len(),
        r.samples_per_pulse,
        r.meta.seed,
        file.rng,
        hex(&r.meta.config_digest),
    );
    w.write_all(header.as_bytes()).map_err(io)?;
    for s in &r.samples {
        writeln!(w, "{s:e}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_csv(path: &Path) -> AppResult<TraceFile> {
    let bad = |reason: String| AppError::BadHeader {
        path: path.to_path_buf(),
        reason,
    };
    let reader = BufReader::new(File::open(path).map_err(|e| AppError::io(path, e))?);
    let mut fields = std::collections::HashMap::new();
    let mut samples = Vec::new();
    let mut seen_column = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| AppError::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .split_once(':')
                .ok_or_else(|| bad(format!("line {}: expected `# key: value`", i + 1)))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        } else if !seen_column {
            if line != "sample" {
                return Err(bad(format!(
                    "line {}: expected the `sample` column header",
                    i + 1
                )));
            }
            seen_column = true;
        } else {
            samples.push(
                line.parse::<f64>()
                    .map_err(|_| bad(format!("line {}: `{line}` is not a number", i + 1)))?,
            );
        }
    }
    let get = |k: &str| {
        fields
            .get(k)
            .map(String::as_str)
            .ok_or_else(|| bad(format!("missing `{k}`")))
    };
    let num = |k: &str| -> AppResult<u64> {
        get(k)?
            .parse()
            .map_err(|_| bad(format!("`{k}` is not an integer")))
    };

    if get("format")? != "TBL1-csv" {
        return Err(bad("format is not TBL1-csv".into()));
    }
    let version = num("version")?;
    if version != VERSION as u64 {
        return Err(bad(format!("unsupported version {version}")));
    }
    let kind_name = get("kind")?;
    let kind = TraceKind::from_name(kind_name)
        .ok_or_else(|| bad(format!("unknown kind `{kind_name}`")))?;
    let joint = match get("joint")? {
        "none" => None,
        "minus" => Some(JointQuadrature::Minus),
        "plus" => Some(JointQuadrature::Plus),
        other => return Err(bad(format!("unknown joint `{other}`"))),
    };
    let sample_rate: f64 = get("sample_rate")?
        .parse()
        .map_err(|_| bad("`sample_rate` is not a number".into()))?;
    let n_samples = num("n_samples")? as usize;
    if n_samples != samples.len() {
        return Err(bad(format!(
            "header announces {n_samples} samples, file holds {}",
            samples.len()
        )));
    }
    let m: Vec<u64> = get("markers")?
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| bad("`markers` must be `first period count`".into()))
        })
        .collect::<AppResult<_>>()?;
    let [first, period, count] = m[..] else {
        return Err(bad("`markers` must be `first period count`".into()));
    };
    let tail_start = match get("tail_start")? {
        "none" => None,
        t => Some(
            t.parse()
                .map_err(|_| bad("`tail_start` is not an integer".into()))?,
        ),
    };
    let config_digest = parse_hex(get("config_digest")?)
        .ok_or_else(|| bad("`config_digest` is not 64 hex digits".into()))?;
    let record = TraceRecord {
        sample_rate,
        kind,
        samples,
        markers: (0..count).map(|k| (first + k * period) as usize).collect(),
        samples_per_pulse: num("samples_per_pulse")? as usize,
        period_samples: period as usize,
        tail_start,
        meta: TraceMeta {
            seed: num("seed")?,
            config_digest,
            joint,
        },
    };
    finish(path, record, get("rng")?.to_string())
}

/// Default file name for a trace of `kind` recorded with `joint`.
pub fn file_name(kind: TraceKind, joint: Option<JointQuadrature>, format: Format) -> PathBuf {
    let stem = match joint {
        Some(j) => format!("{}_{}", joint_name(Some(j)), kind.name()),
        None => kind.name().to_string(),
    };
    PathBuf::from(format!("{stem}.{}", format.extension()))
}
