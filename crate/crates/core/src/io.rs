//! File formats.
//!
//! A series is stored as a CSV file with columns `k,t,re,im` next to a JSON
//! sidecar (same path, `.json` extension) holding the grid and, for folded
//! data, the converter settings. Values are written with 17 significant
//! digits, so a write/read round trip is bit-exact.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterTaps;
use crate::modulo::{FoldedSeries, ModuloConfig, NoisePlacement};
use crate::planner::MapPoint;
use crate::recovery::{Diagnostics, RecoveryParams, RecoveryResult};
use crate::series::ComplexSeries;

pub const CSV_HEADER: &str = "k,t,re,im";

/// Contents of the JSON sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesHeader {
    pub sample_period: f64,
    pub start_index: i64,
    pub length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulo: Option<ModuloConfig>,
}

/// A loaded series, folded or not depending on the sidecar.
#[derive(Clone, Debug, PartialEq)]
pub enum Ingested {
    Plain(ComplexSeries),
    Folded(FoldedSeries),
}

impl Ingested {
    pub fn series(&self) -> &ComplexSeries {
        match self {
            Ingested::Plain(s) => s,
            Ingested::Folded(f) => f.series(),
        }
    }
}

/// `data.csv` → `data.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn write_csv(path: &Path, series: &ComplexSeries) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    for (k, z) in series.samples().iter().enumerate() {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e}",
            series.index(k),
            series.time(k),
            z.re,
            z.im
        )?;
    }
    w.flush()?;
    Ok(())
}

fn write_header(csv: &Path, header: &SeriesHeader) -> Result<()> {
    let mut text = serde_json::to_string_pretty(header)?;
    text.push('\n');
    fs::write(sidecar_path(csv), text)?;
    Ok(())
}

pub fn write_series(path: &Path, series: &ComplexSeries) -> Result<()> {
    write_csv(path, series)?;
    write_header(
        path,
        &SeriesHeader {
            sample_period: series.sample_period(),
            start_index: series.start_index(),
            length: series.len(),
            modulo: None,
        },
    )
}

pub fn write_folded(path: &Path, folded: &FoldedSeries) -> Result<()> {
    let series = folded.series();
    write_csv(path, series)?;
    write_header(
        path,
        &SeriesHeader {
            sample_period: series.sample_period(),
            start_index: series.start_index(),
            length: series.len(),
            modulo: Some(folded.config().clone()),
        },
    )
}

fn ingest_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Ingest {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn read_header(csv: &Path) -> Result<SeriesHeader> {
    let side = sidecar_path(csv);
    let text = fs::read_to_string(&side)?;
    let header: SeriesHeader = serde_json::from_str(&text).map_err(|e| {
        ingest_error(&side, e.line(), format!("malformed header: {e}"))
    })?;
    if !(header.sample_period > 0.0 && header.sample_period.is_finite()) {
        return Err(ingest_error(&side, 1, "malformed header: sample_period must be positive"));
    }
    if header.length == 0 {
        return Err(ingest_error(&side, 1, "malformed header: length must be positive"));
    }
    if let Some(m) = &header.modulo {
        m.validate()
            .map_err(|e| ingest_error(&side, 1, format!("malformed header: {e}")))?;
    }
    Ok(header)
}

fn parse_value(path: &Path, line: usize, field: &str, name: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| ingest_error(path, line, format!("cannot parse {name} value {field:?}")))?;
    if !v.is_finite() {
        return Err(ingest_error(path, line, format!("non-finite {name} value")));
    }
    Ok(v)
}

/// Reads a series and its sidecar. Folded data (sidecar with a `modulo`
/// section) is range-checked against `λ` unless the converter added noise
/// after folding without refolding.
pub fn ingest_series(path: &Path) -> Result<Ingested> {
    let header = read_header(path)?;
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == CSV_HEADER => {}
        Some((n, l)) => {
            return Err(ingest_error(path, n, format!("malformed header line {l:?}, expected {CSV_HEADER:?}")))
        }
        None => return Err(ingest_error(path, 1, "empty file")),
    }
    let range_limit = header.modulo.as_ref().and_then(|m| {
        let unbounded = m.noise_placement == NoisePlacement::PostFold && m.noise_snr_db.is_some();
        (!unbounded).then_some(m.lambda)
    });
    let mut samples = Vec::with_capacity(header.length);
    let mut last_line = 1;
    for (n, line) in lines {
        last_line = n;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(ingest_error(path, n, format!("expected 4 fields, found {}", fields.len())));
        }
        let row = samples.len();
        if row >= header.length {
            return Err(ingest_error(path, n, format!("more rows than the declared length {}", header.length)));
        }
        let k: i64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| ingest_error(path, n, format!("cannot parse index {:?}", fields[0])))?;
        if k != header.start_index + row as i64 {
            return Err(ingest_error(
                path,
                n,
                format!("index {k} out of sequence, expected {}", header.start_index + row as i64),
            ));
        }
        parse_value(path, n, fields[1], "time")?;
        let re = parse_value(path, n, fields[2], "re")?;
        let im = parse_value(path, n, fields[3], "im")?;
        if let Some(lam) = range_limit {
            if re.abs() > lam || im.abs() > lam {
                return Err(ingest_error(
                    path,
                    n,
                    format!("folded sample ({re:e}, {im:e}) exceeds λ = {lam:e}"),
                ));
            }
        }
        samples.push(Complex64::new(re, im));
    }
    if samples.len() != header.length {
        return Err(ingest_error(
            path,
            last_line + 1,
            format!("truncated: {} rows, header declares {}", samples.len(), header.length),
        ));
    }
    let series = ComplexSeries::new(samples, header.sample_period, header.start_index)?;
    Ok(match header.modulo {
        Some(cfg) => Ingested::Folded(FoldedSeries::new(series, cfg)?),
        None => Ingested::Plain(series),
    })
}

/// Reads a plain series; folded data is accepted and returned as samples.
pub fn read_series(path: &Path) -> Result<ComplexSeries> {
    Ok(match ingest_series(path)? {
        Ingested::Plain(s) => s,
        Ingested::Folded(f) => f.series().clone(),
    })
}

/// Reads folded data; the sidecar must carry converter settings.
pub fn read_folded(path: &Path) -> Result<FoldedSeries> {
    match ingest_series(path)? {
        Ingested::Folded(f) => Ok(f),
        Ingested::Plain(_) => Err(ingest_error(
            &sidecar_path(path),
            1,
            "malformed header: no modulo section",
        )),
    }
}

pub fn write_taps(path: &Path, taps: &FilterTaps) -> Result<()> {
    let mut text = serde_json::to_string_pretty(taps)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_taps(path: &Path) -> Result<FilterTaps> {
    let text = fs::read_to_string(path)?;
    let taps: FilterTaps = serde_json::from_str(&text)?;
    if taps.taps.is_empty() {
        return Err(ingest_error(path, 1, "filter has no taps"));
    }
    Ok(taps)
}

/// JSON summary of a recovery run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub params: RecoveryParams,
    pub diagnostics: Diagnostics,
    pub fold_indices: Vec<usize>,
}

impl RecoveryReport {
    pub fn new(params: &RecoveryParams, result: &RecoveryResult) -> Self {
        Self {
            params: params.clone(),
            diagnostics: result.diagnostics.clone(),
            fold_indices: result.fold_indices.clone(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// `f_U_hz,t_s_seconds,achievable` with `achievable ∈ {0, 1}`.
pub fn write_map_csv(path: &Path, points: &[MapPoint]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "f_U_hz,t_s_seconds,achievable")?;
    for p in points {
        writeln!(w, "{:e},{:e},{}", p.f_u_hz, p.t_s_seconds, u8::from(p.achievable))?;
    }
    w.flush()?;
    Ok(())
}
