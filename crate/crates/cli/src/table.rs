//! The CSV layout shared by every command.
//!
//! ```text
//! # sta-harmonic v0.1.0
//! tf_s,bound,asymptotic
//! 1.0000000000000000e-5,...
//! # axes ["tf_s"]
//! # fit {"column":"bound","exponent":-2.0,...}
//! # config {...}
//! ```
//!
//! Values are written with 17 significant digits so that parsing returns the
//! exact same `f64`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sta_core::numerics::FitResult;
use sta_core::verifier::{ScanResult, ScanRow};
use thiserror::Error;

pub const VERSION_LINE: &str = concat!("# sta-harmonic v", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum TableError {
    #[error("missing or unexpected version line: {0:?}")]
    Version(Option<String>),
    #[error("missing header line")]
    MissingHeader,
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("bad `# {kind}` line: {source}")]
    Meta {
        kind: &'static str,
        source: serde_json::Error,
    },
    #[error("axes {axes:?} do not prefix header {header:?}")]
    Axes { axes: Vec<String>, header: Vec<String> },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct FitLine {
    column: String,
    #[serde(flatten)]
    fit: FitResult,
}

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders `result` with a trailing `# config` line holding `config`.
pub fn write_csv<C: Serialize>(result: &ScanResult, config: &C) -> Result<String, TableError> {
    let mut out = String::new();
    out.push_str(VERSION_LINE);
    out.push('\n');

    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    let header: Vec<&str> = result
        .axes
        .iter()
        .chain(result.columns.iter())
        .map(String::as_str)
        .collect();
    writer.write_record(&header)?;
    for row in &result.rows {
        let record: Vec<String> = row.coords.iter().chain(&row.values).map(|&v| format_value(v)).collect();
        writer.write_record(&record)?;
    }
    let body = writer.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));

    let meta = |kind: &'static str, e: serde_json::Error| TableError::Meta { kind, source: e };
    out.push_str("# axes ");
    out.push_str(&serde_json::to_string(&result.axes).map_err(|e| meta("axes", e))?);
    out.push('\n');
    for (column, fit) in &result.fits {
        let line = FitLine {
            column: column.clone(),
            fit: *fit,
        };
        out.push_str("# fit ");
        out.push_str(&serde_json::to_string(&line).map_err(|e| meta("fit", e))?);
        out.push('\n');
    }
    out.push_str("# config ");
    out.push_str(&serde_json::to_string(config).map_err(|e| meta("config", e))?);
    out.push('\n');
    Ok(out)
}

/// A parsed CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub result: ScanResult,
    pub config: Option<serde_json::Value>,
}

pub fn parse_csv(text: &str) -> Result<ParsedTable, TableError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(VERSION_LINE) => {}
        other => return Err(TableError::Version(other.map(String::from))),
    }
    let mut data = String::new();
    let mut axes: Option<Vec<String>> = None;
    let mut fits = BTreeMap::new();
    let mut config = None;
    for line in lines {
        if let Some(rest) = line.strip_prefix("# axes ") {
            axes = Some(serde_json::from_str(rest).map_err(|e| TableError::Meta {
                kind: "axes",
                source: e,
            })?);
        } else if let Some(rest) = line.strip_prefix("# fit ") {
            let fit: FitLine = serde_json::from_str(rest).map_err(|e| TableError::Meta { kind: "fit", source: e })?;
            fits.insert(fit.column, fit.fit);
        } else if let Some(rest) = line.strip_prefix("# config ") {
            config = Some(serde_json::from_str(rest).map_err(|e| TableError::Meta {
                kind: "config",
                source: e,
            })?);
        } else if !line.starts_with('#') {
            data.push_str(line);
            data.push('\n');
        }
    }

    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(data.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(TableError::MissingHeader);
    }
    let axes = axes.unwrap_or_default();
    if axes.len() > header.len() || header[..axes.len()] != axes[..] {
        return Err(TableError::Axes { axes, header });
    }
    let columns = header[axes.len()..].to_vec();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(TableError::Row {
                row: i,
                message: format!("{} fields, expected {}", record.len(), header.len()),
            });
        }
        let values = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| TableError::Row {
                    row: i,
                    message: format!("{f:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let (coords, values) = values.split_at(axes.len());
        rows.push(ScanRow {
            coords: coords.to_vec(),
            values: values.to_vec(),
        });
    }
    Ok(ParsedTable {
        result: ScanResult {
            axes,
            columns,
            rows,
            fits,
        },
        config,
    })
}

/// JSON counterpart: the scan fields plus a `config` object.
pub fn write_json<C: Serialize>(result: &ScanResult, config: &C) -> Result<String, serde_json::Error> {
    #[derive(Serialize)]
    struct Doc<'a, C> {
        config: &'a C,
        #[serde(flatten)]
        result: &'a ScanResult,
    }
    let mut s = serde_json::to_string_pretty(&Doc { config, result })?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample() -> ScanResult {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows = (0..20)
            .map(|i| ScanRow {
                coords: vec![1e-5 * (i as f64 + 1.0)],
                values: vec![rng.gen::<f64>() * 1e6, -rng.gen::<f64>() / 3.0, std::f64::consts::PI],
            })
            .collect();
        let mut fits = BTreeMap::new();
        fits.insert(
            "a".to_string(),
            FitResult {
                exponent: -1.999_999_999_987_3,
                prefactor: 0.1 + 0.2,
                residual: 1e-17,
            },
        );
        ScanResult {
            axes: vec!["tf_s".into()],
            columns: vec!["a".into(), "b".into(), "c".into()],
            rows,
            fits,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let r = sample();
        let cfg = serde_json::json!({"command": "scan", "tf": 0.002});
        let text = write_csv(&r, &cfg).unwrap();
        assert!(text.starts_with("# sta-harmonic v"));
        assert_eq!(text.lines().nth(1), Some("tf_s,a,b,c"));
        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed.result, r);
        assert_eq!(parsed.config, Some(cfg));
    }

    #[test]
    fn axis_free_and_two_axis_tables() {
        let mut r = sample();
        r.axes.clear();
        for row in &mut r.rows {
            row.coords.clear();
        }
        r.fits.clear();
        assert_eq!(parse_csv(&write_csv(&r, &()).unwrap()).unwrap().result, r);

        let grid = ScanResult {
            axes: vec!["x".into(), "y".into()],
            columns: vec!["z".into()],
            rows: vec![ScanRow {
                coords: vec![1.0, 2.0],
                values: vec![f64::MIN_POSITIVE],
            }],
            fits: BTreeMap::new(),
        };
        assert_eq!(parse_csv(&write_csv(&grid, &()).unwrap()).unwrap().result, grid);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(parse_csv("x\n1\n"), Err(TableError::Version(_))));
        let good = write_csv(&sample(), &()).unwrap();
        let bad = good.replacen("e-5,", "e-5x,", 1);
        assert!(matches!(parse_csv(&bad), Err(TableError::Row { .. })));
        let bad_axes = good.replace("# axes [\"tf_s\"]", "# axes [\"t\"]");
        assert!(matches!(parse_csv(&bad_axes), Err(TableError::Axes { .. })));
    }

    #[test]
    fn json_embeds_config() {
        let text = write_json(&sample(), &serde_json::json!({"k": 1})).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["config"]["k"], 1);
        let back: ScanResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, sample());
    }
}
