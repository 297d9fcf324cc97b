use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use cachelab::bounds::CurveRow;
use cachelab::rational::{to_decimal_string, to_exact_string, Rational};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

pub const SIGNIFICANT_DIGITS: u32 = 15;
pub const CURVE_COLUMNS: [&str; 5] = ["M", "R_uncoded", "R_coded", "R_cutset", "R_improved"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn cells(row: &CurveRow) -> [Rational; 5] {
    [row.memory, row.uncoded, row.coded, row.cutset, row.improved]
}

pub fn curve_csv(rows: &[CurveRow], exact: bool) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let mut header: Vec<String> = CURVE_COLUMNS.iter().map(|c| c.to_string()).collect();
    if exact {
        header.extend(CURVE_COLUMNS.iter().map(|c| format!("{c}_exact")));
    }
    w.write_record(&header)?;
    for row in rows {
        let values = cells(row);
        let mut record: Vec<String> = values
            .iter()
            .map(|v| to_decimal_string(v, SIGNIFICANT_DIGITS))
            .collect();
        if exact {
            record.extend(values.iter().map(to_exact_string));
        }
        w.write_record(&record)?;
    }
    Ok(w.into_inner().context("flushing CSV")?)
}

/// Rows as objects keyed by column name, values as exact strings.
pub fn curve_json(rows: &[CurveRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|row| {
                let obj = CURVE_COLUMNS
                    .iter()
                    .zip(cells(row))
                    .map(|(k, v)| (k.to_string(), json!(to_exact_string(&v))))
                    .collect();
                Value::Object(obj)
            })
            .collect(),
    )
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    // routing through Value sorts object keys
    let value = serde_json::to_value(value)?;
    let mut out = serde_json::to_vec_pretty(&value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}
