//! CSV and JSON rendering of result rows.

use serde::Serialize;

use super::Format;
use crate::error::{Error, Result};

pub fn csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Flat rows as CSV, or the same rows as a JSON array.
pub fn rows<T: Serialize>(rows: &[T], format: Format) -> Result<String> {
    match format {
        Format::Csv => csv(rows),
        Format::Json => json(rows),
    }
}

/// `0;2;5`.
pub fn index_list(idx: &[usize]) -> String {
    idx.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(";")
}
