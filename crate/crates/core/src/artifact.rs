//! Artifact emission: line-delimited record files with a provenance header
//! and aligned-text table rendering. Output is byte-deterministic for a
//! given input set.

use crate::error::{Error, Result};
use crate::store::StoreHeader;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Write a header line plus one JSON record per line.
pub fn write_jsonl<T: Serialize>(
    path: impl AsRef<Path>,
    header: &StoreHeader,
    records: &[T],
) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    let mut out = String::new();
    out.push_str(&serde_json::to_string(header).expect("header serializes"));
    out.push('\n');
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Read a header-led jsonl file back.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<(StoreHeader, Vec<T>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = text.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Invalid(format!("{}: empty artifact", path.display())))?;
    let header: StoreHeader = serde_json::from_str(header_line).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(line).map_err(|source| Error::Json {
            path: path.display().to_string(),
            source,
        })?);
    }
    Ok((header, records))
}

/// Write an aligned-text artifact with a provenance comment line.
pub fn write_text(path: impl AsRef<Path>, header: &StoreHeader, body: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    let content = format!("{}\n{body}", header_comment(header));
    write_atomic(path, content.as_bytes())
}

pub fn header_comment(header: &StoreHeader) -> String {
    format!(
        "# schema_version={} config_hash={} global_seed={}",
        header.schema_version, header.config_hash, header.global_seed
    )
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Render rows as an aligned table. The first row is the column header.
pub fn render_table(title: &str, columns: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = columns.iter().map(|c| c.chars().count()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i < widths.len() {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
    }
    let render_row = |cells: &[String]| -> String {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            let pad = widths[i].saturating_sub(cell.chars().count());
            if i == 0 {
                line.push_str(cell);
                line.push_str(&" ".repeat(pad));
            } else {
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            }
        }
        while line.ends_with(' ') {
            line.pop();
        }
        line
    };

    let mut out = String::new();
    if !title.is_empty() {
        out.push_str(title);
        out.push('\n');
    }
    out.push_str(&render_row(&columns.to_vec()));
    out.push('\n');
    let rule_len = widths.iter().sum::<usize>() + 2 * (widths.len().saturating_sub(1));
    out.push_str(&"-".repeat(rule_len));
    out.push('\n');
    for row in rows {
        out.push_str(&render_row(row));
        out.push('\n');
    }
    out
}

/// Percentage with one decimal, the table-rendering convention; machine
/// outputs keep full precision.
pub fn fmt_pct(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.1}%", 100.0 * v),
        None => "-".into(),
    }
}

pub fn fmt_num(value: Option<f64>, decimals: usize) -> String {
    match value {
        Some(v) => format!("{v:.decimals$}"),
        None => "-".into(),
    }
}
