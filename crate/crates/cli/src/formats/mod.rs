//! On-disk formats.
//!
//! The columnar files share one layout: `# key: value` metadata lines, a
//! header row naming each column with its unit, then comma-separated
//! records. Floats are written in Rust's shortest round-trip form, so a
//! write followed by a read reproduces every value bit for bit.

pub mod observations;
pub mod report;
pub mod sweep;
pub mod touchstone;

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{CliError, Result};

/// Metadata block and the remaining CSV body of a columnar file.
pub(crate) struct Columnar<'a> {
    pub meta: BTreeMap<String, String>,
    /// Physical line number (1-based) of the header row.
    pub header_line: usize,
    pub body: &'a str,
}

pub(crate) fn split_columnar<'a>(path: &Path, text: &'a str) -> Result<Columnar<'a>> {
    let mut meta = BTreeMap::new();
    let mut offset = 0;
    let mut line_no = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.is_empty() && !trimmed.starts_with('#') {
            break;
        }
        line_no += 1;
        offset += line.len();
        if let Some(rest) = trimmed.strip_prefix('#') {
            let (k, v) = rest
                .split_once(':')
                .ok_or_else(|| CliError::parse(path, format!("line {line_no}: metadata must read '# key: value'")))?;
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    Ok(Columnar { meta, header_line: line_no + 1, body: &text[offset..] })
}

pub(crate) fn require_meta<'m>(path: &Path, meta: &'m BTreeMap<String, String>, key: &str) -> Result<&'m str> {
    meta.get(key).map(String::as_str).ok_or_else(|| CliError::parse(path, format!("missing '# {key}:' header line")))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub(crate) fn csv_reader(body: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(body.as_bytes())
}

pub(crate) fn parse_f64(path: &Path, line: usize, column: &str, field: &str) -> Result<f64> {
    field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
        CliError::parse(path, format!("line {line}: column '{column}' holds '{field}', not a finite number"))
    })
}

pub(crate) fn check_header(path: &Path, line: usize, found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = found.iter().collect();
    if got != expected {
        return Err(CliError::parse(
            path,
            format!("line {line}: expected header '{}', found '{}'", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}
