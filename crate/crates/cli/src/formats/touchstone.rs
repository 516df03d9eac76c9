//! One-port Touchstone (`.s1p`) subset: real/imaginary data only.
//!
//! The option line (`# <unit> S RI R <z0>`) is mandatory; a file relying on
//! the Touchstone defaults would be read as GHz magnitude/angle, which this
//! loader does not accept.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use soilradar::sfcw::{FrequencySweep, Window};

use super::sweep::sweep_from_rows;
use super::{read_text, write_text};
use crate::error::{CliError, Result};

fn unit_scale(token: &str) -> Option<f64> {
    match token.to_ascii_lowercase().as_str() {
        "hz" => Some(1.0),
        "khz" => Some(1e3),
        "mhz" => Some(1e6),
        "ghz" => Some(1e9),
        _ => None,
    }
}

pub fn parse_touchstone(path: &Path, text: &str, window: Window, zero_pad_factor: usize) -> Result<FrequencySweep> {
    let mut scale = None;
    let mut freqs = Vec::new();
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(opts) = line.strip_prefix('#') {
            if scale.is_some() {
                return Err(CliError::parse(path, format!("line {line_no}: second option line")));
            }
            let mut unit = None;
            let mut format = None;
            let tokens: Vec<&str> = opts.split_whitespace().collect();
            let mut i = 0;
            while i < tokens.len() {
                let t = tokens[i];
                if let Some(s) = unit_scale(t) {
                    unit = Some(s);
                } else {
                    match t.to_ascii_uppercase().as_str() {
                        "S" => {}
                        "Y" | "Z" | "H" | "G" => {
                            return Err(CliError::parse(
                                path,
                                format!("line {line_no}: only S parameters are supported, found {t}"),
                            ))
                        }
                        "RI" => format = Some("RI"),
                        "MA" | "DB" => {
                            return Err(CliError::parse(
                                path,
                                format!("line {line_no}: unsupported data format {t}; only RI is supported"),
                            ))
                        }
                        "R" => i += 1,
                        _ => return Err(CliError::parse(path, format!("line {line_no}: unknown option '{t}'"))),
                    }
                }
                i += 1;
            }
            if format.is_none() {
                return Err(CliError::parse(
                    path,
                    format!("line {line_no}: option line must state RI format (default MA is unsupported)"),
                ));
            }
            scale = Some(unit.unwrap_or(1e9));
            continue;
        }
        let Some(scale) = scale else {
            return Err(CliError::parse(path, format!("line {line_no}: data before the '#' option line")));
        };
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| CliError::parse(path, format!("line {line_no}: non-numeric data")))?;
        if values.len() != 3 {
            return Err(CliError::parse(
                path,
                format!("line {line_no}: one-port data needs 3 values, found {}", values.len()),
            ));
        }
        freqs.push((line_no, values[0] * scale));
        samples.push(Complex64::new(values[1], values[2]));
    }
    if scale.is_none() {
        return Err(CliError::parse(path, "missing '#' option line"));
    }
    sweep_from_rows(path, &freqs, samples, window, zero_pad_factor)
}

pub fn ingest_touchstone(path: &Path, window: Window, zero_pad_factor: usize) -> Result<FrequencySweep> {
    parse_touchstone(path, &read_text(path)?, window, zero_pad_factor)
}

pub fn touchstone_to_text(sweep: &FrequencySweep) -> String {
    let mut s = String::from("! one-port reflection sweep\n# Hz S RI R 50\n");
    for (k, v) in sweep.samples.iter().enumerate() {
        let _ = writeln!(s, "{} {} {}", sweep.config.frequency(k), v.re, v.im);
    }
    s
}

pub fn export_touchstone(path: &Path, sweep: &FrequencySweep) -> Result<()> {
    write_text(path, &touchstone_to_text(sweep))
}
