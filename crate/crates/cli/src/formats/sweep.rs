//! Columnar sweep captures.
//!
//! ```text
//! # schema: soilradar-sweep/1
//! freq_hz,re,im
//! 1500000000,0.41,-0.12
//! ```
//!
//! Window and zero padding are processing choices, not part of the capture;
//! the loader takes them from the caller.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use soilradar::sfcw::{FrequencySweep, SweepConfig, Window};

use super::{check_header, csv_reader, parse_f64, read_text, require_meta, split_columnar, write_text};
use crate::error::{CliError, Result};

pub const SCHEMA: &str = "soilradar-sweep/1";
const HEADER: [&str; 3] = ["freq_hz", "re", "im"];

/// Relative tolerance on the frequency step.
pub const STEP_TOLERANCE: f64 = 1e-6;

/// Builds a sweep from `(line, frequency)` rows, checking the grid is strictly
/// increasing and uniform.
pub(crate) fn sweep_from_rows(
    path: &Path,
    freqs: &[(usize, f64)],
    samples: Vec<Complex64>,
    window: Window,
    zero_pad_factor: usize,
) -> Result<FrequencySweep> {
    if freqs.len() < 2 {
        return Err(CliError::parse(path, format!("a sweep needs at least 2 points, found {}", freqs.len())));
    }
    let (f_start, f_stop) = (freqs[0].1, freqs[freqs.len() - 1].1);
    for w in freqs.windows(2) {
        if !(w[1].1 > w[0].1) {
            return Err(CliError::parse(path, format!("line {}: frequency {} Hz does not increase", w[1].0, w[1].1)));
        }
    }
    let step = (f_stop - f_start) / (freqs.len() - 1) as f64;
    for w in freqs.windows(2) {
        let d = w[1].1 - w[0].1;
        if (d - step).abs() > STEP_TOLERANCE * step {
            return Err(CliError::parse(
                path,
                format!("line {}: frequency step {d} Hz breaks the uniform grid of {step} Hz", w[1].0),
            ));
        }
    }
    let config = SweepConfig { f_start, f_stop, n_points: freqs.len(), window, zero_pad_factor };
    FrequencySweep::new(config, samples).map_err(|e| CliError::parse(path, e.to_string()))
}

pub fn sweep_to_text(sweep: &FrequencySweep) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# schema: {SCHEMA}");
    let _ = writeln!(s, "{}", HEADER.join(","));
    for (k, v) in sweep.samples.iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", sweep.config.frequency(k), v.re, v.im);
    }
    s
}

pub fn save_sweep(path: &Path, sweep: &FrequencySweep) -> Result<()> {
    write_text(path, &sweep_to_text(sweep))
}

pub fn parse_sweep(path: &Path, text: &str, window: Window, zero_pad_factor: usize) -> Result<FrequencySweep> {
    let doc = split_columnar(path, text)?;
    let schema = require_meta(path, &doc.meta, "schema")?;
    if schema != SCHEMA {
        return Err(CliError::parse(path, format!("unsupported schema '{schema}', expected '{SCHEMA}'")));
    }
    let mut rdr = csv_reader(doc.body);
    let headers = rdr.headers().map_err(|e| CliError::parse(path, e.to_string()))?.clone();
    check_header(path, doc.header_line, &headers, &HEADER)?;
    let mut freqs = Vec::new();
    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::parse(path, e.to_string()))?;
        let line = doc.header_line - 1 + rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(CliError::parse(path, format!("line {line}: expected 3 fields, found {}", rec.len())));
        }
        freqs.push((line, parse_f64(path, line, HEADER[0], &rec[0])?));
        samples.push(Complex64::new(
            parse_f64(path, line, HEADER[1], &rec[1])?,
            parse_f64(path, line, HEADER[2], &rec[2])?,
        ));
    }
    sweep_from_rows(path, &freqs, samples, window, zero_pad_factor)
}

pub fn load_sweep(path: &Path, window: Window, zero_pad_factor: usize) -> Result<FrequencySweep> {
    parse_sweep(path, &read_text(path)?, window, zero_pad_factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("sweep.csv")
    }

    #[test]
    fn parses_and_writes_back() {
        let text = "# schema: soilradar-sweep/1\nfreq_hz,re,im\n1.5e9,1,0\n2e9,0.5,-0.5\n2.5e9,0,1\n";
        let s = parse_sweep(p(), text, Window::Hann, 8).unwrap();
        assert_eq!(s.samples.len(), 3);
        assert_eq!(s.config.step(), 5e8);
        let again = parse_sweep(p(), &sweep_to_text(&s), Window::Hann, 8).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn non_uniform_grid_names_the_row() {
        let text = "# schema: soilradar-sweep/1\nfreq_hz,re,im\n1.5e9,1,0\n1.6e9,1,0\n1.75e9,1,0\n1.8e9,1,0\n";
        let err = parse_sweep(p(), text, Window::Hann, 8).unwrap_err().to_string();
        assert!(err.contains("line 5"), "{err}");
        let text = "# schema: soilradar-sweep/1\nfreq_hz,re,im\n1.5e9,1,0\n1.5e9,1,0\n";
        let err = parse_sweep(p(), text, Window::Hann, 8).unwrap_err().to_string();
        assert!(err.contains("line 4") && err.contains("does not increase"), "{err}");
    }

    #[test]
    fn version_less_files_are_rejected() {
        assert!(parse_sweep(p(), "freq_hz,re,im\n1,0,0\n2,0,0\n", Window::Hann, 8).is_err());
        assert!(parse_sweep(p(), "# schema: soilradar-sweep/1\nf,re,im\n1,0,0\n2,0,0\n", Window::Hann, 8).is_err());
    }
}
