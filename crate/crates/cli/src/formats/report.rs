//! Monte Carlo report files.
//!
//! `summary.csv` holds one row per configuration, `table.txt` the same
//! medians transposed (one row per quantity, one column per configuration),
//! `errors_<label>.csv` the per-scenario record and `cdf_<label>.csv` the
//! empirical CDF of each error axis.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use soilradar::harness::{ConfigReport, ErrorTriple, RunReport};

use super::write_text;
use crate::error::Result;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_csv(report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# schema: soilradar-summary/1");
    let _ = writeln!(s, "# master_seed: {}", report.master_seed);
    let _ = writeln!(s, "configuration,runs,failures,median_vwc_pp,median_eps1,median_h1_cm");
    for c in &report.configs {
        let m = c.medians;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            c.label,
            c.outcomes.len(),
            c.failures,
            opt(m.map(|m| m.vwc_pp)),
            opt(m.map(|m| m.eps1)),
            opt(m.map(|m| m.h1_cm))
        );
    }
    s
}

pub fn summary_table(report: &RunReport) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<36}", "median absolute error");
    for c in &report.configs {
        let _ = write!(s, " {:>22}", c.label);
    }
    s.push('\n');
    type Row = (&'static str, fn(&ErrorTriple) -> f64, usize);
    let rows: [Row; 3] = [
        ("vegetation permittivity", |m| m.eps1, 3),
        ("vegetation height (cm)", |m| m.h1_cm, 1),
        ("soil VWC (percentage points)", |m| m.vwc_pp, 3),
    ];
    for (name, pick, prec) in rows {
        let _ = write!(s, "{name:<36}");
        for c in &report.configs {
            match c.medians.as_ref() {
                Some(m) => {
                    let _ = write!(s, " {:>22.prec$}", pick(m));
                }
                None => {
                    let _ = write!(s, " {:>22}", "-");
                }
            }
        }
        s.push('\n');
    }
    let _ = write!(s, "{:<36}", "failed scenarios");
    for c in &report.configs {
        let _ = write!(s, " {:>22}", format!("{}/{}", c.failures, c.outcomes.len()));
    }
    s.push('\n');
    s
}

pub fn errors_csv(config: &ConfigReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# schema: soilradar-errors/1");
    let _ = writeln!(s, "# configuration: {}", config.label);
    let _ = writeln!(
        s,
        "scenario,h1_true_m,eps1_true,eps2_true,h1_est_m,eps1_est,eps2_est,vwc_err_pp,eps1_err,h1_err_cm,degenerate,failure"
    );
    for o in &config.outcomes {
        let e = o.estimate;
        let err = o.errors;
        let failure = o.failure.as_deref().unwrap_or("").replace([',', '\n'], ";");
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            o.index,
            o.truth.h1,
            o.truth.eps1,
            o.truth.eps2,
            opt(e.map(|e| e.h1)),
            opt(e.map(|e| e.eps1)),
            opt(e.map(|e| e.eps2)),
            opt(err.map(|e| e.vwc_pp)),
            opt(err.map(|e| e.eps1)),
            opt(err.map(|e| e.h1_cm)),
            o.degenerate,
            failure
        );
    }
    s
}

pub fn cdf_csv(config: &ConfigReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# schema: soilradar-cdf/1");
    let _ = writeln!(s, "# configuration: {}", config.label);
    let _ = writeln!(s, "quantity,abs_error,cumulative_fraction");
    if let Some(c) = &config.cdfs {
        for (name, table) in [("vwc_pp", &c.vwc_pp), ("eps1", &c.eps1), ("h1_cm", &c.h1_cm)] {
            for (x, f) in table {
                let _ = writeln!(s, "{name},{x},{f}");
            }
        }
    }
    s
}

/// Writes every report file into `dir` and returns their paths.
pub fn write_report(dir: &Path, report: &RunReport) -> Result<Vec<PathBuf>> {
    let mut files =
        vec![(dir.join("summary.csv"), summary_csv(report)), (dir.join("table.txt"), summary_table(report))];
    for c in &report.configs {
        files.push((dir.join(format!("errors_{}.csv", c.label)), errors_csv(c)));
        files.push((dir.join(format!("cdf_{}.csv", c.label)), cdf_csv(c)));
    }
    for (path, text) in &files {
        write_text(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
