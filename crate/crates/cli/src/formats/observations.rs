//! Observation files.
//!
//! ```text
//! # schema: soilradar-observations/1
//! # units: m,m,ns,rad
//! # tof: one-way
//! # reflector_depth_m: 0.15
//! x0_m,altitude_m,tof_oneway_ns,aoa_rad,reflector
//! 0,10,37.93,0,buried
//! 0.5,10,37.95,,surface
//! ```
//!
//! An empty `aoa_rad` field means no angle was measured. Files declaring
//! `tof: round-trip` (with a `tof_roundtrip_ns` column) are only accepted
//! when the caller asks for halving.

use std::fmt::Write as _;
use std::path::Path;

use soilradar::inverse::Observation;
use soilradar::raytrace::ReflectorTarget;

use super::{check_header, csv_reader, parse_f64, read_text, require_meta, split_columnar, write_text};
use crate::error::{CliError, Result};

pub const SCHEMA: &str = "soilradar-observations/1";
pub const UNITS: &str = "m,m,ns,rad";
const HEADER_ONE_WAY: [&str; 5] = ["x0_m", "altitude_m", "tof_oneway_ns", "aoa_rad", "reflector"];
const HEADER_ROUND_TRIP: [&str; 5] = ["x0_m", "altitude_m", "tof_roundtrip_ns", "aoa_rad", "reflector"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TofConvention {
    OneWay,
    RoundTrip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationFile {
    /// Known burial depth of the lower reflector (m).
    pub reflector_depth: f64,
    /// Always one-way.
    pub records: Vec<Observation>,
}

impl ObservationFile {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# schema: {SCHEMA}");
        let _ = writeln!(s, "# units: {UNITS}");
        let _ = writeln!(s, "# tof: one-way");
        let _ = writeln!(s, "# reflector_depth_m: {}", self.reflector_depth);
        let _ = writeln!(s, "{}", HEADER_ONE_WAY.join(","));
        for o in &self.records {
            let aoa = o.aoa.map(|a| a.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},{}", o.x0, o.altitude, o.tof_one_way, aoa, o.reflector.as_str());
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_text())
    }

    pub fn load(path: &Path, halve_round_trip: bool) -> Result<Self> {
        Self::parse(path, &read_text(path)?, halve_round_trip)
    }

    /// `path` is only used in error messages.
    pub fn parse(path: &Path, text: &str, halve_round_trip: bool) -> Result<Self> {
        let doc = split_columnar(path, text)?;
        let schema = require_meta(path, &doc.meta, "schema")?;
        if schema != SCHEMA {
            return Err(CliError::parse(path, format!("unsupported schema '{schema}', expected '{SCHEMA}'")));
        }
        let units = require_meta(path, &doc.meta, "units")?;
        if units.replace(' ', "") != UNITS {
            return Err(CliError::parse(path, format!("units must be '{UNITS}', found '{units}'")));
        }
        let convention = match require_meta(path, &doc.meta, "tof")? {
            "one-way" => TofConvention::OneWay,
            "round-trip" => TofConvention::RoundTrip,
            other => return Err(CliError::parse(path, format!("unknown tof convention '{other}'"))),
        };
        match (convention, halve_round_trip) {
            (TofConvention::RoundTrip, false) => {
                return Err(CliError::parse(path, "file holds round-trip times; pass --round-trip to halve them"))
            }
            (TofConvention::OneWay, true) => {
                return Err(CliError::parse(path, "--round-trip given but the file declares one-way times"))
            }
            _ => {}
        }
        let depth_text = require_meta(path, &doc.meta, "reflector_depth_m")?;
        let reflector_depth = parse_f64(path, 0, "reflector_depth_m", depth_text)?;

        let mut rdr = csv_reader(doc.body);
        let headers = rdr.headers().map_err(|e| CliError::parse(path, e.to_string()))?.clone();
        let expected = match convention {
            TofConvention::OneWay => HEADER_ONE_WAY,
            TofConvention::RoundTrip => HEADER_ROUND_TRIP,
        };
        check_header(path, doc.header_line, &headers, &expected)?;

        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| CliError::parse(path, e.to_string()))?;
            let line = doc.header_line - 1 + rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 5 {
                return Err(CliError::parse(path, format!("line {line}: expected 5 fields, found {}", rec.len())));
            }
            let x0 = parse_f64(path, line, expected[0], &rec[0])?;
            let altitude = parse_f64(path, line, expected[1], &rec[1])?;
            let mut tof = parse_f64(path, line, expected[2], &rec[2])?;
            if convention == TofConvention::RoundTrip {
                tof *= 0.5;
            }
            let aoa = match &rec[3] {
                "" => None,
                f => Some(parse_f64(path, line, expected[3], f)?),
            };
            let reflector: ReflectorTarget = rec[4]
                .parse()
                .map_err(|_| CliError::parse(path, format!("line {line}: unknown reflector '{}'", &rec[4])))?;
            let obs = Observation::new(x0, altitude, tof, aoa, reflector)
                .map_err(|e| CliError::parse(path, format!("line {line}: {e}")))?;
            records.push(obs);
        }
        Ok(Self { reflector_depth, records })
    }
}
