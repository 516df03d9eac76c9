//! Subcommand implementations. Each takes a fully resolved
//! [`CampaignConfig`] and writes its outputs under `config.out_dir`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use soilradar::harness::{generate_observations, run_montecarlo, sample_scenario, stream_rng, ReflectorSet, RunReport};
use soilradar::inverse::{solve, vwc_of, AoaMode, EstimationResult};
use soilradar::layers::{vwc_from_permittivity, LayerStack};
use soilradar::sfcw::{detect_tag, synthesize_sweep, tag_separate, tdr_transform, Echo, FrequencySweep, TagDetection};
use soilradar::Error as CoreError;

use crate::config::{CampaignConfig, TrajectoryKind};
use crate::error::{CliError, Result};
use crate::formats::observations::ObservationFile;
use crate::formats::report::write_report;
use crate::formats::sweep::{load_sweep, save_sweep};
use crate::formats::touchstone::ingest_touchstone;
use crate::formats::{read_text, require_meta, split_columnar, write_text};

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub aoa_mode: Option<AoaMode>,
    pub reflectors: Option<ReflectorSet>,
    pub trajectory: Option<TrajectoryKind>,
    pub scenarios: Option<usize>,
}

impl CampaignConfig {
    /// Applies `o`; a reflector or trajectory override also narrows the
    /// Monte Carlo matrix to that single value.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out_dir = out.clone();
        }
        if let Some(mode) = o.aoa_mode {
            self.aoa_mode = mode;
        }
        if let Some(r) = o.reflectors {
            self.reflectors = r;
            self.mc_reflectors = vec![r];
        }
        if let Some(t) = o.trajectory {
            self.trajectory = t;
            self.mc_trajectories = vec![t];
        }
        if let Some(n) = o.scenarios {
            self.n_scenarios = n;
        }
    }
}

const TRUTH_SCHEMA: &str = "soilradar-truth/1";

pub fn truth_to_text(stack: &LayerStack) -> Result<String> {
    let vwc = vwc_from_permittivity(stack.eps2)?.value();
    Ok(format!(
        "# schema: {TRUTH_SCHEMA}\nh0_m,h1_m,h2_m,eps1,eps2,vwc\n{},{},{},{},{},{}\n",
        stack.h0, stack.h1, stack.h2, stack.eps1, stack.eps2, vwc
    ))
}

pub fn load_truth(path: &Path) -> Result<LayerStack> {
    let text = read_text(path)?;
    let doc = split_columnar(path, &text)?;
    if require_meta(path, &doc.meta, "schema")? != TRUTH_SCHEMA {
        return Err(CliError::parse(path, "not a truth file"));
    }
    let mut lines = doc.body.lines();
    let _header = lines.next();
    let row = lines.next().ok_or_else(|| CliError::parse(path, "no truth record"))?;
    let v: Vec<f64> = row
        .split(',')
        .map(|f| f.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::parse(path, e.to_string()))?;
    if v.len() != 6 {
        return Err(CliError::parse(path, "truth record needs 6 fields"));
    }
    Ok(LayerStack::new(v[0], v[1], v[2], v[3], v[4])?)
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub truth: LayerStack,
    pub observations: ObservationFile,
    pub observations_path: PathBuf,
    pub truth_path: PathBuf,
}

/// Samples one field, simulates the configured flight over it and writes
/// `observations.csv` plus a `truth.csv` sidecar.
pub fn cmd_synth(cfg: &CampaignConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let truth = sample_scenario(&cfg.distribution(), &mut stream_rng(cfg.seed, 0))?;
    let records = generate_observations(
        &truth,
        &cfg.trajectory_spec(cfg.trajectory),
        &cfg.noise(),
        cfg.reflectors,
        &mut stream_rng(cfg.seed, 1),
    )?;
    let observations = ObservationFile { reflector_depth: cfg.reflector_depth, records };
    let observations_path = cfg.out_dir.join("observations.csv");
    let truth_path = cfg.out_dir.join("truth.csv");
    observations.save(&observations_path)?;
    write_text(&truth_path, &truth_to_text(&truth)?)?;
    Ok(SynthOutput { truth, observations, observations_path, truth_path })
}

fn estimate_to_text(r: &EstimationResult) -> String {
    let vwc = vwc_from_permittivity(r.params.eps2.max(1.0)).map(|v| v.value()).unwrap_or(f64::NAN);
    let mut s = String::from("# schema: soilradar-estimate/1\n");
    s.push_str("h1_m,eps1,eps2,vwc,residual_norm_ns,iterations,converged,degenerate,starts_tried\n");
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{},{},{}",
        r.params.h1,
        r.params.eps1,
        r.params.eps2,
        vwc,
        r.residual_norm,
        r.iterations,
        r.converged,
        r.degenerate,
        r.starts_tried
    );
    s
}

#[derive(Debug, Clone)]
pub struct EstimateOutput {
    pub result: EstimationResult,
    pub vwc: f64,
    pub path: PathBuf,
}

/// Solves for `(h1, eps1, eps2)` from an observation file and writes
/// `estimate.csv`. On non-convergence the best-effort parameters are still
/// written before the error is returned.
pub fn cmd_estimate(observations: &Path, cfg: &CampaignConfig, round_trip: bool) -> Result<EstimateOutput> {
    let solver = cfg.solver();
    solver.validate()?;
    let file = ObservationFile::load(observations, round_trip)?;
    let path = cfg.out_dir.join("estimate.csv");
    match solve(&file.records, file.reflector_depth, &solver) {
        Ok(result) => {
            let vwc = vwc_of(&result)?.value();
            write_text(&path, &estimate_to_text(&result))?;
            Ok(EstimateOutput { result, vwc, path })
        }
        Err(CoreError::NonConvergence { starts, best_residual_norm, best_effort }) => {
            let partial = EstimationResult {
                params: best_effort,
                residual_norm: best_residual_norm,
                iterations: solver.max_iterations,
                converged: false,
                degenerate: false,
                starts_tried: starts,
                starts: Vec::new(),
            };
            write_text(&path, &estimate_to_text(&partial))?;
            Err(CoreError::NonConvergence { starts, best_residual_norm, best_effort }.into())
        }
        Err(e) => Err(e.into()),
    }
}

/// Runs the configured experiment matrix and writes the report files.
pub fn cmd_montecarlo(cfg: &CampaignConfig) -> Result<(RunReport, Vec<PathBuf>)> {
    cfg.validate()?;
    let report = run_montecarlo(cfg.n_scenarios, &cfg.distribution(), &cfg.run_configs(), cfg.seed, cfg.parallel)?;
    let files = write_report(&cfg.out_dir, &report)?;
    Ok((report, files))
}

/// Where the radar sweeps come from.
#[derive(Debug, Clone)]
pub enum RadarInput {
    /// Capture files (sweep CSV, or Touchstone when the extension is `.s1p`).
    /// With a tag-off capture, the pair is differenced before detection.
    Captures { on: PathBuf, off: Option<PathBuf> },
    /// Static `clutter` in both tag states, `tags` only in the on state.
    Synthetic { clutter: Vec<Echo>, tags: Vec<Echo>, noise_std: f64 },
}

fn is_touchstone(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("s1p"))
}

pub fn load_capture(path: &Path, cfg: &CampaignConfig) -> Result<FrequencySweep> {
    if is_touchstone(path) {
        ingest_touchstone(path, cfg.window, cfg.zero_pad_factor)
    } else {
        load_sweep(path, cfg.window, cfg.zero_pad_factor)
    }
}

#[derive(Debug, Clone)]
pub struct RadarOutput {
    pub detections: Vec<((f64, f64), TagDetection)>,
    pub path: PathBuf,
}

/// Sweep(s) to TDR profile to per-window delay estimates. With no windows the
/// whole unambiguous span is searched.
pub fn cmd_radar(input: &RadarInput, windows: &[(f64, f64)], cfg: &CampaignConfig) -> Result<RadarOutput> {
    let sweep_cfg = cfg.sweep();
    let sweep = match input {
        RadarInput::Captures { on, off } => {
            let on_sweep = load_capture(on, cfg)?;
            match off {
                Some(off) => tag_separate(&on_sweep, &load_capture(off, cfg)?)?,
                None => on_sweep,
            }
        }
        RadarInput::Synthetic { clutter, tags, noise_std } => {
            let mut all = clutter.clone();
            all.extend_from_slice(tags);
            let on = synthesize_sweep(&all, &sweep_cfg, *noise_std, &mut stream_rng(cfg.seed, 0))?;
            if tags.is_empty() {
                on
            } else {
                let off = synthesize_sweep(clutter, &sweep_cfg, *noise_std, &mut stream_rng(cfg.seed, 1))?;
                tag_separate(&on, &off)?
            }
        }
    };
    save_sweep(&cfg.out_dir.join("sweep.csv"), &sweep)?;
    let profile = tdr_transform(&sweep);

    let mut tdr = String::from("# schema: soilradar-tdr/1\ndelay_rt_ns,magnitude\n");
    for (t, m) in profile.time_axis.iter().zip(&profile.magnitude) {
        let _ = writeln!(tdr, "{t},{m}");
    }
    write_text(&cfg.out_dir.join("tdr.csv"), &tdr)?;

    let default_window = [(0.0, sweep.config.unambiguous_span_ns())];
    let windows = if windows.is_empty() { &default_window[..] } else { windows };
    let mut detections = Vec::with_capacity(windows.len());
    let mut text = String::from(
        "# schema: soilradar-detections/1\nwindow_lo_ns,window_hi_ns,tof_round_trip_ns,tof_one_way_ns,amplitude,snr_db\n",
    );
    for &w in windows {
        let det = detect_tag(&profile, w, cfg.min_snr_db)?;
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            w.0, w.1, det.tof_round_trip, det.tof_one_way, det.amplitude, det.snr_db
        );
        detections.push((w, det));
    }
    let path = cfg.out_dir.join("detections.csv");
    write_text(&path, &text)?;
    Ok(RadarOutput { detections, path })
}

/// Normalizes an external file: a Touchstone capture becomes `sweep.csv`,
/// an observation file becomes a one-way `observations.csv`.
pub fn cmd_ingest(input: &Path, cfg: &CampaignConfig, round_trip: bool) -> Result<PathBuf> {
    if is_touchstone(input) {
        let sweep = ingest_touchstone(input, cfg.window, cfg.zero_pad_factor)?;
        let out = cfg.out_dir.join("sweep.csv");
        save_sweep(&out, &sweep)?;
        Ok(out)
    } else {
        let file = ObservationFile::load(input, round_trip)?;
        let out = cfg.out_dir.join("observations.csv");
        file.save(&out)?;
        Ok(out)
    }
}

/// Parses `delay:amplitude[:phase]`.
pub fn parse_echo(spec: &str) -> Result<Echo> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad echo '{spec}', expected delay_ns:amplitude[:phase_rad]")))
    };
    match parts.as_slice() {
        [d, a] => Ok(Echo::new(num(d)?, num(a)?, 0.0)),
        [d, a, p] => Ok(Echo::new(num(d)?, num(a)?, num(p)?)),
        _ => Err(CliError::Config(format!("bad echo '{spec}', expected delay_ns:amplitude[:phase_rad]"))),
    }
}

/// Parses `lo:hi` in round-trip nanoseconds.
pub fn parse_window(spec: &str) -> Result<(f64, f64)> {
    let bad = || CliError::Config(format!("bad window '{spec}', expected lo_ns:hi_ns"));
    let (lo, hi) = spec.split_once(':').ok_or_else(bad)?;
    let (lo, hi) = (lo.trim().parse::<f64>().map_err(|_| bad())?, hi.trim().parse::<f64>().map_err(|_| bad())?);
    if !(lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}
