use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use soilradar::harness::ReflectorSet;
use soilradar::inverse::AoaMode;
use soilradar_cli::commands::{
    cmd_estimate, cmd_ingest, cmd_montecarlo, cmd_radar, cmd_synth, parse_echo, parse_window, Overrides, RadarInput,
};
use soilradar_cli::config::TrajectoryKind;
use soilradar_cli::{CampaignConfig, CliError, Result};

/// Drone radar inversion of vegetation height, vegetation permittivity and
/// soil moisture.
#[derive(Parser)]
#[command(name = "soilradar", version)]
struct Cli {
    /// Campaign configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// measured | geometric | shooting
    #[arg(long, global = true)]
    aoa_mode: Option<AoaMode>,
    /// one | two
    #[arg(long, global = true)]
    reflectors: Option<ReflectorSet>,
    /// static | dynamic
    #[arg(long, global = true)]
    trajectory: Option<TrajectoryKind>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one field and simulate a flight over it.
    Synth,
    /// Estimate (h1, eps1, eps2) from an observation file.
    Estimate {
        observations: PathBuf,
        /// Input holds round-trip times; halve them.
        #[arg(long)]
        round_trip: bool,
    },
    /// Run the Monte Carlo experiment matrix.
    Montecarlo {
        /// Scenarios per configuration.
        #[arg(long)]
        scenarios: Option<usize>,
    },
    /// Sweep to TDR profile to tag delay.
    Radar {
        /// Tag-on capture (sweep CSV or .s1p).
        #[arg(long, conflicts_with_all = ["echo", "tag"])]
        on: Option<PathBuf>,
        /// Tag-off capture, differenced against --on.
        #[arg(long, requires = "on")]
        off: Option<PathBuf>,
        /// Synthetic static echo, delay_ns:amplitude[:phase_rad].
        #[arg(long)]
        echo: Vec<String>,
        /// Synthetic modulated tag echo, delay_ns:amplitude[:phase_rad].
        #[arg(long)]
        tag: Vec<String>,
        /// Complex noise standard deviation for synthetic sweeps.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Round-trip search window lo_ns:hi_ns; repeatable.
        #[arg(long)]
        window: Vec<String>,
        /// Minimum detection SNR (dB).
        #[arg(long)]
        min_snr: Option<f64>,
    },
    /// Convert a Touchstone capture or a round-trip observation file.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        round_trip: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => CampaignConfig::load(path)?,
        None => CampaignConfig::default(),
    };
    let mut overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
        aoa_mode: cli.aoa_mode,
        reflectors: cli.reflectors,
        trajectory: cli.trajectory,
        scenarios: None,
    };
    match cli.command {
        Command::Synth => {
            cfg.apply(&overrides);
            let out = cmd_synth(&cfg)?;
            println!("{} records -> {}", out.observations.records.len(), out.observations_path.display());
            println!("truth -> {}", out.truth_path.display());
        }
        Command::Estimate { observations, round_trip } => {
            cfg.apply(&overrides);
            let out = cmd_estimate(&observations, &cfg, round_trip)?;
            let p = out.result.params;
            println!("h1 = {:.4} m  eps1 = {:.4}  eps2 = {:.4}  vwc = {:.4}", p.h1, p.eps1, p.eps2, out.vwc);
            println!(
                "residual {:.3e} ns, {} iterations, {} starts{}",
                out.result.residual_norm,
                out.result.iterations,
                out.result.starts_tried,
                if out.result.degenerate { ", DEGENERATE geometry" } else { "" }
            );
        }
        Command::Montecarlo { scenarios } => {
            overrides.scenarios = scenarios;
            cfg.apply(&overrides);
            let (report, files) = cmd_montecarlo(&cfg)?;
            print!("{report}");
            println!("{} files -> {}", files.len(), cfg.out_dir.display());
        }
        Command::Radar { on, off, echo, tag, noise, window, min_snr } => {
            cfg.apply(&overrides);
            if let Some(snr) = min_snr {
                cfg.min_snr_db = snr;
            }
            let input = match on {
                Some(on) => RadarInput::Captures { on, off },
                None if echo.is_empty() && tag.is_empty() => {
                    return Err(CliError::Config("radar needs --on or at least one --echo/--tag".into()))
                }
                None => RadarInput::Synthetic {
                    clutter: echo.iter().map(|s| parse_echo(s)).collect::<Result<_>>()?,
                    tags: tag.iter().map(|s| parse_echo(s)).collect::<Result<_>>()?,
                    noise_std: noise,
                },
            };
            let windows: Vec<(f64, f64)> = window.iter().map(|s| parse_window(s)).collect::<Result<_>>()?;
            let out = cmd_radar(&input, &windows, &cfg)?;
            for ((lo, hi), d) in &out.detections {
                println!(
                    "[{lo}, {hi}] ns: round-trip {:.4} ns, one-way {:.4} ns, SNR {:.1} dB",
                    d.tof_round_trip, d.tof_one_way, d.snr_db
                );
            }
        }
        Command::Ingest { input, round_trip } => {
            cfg.apply(&overrides);
            let out = cmd_ingest(&input, &cfg, round_trip)?;
            println!("-> {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
