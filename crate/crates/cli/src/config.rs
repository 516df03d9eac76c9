//! Campaign configuration: a flat `key = value` text file (TOML subset).
//!
//! Every key is optional; missing keys take the defaults below. Unknown keys
//! are rejected so that typos do not silently fall back to defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use soilradar::harness::{NoiseModel, ReflectorSet, RunConfig, ScenarioDistribution, TrajectorySpec};
use soilradar::inverse::{AoaMode, SolverConfig};
use soilradar::sfcw::{SweepConfig, Window};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    Static,
    Dynamic,
}

impl std::str::FromStr for TrajectoryKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(TrajectoryKind::Static),
            "dynamic" => Ok(TrajectoryKind::Dynamic),
            other => Err(CliError::Config(format!("unknown trajectory '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Noiseless,
    Noisy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub seed: u64,
    pub n_scenarios: usize,

    // ground truth distribution
    pub eps2_min: f64,
    pub eps2_max: f64,
    pub h1_min: f64,
    pub h1_max: f64,
    pub eps1_min: f64,
    pub eps1_max: f64,
    pub reflector_depth: f64,
    pub altitude: f64,

    // measurement geometry
    pub trajectory: TrajectoryKind,
    pub static_count: usize,
    pub dynamic_displacements: Vec<f64>,
    pub reflectors: ReflectorSet,

    // noise; sigma_aoa in degrees
    pub sigma_tof: f64,
    pub sigma_aoa: f64,
    pub sigma_altitude: f64,

    // solver
    pub aoa_mode: AoaMode,
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub residual_tolerance: f64,
    pub gradient_tolerance: f64,
    pub multistart_h1: usize,
    pub multistart_eps1: usize,
    pub multistart_eps2: usize,
    pub damping_initial: f64,
    pub damping_growth: f64,
    pub damping_shrink: f64,

    // Monte Carlo matrix
    pub mc_trajectories: Vec<TrajectoryKind>,
    pub mc_reflectors: Vec<ReflectorSet>,
    pub mc_noise: Vec<NoiseKind>,
    pub parallel: bool,

    // sweep
    pub f_start: f64,
    pub f_stop: f64,
    pub n_points: usize,
    pub window: Window,
    pub zero_pad_factor: usize,
    pub min_snr_db: f64,

    pub out_dir: PathBuf,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let dist = ScenarioDistribution::default();
        let noise = NoiseModel::default();
        let solver = SolverConfig::default();
        let sweep = SweepConfig::default();
        Self {
            seed: 2023,
            n_scenarios: 500,
            eps2_min: dist.eps2_range.0,
            eps2_max: dist.eps2_range.1,
            h1_min: dist.h1_range.0,
            h1_max: dist.h1_range.1,
            eps1_min: dist.eps1_range.0,
            eps1_max: dist.eps1_range.1,
            reflector_depth: dist.h2,
            altitude: dist.altitude,
            trajectory: TrajectoryKind::Dynamic,
            static_count: 6,
            dynamic_displacements: TrajectorySpec::dynamic().displacements,
            reflectors: ReflectorSet::Two,
            sigma_tof: noise.sigma_tof,
            sigma_aoa: noise.sigma_aoa_deg,
            sigma_altitude: noise.sigma_altitude,
            aoa_mode: solver.aoa_mode,
            max_iterations: solver.max_iterations,
            step_tolerance: solver.step_tolerance,
            residual_tolerance: solver.residual_tolerance,
            gradient_tolerance: solver.gradient_tolerance,
            multistart_h1: solver.multistart_grid[0],
            multistart_eps1: solver.multistart_grid[1],
            multistart_eps2: solver.multistart_grid[2],
            damping_initial: solver.damping_initial,
            damping_growth: solver.damping_growth,
            damping_shrink: solver.damping_shrink,
            mc_trajectories: vec![TrajectoryKind::Static, TrajectoryKind::Dynamic],
            mc_reflectors: vec![ReflectorSet::One, ReflectorSet::Two],
            mc_noise: vec![NoiseKind::Noiseless, NoiseKind::Noisy],
            parallel: true,
            f_start: sweep.f_start,
            f_stop: sweep.f_stop,
            n_points: sweep.n_points,
            window: sweep.window,
            zero_pad_factor: sweep.zero_pad_factor,
            min_snr_db: 10.0,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl CampaignConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?).map_err(|e| CliError::io(path, e))
    }

    pub fn distribution(&self) -> ScenarioDistribution {
        ScenarioDistribution {
            eps2_range: (self.eps2_min, self.eps2_max),
            h1_range: (self.h1_min, self.h1_max),
            eps1_range: (self.eps1_min, self.eps1_max),
            h2: self.reflector_depth,
            altitude: self.altitude,
        }
    }

    pub fn trajectory_spec(&self, kind: TrajectoryKind) -> TrajectorySpec {
        match kind {
            TrajectoryKind::Static => TrajectorySpec::hover(self.static_count),
            TrajectoryKind::Dynamic => TrajectorySpec { displacements: self.dynamic_displacements.clone() },
        }
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel { sigma_tof: self.sigma_tof, sigma_aoa_deg: self.sigma_aoa, sigma_altitude: self.sigma_altitude }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            aoa_mode: self.aoa_mode,
            max_iterations: self.max_iterations,
            step_tolerance: self.step_tolerance,
            residual_tolerance: self.residual_tolerance,
            gradient_tolerance: self.gradient_tolerance,
            multistart_grid: [self.multistart_h1, self.multistart_eps1, self.multistart_eps2],
            damping_initial: self.damping_initial,
            damping_growth: self.damping_growth,
            damping_shrink: self.damping_shrink,
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            f_start: self.f_start,
            f_stop: self.f_stop,
            n_points: self.n_points,
            window: self.window,
            zero_pad_factor: self.zero_pad_factor,
        }
    }

    /// Trajectory x reflectors x noise matrix, in that nesting order.
    pub fn run_configs(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &noise in &self.mc_noise {
            for &refl in &self.mc_reflectors {
                for &traj in &self.mc_trajectories {
                    out.push(RunConfig {
                        trajectory: self.trajectory_spec(traj),
                        reflectors: refl,
                        noise: match noise {
                            NoiseKind::Noiseless => NoiseModel::noiseless(),
                            NoiseKind::Noisy => self.noise(),
                        },
                        solver: self.solver(),
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.distribution().validate()?;
        self.noise().validate()?;
        self.solver().validate()?;
        self.sweep().validate()?;
        if self.n_scenarios == 0 {
            return Err(CliError::Config("n_scenarios must be at least 1".into()));
        }
        if self.static_count == 0 || self.dynamic_displacements.is_empty() {
            return Err(CliError::Config("trajectories need at least one pose".into()));
        }
        if self.mc_trajectories.is_empty() || self.mc_reflectors.is_empty() || self.mc_noise.is_empty() {
            return Err(CliError::Config("Monte Carlo matrix has an empty axis".into()));
        }
        Ok(())
    }
}
