//! Monte Carlo evaluation of the inverter over randomly drawn fields.
//!
//! A campaign draws `n` layer stacks from a [`ScenarioDistribution`], then
//! for every [`RunConfig`] generates observations along a trajectory,
//! perturbs them with a [`NoiseModel`], solves, and tabulates absolute
//! errors. Scenario `i` always draws its stack and its noise from dedicated
//! ChaCha streams of the master seed, so every configuration sees the same
//! fields and the same standard-normal draws, and results do not depend on
//! thread scheduling.

pub mod stats;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inverse::{solve, Bounds, Observation, SolverConfig, UnknownVector};
use crate::layers::{vwc_from_permittivity, LayerStack};
use crate::raytrace::{true_tof, Pose, ReflectorTarget};

pub use stats::{cdf, median_abs_error, quantile};

/// Uniform ranges the ground truth is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDistribution {
    pub eps2_range: (f64, f64),
    pub h1_range: (f64, f64),
    pub eps1_range: (f64, f64),
    /// Burial depth of the lower reflector (m).
    pub h2: f64,
    /// Radar height above the soil surface (m).
    pub altitude: f64,
}

impl Default for ScenarioDistribution {
    fn default() -> Self {
        Self { eps2_range: (2.0, 20.0), h1_range: (0.2, 2.0), eps1_range: (1.1, 5.0), h2: 0.15, altitude: 10.0 }
    }
}

impl ScenarioDistribution {
    pub fn validate(&self) -> Result<()> {
        let ordered = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ordered(self.eps2_range) || !ordered(self.h1_range) || !ordered(self.eps1_range) {
            return Err(Error::InvalidConfig("distribution ranges must be finite with lo <= hi".into()));
        }
        if !(self.h2 > 0.0) || !(self.altitude > 0.0) {
            return Err(Error::InvalidConfig("reflector depth and altitude must be positive".into()));
        }
        if self.h1_range.0 < 0.0 || self.h1_range.1 >= self.altitude {
            return Err(Error::InvalidConfig("vegetation height must lie in [0, altitude)".into()));
        }
        if self.eps1_range.0 < 1.0 || self.eps1_range.1 > Bounds::EPS1_MAX {
            return Err(Error::InvalidConfig(format!("eps1 range must lie in [1, {}]", Bounds::EPS1_MAX)));
        }
        if self.eps2_range.0 < 1.0 || self.eps2_range.1 > Bounds::EPS2_MAX {
            return Err(Error::InvalidConfig(format!("eps2 range must lie in [1, {}]", Bounds::EPS2_MAX)));
        }
        Ok(())
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Draws one ground-truth stack.
pub fn sample_scenario<R: Rng + ?Sized>(dist: &ScenarioDistribution, rng: &mut R) -> Result<LayerStack> {
    dist.validate()?;
    let eps2 = uniform(rng, dist.eps2_range);
    let h1 = uniform(rng, dist.h1_range);
    let eps1 = uniform(rng, dist.eps1_range);
    LayerStack::from_altitude(dist.altitude, h1, dist.h2, eps1, eps2)
}

/// Horizontal radar positions at which measurements are taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub displacements: Vec<f64>,
}

impl TrajectorySpec {
    /// Hovering over the reflectors, `count` repeated measurements.
    pub fn hover(count: usize) -> Self {
        Self { displacements: vec![0.0; count] }
    }

    /// Every 0.5 m from 0 to 2.5 m.
    pub fn dynamic() -> Self {
        Self { displacements: (0..6).map(|i| 0.5 * i as f64).collect() }
    }

    pub fn is_static(&self) -> bool {
        self.displacements.windows(2).all(|w| w[0] == w[1])
    }
}

/// Which reflectors are in the ground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReflectorSet {
    /// Buried reflector only.
    One,
    /// Buried plus surface reference.
    Two,
}

impl ReflectorSet {
    pub fn targets(self) -> &'static [ReflectorTarget] {
        match self {
            ReflectorSet::One => &[ReflectorTarget::Buried],
            ReflectorSet::Two => &[ReflectorTarget::Buried, ReflectorTarget::Surface],
        }
    }
}

impl std::str::FromStr for ReflectorSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" => Ok(ReflectorSet::One),
            "two" => Ok(ReflectorSet::Two),
            other => Err(Error::InvalidConfig(format!("unknown reflector set '{other}'"))),
        }
    }
}

/// Independent zero-mean Gaussian perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// One-way ToF standard deviation (ns).
    pub sigma_tof: f64,
    /// AoA standard deviation (degrees).
    pub sigma_aoa_deg: f64,
    /// Altimeter standard deviation (m).
    pub sigma_altitude: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { sigma_tof: 0.05, sigma_aoa_deg: 1.0, sigma_altitude: 0.05 }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { sigma_tof: 0.0, sigma_aoa_deg: 0.0, sigma_altitude: 0.0 }
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma_tof == 0.0 && self.sigma_aoa_deg == 0.0 && self.sigma_altitude == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let s = [self.sigma_tof, self.sigma_aoa_deg, self.sigma_altitude];
        if s.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidConfig("noise standard deviations must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Simulated measurements along `traj`.
///
/// One altimeter reading is drawn per pose and shared by the reflectors seen
/// from it; ToF and AoA noise are drawn per observation. Standard normals are
/// always drawn, even at zero sigma, so scaling the noise leaves the draw
/// sequence unchanged.
pub fn generate_observations<R: Rng + ?Sized>(
    stack: &LayerStack,
    traj: &TrajectorySpec,
    noise: &NoiseModel,
    reflectors: ReflectorSet,
    rng: &mut R,
) -> Result<Vec<Observation>> {
    stack.validate()?;
    noise.validate()?;
    if traj.displacements.is_empty() {
        return Err(Error::InvalidConfig("trajectory has no poses".into()));
    }
    let altitude = stack.altitude();
    let mut out = Vec::with_capacity(traj.displacements.len() * reflectors.targets().len());
    for &x0 in &traj.displacements {
        let pose = Pose::new(x0, altitude)?;
        let z_alt: f64 = rng.sample(StandardNormal);
        for &target in reflectors.targets() {
            let (alpha, tof) = true_tof(pose, stack, target)?;
            let z_tof: f64 = rng.sample(StandardNormal);
            let z_aoa: f64 = rng.sample(StandardNormal);
            out.push(Observation::new(
                x0,
                altitude + noise.sigma_altitude * z_alt,
                tof + noise.sigma_tof * z_tof,
                Some(alpha + noise.sigma_aoa_deg.to_radians() * z_aoa),
                target,
            )?);
        }
    }
    Ok(out)
}

/// One cell of the experiment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub trajectory: TrajectorySpec,
    pub reflectors: ReflectorSet,
    pub noise: NoiseModel,
    pub solver: SolverConfig,
}

impl RunConfig {
    /// `static|dynamic`-`one|two`-`noiseless|noisy`.
    pub fn label(&self) -> String {
        format!(
            "{}-{}-{}",
            if self.trajectory.is_static() { "static" } else { "dynamic" },
            match self.reflectors {
                ReflectorSet::One => "one",
                ReflectorSet::Two => "two",
            },
            if self.noise.is_noiseless() { "noiseless" } else { "noisy" }
        )
    }
}

/// Absolute errors of one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorTriple {
    /// Soil moisture, percentage points.
    pub vwc_pp: f64,
    pub eps1: f64,
    /// Vegetation height, centimetres.
    pub h1_cm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub index: usize,
    pub truth: LayerStack,
    pub estimate: Option<UnknownVector>,
    pub errors: Option<ErrorTriple>,
    pub degenerate: bool,
    /// Solver error message when the scenario failed.
    pub failure: Option<String>,
}

/// Cumulative fractions for each error axis.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTables {
    pub vwc_pp: Vec<(f64, f64)>,
    pub eps1: Vec<(f64, f64)>,
    pub h1_cm: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigReport {
    pub label: String,
    pub config: RunConfig,
    pub outcomes: Vec<ScenarioOutcome>,
    pub failures: usize,
    /// `None` when every scenario failed.
    pub medians: Option<ErrorTriple>,
    pub cdfs: Option<CdfTables>,
}

impl ConfigReport {
    pub fn errors(&self) -> impl Iterator<Item = &ErrorTriple> {
        self.outcomes.iter().filter_map(|o| o.errors.as_ref())
    }

    fn column(&self, pick: fn(&ErrorTriple) -> f64) -> Vec<f64> {
        self.errors().map(pick).collect()
    }

    pub fn vwc_errors(&self) -> Vec<f64> {
        self.column(|e| e.vwc_pp)
    }

    pub fn eps1_errors(&self) -> Vec<f64> {
        self.column(|e| e.eps1)
    }

    pub fn h1_errors(&self) -> Vec<f64> {
        self.column(|e| e.h1_cm)
    }

    fn summarize(label: String, config: RunConfig, outcomes: Vec<ScenarioOutcome>) -> Result<Self> {
        let mut report = Self {
            label,
            config,
            failures: outcomes.iter().filter(|o| o.failure.is_some()).count(),
            outcomes,
            medians: None,
            cdfs: None,
        };
        if report.failures < report.outcomes.len() {
            let (v, e, h) = (report.vwc_errors(), report.eps1_errors(), report.h1_errors());
            report.medians = Some(ErrorTriple {
                vwc_pp: median_abs_error(&v)?,
                eps1: median_abs_error(&e)?,
                h1_cm: median_abs_error(&h)?,
            });
            report.cdfs = Some(CdfTables { vwc_pp: cdf(&v)?, eps1: cdf(&e)?, h1_cm: cdf(&h)? });
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub n_scenarios: usize,
    pub master_seed: u64,
    pub configs: Vec<ConfigReport>,
}

impl RunReport {
    pub fn config(&self, label: &str) -> Option<&ConfigReport> {
        self.configs.iter().find(|c| c.label == label)
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<28} {:>6} {:>8} {:>14} {:>12} {:>14}",
            "configuration", "runs", "failed", "median VWC pp", "median eps1", "median h1 cm"
        )?;
        for c in &self.configs {
            match c.medians {
                Some(m) => writeln!(
                    f,
                    "{:<28} {:>6} {:>8} {:>14.4} {:>12.4} {:>14.3}",
                    c.label,
                    c.outcomes.len(),
                    c.failures,
                    m.vwc_pp,
                    m.eps1,
                    m.h1_cm
                )?,
                None => writeln!(
                    f,
                    "{:<28} {:>6} {:>8} {:>14} {:>12} {:>14}",
                    c.label,
                    c.outcomes.len(),
                    c.failures,
                    "-",
                    "-",
                    "-"
                )?,
            }
        }
        Ok(())
    }
}

/// Generator for stream `stream` of the master seed.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Absolute errors of `estimate` against `truth`.
pub fn score(truth: &LayerStack, estimate: &UnknownVector) -> Result<ErrorTriple> {
    let vwc_true = vwc_from_permittivity(truth.eps2)?.value();
    let vwc_est = vwc_from_permittivity(estimate.eps2.max(1.0))?.value();
    Ok(ErrorTriple {
        vwc_pp: (vwc_est - vwc_true).abs() * 100.0,
        eps1: (estimate.eps1 - truth.eps1).abs(),
        h1_cm: (estimate.h1 - truth.h1).abs() * 100.0,
    })
}

fn run_scenario(
    index: usize,
    dist: &ScenarioDistribution,
    configs: &[RunConfig],
    master_seed: u64,
) -> Result<Vec<ScenarioOutcome>> {
    let stream = index as u64 * 2;
    let truth = sample_scenario(dist, &mut stream_rng(master_seed, stream))?;
    let mut out = Vec::with_capacity(configs.len());
    for cfg in configs {
        let mut noise_rng = stream_rng(master_seed, stream + 1);
        let observations = generate_observations(&truth, &cfg.trajectory, &cfg.noise, cfg.reflectors, &mut noise_rng)?;
        let outcome = match solve(&observations, dist.h2, &cfg.solver) {
            Ok(est) => ScenarioOutcome {
                index,
                truth,
                estimate: Some(est.params),
                errors: Some(score(&truth, &est.params)?),
                degenerate: est.degenerate,
                failure: None,
            },
            Err(e) => ScenarioOutcome {
                index,
                truth,
                estimate: match &e {
                    Error::NonConvergence { best_effort, .. } => Some(*best_effort),
                    _ => None,
                },
                errors: None,
                degenerate: false,
                failure: Some(e.to_string()),
            },
        };
        out.push(outcome);
    }
    Ok(out)
}

/// Runs every configuration on the same `n_scenarios` sampled fields.
///
/// Solver failures are kept per scenario and excluded from the medians;
/// configuration and geometry errors abort the run.
pub fn run_montecarlo(
    n_scenarios: usize,
    dist: &ScenarioDistribution,
    configs: &[RunConfig],
    master_seed: u64,
    parallel: bool,
) -> Result<RunReport> {
    if n_scenarios == 0 {
        return Err(Error::InvalidConfig("need at least one scenario".into()));
    }
    if configs.is_empty() {
        return Err(Error::InvalidConfig("need at least one configuration".into()));
    }
    dist.validate()?;
    for cfg in configs {
        cfg.noise.validate()?;
        cfg.solver.validate()?;
        if cfg.trajectory.displacements.is_empty() {
            return Err(Error::InvalidConfig(format!("{}: empty trajectory", cfg.label())));
        }
    }

    let per_scenario: Vec<Vec<ScenarioOutcome>> = if parallel {
        (0..n_scenarios).into_par_iter().map(|i| run_scenario(i, dist, configs, master_seed)).collect::<Result<_>>()?
    } else {
        (0..n_scenarios).map(|i| run_scenario(i, dist, configs, master_seed)).collect::<Result<_>>()?
    };

    let mut columns: Vec<Vec<ScenarioOutcome>> = vec![Vec::with_capacity(n_scenarios); configs.len()];
    for row in per_scenario {
        for (col, outcome) in columns.iter_mut().zip(row) {
            col.push(outcome);
        }
    }
    let reports = configs
        .iter()
        .zip(columns)
        .map(|(cfg, outcomes)| ConfigReport::summarize(cfg.label(), cfg.clone(), outcomes))
        .collect::<Result<_>>()?;
    Ok(RunReport { n_scenarios, master_seed, configs: reports })
}
