//! Joint estimation of vegetation height, vegetation permittivity and soil
//! permittivity from a set of time-of-flight observations.
//!
//! Each observation contributes one residual: the modelled one-way travel
//! time under the current guess minus the measured one. The unknowns are
//! mapped onto their box through a logistic transform, so the damped
//! Gauss-Newton loop works on an unconstrained problem and the
//! finite-difference Jacobian stays smooth near the bounds. A grid of
//! starting points guards against the local minima of the nonconvex cost.

mod lm;

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{vwc_from_permittivity, LayerStack, Vwc};
use crate::raytrace::{shoot_alpha, tof_model, Pose, ReflectorTarget, C_M_PER_NS};

/// Residual substituted when a candidate parameter set has no valid path.
pub const TIR_PENALTY_NS: f64 = 1e3;

/// Number of unknowns.
pub const UNKNOWNS: usize = 3;

/// One radar measurement of one reflector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x0: f64,
    /// Radar height above the soil surface (m).
    pub altitude: f64,
    pub tof_one_way: f64,
    /// Measured angle of arrival, if the radar has an array.
    pub aoa: Option<f64>,
    pub reflector: ReflectorTarget,
}

impl Observation {
    pub fn new(x0: f64, altitude: f64, tof_one_way: f64, aoa: Option<f64>, reflector: ReflectorTarget) -> Result<Self> {
        if !x0.is_finite() || !altitude.is_finite() || !tof_one_way.is_finite() {
            return Err(Error::Domain("non-finite observation field".into()));
        }
        if altitude <= 0.0 {
            return Err(Error::Domain(format!("altitude must be positive, got {altitude}")));
        }
        if tof_one_way <= 0.0 {
            return Err(Error::Domain(format!("time of flight must be positive, got {tof_one_way}")));
        }
        if let Some(a) = aoa {
            if !(a.abs() < std::f64::consts::FRAC_PI_2) {
                return Err(Error::Domain(format!("angle of arrival {a} outside (-pi/2, pi/2)")));
            }
        }
        Ok(Self { x0, altitude, tof_one_way, aoa, reflector })
    }

    pub fn pose(&self) -> Pose {
        Pose { x0: self.x0, altitude: self.altitude }
    }

    /// Whether the travel time exceeds the straight-line free-space time to
    /// the surface point below the reflectors. Noisy measurements may fail
    /// this without being malformed.
    pub fn beats_free_space(&self) -> bool {
        self.tof_one_way > self.x0.hypot(self.altitude) / C_M_PER_NS
    }

    fn sort_key(&self) -> (u8, f64, f64, f64, f64, bool) {
        (
            self.reflector as u8,
            self.x0.abs(),
            self.altitude,
            self.tof_one_way,
            self.aoa.map_or(-1.0, f64::abs),
            self.x0.is_sign_negative(),
        )
    }
}

/// The three quantities the inverter recovers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnknownVector {
    /// Vegetation height (m).
    pub h1: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl UnknownVector {
    pub fn new(h1: f64, eps1: f64, eps2: f64) -> Self {
        Self { h1, eps1, eps2 }
    }

    fn to_array(self) -> [f64; 3] {
        [self.h1, self.eps1, self.eps2]
    }

    fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// Layer stack seen from a radar at `altitude`.
    pub fn stack(&self, altitude: f64, reflector_depth: f64) -> LayerStack {
        LayerStack { h0: altitude - self.h1, h1: self.h1, h2: reflector_depth, eps1: self.eps1, eps2: self.eps2 }
    }
}

/// Box the solver searches. The vegetation ceiling is the lowest altitude
/// in the data set so that the air gap stays positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: UnknownVector,
    pub upper: UnknownVector,
}

impl Bounds {
    pub const EPS1_MAX: f64 = 6.0;
    pub const EPS2_MAX: f64 = 30.0;

    pub fn for_observations(observations: &[Observation]) -> Self {
        let min_alt = observations.iter().map(|o| o.altitude).fold(f64::INFINITY, f64::min);
        Self {
            lower: UnknownVector::new(0.0, 1.0, 1.0),
            upper: UnknownVector::new(min_alt, Self::EPS1_MAX, Self::EPS2_MAX),
        }
    }

    pub fn contains(&self, p: &UnknownVector) -> bool {
        let (lo, hi, v) = (self.lower.to_array(), self.upper.to_array(), p.to_array());
        (0..UNKNOWNS).all(|i| v[i] >= lo[i] && v[i] <= hi[i])
    }

    fn params_at(&self, u: &Vector3<f64>) -> UnknownVector {
        let (lo, hi) = (self.lower.to_array(), self.upper.to_array());
        UnknownVector::from_array(std::array::from_fn(|i| lo[i] + (hi[i] - lo[i]) * logistic(u[i])))
    }

    /// d(param)/d(u) for each coordinate.
    fn chain(&self, u: &Vector3<f64>) -> Vector3<f64> {
        let (lo, hi) = (self.lower.to_array(), self.upper.to_array());
        Vector3::from_fn(|i, _| {
            let s = logistic(u[i]);
            (hi[i] - lo[i]) * s * (1.0 - s)
        })
    }

    fn from_fraction(f: [f64; 3]) -> Vector3<f64> {
        Vector3::from_fn(|i, _| (f[i] / (1.0 - f[i])).ln())
    }
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// How the departure angle of each modelled ray is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AoaMode {
    /// Use the angle recorded in each observation.
    Measured,
    /// Straight-line angle to the reflector, ignoring refraction.
    #[serde(rename = "geometric")]
    GeometricApprox,
    /// Re-shoot the physical ray under every candidate parameter set.
    Shooting,
}

impl std::str::FromStr for AoaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "measured" => Ok(AoaMode::Measured),
            "geometric" => Ok(AoaMode::GeometricApprox),
            "shooting" => Ok(AoaMode::Shooting),
            other => Err(Error::InvalidConfig(format!("unknown AoA mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub aoa_mode: AoaMode,
    pub max_iterations: usize,
    /// Relative step size below which a run is considered converged.
    pub step_tolerance: f64,
    /// Residual norm (ns) below which a run is considered converged.
    pub residual_tolerance: f64,
    pub gradient_tolerance: f64,
    /// Starting points per axis (h1, eps1, eps2).
    pub multistart_grid: [usize; 3],
    pub damping_initial: f64,
    pub damping_growth: f64,
    pub damping_shrink: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            aoa_mode: AoaMode::Measured,
            max_iterations: 1000,
            step_tolerance: 1e-12,
            residual_tolerance: 1e-11,
            gradient_tolerance: 1e-18,
            multistart_grid: [3, 3, 3],
            damping_initial: 1e-3,
            damping_growth: 10.0,
            damping_shrink: 0.3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.multistart_grid.contains(&0) {
            return Err(Error::InvalidConfig("multi-start grid needs at least one point per axis".into()));
        }
        let positive = [self.step_tolerance, self.residual_tolerance, self.gradient_tolerance, self.damping_initial];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidConfig("tolerances and initial damping must be positive".into()));
        }
        if !(self.damping_growth > 1.0) || !(self.damping_shrink > 0.0 && self.damping_shrink < 1.0) {
            return Err(Error::InvalidConfig("damping growth must exceed 1 and shrink lie in (0, 1)".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }

    fn lm_options(&self) -> lm::LmOptions {
        lm::LmOptions {
            max_iterations: self.max_iterations,
            step_tolerance: self.step_tolerance,
            residual_tolerance: self.residual_tolerance,
            gradient_tolerance: self.gradient_tolerance,
            damping_initial: self.damping_initial,
            damping_growth: self.damping_growth,
            damping_shrink: self.damping_shrink,
            fd_relative_step: FD_RELATIVE_STEP,
        }
    }
}

const FD_RELATIVE_STEP: f64 = 1e-6;

/// Smallest-to-largest singular value ratio below which the Jacobian is
/// flagged as rank deficient.
pub const DEGENERACY_RATIO: f64 = 1e-6;

/// Outcome of one multi-start run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartRecord {
    pub initial: UnknownVector,
    pub initial_residual_norm: f64,
    pub params: UnknownVector,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub params: UnknownVector,
    /// Euclidean norm of the residual vector (ns).
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The Jacobian at the solution is numerically rank deficient.
    pub degenerate: bool,
    pub starts_tried: usize,
    pub starts: Vec<StartRecord>,
}

/// Straight-line angle from the radar to the foot of the reflector normal.
pub fn aoa_geometric(obs: &Observation) -> f64 {
    (obs.x0 / obs.altitude).atan()
}

fn residual_one(theta: &UnknownVector, obs: &Observation, reflector_depth: f64, mode: AoaMode) -> f64 {
    let stack = theta.stack(obs.altitude, reflector_depth);
    let pose = obs.pose();
    let alpha = match mode {
        AoaMode::Measured => match obs.aoa {
            Some(a) => Ok(a),
            None => Err(Error::Domain("missing AoA".into())),
        },
        AoaMode::GeometricApprox => Ok(aoa_geometric(obs)),
        AoaMode::Shooting => shoot_alpha(pose, &stack, obs.reflector),
    };
    match alpha.and_then(|a| tof_model(pose, a, &stack, obs.reflector)) {
        Ok(tof) if tof.is_finite() => tof - obs.tof_one_way,
        _ => TIR_PENALTY_NS,
    }
}

/// Modelled minus measured one-way time of flight (ns), one entry per
/// observation.
pub fn residuals(
    theta: &UnknownVector,
    observations: &[Observation],
    reflector_depth: f64,
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    check_inputs(observations, reflector_depth, config)?;
    if !(theta.h1 < observations.iter().map(|o| o.altitude).fold(f64::INFINITY, f64::min)) {
        return Err(Error::Domain(format!("vegetation height {} reaches the radar", theta.h1)));
    }
    Ok(observations.iter().map(|o| residual_one(theta, o, reflector_depth, config.aoa_mode)).collect())
}

fn check_inputs(observations: &[Observation], reflector_depth: f64, config: &SolverConfig) -> Result<()> {
    if observations.is_empty() {
        return Err(Error::UnderDetermined { residuals: 0, unknowns: UNKNOWNS });
    }
    if !(reflector_depth > 0.0) || !reflector_depth.is_finite() {
        return Err(Error::Domain(format!("reflector depth must be positive, got {reflector_depth}")));
    }
    if config.aoa_mode == AoaMode::Measured && observations.iter().any(|o| o.aoa.is_none()) {
        return Err(Error::InvalidConfig("measured AoA mode needs an angle on every observation".into()));
    }
    Ok(())
}

fn grid_fractions(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}

/// Multi-start damped least squares over `(h1, eps1, eps2)`.
///
/// `reflector_depth` is the known burial depth of the lower reflector.
/// Observations are put into a canonical order first, so the result does
/// not depend on the order they were collected in.
pub fn solve(observations: &[Observation], reflector_depth: f64, config: &SolverConfig) -> Result<EstimationResult> {
    config.validate()?;
    check_inputs(observations, reflector_depth, config)?;
    if observations.len() < UNKNOWNS {
        return Err(Error::UnderDetermined { residuals: observations.len(), unknowns: UNKNOWNS });
    }

    let mut obs = observations.to_vec();
    obs.sort_by(|a, b| a.sort_key().partial_cmp(&b.sort_key()).unwrap_or(std::cmp::Ordering::Equal));

    let bounds = Bounds::for_observations(&obs);
    let mode = config.aoa_mode;
    let model = |u: &Vector3<f64>| {
        let theta = bounds.params_at(u);
        DVector::from_iterator(obs.len(), obs.iter().map(|o| residual_one(&theta, o, reflector_depth, mode)))
    };

    let opts = config.lm_options();
    let [nh, ne1, ne2] = config.multistart_grid;
    let mut starts = Vec::with_capacity(nh * ne1 * ne2);
    let mut best: Option<(usize, Vector3<f64>)> = None;

    for &fh in &grid_fractions(nh) {
        for &fe1 in &grid_fractions(ne1) {
            for &fe2 in &grid_fractions(ne2) {
                let u0 = Bounds::from_fraction([fh, fe1, fe2]);
                let initial_residual_norm = model(&u0).norm();
                let out = lm::minimize(model, u0, &opts);
                let residual_norm = out.residuals.norm();
                let record = StartRecord {
                    initial: bounds.params_at(&u0),
                    initial_residual_norm,
                    params: bounds.params_at(&out.u),
                    residual_norm,
                    iterations: out.iterations,
                    converged: out.converged,
                };
                let better = match best {
                    None => true,
                    Some((i, _)) => {
                        let cur: &StartRecord = &starts[i];
                        (record.converged && !cur.converged)
                            || (record.converged == cur.converged && residual_norm < cur.residual_norm)
                    }
                };
                if better {
                    best = Some((starts.len(), out.u));
                }
                starts.push(record);
            }
        }
    }

    let (best_idx, best_u) = best.expect("grid has at least one start");
    let chosen = starts[best_idx];
    if !chosen.converged {
        return Err(Error::NonConvergence {
            starts: starts.len(),
            best_residual_norm: chosen.residual_norm,
            best_effort: chosen.params,
        });
    }

    let degenerate = is_degenerate(&model, &bounds, &best_u, obs.len());
    Ok(EstimationResult {
        params: chosen.params,
        residual_norm: chosen.residual_norm,
        iterations: chosen.iterations,
        converged: chosen.converged,
        degenerate,
        starts_tried: starts.len(),
        starts,
    })
}

fn is_degenerate<F>(model: &F, bounds: &Bounds, u: &Vector3<f64>, m: usize) -> bool
where
    F: Fn(&Vector3<f64>) -> DVector<f64>,
{
    // Jacobian with respect to the physical parameters
    let mut jac = lm::jacobian(model, u, m, FD_RELATIVE_STEP);
    let chain = bounds.chain(u);
    for j in 0..UNKNOWNS {
        if chain[j] <= 0.0 {
            return true;
        }
        jac.column_mut(j).unscale_mut(chain[j]);
    }
    let sv = jac.singular_values();
    let (max, min) = (sv.max(), sv.min());
    !(max > 0.0) || min < DEGENERACY_RATIO * max
}

/// Soil moisture implied by a converged estimate.
pub fn vwc_of(result: &EstimationResult) -> Result<Vwc> {
    if !result.converged {
        return Err(Error::NotConverged);
    }
    vwc_from_permittivity(result.params.eps2)
}
