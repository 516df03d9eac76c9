//! Forward model: refraction through the air / vegetation / soil stack.
//!
//! Everything here is two-dimensional. The reflectors sit on the vertical
//! line `x = 0`; the radar is at horizontal offset `x0` and height
//! `h0 + h1` above the soil surface. Lengths are in metres, times in
//! nanoseconds, angles in radians measured from the vertical.
//!
//! A ray leaving the radar at angle `alpha` refracts into the vegetation at
//! `beta` (`sin alpha = n1 sin beta`) and into the soil at `gamma`
//! (`n1 sin beta = n2 sin gamma`). The one-way travel time is the
//! index-weighted sum of the straight segment lengths divided by `c`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::LayerStack;

/// Speed of light in m/ns.
pub const C_M_PER_NS: f64 = 0.299_792_458;

/// Largest angle the shooting bracket reaches.
pub const ALPHA_MAX: f64 = FRAC_PI_2 - 1e-6;

/// Radar position relative to the reflector normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    /// Signed horizontal displacement (m).
    pub x0: f64,
    /// Height above the soil surface, `h0 + h1` (m).
    pub altitude: f64,
}

impl Pose {
    pub fn new(x0: f64, altitude: f64) -> Result<Self> {
        if !x0.is_finite() || !altitude.is_finite() || altitude <= 0.0 {
            return Err(Error::Domain(format!("invalid pose x0 = {x0}, altitude = {altitude}")));
        }
        Ok(Self { x0, altitude })
    }
}

/// Which of the two ground references a ray ends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReflectorTarget {
    /// On the vegetation/soil interface.
    Surface,
    /// Buried at depth `h2` below the soil surface.
    Buried,
}

impl ReflectorTarget {
    pub fn depth(self, stack: &LayerStack) -> f64 {
        match self {
            ReflectorTarget::Surface => 0.0,
            ReflectorTarget::Buried => stack.h2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ReflectorTarget::Surface => "surface",
            ReflectorTarget::Buried => "buried",
        }
    }
}

impl std::str::FromStr for ReflectorTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "surface" => Ok(ReflectorTarget::Surface),
            "buried" => Ok(ReflectorTarget::Buried),
            other => Err(Error::Domain(format!("unknown reflector '{other}'"))),
        }
    }
}

/// One traced path from the radar to a reflector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayPath {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Horizontal position where the ray enters the vegetation.
    pub p_veg: f64,
    /// Horizontal position where the ray enters the soil.
    pub p_soil: f64,
    pub l0: f64,
    pub l1: f64,
    /// Zero for a surface reflector.
    pub l2: f64,
    /// One-way travel time (ns).
    pub tof_one_way: f64,
}

/// Snell's law, `n_in sin(theta_in) = n_out sin(theta_out)`.
pub fn snell_refract(n_in: f64, n_out: f64, theta_in: f64) -> Result<f64> {
    if !(n_in >= 1.0) || !(n_out >= 1.0) || !n_in.is_finite() || !n_out.is_finite() {
        return Err(Error::Domain(format!("refractive indices must be >= 1, got {n_in}, {n_out}")));
    }
    if !(theta_in.abs() < FRAC_PI_2) {
        return Err(Error::Domain(format!("incidence angle {theta_in} outside (-pi/2, pi/2)")));
    }
    let ratio = n_in * theta_in.sin() / n_out;
    if ratio.abs() > 1.0 {
        return Err(Error::TotalInternalReflection { ratio });
    }
    Ok(ratio.asin())
}

/// Air/vegetation and vegetation/soil crossing points for a ray leaving the
/// radar at `alpha`.
pub fn pierce_points(pose: Pose, h0: f64, h1: f64, alpha: f64, n1: f64, n2: f64) -> Result<(f64, f64)> {
    let beta = snell_refract(1.0, n1, alpha)?;
    // only checked for TIR; the soil angle does not move either crossing
    snell_refract(n1, n2, beta)?;
    let p_veg = pose.x0 - h0 * alpha.tan();
    let p_soil = p_veg - h1 * beta.tan();
    Ok((p_veg, p_soil))
}

/// Traces the three-segment path for a given departure angle.
///
/// The final segment always ends on the reflector at `x = 0`, so for an
/// arbitrary `alpha` the last kink need not obey Snell's law; it does when
/// `alpha` comes from [`shoot_alpha`]. `stack.h0` sets the air gap and only
/// `pose.x0` is read from the pose.
pub fn trace_path(pose: Pose, alpha: f64, stack: &LayerStack, target: ReflectorTarget) -> Result<RayPath> {
    if !pose.x0.is_finite() || !alpha.is_finite() {
        return Err(Error::Domain(format!("non-finite input x0 = {}, alpha = {alpha}", pose.x0)));
    }
    let (n1, n2) = (stack.n1(), stack.n2());
    let beta = snell_refract(1.0, n1, alpha)?;
    let gamma = snell_refract(n1, n2, beta)?;
    let (p_veg, p_soil) = pierce_points(pose, stack.h0, stack.h1, alpha, n1, n2)?;

    let l0 = stack.h0.hypot(pose.x0 - p_veg);
    let (l1, l2) = match target {
        ReflectorTarget::Buried => (stack.h1.hypot(p_veg - p_soil), stack.h2.hypot(p_soil)),
        ReflectorTarget::Surface => (stack.h1.hypot(p_veg), 0.0),
    };
    let tof_one_way = (l0 + n1 * l1 + n2 * l2) / C_M_PER_NS;
    Ok(RayPath { alpha, beta, gamma, p_veg, p_soil, l0, l1, l2, tof_one_way })
}

/// One-way time of flight (ns) for a ray leaving at `alpha`.
pub fn tof_model(pose: Pose, alpha: f64, stack: &LayerStack, target: ReflectorTarget) -> Result<f64> {
    trace_path(pose, alpha, stack, target).map(|p| p.tof_one_way)
}

/// Horizontal distance covered by a ray from the radar down to the target,
/// minus `|x0|`. Strictly increasing in `alpha` on `[0, pi/2)`.
fn landing_miss(alpha: f64, reach: f64, stack: &LayerStack, depth: f64) -> f64 {
    let (n1, n2) = (stack.n1(), stack.n2());
    let s = alpha.sin();
    // n_air = 1, so sin(beta) = s / n1 and sin(gamma) = s / n2
    let tan_of_sin = |sin: f64| sin / (1.0 - sin * sin).sqrt();
    stack.h0 * alpha.tan() + stack.h1 * tan_of_sin(s / n1) + depth * tan_of_sin(s / n2) - reach
}

/// Finds the physical departure angle whose refracted path lands on the
/// reflector, by bisection on `[0, ALPHA_MAX]`.
pub fn shoot_alpha(pose: Pose, stack: &LayerStack, target: ReflectorTarget) -> Result<f64> {
    stack.validate()?;
    if !pose.x0.is_finite() {
        return Err(Error::Domain(format!("non-finite x0 = {}", pose.x0)));
    }
    let reach = pose.x0.abs();
    if reach == 0.0 {
        return Ok(0.0);
    }
    let depth = target.depth(stack);
    let (mut lo, mut hi) = (0.0_f64, ALPHA_MAX);
    if landing_miss(hi, reach, stack, depth) < 0.0 {
        return Err(Error::Geometry(format!("reflector at offset {reach} m unreachable below grazing incidence")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if landing_miss(mid, reach, stack, depth) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (g_lo, g_hi) = (landing_miss(lo, reach, stack, depth), landing_miss(hi, reach, stack, depth));
    let (alpha, miss) = if g_lo.abs() <= g_hi.abs() { (lo, g_lo) } else { (hi, g_hi) };
    if miss.abs() >= 1e-9 {
        return Err(Error::Geometry(format!("landing residual {miss} m did not reach 1e-9 m")));
    }
    Ok(alpha.copysign(pose.x0))
}

/// Physical path from the radar to the reflector.
pub fn true_path(pose: Pose, stack: &LayerStack, target: ReflectorTarget) -> Result<RayPath> {
    let alpha = shoot_alpha(pose, stack, target)?;
    trace_path(pose, alpha, stack, target)
}

/// Ground-truth `(alpha, tof_one_way)` for a pose.
pub fn true_tof(pose: Pose, stack: &LayerStack, target: ReflectorTarget) -> Result<(f64, f64)> {
    true_path(pose, stack, target).map(|p| (p.alpha, p.tof_one_way))
}
