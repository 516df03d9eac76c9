//! Joint estimation of vegetation height, vegetation permittivity and soil
//! moisture from drone radar time-of-flight measurements over buried
//! reflectors.
//!
//! - [`layers`]: the air / vegetation / soil stack and Topp's equation.
//! - [`raytrace`]: refraction through the stack, the ToF model and an exact
//!   ray-shooting oracle.
//! - [`inverse`]: multi-start damped least squares for `(h1, eps1, eps2)`.
//! - [`harness`]: seeded Monte Carlo experiments.
//! - [`sfcw`]: stepped-frequency sweeps to TDR profiles to tag delays.
//!
//! ```
//! use soilradar::layers::{vwc_from_permittivity, LayerStack};
//! use soilradar::raytrace::{true_tof, Pose, ReflectorTarget};
//!
//! let stack = LayerStack::from_altitude(10.0, 1.0, 0.15, 2.0, 10.0)?;
//! let (alpha, tof) = true_tof(Pose::new(2.5, 10.0)?, &stack, ReflectorTarget::Buried)?;
//! assert!(alpha > 0.0 && tof > 10.0 / 0.299792458);
//! assert!(vwc_from_permittivity(stack.eps2)?.percent() > 15.0);
//! # Ok::<(), soilradar::Error>(())
//! ```
//!
//! The guide in `book/` walks through each stage with runnable listings.

pub mod error;
pub mod harness;
pub mod inverse;
pub mod layers;
pub mod raytrace;
pub mod sfcw;

pub use error::{Error, Result};
