//! Dielectric layer geometry, refractive index and the Topp soil-moisture
//! polynomial.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Topp et al. (1980) cubic, coefficients in ascending powers of ε.
const TOPP: [f64; 4] = [-5.3e-2, 2.92e-2, -5.5e-4, 4.3e-6];

/// Upper end of the permittivity range the inverse Topp mapping searches.
pub const TOPP_EPS_MAX: f64 = 40.0;

/// Three homogeneous layers above a buried reflector: air (`h0`),
/// vegetation (`h1`, `eps1`) and soil down to the reflector (`h2`, `eps2`).
///
/// Only `h0 + h1` (the altitude) is ever observable; the split is one of the
/// unknowns the inverter recovers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl LayerStack {
    pub fn new(h0: f64, h1: f64, h2: f64, eps1: f64, eps2: f64) -> Result<Self> {
        let stack = Self { h0, h1, h2, eps1, eps2 };
        stack.validate()?;
        Ok(stack)
    }

    /// Builds a stack from the measured altitude rather than the air gap.
    pub fn from_altitude(altitude: f64, h1: f64, h2: f64, eps1: f64, eps2: f64) -> Result<Self> {
        Self::new(altitude - h1, h1, h2, eps1, eps2)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.h0, self.h1, self.h2, self.eps1, self.eps2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite layer parameter in {self:?}")));
        }
        if self.h0 <= 0.0 {
            return Err(Error::Domain(format!("air layer height must be positive, got {}", self.h0)));
        }
        if self.h1 < 0.0 {
            return Err(Error::Domain(format!("vegetation height must be non-negative, got {}", self.h1)));
        }
        if self.h2 <= 0.0 {
            return Err(Error::Domain(format!("reflector depth must be positive, got {}", self.h2)));
        }
        if self.eps1 < 1.0 || self.eps2 < 1.0 {
            return Err(Error::Domain(format!(
                "relative permittivity below vacuum: eps1 = {}, eps2 = {}",
                self.eps1, self.eps2
            )));
        }
        Ok(())
    }

    /// Radar height above the soil surface, `h0 + h1`.
    pub fn altitude(&self) -> f64 {
        self.h0 + self.h1
    }

    pub fn n1(&self) -> f64 {
        self.eps1.sqrt()
    }

    pub fn n2(&self) -> f64 {
        self.eps2.sqrt()
    }
}

/// Volumetric water content as a fraction in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Vwc(f64);

impl Vwc {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Domain(format!("VWC must lie in [0, 1], got {value}")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Same quantity in percentage points.
    pub fn percent(self) -> f64 {
        self.0 * 100.0
    }
}

/// Refractive index `n = sqrt(eps)`, the weight of a path segment in the
/// travel-time sum.
pub fn refractive_index(eps: f64) -> Result<f64> {
    if !(eps >= 1.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("relative permittivity must be >= 1, got {eps}")));
    }
    Ok(eps.sqrt())
}

fn topp(eps: f64) -> f64 {
    TOPP.iter().rev().fold(0.0, |acc, &c| acc * eps + c)
}

/// Topp polynomial, clamped below at zero for very dry soil.
pub fn vwc_from_permittivity(eps: f64) -> Result<Vwc> {
    if !(eps >= 1.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("relative permittivity must be >= 1, got {eps}")));
    }
    // the upper clamp never binds on [1, 40]
    Ok(Vwc(topp(eps).clamp(0.0, 1.0)))
}

/// Inverse of [`vwc_from_permittivity`] on `[eps_root, 40]`, where
/// `eps_root` is the zero crossing of the cubic.
pub fn permittivity_from_vwc(vwc: Vwc) -> Result<f64> {
    let target = vwc.value();
    let max = topp(TOPP_EPS_MAX);
    if target > max {
        return Err(Error::Domain(format!(
            "VWC {target} exceeds the attainable maximum {max} at eps = {TOPP_EPS_MAX}"
        )));
    }
    // the cubic is strictly increasing on [1, 40] (its derivative has no real root)
    let (mut lo, mut hi) = (1.0_f64, TOPP_EPS_MAX);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if topp(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn refractive_index_values() {
        assert_eq!(refractive_index(1.0).unwrap(), 1.0);
        assert_eq!(refractive_index(9.0).unwrap(), 3.0);
        assert_abs_diff_eq!(refractive_index(1.44).unwrap(), 1.2, epsilon = 1e-15);
        assert!(matches!(refractive_index(0.99), Err(Error::Domain(_))));
        assert!(refractive_index(f64::NAN).is_err());
    }

    #[test]
    fn topp_anchors() {
        assert_abs_diff_eq!(vwc_from_permittivity(20.0).unwrap().value(), 0.345, epsilon = 1e-3);
        let dry = vwc_from_permittivity(2.0).unwrap().value();
        assert_abs_diff_eq!(dry, 0.0032344, epsilon = 1e-7);
        assert_eq!(vwc_from_permittivity(1.0).unwrap().value(), 0.0);
        assert!(vwc_from_permittivity(0.5).is_err());
    }

    // roots of the cubic computed with numpy.roots
    #[test]
    fn inverse_topp_matches_polynomial_roots() {
        let cases = [(0.0, 1.8807119164791253), (0.1, 5.856098543165517), (0.345, 19.96766225715678)];
        for (vwc, eps) in cases {
            let got = permittivity_from_vwc(Vwc::new(vwc).unwrap()).unwrap();
            assert_abs_diff_eq!(got, eps, epsilon = 1e-6);
        }
        assert!(permittivity_from_vwc(Vwc::new(0.6).unwrap()).is_err());
        assert!(Vwc::new(-0.1).is_err());
    }

    #[test]
    fn stack_validation() {
        assert!(LayerStack::new(10.0, 1.0, 0.15, 1.44, 9.0).is_ok());
        assert!(LayerStack::new(0.0, 1.0, 0.15, 1.44, 9.0).is_err());
        assert!(LayerStack::new(10.0, -0.1, 0.15, 1.44, 9.0).is_err());
        assert!(LayerStack::new(10.0, 1.0, 0.0, 1.44, 9.0).is_err());
        assert!(LayerStack::new(10.0, 1.0, 0.15, 0.9, 9.0).is_err());
        let s = LayerStack::from_altitude(11.0, 1.0, 0.15, 1.44, 9.0).unwrap();
        assert_eq!(s.h0, 10.0);
        assert_eq!(s.altitude(), 11.0);
    }

    proptest! {
        #[test]
        fn topp_round_trip(eps in 2.0f64..40.0) {
            let vwc = vwc_from_permittivity(eps).unwrap();
            let back = permittivity_from_vwc(vwc).unwrap();
            prop_assert!((back - eps).abs() < 1e-5);
        }

        #[test]
        fn topp_monotone(a in 1.0f64..40.0, b in 1.0f64..40.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(vwc_from_permittivity(lo).unwrap() <= vwc_from_permittivity(hi).unwrap());
        }

        #[test]
        fn index_squares_back(eps in 1.0f64..40.0) {
            let n = refractive_index(eps).unwrap();
            prop_assert!((n * n - eps).abs() < 1e-12);
        }
    }
}
