//! Stepped-frequency continuous-wave processing: from a sampled reflection
//! coefficient sweep to a time-domain reflectometry profile and a per-tag
//! delay estimate.
//!
//! Frequencies are in Hz, delays in nanoseconds. Profile delays are round
//! trip; [`TagDetection`] carries both conventions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann if n == 1 => vec![1.0],
            Window::Hann => (0..n).map(|k| 0.5 * (1.0 - (2.0 * PI * k as f64 / (n - 1) as f64).cos())).collect(),
        }
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectangular" | "rect" => Ok(Window::Rectangular),
            "hann" => Ok(Window::Hann),
            other => Err(Error::InvalidConfig(format!("unknown window '{other}'"))),
        }
    }
}

/// Frequency grid and transform settings of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub f_start: f64,
    pub f_stop: f64,
    pub n_points: usize,
    pub window: Window,
    pub zero_pad_factor: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { f_start: 1.5e9, f_stop: 2.5e9, n_points: 201, window: Window::Hann, zero_pad_factor: 8 }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_start > 0.0) || !(self.f_stop > self.f_start) || !self.f_stop.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "need 0 < f_start < f_stop, got {} .. {}",
                self.f_start, self.f_stop
            )));
        }
        if self.n_points < 2 {
            return Err(Error::InvalidConfig("a sweep needs at least two points".into()));
        }
        if self.zero_pad_factor < 1 {
            return Err(Error::InvalidConfig("zero-pad factor must be at least 1".into()));
        }
        Ok(())
    }

    pub fn bandwidth(&self) -> f64 {
        self.f_stop - self.f_start
    }

    pub fn step(&self) -> f64 {
        self.bandwidth() / (self.n_points - 1) as f64
    }

    pub fn frequency(&self, k: usize) -> f64 {
        if k + 1 == self.n_points {
            self.f_stop
        } else {
            self.f_start + k as f64 * self.step()
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.frequency(k)).collect()
    }

    /// Round-trip delay after which echoes alias, `1 / step` (ns).
    pub fn unambiguous_span_ns(&self) -> f64 {
        1e9 / self.step()
    }

    pub fn fft_len(&self) -> usize {
        self.n_points * self.zero_pad_factor
    }

    /// Delay spacing of the zero-padded profile (ns).
    pub fn bin_spacing_ns(&self) -> f64 {
        self.unambiguous_span_ns() / self.fft_len() as f64
    }

    /// Same grid, same transform settings.
    pub fn same_grid(&self, other: &Self) -> bool {
        self == other
    }
}

/// Complex reflection coefficient per frequency step.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySweep {
    pub config: SweepConfig,
    pub samples: Vec<Complex64>,
}

impl FrequencySweep {
    pub fn new(config: SweepConfig, samples: Vec<Complex64>) -> Result<Self> {
        config.validate()?;
        if samples.len() != config.n_points {
            return Err(Error::InvalidConfig(format!(
                "{} samples for a {}-point sweep",
                samples.len(),
                config.n_points
            )));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::Domain("non-finite sweep sample".into()));
        }
        Ok(Self { config, samples })
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self { config: self.config, samples: self.samples.iter().map(|s| s * factor).collect() }
    }

    /// Sample-wise sum; both sweeps must share a grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if !self.config.same_grid(&other.config) {
            return Err(Error::ConfigMismatch(format!("{:?} vs {:?}", self.config, other.config)));
        }
        Ok(Self {
            config: self.config,
            samples: self.samples.iter().zip(&other.samples).map(|(&a, &b)| op(a, b)).collect(),
        })
    }

    /// Multiplies by `exp(-j 2 pi f delay)`, delaying every echo by `delay_ns`.
    pub fn delayed(&self, delay_ns: f64) -> Self {
        Self {
            config: self.config,
            samples: self
                .samples
                .iter()
                .enumerate()
                .map(|(k, s)| s * Complex64::from_polar(1.0, -2.0 * PI * self.config.frequency(k) * delay_ns * 1e-9))
                .collect(),
        }
    }
}

/// A point reflector in the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Echo {
    pub delay_rt_ns: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl Echo {
    pub fn new(delay_rt_ns: f64, amplitude: f64, phase: f64) -> Self {
        Self { delay_rt_ns, amplitude, phase }
    }
}

/// `S(f) = sum_k a_k exp(j phi_k) exp(-j 2 pi f tau_k)` plus circular complex
/// Gaussian noise of total standard deviation `noise_std`.
pub fn synthesize_sweep<R: Rng + ?Sized>(
    echoes: &[Echo],
    config: &SweepConfig,
    noise_std: f64,
    rng: &mut R,
) -> Result<FrequencySweep> {
    config.validate()?;
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::InvalidConfig(format!("noise std must be >= 0, got {noise_std}")));
    }
    let span = config.unambiguous_span_ns();
    for e in echoes {
        if !(e.delay_rt_ns >= 0.0 && e.delay_rt_ns < span) {
            return Err(Error::Aliased { delay_ns: e.delay_rt_ns, span_ns: span });
        }
        if !e.amplitude.is_finite() || !e.phase.is_finite() {
            return Err(Error::Domain("non-finite echo amplitude or phase".into()));
        }
    }
    let component_std = noise_std / 2f64.sqrt();
    let samples = config
        .frequencies()
        .into_iter()
        .map(|f| {
            let clean: Complex64 = echoes
                .iter()
                .map(|e| Complex64::from_polar(e.amplitude, e.phase - 2.0 * PI * f * e.delay_rt_ns * 1e-9))
                .sum();
            if noise_std > 0.0 {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                clean + Complex64::new(re, im) * component_std
            } else {
                clean
            }
        })
        .collect();
    FrequencySweep::new(*config, samples)
}

/// Time-domain reflectometry trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TdrProfile {
    /// Round-trip delay of each bin (ns).
    pub time_axis: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub complex_bins: Vec<Complex64>,
    /// Half-width of the window's main lobe, in bins.
    pub mainlobe_bins: usize,
}

impl TdrProfile {
    pub fn bin_spacing_ns(&self) -> f64 {
        if self.time_axis.len() > 1 {
            self.time_axis[1] - self.time_axis[0]
        } else {
            0.0
        }
    }
}

/// Windows, zero-pads and inverse-transforms a sweep.
///
/// The inverse DFT is scaled by `1 / L` with `L = n_points * zero_pad_factor`,
/// so `sum |bins|^2 = sum |windowed samples|^2 / L`. Bin `m` sits at round-trip
/// delay `m / (L * step)`; the start-frequency phase ramp only rotates the
/// complex bins and does not move the magnitude peak.
pub fn tdr_transform(sweep: &FrequencySweep) -> TdrProfile {
    let cfg = &sweep.config;
    let len = cfg.fft_len();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for ((slot, s), w) in buf.iter_mut().zip(&sweep.samples).zip(cfg.window.weights(cfg.n_points)) {
        *slot = s * w;
    }
    FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
    let scale = 1.0 / len as f64;
    buf.iter_mut().for_each(|b| *b *= scale);

    let spacing = cfg.bin_spacing_ns();
    let lobe = match cfg.window {
        Window::Rectangular => 1,
        Window::Hann => 2,
    };
    TdrProfile {
        time_axis: (0..len).map(|m| m as f64 * spacing).collect(),
        magnitude: buf.iter().map(|b| b.norm()).collect(),
        complex_bins: buf,
        mainlobe_bins: lobe * cfg.zero_pad_factor,
    }
}

/// Isolates the modulated reflector: the difference between the tag-on and
/// tag-off captures, in which static clutter cancels.
pub fn tag_separate(sweep_tag_on: &FrequencySweep, sweep_tag_off: &FrequencySweep) -> Result<FrequencySweep> {
    sweep_tag_on.zip_with(sweep_tag_off, |a, b| a - b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagDetection {
    pub tof_round_trip: f64,
    pub tof_one_way: f64,
    /// Interpolated peak magnitude.
    pub amplitude: f64,
    /// Peak against the median magnitude outside the main lobe.
    pub snr_db: f64,
}

/// Strongest local maximum of `profile` with round-trip delay inside
/// `search_window`, refined by a parabola through the peak bin and its two
/// neighbours.
pub fn detect_tag(profile: &TdrProfile, search_window: (f64, f64), min_snr_db: f64) -> Result<TagDetection> {
    let (lo, hi) = search_window;
    let mag = &profile.magnitude;
    let len = mag.len();
    if len < 3 {
        return Err(Error::NoDetection("profile too short".into()));
    }
    let (peak, &y0) = profile
        .time_axis
        .iter()
        .zip(mag)
        .enumerate()
        .filter(|(_, (t, _))| **t >= lo && **t <= hi)
        .map(|(i, (_, y))| (i, y))
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::NoDetection(format!("window [{lo}, {hi}] ns holds no bins")))?;
    if !(y0 > 0.0) {
        return Err(Error::NoDetection("profile is empty inside the window".into()));
    }
    let (ym, yp) = (mag[(peak + len - 1) % len], mag[(peak + 1) % len]);
    if ym > y0 || yp > y0 {
        return Err(Error::NoDetection(format!(
            "strongest bin in [{lo}, {hi}] ns is on the flank of a peak outside the window"
        )));
    }

    let curvature = ym - 2.0 * y0 + yp;
    let offset = if curvature < 0.0 { 0.5 * (ym - yp) / curvature } else { 0.0 };
    let amplitude = y0 - 0.25 * (ym - yp) * offset;
    let tof_round_trip = profile.time_axis[peak] + offset * profile.bin_spacing_ns();

    let lobe = profile.mainlobe_bins;
    let mut floor: Vec<f64> = mag
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let d = i.abs_diff(peak);
            d.min(len - d) > lobe
        })
        .map(|(_, y)| *y)
        .collect();
    let snr_db = if floor.is_empty() {
        f64::INFINITY
    } else {
        floor.sort_by(f64::total_cmp);
        let median = floor[floor.len() / 2];
        if median > 0.0 {
            20.0 * (amplitude / median).log10()
        } else {
            f64::INFINITY
        }
    };
    if snr_db < min_snr_db {
        return Err(Error::NoDetection(format!("peak SNR {snr_db:.1} dB below {min_snr_db} dB")));
    }
    Ok(TagDetection { tof_round_trip, tof_one_way: 0.5 * tof_round_trip, amplitude, snr_db })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::stream_rng;

    fn quiet(echoes: &[Echo], cfg: &SweepConfig) -> FrequencySweep {
        synthesize_sweep(echoes, cfg, 0.0, &mut stream_rng(0, 0)).unwrap()
    }

    /// Direct O(N L) inverse DFT with the same window and scaling.
    fn naive_profile(sweep: &FrequencySweep) -> Vec<Complex64> {
        let cfg = sweep.config;
        let len = cfg.fft_len();
        let w = cfg.window.weights(cfg.n_points);
        (0..len)
            .map(|m| {
                sweep
                    .samples
                    .iter()
                    .enumerate()
                    .map(|(k, s)| s * w[k] * Complex64::from_polar(1.0, 2.0 * PI * (k * m) as f64 / len as f64))
                    .sum::<Complex64>()
                    / len as f64
            })
            .collect()
    }

    #[test]
    fn grid_geometry() {
        let cfg = SweepConfig::default();
        assert_eq!(cfg.step(), 5e6);
        assert!((cfg.unambiguous_span_ns() - 200.0).abs() < 1e-9);
        assert_eq!(cfg.frequency(200), 2.5e9);
        assert!((cfg.bin_spacing_ns() - 200.0 / 1608.0).abs() < 1e-12);
    }

    #[test]
    fn synthesis_basics() {
        let cfg = SweepConfig::default();
        assert!(quiet(&[], &cfg).samples.iter().all(|s| s.norm() == 0.0));
        let one = quiet(&[Echo::new(20.0, 1.0, 0.0)], &cfg);
        assert!(one.samples.iter().all(|s| (s.norm() - 1.0).abs() < 1e-12));

        let a = Echo::new(20.0, 1.0, 0.3);
        let b = Echo::new(33.0, 0.4, -1.0);
        let both = quiet(&[a, b], &cfg);
        let sum = quiet(&[a], &cfg).add(&quiet(&[b], &cfg)).unwrap();
        for (x, y) in both.samples.iter().zip(&sum.samples) {
            assert!((x - y).norm() < 1e-12);
        }

        let err = synthesize_sweep(&[Echo::new(250.0, 1.0, 0.0)], &cfg, 0.0, &mut stream_rng(0, 0));
        assert!(matches!(err, Err(Error::Aliased { .. })));
    }

    #[test]
    fn noise_is_seeded() {
        let cfg = SweepConfig::default();
        let e = [Echo::new(20.0, 1.0, 0.0)];
        let a = synthesize_sweep(&e, &cfg, 0.1, &mut stream_rng(5, 0)).unwrap();
        let b = synthesize_sweep(&e, &cfg, 0.1, &mut stream_rng(5, 0)).unwrap();
        let c = synthesize_sweep(&e, &cfg, 0.1, &mut stream_rng(6, 0)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn fft_matches_direct_transform() {
        for window in [Window::Rectangular, Window::Hann] {
            let cfg = SweepConfig { n_points: 31, zero_pad_factor: 3, window, ..Default::default() };
            let sweep = synthesize_sweep(&[Echo::new(12.3, 0.7, 0.2)], &cfg, 0.05, &mut stream_rng(1, 0)).unwrap();
            let fast = tdr_transform(&sweep);
            for (x, y) in fast.complex_bins.iter().zip(naive_profile(&sweep)) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn single_echo_peaks_at_its_delay() {
        let cfg = SweepConfig::default();
        let profile = tdr_transform(&quiet(&[Echo::new(20.0, 1.0, 0.0)], &cfg));
        let argmax = (0..profile.magnitude.len())
            .max_by(|&a, &b| profile.magnitude[a].total_cmp(&profile.magnitude[b]))
            .unwrap();
        assert!((profile.time_axis[argmax] - 20.0).abs() <= profile.bin_spacing_ns());
        let zero = tdr_transform(&quiet(&[], &cfg));
        assert!(zero.magnitude.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn parseval_rectangular_unpadded() {
        let cfg = SweepConfig { window: Window::Rectangular, zero_pad_factor: 1, ..Default::default() };
        let sweep =
            synthesize_sweep(&[Echo::new(20.0, 1.0, 0.0), Echo::new(41.0, 0.3, 1.0)], &cfg, 0.2, &mut stream_rng(2, 0))
                .unwrap();
        let profile = tdr_transform(&sweep);
        let freq_energy: f64 = sweep.samples.iter().map(|s| s.norm_sqr()).sum();
        let time_energy: f64 = profile.complex_bins.iter().map(|b| b.norm_sqr()).sum();
        let expected = freq_energy / cfg.fft_len() as f64;
        assert!((time_energy - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn detection_and_refinement() {
        let cfg = SweepConfig::default();
        let profile = tdr_transform(&quiet(&[Echo::new(20.0, 1.0, 0.0)], &cfg));
        let det = detect_tag(&profile, (15.0, 25.0), 10.0).unwrap();
        assert!((det.tof_round_trip - 20.0).abs() < 0.05, "{det:?}");
        assert_eq!(det.tof_one_way, det.tof_round_trip / 2.0);

        let empty = tdr_transform(&quiet(&[], &cfg));
        assert!(matches!(detect_tag(&empty, (15.0, 25.0), 0.0), Err(Error::NoDetection(_))));
        // a window on the flank of the peak does not count as a detection
        assert!(matches!(detect_tag(&profile, (20.5, 21.5), 0.0), Err(Error::NoDetection(_))));
    }

    #[test]
    fn weak_peaks_are_rejected() {
        let cfg = SweepConfig::default();
        let sweep = synthesize_sweep(&[Echo::new(20.0, 0.01, 0.0)], &cfg, 1.0, &mut stream_rng(3, 0)).unwrap();
        assert!(matches!(detect_tag(&tdr_transform(&sweep), (19.0, 21.0), 20.0), Err(Error::NoDetection(_))));
    }

    #[test]
    fn separation_cancels_clutter() {
        let cfg = SweepConfig::default();
        let clutter = Echo::new(18.0, 1.0, 0.4);
        let tag = Echo::new(20.0, 0.1, 0.0);
        let on = quiet(&[clutter, tag], &cfg);
        let off = quiet(&[clutter], &cfg);
        assert!(tag_separate(&on, &on).unwrap().samples.iter().all(|s| s.norm() == 0.0));
        let diff = tag_separate(&on, &off).unwrap();
        let only_tag = quiet(&[tag], &cfg);
        for (a, b) in diff.samples.iter().zip(&only_tag.samples) {
            assert!((a - b).norm() < 1e-12);
        }
        let other = SweepConfig { n_points: 101, ..cfg };
        assert!(matches!(tag_separate(&on, &quiet(&[], &other)), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn linearity_and_shift() {
        let cfg = SweepConfig::default();
        let s1 = quiet(&[Echo::new(14.0, 1.0, 0.0)], &cfg);
        let s2 = quiet(&[Echo::new(30.0, 0.5, 2.0)], &cfg);
        let a = Complex64::new(0.7, -1.3);
        let lhs = tdr_transform(&s1.scaled(a).add(&s2).unwrap());
        let (p1, p2) = (tdr_transform(&s1), tdr_transform(&s2));
        for i in 0..lhs.complex_bins.len() {
            assert!((lhs.complex_bins[i] - (a * p1.complex_bins[i] + p2.complex_bins[i])).norm() < 1e-9);
        }

        let before = detect_tag(&p1, (10.0, 18.0), 0.0).unwrap();
        let after = detect_tag(&tdr_transform(&s1.delayed(3.3)), (13.0, 21.0), 0.0).unwrap();
        assert!((after.tof_round_trip - before.tof_round_trip - 3.3).abs() < 0.01);
    }
}
