//! Fluorescence readout: simulated Rabi traces, harmonic fits and the
//! two-subspace population combination.
//!
//! A trace drives one channel for 24 durations spread uniformly over one Rabi
//! period. The `|0⟩` population then follows
//! `p0(t) = c0 + c1 cos(2πt/T) + c2 sin(2πt/T)`, where `c0 + c1` is the
//! population at `t = 0` and `2·c0` is the total weight of the driven
//! two-level subspace.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qutrit::{embedded_rotation, Channel, DensityOperator, KET_ZERO};

/// Points per Rabi trace.
pub const TRACE_POINTS: usize = 24;
/// Above this mean the counting law is replaced by its normal approximation.
pub const NORMAL_APPROX_MEAN: f64 = 1000.0;
/// Subspaces lighter than this are treated as empty.
pub const EMPTY_SUBSPACE: f64 = 1e-9;
/// Fitted fractions further than this outside `[0, 1]` count as clamped.
pub const CLAMP_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReadoutError {
    #[error("invalid fluorescence model: {0}")]
    Model(String),
    #[error("invalid noise configuration: {0}")]
    Noise(String),
    #[error("reference levels are degenerate (bright {bright}, dark {dark})")]
    Reference { bright: f64, dark: f64 },
    #[error("trace has {0} points, expected at least 3")]
    ShortTrace(usize),
}

/// Photon yield of the two brightness levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluorescenceModel {
    /// Mean photons per shot from `m_s = ±1`.
    pub dark_yield: f64,
    /// `|0⟩` is brighter by this fraction.
    pub contrast: f64,
    /// µs
    pub readout_window: f64,
}

impl Default for FluorescenceModel {
    fn default() -> Self {
        Self {
            dark_yield: 0.02,
            contrast: 0.30,
            readout_window: 0.3,
        }
    }
}

impl FluorescenceModel {
    pub fn validate(&self) -> Result<(), ReadoutError> {
        if !(self.dark_yield.is_finite() && self.dark_yield > 0.0) {
            return Err(ReadoutError::Model(format!("dark_yield {} must be > 0", self.dark_yield)));
        }
        if !(self.contrast > 0.0 && self.contrast <= 1.0) {
            return Err(ReadoutError::Model(format!("contrast {} must be in (0, 1]", self.contrast)));
        }
        if !(self.readout_window.is_finite() && self.readout_window > 0.0) {
            return Err(ReadoutError::Model(format!(
                "readout_window {} must be > 0",
                self.readout_window
            )));
        }
        Ok(())
    }

    /// Mean photons per shot at `|0⟩` population `p0`.
    pub fn rate(&self, p0: f64) -> f64 {
        self.dark_yield * (1.0 + self.contrast * p0)
    }
}

/// Statistical and systematic noise knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub shots: u64,
    pub seed: u64,
    pub depolarizing_p: f64,
    /// Fractional error on every pulse angle.
    pub pulse_amp_error: f64,
    /// Exact expected counts, no depolarizing and no amplitude error.
    pub noiseless: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            shots: 1_000_000,
            seed: 42,
            depolarizing_p: 0.0,
            pulse_amp_error: 0.0,
            noiseless: false,
        }
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self {
            noiseless: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ReadoutError> {
        if self.shots < 1 {
            return Err(ReadoutError::Noise("shots must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.depolarizing_p) {
            return Err(ReadoutError::Noise(format!(
                "depolarizing_p {} outside [0, 1]",
                self.depolarizing_p
            )));
        }
        if !(-0.1..=0.1).contains(&self.pulse_amp_error) {
            return Err(ReadoutError::Noise(format!(
                "pulse_amp_error {} outside [-0.1, 0.1]",
                self.pulse_amp_error
            )));
        }
        Ok(())
    }

    pub fn effective_depolarizing(&self) -> f64 {
        if self.noiseless {
            0.0
        } else {
            self.depolarizing_p
        }
    }

    pub fn effective_amp_error(&self) -> f64 {
        if self.noiseless {
            0.0
        } else {
            self.pulse_amp_error
        }
    }
}

/// Identifies an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub domain: u8,
    pub major: u32,
    pub minor: u16,
    pub channel: u8,
}

impl StreamKey {
    pub fn new(domain: u8, major: u32, minor: u16) -> Self {
        Self {
            domain,
            major,
            minor,
            channel: 0,
        }
    }

    pub fn with_channel(self, channel: Channel) -> Self {
        Self {
            channel: match channel {
                Channel::Mw1 => 1,
                Channel::Mw2 => 2,
            },
            ..self
        }
    }

    fn stream_id(self) -> u64 {
        (self.domain as u64) << 56
            | (self.major as u64) << 24
            | (self.minor as u64) << 8
            | self.channel as u64
    }

    pub fn rng(self, seed: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self.stream_id());
        rng
    }
}

/// Photon totals from one driven Rabi oscillation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiTrace {
    pub channel: Channel,
    pub period: f64,
    /// µs
    pub durations: Vec<f64>,
    /// Total photons per point over all shots. Integral unless noiseless.
    pub counts: Vec<f64>,
    pub shots: u64,
}

impl RabiTrace {
    pub fn angle(&self, k: usize) -> f64 {
        TAU * self.durations[k] / self.period
    }
}

/// `TRACE_POINTS` durations uniformly covering `[0, period)`.
pub fn trace_durations(period: f64) -> Vec<f64> {
    (0..TRACE_POINTS)
        .map(|k| period * k as f64 / TRACE_POINTS as f64)
        .collect()
}

fn sample_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if mean > NORMAL_APPROX_MEAN {
        let normal = Normal::new(mean, mean.sqrt()).expect("finite positive sigma");
        normal.sample(rng).round().max(0.0)
    } else {
        Poisson::new(mean).expect("positive mean").sample(rng)
    }
}

/// Drives `state` on `channel` and records fluorescence at each duration.
pub fn simulate_rabi_trace<R: Rng + ?Sized>(
    state: &DensityOperator,
    channel: Channel,
    period: f64,
    model: &FluorescenceModel,
    noise: &NoiseConfig,
    rng: &mut R,
) -> RabiTrace {
    let durations = trace_durations(period);
    let shots = noise.shots as f64;
    let counts = durations
        .iter()
        .map(|&t| {
            let u = embedded_rotation(channel, TAU * t / period, 0.0);
            let p0 = state.evolve(&u).population(KET_ZERO);
            let mean = shots * model.rate(p0);
            if noise.noiseless {
                mean
            } else {
                sample_count(mean, rng)
            }
        })
        .collect();
    RabiTrace {
        channel,
        period,
        durations,
        counts,
        shots: noise.shots,
    }
}

/// Photons per shot for a bright (`|0⟩`) and a dark (`|±1⟩`) spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLevels {
    pub bright: f64,
    pub dark: f64,
}

impl ReferenceLevels {
    pub fn exact(model: &FluorescenceModel) -> Self {
        Self {
            bright: model.rate(1.0),
            dark: model.rate(0.0),
        }
    }

    /// Levels from a full-contrast benchmark oscillation of `|0⟩`.
    pub fn from_benchmark(trace: &RabiTrace) -> Result<Self, ReadoutError> {
        let h = harmonic_fit(trace)?;
        let amp = h.coeffs[1].hypot(h.coeffs[2]);
        let shots = trace.shots as f64;
        let levels = Self {
            bright: (h.coeffs[0] + amp) / shots,
            dark: (h.coeffs[0] - amp) / shots,
        };
        if !(levels.bright - levels.dark > 1e-6 * levels.bright.abs()) {
            return Err(ReadoutError::Reference {
                bright: levels.bright,
                dark: levels.dark,
            });
        }
        Ok(levels)
    }

    fn to_population(self, counts_per_shot: f64) -> f64 {
        (counts_per_shot - self.dark) / (self.bright - self.dark)
    }
}

struct HarmonicFit {
    coeffs: [f64; 3],
    /// Covariance of the coefficients; `None` on the degenerate fallback.
    covariance: Option<Matrix3<f64>>,
}

/// Least squares for `y = c0 + c1 cos(ωt) + c2 sin(ωt)` with `ω` known.
fn harmonic_fit_values(angles: &[f64], y: &[f64]) -> Result<HarmonicFit, ReadoutError> {
    let n = y.len();
    if n < 3 {
        return Err(ReadoutError::ShortTrace(n));
    }
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for (&a, &yk) in angles.iter().zip(y) {
        let row = Vector3::new(1.0, a.cos(), a.sin());
        normal += row * row.transpose();
        rhs += row * yk;
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let inv = match normal.try_inverse() {
        Some(inv) if normal.determinant().abs() > 1e-9 * (n as f64).powi(3) => inv,
        _ => {
            return Ok(HarmonicFit {
                coeffs: [mean, 0.0, 0.0],
                covariance: None,
            })
        }
    };
    let beta = inv * rhs;
    let rss: f64 = angles
        .iter()
        .zip(y)
        .map(|(&a, &yk)| {
            let r = yk - (beta[0] + beta[1] * a.cos() + beta[2] * a.sin());
            r * r
        })
        .sum();
    let sigma2 = if n > 3 { rss / (n - 3) as f64 } else { 0.0 };
    Ok(HarmonicFit {
        coeffs: [beta[0], beta[1], beta[2]],
        covariance: Some(inv * sigma2),
    })
}

fn harmonic_fit(trace: &RabiTrace) -> Result<HarmonicFit, ReadoutError> {
    let angles: Vec<f64> = (0..trace.durations.len()).map(|k| trace.angle(k)).collect();
    harmonic_fit_values(&angles, &trace.counts)
}

/// Populations extracted from one fitted trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubspaceFit {
    /// Fitted `|0⟩` population at `t = 0`.
    pub p0_at_zero: f64,
    /// Total population of the driven two-level subspace.
    pub subspace_total: f64,
    /// `p0_at_zero / subspace_total`, clamped to `[0, 1]`.
    pub fraction: f64,
    pub stderr: f64,
    pub clamped: bool,
}

/// Fits `trace` and converts it to population units via `reference`.
pub fn fit_trace(trace: &RabiTrace, reference: ReferenceLevels) -> Result<SubspaceFit, ReadoutError> {
    let shots = trace.shots as f64;
    let pops: Vec<f64> = trace
        .counts
        .iter()
        .map(|&n| reference.to_population(n / shots))
        .collect();
    let angles: Vec<f64> = (0..pops.len()).map(|k| trace.angle(k)).collect();
    let fit = harmonic_fit_values(&angles, &pops)?;
    let [c0, c1, _] = fit.coeffs;
    let (p0, total) = match fit.covariance {
        Some(_) => (c0 + c1, 2.0 * c0),
        None => (c0, 2.0 * c0),
    };
    if total < EMPTY_SUBSPACE {
        return Ok(SubspaceFit {
            p0_at_zero: p0,
            subspace_total: total,
            fraction: 1.0,
            stderr: 0.0,
            clamped: false,
        });
    }
    let raw = p0 / total;
    // d(raw)/d(c0, c1): raw = (c0 + c1) / (2 c0).
    let stderr = fit.covariance.map_or(0.0, |cov| {
        let g = Vector3::new(-c1 / (2.0 * c0 * c0), 1.0 / (2.0 * c0), 0.0);
        (g.transpose() * cov * g)[(0, 0)].max(0.0).sqrt()
    });
    let clamped = !(-CLAMP_SLACK..=1.0 + CLAMP_SLACK).contains(&raw);
    Ok(SubspaceFit {
        p0_at_zero: p0,
        subspace_total: total,
        fraction: raw.clamp(0.0, 1.0),
        stderr,
        clamped,
    })
}

/// `P = P1·P2 / (P1 + P2 − P1·P2)`; both zero gives zero.
pub fn combine(p1: f64, p2: f64) -> f64 {
    let den = p1 + p2 - p1 * p2;
    if den.abs() <= 1e-12 {
        0.0
    } else {
        p1 * p2 / den
    }
}

/// Standard error of [`combine`] by linear propagation.
pub fn combine_stderr(p1: f64, p2: f64, s1: f64, s2: f64) -> f64 {
    let den = p1 + p2 - p1 * p2;
    if den.abs() <= 1e-12 {
        return 0.0;
    }
    let d1 = p2 * p2 / (den * den);
    let d2 = p1 * p1 / (den * den);
    ((d1 * s1).powi(2) + (d2 * s2).powi(2)).sqrt()
}

/// Result of one projective measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationEstimate {
    /// `|0⟩` fraction within `{|0⟩, |+1⟩}` (MW2 trace).
    pub p1: f64,
    /// `|0⟩` fraction within `{|0⟩, |−1⟩}` (MW1 trace).
    pub p2: f64,
    pub p: f64,
    pub stderr: f64,
    /// Number of fitted fractions that had to be clamped.
    pub clamped: u32,
}

impl PopulationEstimate {
    pub fn from_fits(mw2: &SubspaceFit, mw1: &SubspaceFit) -> Self {
        let (p1, p2) = (mw2.fraction, mw1.fraction);
        Self {
            p1,
            p2,
            p: combine(p1, p2).clamp(0.0, 1.0),
            stderr: combine_stderr(p1, p2, mw2.stderr, mw1.stderr),
            clamped: mw2.clamped as u32 + mw1.clamped as u32,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qutrit::StateVector;

    fn model() -> FluorescenceModel {
        FluorescenceModel::default()
    }

    fn exact(state: &DensityOperator, ch: Channel) -> RabiTrace {
        let mut rng = StreamKey::new(9, 0, 0).rng(1);
        simulate_rabi_trace(state, ch, 1.0, &model(), &NoiseConfig::noiseless(), &mut rng)
    }

    #[test]
    fn durations_cover_one_period() {
        let d = trace_durations(2.0);
        assert_eq!(d.len(), 24);
        assert_eq!(d[0], 0.0);
        assert!((d[23] - 2.0 * 23.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn bright_state_trace_shape() {
        let tr = exact(&StateVector::basis(0).density(), Channel::Mw1);
        let base = 1e6 * model().dark_yield;
        for (k, &n) in tr.counts.iter().enumerate() {
            let want = base * (1.0 + 0.3 * (std::f64::consts::PI * tr.durations[k]).cos().powi(2));
            assert!((n - want).abs() < 1e-6 * want);
        }
        let max_at = tr
            .counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(max_at, 0);
    }

    #[test]
    fn spectator_and_mixed_traces_are_flat() {
        let base = 1e6 * model().dark_yield;
        let dark = exact(&StateVector::basis(1).density(), Channel::Mw1);
        assert!(dark.counts.iter().all(|&n| (n - base).abs() < 1e-6));
        let mixed = exact(&DensityOperator::maximally_mixed(), Channel::Mw2);
        let level = base * (1.0 + 0.3 / 3.0);
        assert!(mixed.counts.iter().all(|&n| (n - level).abs() < 1e-6));
    }

    #[test]
    fn fit_round_trips() {
        let refl = ReferenceLevels::exact(&model());
        let f = fit_trace(&exact(&StateVector::basis(0).density(), Channel::Mw1), refl).unwrap();
        assert!((f.fraction - 1.0).abs() < 1e-9);
        let plus = StateVector::from_real(1.0, 0.0, 1.0).unwrap().density();
        let f = fit_trace(&exact(&plus, Channel::Mw1), refl).unwrap();
        assert!((f.fraction - 0.5).abs() < 1e-9);
        assert!((f.subspace_total - 1.0).abs() < 1e-9);
        assert!(!f.clamped);
    }

    #[test]
    fn empty_subspace_convention() {
        let refl = ReferenceLevels::exact(&model());
        let f = fit_trace(&exact(&StateVector::basis(1).density(), Channel::Mw1), refl).unwrap();
        assert_eq!(f.fraction, 1.0);
    }

    #[test]
    fn degenerate_durations_fall_back_to_mean() {
        let refl = ReferenceLevels::exact(&model());
        let tr = RabiTrace {
            channel: Channel::Mw1,
            period: 1.0,
            durations: vec![0.25; 24],
            counts: vec![1e6 * refl.rate_for(0.4); 24],
            shots: 1_000_000,
        };
        let f = fit_trace(&tr, refl).unwrap();
        assert!((f.p0_at_zero - 0.4).abs() < 1e-9);
        assert!((f.fraction - 0.5).abs() < 1e-9);
    }

    #[test]
    fn benchmark_levels() {
        let tr = exact(&StateVector::basis(0).density(), Channel::Mw1);
        let l = ReferenceLevels::from_benchmark(&tr).unwrap();
        let e = ReferenceLevels::exact(&model());
        assert!((l.bright - e.bright).abs() < 1e-12);
        assert!((l.dark - e.dark).abs() < 1e-12);
        let flat = exact(&StateVector::basis(1).density(), Channel::Mw1);
        assert!(ReferenceLevels::from_benchmark(&flat).is_err());
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine(1.0, 1.0), 1.0);
        let (p0, pp, pm): (f64, f64, f64) = (0.5, 0.25, 0.25);
        let p1 = p0 / (p0 + pp);
        let p2 = p0 / (p0 + pm);
        assert!((p1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((combine(p1, p2) - 0.5).abs() < 1e-15);
        assert!((combine(1.0, 0.37) - 0.37).abs() < 1e-15);
        assert_eq!(combine(0.0, 0.0), 0.0);
    }

    #[test]
    fn noisy_fit_converges() {
        let y3m = StateVector::from_real(1.0, -1.0, 0.0).unwrap().density();
        let noise = NoiseConfig::default();
        let refl = ReferenceLevels::exact(&model());
        let mut rng = StreamKey::new(9, 1, 0).rng(7);
        // After the MW2 readout of y3−, the MW2 trace sees (|0⟩ − |+1⟩)/√2.
        let tr = simulate_rabi_trace(&y3m, Channel::Mw2, 1.0, &model(), &noise, &mut rng);
        let f = fit_trace(&tr, refl).unwrap();
        assert!((f.fraction - 0.5).abs() < 0.02, "{f:?}");
        assert!(f.stderr > 0.0 && f.stderr < 0.02);
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: u64 = StreamKey::new(1, 2, 3).rng(5).random();
        let b: u64 = StreamKey::new(1, 2, 3).rng(5).random();
        let c: u64 = StreamKey::new(1, 2, 3).with_channel(Channel::Mw1).rng(5).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn config_validation() {
        assert!(NoiseConfig::default().validate().is_ok());
        assert!(NoiseConfig { shots: 0, ..Default::default() }.validate().is_err());
        assert!(NoiseConfig { pulse_amp_error: 0.2, ..Default::default() }.validate().is_err());
        assert!(NoiseConfig { depolarizing_p: 1.2, ..Default::default() }.validate().is_err());
        assert!(FluorescenceModel { contrast: 0.0, ..Default::default() }.validate().is_err());
        assert!(FluorescenceModel { dark_yield: -1.0, ..Default::default() }.validate().is_err());
    }

    impl ReferenceLevels {
        fn rate_for(&self, p0: f64) -> f64 {
            self.dark + p0 * (self.bright - self.dark)
        }
    }
}
