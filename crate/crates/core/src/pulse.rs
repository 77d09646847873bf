//! Two-channel microwave pulse compilation.
//!
//! A target `(a, b, c)` is prepared from `|0⟩` by an MW2 pulse that moves
//! weight `|b|` into `|+1⟩`, followed by an MW1 pulse that moves the
//! remaining off-`|0⟩` weight into `|−1⟩`. Readout runs the inverse pulses in
//! reverse order so that `|r⟩⟨r|` is mapped onto `|0⟩⟨0|`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qutrit::{embedded_rotation, Channel, StateVector, UnitaryOperator};

/// Slack allowed on the arccos argument before the target counts as
/// unnormalized.
pub const ARCCOS_SLACK: f64 = 1e-9;
/// Angles at or below this are dropped from compiled sequences.
pub const ZERO_ANGLE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("angle {0} is outside [0, 2π)")]
    AngleOutOfRange(f64),
    #[error("target amplitude on |0> is negative ({0}) after phase canonicalization")]
    NegativeAnchor(f64),
    #[error("arccos argument {0} is outside [-1, 1]; target is not normalized")]
    Unnormalized(f64),
    #[error("missing or invalid calibration entry {0}")]
    Calibration(&'static str),
}

fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// One resonant microwave pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    channel: Channel,
    theta: f64,
    phi: f64,
}

impl Pulse {
    pub fn new(channel: Channel, theta: f64, phi: f64) -> Result<Self, PulseError> {
        for angle in [theta, phi] {
            if !(0.0..TAU).contains(&angle) {
                return Err(PulseError::AngleOutOfRange(angle));
            }
        }
        Ok(Self { channel, theta, phi })
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Same rotation angle with the axis turned by π.
    pub fn inverse(&self) -> Self {
        Self {
            phi: wrap_angle(self.phi + PI),
            ..*self
        }
    }

    pub fn unitary(&self) -> UnitaryOperator {
        embedded_rotation(self.channel, self.theta, self.phi)
    }

    /// Unitary with the rotation angle scaled by `1 + amp_error`.
    pub fn unitary_with_amp_error(&self, amp_error: f64) -> UnitaryOperator {
        embedded_rotation(self.channel, self.theta * (1.0 + amp_error), self.phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Purpose {
    Preparation,
    Measurement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pulses: Vec<Pulse>,
    purpose: Purpose,
}

impl PulseSequence {
    pub fn empty(purpose: Purpose) -> Self {
        Self {
            pulses: Vec::new(),
            purpose,
        }
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn purpose(&self) -> Purpose {
        self.purpose
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    /// Checks the one-MW2-then-one-MW1 layout (reversed for measurement).
    pub fn is_well_formed(&self) -> bool {
        let mut order: Vec<Channel> = self.pulses.iter().map(|p| p.channel).collect();
        if self.purpose == Purpose::Measurement {
            order.reverse();
        }
        matches!(
            order.as_slice(),
            [] | [Channel::Mw1] | [Channel::Mw2] | [Channel::Mw2, Channel::Mw1]
        )
    }
}

/// Rabi periods and the fixed timing constants of the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationTable {
    /// Full Rabi cycle on MW1, µs.
    pub rabi_period_mw1: f64,
    /// Full Rabi cycle on MW2, µs.
    pub rabi_period_mw2: f64,
    /// MHz
    pub freq_mw1: f64,
    /// MHz
    pub freq_mw2: f64,
    /// Polarizing laser pulse, µs.
    pub init_laser: f64,
    /// Wait after polarization, µs.
    pub wait: f64,
    /// Readout laser pulse, µs.
    pub readout_laser: f64,
}

impl Default for CalibrationTable {
    fn default() -> Self {
        Self {
            rabi_period_mw1: 1.0,
            rabi_period_mw2: 1.0,
            freq_mw1: 1480.6,
            freq_mw2: 4259.3,
            init_laser: 3.5,
            wait: 5.0,
            readout_laser: 0.3,
        }
    }
}

impl CalibrationTable {
    pub fn validate(&self) -> Result<(), PulseError> {
        let fields = [
            ("rabi_period_mw1", self.rabi_period_mw1),
            ("rabi_period_mw2", self.rabi_period_mw2),
            ("freq_mw1", self.freq_mw1),
            ("freq_mw2", self.freq_mw2),
            ("init_laser", self.init_laser),
            ("wait", self.wait),
            ("readout_laser", self.readout_laser),
        ];
        match fields.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            Some((name, _)) => Err(PulseError::Calibration(name)),
            None => Ok(()),
        }
    }

    /// Rabi period of `channel`, µs.
    pub fn rabi_period(&self, channel: Channel) -> Result<f64, PulseError> {
        let (name, t) = match channel {
            Channel::Mw1 => ("rabi_period_mw1", self.rabi_period_mw1),
            Channel::Mw2 => ("rabi_period_mw2", self.rabi_period_mw2),
        };
        if t.is_finite() && t > 0.0 {
            Ok(t)
        } else {
            Err(PulseError::Calibration(name))
        }
    }
}

/// `t = θ·T / 2π` for the pulse's channel.
pub fn duration_of(p: &Pulse, cal: &CalibrationTable) -> Result<f64, PulseError> {
    Ok(p.theta * cal.rabi_period(p.channel)? / TAU)
}

/// Two-pulse sequence taking `|0⟩` to `target`.
pub fn compile_preparation(target: &StateVector) -> Result<PulseSequence, PulseError> {
    let a = target.component(0);
    let b = target.component(1);
    let cc = target.component(2);
    // Canonical phase leaves a real; reject anything else as a contract breach.
    if a.re < 0.0 || a.im.abs() > ARCCOS_SLACK {
        return Err(PulseError::NegativeAnchor(a.re));
    }
    let b_abs = b.norm();
    if b_abs > 1.0 + ARCCOS_SLACK {
        return Err(PulseError::Unnormalized(b_abs));
    }
    // Half-angle forms via atan2 equal 2·arcsin(|b|) and
    // 2·arccos(a / cos(θ₂/2)) on unit targets but stay accurate near ±1.
    let rest = a.re.hypot(cc.norm());
    let theta2 = 2.0 * b_abs.atan2(rest);
    let phi2 = wrap_angle(b.arg());
    let half_cos = (theta2 / 2.0).cos();
    let theta1 = if half_cos > ZERO_ANGLE {
        let arg = a.re / half_cos;
        if arg.abs() > 1.0 + ARCCOS_SLACK {
            return Err(PulseError::Unnormalized(arg));
        }
        2.0 * cc.norm().atan2(a.re)
    } else {
        0.0
    };
    let phi1 = wrap_angle(cc.arg());

    let mut pulses = Vec::with_capacity(2);
    if theta2 > ZERO_ANGLE {
        pulses.push(Pulse::new(Channel::Mw2, theta2, if b_abs > ZERO_ANGLE { phi2 } else { 0.0 })?);
    }
    if theta1 > ZERO_ANGLE {
        pulses.push(Pulse::new(Channel::Mw1, theta1, phi1)?);
    }
    Ok(PulseSequence {
        pulses,
        purpose: Purpose::Preparation,
    })
}

/// Inverse of [`compile_preparation`]: maps `|r⟩` onto `|0⟩`.
pub fn compile_measurement(r: &StateVector) -> Result<PulseSequence, PulseError> {
    let prep = compile_preparation(r)?;
    Ok(PulseSequence {
        pulses: prep.pulses.iter().rev().map(Pulse::inverse).collect(),
        purpose: Purpose::Measurement,
    })
}

/// Ordered product of the pulse unitaries; the first pulse acts first.
pub fn sequence_unitary(seq: &PulseSequence) -> UnitaryOperator {
    sequence_unitary_with_amp_error(seq, 0.0)
}

pub fn sequence_unitary_with_amp_error(seq: &PulseSequence, amp_error: f64) -> UnitaryOperator {
    seq.pulses
        .iter()
        .fold(UnitaryOperator::identity(), |acc, p| {
            acc.then(&p.unitary_with_amp_error(amp_error))
        })
}

impl fmt::Display for PulseSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pulses.is_empty() {
            return write!(f, "no pulses required");
        }
        let parts: Vec<String> = self
            .pulses
            .iter()
            .map(|p| format!("{}(θ={:.6}, φ={:.6})", p.channel, p.theta, p.phi))
            .collect();
        write!(f, "{}", parts.join(" → "))
    }
}
