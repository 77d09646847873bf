//! Exact three-level quantum mechanics.
//!
//! Every vector and matrix in this crate is written in the fixed basis order
//! `(|0⟩, |1⟩, |−1⟩)`, i.e. index 0 is `m_s = 0`, index 1 is `m_s = +1` and
//! index 2 is `m_s = −1`.

use std::fmt;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Mat3 = Matrix3<Complex64>;
pub type Amplitudes = Vector3<Complex64>;

/// Tolerance for exact algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Tolerance for numerical drift accumulated over several operations.
pub const DRIFT_TOL: f64 = 1e-8;
/// Smallest eigenvalue still accepted for a density operator.
pub const EIGEN_TOL: f64 = 1e-10;

/// Index of `|0⟩`.
pub const KET_ZERO: usize = 0;
/// Index of `|+1⟩`.
pub const KET_PLUS: usize = 1;
/// Index of `|−1⟩`.
pub const KET_MINUS: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QutritError {
    #[error("state vector has zero norm")]
    ZeroNorm,
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("density operator trace {0} differs from 1")]
    BadTrace(f64),
    #[error("density operator has negative eigenvalue {0:e}")]
    NegativeEigenvalue(f64),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("matrix is not a rank-1 projector (max deviation {0:e})")]
    NotProjector(f64),
    #[error("norm drifted by {0:e} after applying a unitary")]
    NormDrift(f64),
    #[error("probability {0} is outside [0, 1]")]
    BadProbability(f64),
}

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest entrywise modulus of a matrix.
pub fn max_abs(m: &Mat3) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation of `m` from its adjoint.
pub fn hermitian_defect(m: &Mat3) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn identity() -> Mat3 {
    Mat3::identity()
}

/// `AB − BA`.
pub fn commutator(a: &Mat3, b: &Mat3) -> Mat3 {
    a * b - b * a
}

/// Multiplies `v` by the phase that makes its first nonzero entry real and
/// non-negative.
fn canonical_phase(v: Amplitudes) -> Amplitudes {
    match v.iter().find(|z| z.norm() > ALGEBRA_TOL) {
        Some(lead) => {
            let phase = lead.conj() / lead.norm();
            let mut out = v * phase;
            // The leading entry is exactly real after the division; pin it.
            if let Some(first) = out.iter_mut().find(|z| z.norm() > ALGEBRA_TOL) {
                *first = c(first.norm(), 0.0);
            }
            out
        }
        None => v,
    }
}

/// Normalized pure qutrit state with canonical global phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    amps: Amplitudes,
}

impl StateVector {
    /// Normalizes `amps` and fixes the global phase.
    pub fn from_amplitudes(amps: Amplitudes) -> Result<Self, QutritError> {
        let norm = amps.norm();
        if !(norm > ALGEBRA_TOL) || !norm.is_finite() {
            return Err(QutritError::ZeroNorm);
        }
        Ok(Self {
            amps: canonical_phase(amps / c(norm, 0.0)),
        })
    }

    pub fn from_real(a: f64, b: f64, c_: f64) -> Result<Self, QutritError> {
        Self::from_amplitudes(Amplitudes::new(c(a, 0.0), c(b, 0.0), c(c_, 0.0)))
    }

    pub fn basis(index: usize) -> Self {
        let mut amps = Amplitudes::zeros();
        amps[index] = c(1.0, 0.0);
        Self { amps }
    }

    pub fn amplitudes(&self) -> &Amplitudes {
        &self.amps
    }

    pub fn component(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn projector_matrix(&self) -> Mat3 {
        self.amps * self.amps.adjoint()
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            matrix: self.projector_matrix(),
        }
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        inner(self, other).norm_sqr()
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .amps
            .iter()
            .map(|z| {
                if z.im.abs() < 1e-12 {
                    format!("{:.6}", z.re)
                } else {
                    format!("{:.6}{:+.6}i", z.re, z.im)
                }
            })
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Hermitian inner product `⟨u|v⟩`, antilinear in `u`.
pub fn inner(u: &StateVector, v: &StateVector) -> Complex64 {
    u.amps.dotc(&v.amps)
}

/// Validated qutrit density operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOperator {
    matrix: Mat3,
}

impl DensityOperator {
    pub fn new(matrix: Mat3) -> Result<Self, QutritError> {
        let herm = hermitian_defect(&matrix);
        if herm > ALGEBRA_TOL {
            return Err(QutritError::NotHermitian(herm));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > ALGEBRA_TOL || trace.im.abs() > ALGEBRA_TOL {
            return Err(QutritError::BadTrace(trace.re));
        }
        let min_eig = matrix
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -EIGEN_TOL {
            return Err(QutritError::NegativeEigenvalue(min_eig));
        }
        Ok(Self { matrix })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        state.density()
    }

    pub fn maximally_mixed() -> Self {
        Self {
            matrix: identity() / c(3.0, 0.0),
        }
    }

    /// Convex combination `Σ wᵢ |ψᵢ⟩⟨ψᵢ|`; weights are renormalized.
    pub fn mixture(parts: &[(f64, StateVector)]) -> Result<Self, QutritError> {
        let total: f64 = parts.iter().map(|(w, _)| *w).sum();
        if let Some((w, _)) = parts.iter().find(|(w, _)| *w < 0.0) {
            return Err(QutritError::BadProbability(*w));
        }
        if !(total > 0.0) {
            return Err(QutritError::BadProbability(total));
        }
        let matrix = parts.iter().fold(Mat3::zeros(), |acc, (w, s)| {
            acc + s.projector_matrix() * c(*w / total, 0.0)
        });
        Self::new(matrix)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    /// Diagonal entry `⟨i|ρ|i⟩`.
    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }

    /// `U ρ U†`. Hermiticity is restored explicitly so rounding cannot build
    /// up over long sequences.
    pub fn evolve(&self, u: &UnitaryOperator) -> Self {
        let m = u.matrix * self.matrix * u.matrix.adjoint();
        Self {
            matrix: (m + m.adjoint()) * c(0.5, 0.0),
        }
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        let e = self.matrix.symmetric_eigenvalues();
        let mut out = [e[0], e[1], e[2]];
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }
}

/// `Tr(ρ·op)` for a Hermitian `op`.
pub fn expectation(op: &Mat3, state: &DensityOperator) -> Result<f64, QutritError> {
    let herm = hermitian_defect(op);
    if herm > ALGEBRA_TOL {
        return Err(QutritError::NotHermitian(herm));
    }
    let value = (state.matrix * op).trace();
    debug_assert!(value.im.abs() < ALGEBRA_TOL, "imaginary part {}", value.im);
    Ok(value.re)
}

/// Validated 3×3 unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryOperator {
    matrix: Mat3,
}

impl UnitaryOperator {
    pub fn new(matrix: Mat3) -> Result<Self, QutritError> {
        let defect = max_abs(&(matrix.adjoint() * matrix - identity()));
        if defect > ALGEBRA_TOL {
            return Err(QutritError::NotUnitary(defect));
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self { matrix: identity() }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// The operator that applies `self` first and `next` afterwards.
    pub fn then(&self, next: &UnitaryOperator) -> Self {
        Self {
            matrix: next.matrix * self.matrix,
        }
    }
}

/// Microwave channel. MW1 drives `|0⟩ ↔ |−1⟩`, MW2 drives `|0⟩ ↔ |+1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "MW1")]
    Mw1,
    #[serde(rename = "MW2")]
    Mw2,
}

impl Channel {
    pub const ALL: [Channel; 2] = [Channel::Mw1, Channel::Mw2];

    /// Basis index of the level coupled to `|0⟩`.
    pub fn target_index(self) -> usize {
        match self {
            Channel::Mw1 => KET_MINUS,
            Channel::Mw2 => KET_PLUS,
        }
    }

    /// Basis index left untouched by this channel.
    pub fn spectator_index(self) -> usize {
        match self {
            Channel::Mw1 => KET_PLUS,
            Channel::Mw2 => KET_MINUS,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Mw1 => "MW1",
            Channel::Mw2 => "MW2",
        })
    }
}

/// Resonant rotation by `theta` about the in-plane axis at angle `phi`,
/// embedded in the two-level subspace addressed by `channel`.
///
/// `|0⟩ ↦ cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|target⟩`, and
/// `|target⟩ ↦ −e^{−iφ} sin(θ/2)|0⟩ + cos(θ/2)|target⟩`.
pub fn embedded_rotation(channel: Channel, theta: f64, phi: f64) -> UnitaryOperator {
    let t = channel.target_index();
    let (s, co) = (theta / 2.0).sin_cos();
    let mut m = identity();
    m[(KET_ZERO, KET_ZERO)] = c(co, 0.0);
    m[(t, t)] = c(co, 0.0);
    m[(t, KET_ZERO)] = Complex64::from_polar(s, phi);
    m[(KET_ZERO, t)] = -Complex64::from_polar(s, -phi);
    UnitaryOperator { matrix: m }
}

/// `U·s`, renormalized. A norm change above [`DRIFT_TOL`] means `U` was not
/// really unitary.
pub fn apply(u: &UnitaryOperator, s: &StateVector) -> Result<StateVector, QutritError> {
    let v = u.matrix * s.amps;
    let drift = (v.norm() - 1.0).abs();
    if drift > DRIFT_TOL {
        return Err(QutritError::NormDrift(drift));
    }
    StateVector::from_amplitudes(v)
}

/// `(1−p)·ρ + p·I/3`.
pub fn depolarize(state: &DensityOperator, p: f64) -> Result<DensityOperator, QutritError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QutritError::BadProbability(p));
    }
    Ok(DensityOperator {
        matrix: state.matrix * c(1.0 - p, 0.0) + identity() * c(p / 3.0, 0.0),
    })
}

/// Rank-1 projector `|r⟩⟨r|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: Mat3,
    source_ray: Option<String>,
}

impl Projector {
    pub fn new(matrix: Mat3, source_ray: Option<String>) -> Result<Self, QutritError> {
        let herm = hermitian_defect(&matrix);
        if herm > ALGEBRA_TOL {
            return Err(QutritError::NotHermitian(herm));
        }
        let idem = max_abs(&(matrix * matrix - matrix));
        let trace = (matrix.trace() - c(1.0, 0.0)).norm();
        if idem > ALGEBRA_TOL || trace > ALGEBRA_TOL {
            return Err(QutritError::NotProjector(idem.max(trace)));
        }
        Ok(Self { matrix, source_ray })
    }

    pub fn from_state(state: &StateVector, source_ray: Option<String>) -> Self {
        Self {
            matrix: state.projector_matrix(),
            source_ray,
        }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn source_ray(&self) -> Option<&str> {
        self.source_ray.as_deref()
    }
}
