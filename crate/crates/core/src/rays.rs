//! The 13 Yu-Oh rays, their orthogonality graph and derived operators.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qutrit::{
    c, commutator, hermitian_defect, identity, inner, max_abs, Amplitudes, Mat3, Projector,
    QutritError, StateVector, ALGEBRA_TOL,
};

/// Two rays count as orthogonal when `|⟨u|v⟩|` is below this.
pub const ORTHO_TOL: f64 = 1e-10;
/// Number of compatible pairs in the Yu-Oh graph.
pub const EDGE_COUNT: usize = 24;
/// Number of distinct rays measured per prepared state.
pub const MEASUREMENT_RAY_COUNT: usize = 25;
/// Weight of one unordered compatible pair in the inequality. The correlation
/// sum runs over ordered pairs with weight ¼, so each edge contributes ½.
pub const EDGE_WEIGHT: f64 = 0.5;

/// Labels of the canonical rays, in table order.
pub const CANONICAL_LABELS: [&str; 13] = [
    "z1", "z2", "z3", "y1-", "y1+", "y2-", "y2+", "y3-", "y3+", "h0", "h1", "h2", "h3",
];
/// Labels of the four h-rays entering the simpler inequality.
pub const H_LABELS: [&str; 4] = ["h0", "h1", "h2", "h3"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RayError {
    #[error(transparent)]
    Qutrit(#[from] QutritError),
    #[error("rays {u} and {v} are not orthogonal (|<u|v>| = {overlap:e})")]
    NotOrthogonal { u: String, v: String, overlap: f64 },
    #[error("orthogonality graph has {got} edges, expected {expected}")]
    EdgeCount { expected: usize, got: usize },
    #[error("expected {expected} rays, got {got}")]
    RayCount { expected: usize, got: usize },
    #[error("observables of edge ({u}, {v}) do not commute (defect {defect:e})")]
    NonCommuting { u: String, v: String, defect: f64 },
    #[error("unknown ray label {0:?}")]
    UnknownLabel(String),
    #[error("({0}, {1}) is not an edge of the orthogonality graph")]
    NotEdge(String, String),
}

/// A labeled unit ray. Stored with its last nonzero component real and
/// positive, which keeps `h1 = (−1,1,1)/√3` in its printed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    label: String,
    components: Amplitudes,
}

impl Ray {
    pub fn new(label: impl Into<String>, amps: Amplitudes) -> Result<Self, RayError> {
        let norm = amps.norm();
        if !(norm > ALGEBRA_TOL) || !norm.is_finite() {
            return Err(QutritError::ZeroNorm.into());
        }
        let mut v = amps / c(norm, 0.0);
        if let Some(last) = v.iter().rev().find(|z| z.norm() > ALGEBRA_TOL).copied() {
            v *= last.conj() / last.norm();
            if let Some(z) = v.iter_mut().rev().find(|z| z.norm() > ALGEBRA_TOL) {
                *z = c(z.norm(), 0.0);
            }
        }
        Ok(Self {
            label: label.into(),
            components: v,
        })
    }

    pub fn from_real(label: impl Into<String>, v: [f64; 3]) -> Result<Self, RayError> {
        Self::new(
            label,
            Amplitudes::new(c(v[0], 0.0), c(v[1], 0.0), c(v[2], 0.0)),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn components(&self) -> &Amplitudes {
        &self.components
    }

    /// Same ray as a canonical-phase state vector.
    pub fn state(&self) -> StateVector {
        StateVector::from_amplitudes(self.components).expect("ray is normalized")
    }

    pub fn projector_matrix(&self) -> Mat3 {
        self.components * self.components.adjoint()
    }

    pub fn projector(&self) -> Projector {
        Projector::from_state(&self.state(), Some(self.label.clone()))
    }

    /// Equality up to global phase.
    pub fn same_ray(&self, other: &Ray) -> bool {
        max_abs(&(self.projector_matrix() - other.projector_matrix())) < ORTHO_TOL
    }

    pub fn overlap(&self, other: &Ray) -> f64 {
        self.components.dotc(&other.components).norm()
    }

    pub fn is_orthogonal(&self, other: &Ray) -> bool {
        self.overlap(other) < ORTHO_TOL
    }

    /// `Â = I − 2|r⟩⟨r|`.
    pub fn observable(&self) -> Mat3 {
        observable_of(self)
    }
}

impl fmt::Display for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.label, self.state())
    }
}

/// The 13 rays `z_k`, `y_k^±`, `h_0..h_3`.
pub fn canonical_rays() -> Vec<Ray> {
    let table: [[f64; 3]; 13] = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 1.0, -1.0],
        [0.0, 1.0, 1.0],
        [1.0, 0.0, -1.0],
        [1.0, 0.0, 1.0],
        [1.0, -1.0, 0.0],
        [1.0, 1.0, 0.0],
        [1.0, 1.0, 1.0],
        [-1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, -1.0],
    ];
    CANONICAL_LABELS
        .iter()
        .zip(table)
        .map(|(label, v)| Ray::from_real(*label, v).expect("nonzero table entry"))
        .collect()
}

/// Compatibility graph: an edge joins every pair of orthogonal rays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthogonalityGraph {
    labels: Vec<String>,
    edges: Vec<(usize, usize)>,
}

impl OrthogonalityGraph {
    /// Computes the edges without checking their number.
    pub fn from_rays(rays: &[Ray]) -> Self {
        let mut edges = Vec::new();
        for i in 0..rays.len() {
            for j in (i + 1)..rays.len() {
                if rays[i].is_orthogonal(&rays[j]) {
                    edges.push((i, j));
                }
            }
        }
        Self {
            labels: rays.iter().map(|r| r.label.clone()).collect(),
            edges,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Edges as index pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).is_ok()
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok()
    }

    pub fn edge_labels(&self, edge: usize) -> (&str, &str) {
        let (u, v) = self.edges[edge];
        (&self.labels[u], &self.labels[v])
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.edges
            .iter()
            .filter(|(u, v)| *u == vertex || *v == vertex)
            .count()
    }

    /// Mutually orthogonal triples, i.e. complete bases inside the vertex set.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        let n = self.labels.len();
        let mut out = Vec::new();
        for &(a, b) in &self.edges {
            for k in (b + 1)..n {
                if self.has_edge(a, k) && self.has_edge(b, k) {
                    out.push([a, b, k]);
                }
            }
        }
        out
    }
}

/// Builds the graph and checks it has exactly [`EDGE_COUNT`] edges.
pub fn build_graph(rays: &[Ray]) -> Result<OrthogonalityGraph, RayError> {
    let graph = OrthogonalityGraph::from_rays(rays);
    if graph.edge_count() != EDGE_COUNT {
        return Err(RayError::EdgeCount {
            expected: EDGE_COUNT,
            got: graph.edge_count(),
        });
    }
    Ok(graph)
}

/// Third ray completing the orthonormal pair `(u, v)` to a basis: the
/// complex conjugate of `u × v`.
pub fn complete_basis(u: &Ray, v: &Ray) -> Result<Ray, RayError> {
    let overlap = u.overlap(v);
    if overlap >= ORTHO_TOL {
        return Err(RayError::NotOrthogonal {
            u: u.label.clone(),
            v: v.label.clone(),
            overlap,
        });
    }
    let w = u.components.cross(&v.components).map(|z| z.conj());
    Ray::new(format!("w({},{})", u.label, v.label), w)
}

/// `I − 2|r⟩⟨r|`.
pub fn observable_of(r: &Ray) -> Mat3 {
    identity() - r.projector_matrix() * c(2.0, 0.0)
}

/// Ray table plus its verified compatibility graph.
#[derive(Debug, Clone)]
pub struct YuOhSet {
    rays: Vec<Ray>,
    graph: OrthogonalityGraph,
}

impl YuOhSet {
    pub fn canonical() -> Self {
        Self::from_rays(canonical_rays()).expect("canonical table is consistent")
    }

    pub fn from_rays(rays: Vec<Ray>) -> Result<Self, RayError> {
        if rays.len() != CANONICAL_LABELS.len() {
            return Err(RayError::RayCount {
                expected: CANONICAL_LABELS.len(),
                got: rays.len(),
            });
        }
        let graph = build_graph(&rays)?;
        Ok(Self { rays, graph })
    }

    /// Accepts any table and graph, for diagnosing corrupted inputs.
    pub fn from_rays_unchecked(rays: Vec<Ray>) -> Self {
        let graph = OrthogonalityGraph::from_rays(&rays);
        Self { rays, graph }
    }

    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    pub fn graph(&self) -> &OrthogonalityGraph {
        &self.graph
    }

    pub fn ray(&self, label: &str) -> Result<&Ray, RayError> {
        self.rays
            .iter()
            .find(|r| r.label == label)
            .ok_or_else(|| RayError::UnknownLabel(label.to_string()))
    }

    /// Completion ray of every edge, in edge order.
    pub fn completions(&self) -> Vec<Ray> {
        self.graph
            .edges()
            .iter()
            .map(|&(u, v)| complete_basis(&self.rays[u], &self.rays[v]).expect("edge is orthogonal"))
            .collect()
    }

    /// The canonical rays followed by every distinct completion that is not
    /// already among them.
    pub fn measurement_rays(&self) -> Vec<Ray> {
        let mut out = self.rays.clone();
        for w in self.completions() {
            if !out.iter().any(|r| r.same_ray(&w)) {
                out.push(w);
            }
        }
        out
    }

    /// For each edge, the index into [`Self::measurement_rays`] of its completion.
    pub fn completion_indices(&self, measurement: &[Ray]) -> Vec<usize> {
        self.completions()
            .iter()
            .map(|w| {
                measurement
                    .iter()
                    .position(|r| r.same_ray(w))
                    .expect("completion present in measurement set")
            })
            .collect()
    }

    pub fn observables(&self) -> Vec<Mat3> {
        self.rays.iter().map(observable_of).collect()
    }

    /// `Σ_u Â_u − ½ Σ_edges ½(Â_uÂ_v + Â_vÂ_u)`.
    pub fn inequality_operator(&self) -> Result<Mat3, RayError> {
        let obs = self.observables();
        let linear = obs.iter().fold(Mat3::zeros(), |acc, a| acc + a);
        let mut correlations = Mat3::zeros();
        for &(u, v) in self.graph.edges() {
            let defect = max_abs(&commutator(&obs[u], &obs[v]));
            if defect > ALGEBRA_TOL {
                return Err(RayError::NonCommuting {
                    u: self.rays[u].label.clone(),
                    v: self.rays[v].label.clone(),
                    defect,
                });
            }
            correlations += (obs[u] * obs[v] + obs[v] * obs[u]) * c(0.5, 0.0);
        }
        Ok(linear - correlations * c(EDGE_WEIGHT, 0.0))
    }

    /// `Σ_k ĥ_k` over the four h-rays.
    pub fn h_sum_operator(&self) -> Result<Mat3, RayError> {
        H_LABELS.iter().try_fold(Mat3::zeros(), |acc, l| {
            Ok(acc + self.ray(l)?.projector_matrix())
        })
    }

    pub fn h_indices(&self) -> Vec<usize> {
        H_LABELS
            .iter()
            .map(|l| self.graph.index_of(l).expect("h label present"))
            .collect()
    }
}

/// 25 rays measured on each prepared state.
pub fn measurement_ray_set() -> Vec<Ray> {
    YuOhSet::canonical().measurement_rays()
}

/// Inequality operator for the canonical set; equals `(25/3)·I`.
pub fn inequality_operator() -> Mat3 {
    YuOhSet::canonical()
        .inequality_operator()
        .expect("canonical edges commute")
}

/// Sum of the four h-projectors; equals `(4/3)·I`.
pub fn h_sum_operator() -> Mat3 {
    YuOhSet::canonical()
        .h_sum_operator()
        .expect("canonical h labels")
}

/// Deviation of `m` from the nearest multiple of the identity, together with
/// that multiple.
pub fn scalar_part(m: &Mat3) -> (f64, f64) {
    let lambda = m.trace().re / 3.0;
    (lambda, max_abs(&(m - identity() * c(lambda, 0.0))).max(hermitian_defect(m)))
}

/// One row of the exported ray table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayRecord {
    pub label: String,
    /// `[re, im]` per basis entry, order `(|0⟩, |1⟩, |−1⟩)`.
    pub components: [[f64; 2]; 3],
}

impl From<&Ray> for RayRecord {
    fn from(r: &Ray) -> Self {
        let z = r.components();
        Self {
            label: r.label.clone(),
            components: [[z[0].re, z[0].im], [z[1].re, z[1].im], [z[2].re, z[2].im]],
        }
    }
}

impl TryFrom<&RayRecord> for Ray {
    type Error = RayError;

    fn try_from(rec: &RayRecord) -> Result<Self, Self::Error> {
        let [a, b, cc] = rec.components;
        Ray::new(
            rec.label.clone(),
            Amplitudes::new(
                Complex64::new(a[0], a[1]),
                Complex64::new(b[0], b[1]),
                Complex64::new(cc[0], cc[1]),
            ),
        )
    }
}

pub fn export_table(rays: &[Ray]) -> Vec<RayRecord> {
    rays.iter().map(RayRecord::from).collect()
}

pub fn import_table(records: &[RayRecord]) -> Result<Vec<Ray>, RayError> {
    records.iter().map(Ray::try_from).collect()
}

/// Overlap of two specific labels, for debugging tables.
pub fn label_overlap(set: &YuOhSet, u: &str, v: &str) -> Result<f64, RayError> {
    Ok(inner(&set.ray(u)?.state(), &set.ray(v)?.state()).norm())
}
