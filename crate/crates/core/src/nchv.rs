//! Noncontextual hidden-variable baseline by exhaustive enumeration.
//!
//! Assignments are enumerated as bitmasks over the graph's vertices. In an
//! [`Assignment`] a set bit means the outcome `−1`; in a [`KsAssignment`] a
//! set bit means the ray is assigned `1`.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::rays::OrthogonalityGraph;

/// Weight of one edge in quarters; see [`crate::rays::EDGE_WEIGHT`].
pub const EDGE_WEIGHT_QUARTERS: i64 = 2;
/// Largest vertex count the bitmask enumeration accepts.
pub const MAX_VERTICES: usize = 24;

const CHUNK: u64 = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NchvError {
    #[error("no Kochen-Specker admissible assignment exists")]
    NoAdmissibleAssignment,
    #[error("graph has {0} vertices, enumeration supports at most {MAX_VERTICES}")]
    TooManyVertices(usize),
}

/// Exact value in units of ¼.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Quarters(pub i64);

impl Quarters {
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 4.0
    }
}

impl fmt::Display for Quarters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 4 == 0 {
            write!(f, "{}", self.0 / 4)
        } else {
            write!(f, "{}/4", self.0)
        }
    }
}

/// ±1 outcomes for every vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<i8>,
}

impl Assignment {
    /// Decodes `mask` over `n` vertices (bit set ⇒ −1).
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self {
            values: (0..n)
                .map(|i| if mask >> i & 1 == 1 { -1 } else { 1 })
                .collect(),
        }
    }

    /// Panics unless every entry is ±1.
    pub fn new(values: Vec<i8>) -> Self {
        assert!(values.iter().all(|v| *v == 1 || *v == -1), "outcomes must be ±1");
        Self { values }
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    pub fn to_mask(&self) -> u64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == -1)
            .fold(0, |m, (i, _)| m | 1 << i)
    }
}

/// `Σ_u a_u − ½ Σ_edges a_u a_v`, exactly.
pub fn classical_value(a: &Assignment, graph: &OrthogonalityGraph) -> Quarters {
    let linear: i64 = a.values.iter().map(|&v| v as i64).sum();
    let corr: i64 = graph
        .edges()
        .iter()
        .map(|&(u, v)| (a.values[u] * a.values[v]) as i64)
        .sum();
    Quarters(4 * linear - EDGE_WEIGHT_QUARTERS * corr)
}

fn value_of_mask(mask: u64, n: usize, edge_masks: &[(u64, u64)]) -> i64 {
    let linear = n as i64 - 2 * mask.count_ones() as i64;
    let corr: i64 = edge_masks
        .iter()
        .map(|&(bu, bv)| if (mask & bu == 0) == (mask & bv == 0) { 1 } else { -1 })
        .sum();
    4 * linear - EDGE_WEIGHT_QUARTERS * corr
}

fn vertex_count(graph: &OrthogonalityGraph) -> Result<usize, NchvError> {
    let n = graph.labels().len();
    if n > MAX_VERTICES {
        return Err(NchvError::TooManyVertices(n));
    }
    Ok(n)
}

/// Maximum of [`classical_value`] over all `2^n` assignments. Ties go to the
/// lowest mask.
pub fn classical_max(graph: &OrthogonalityGraph) -> Result<(Quarters, Assignment), NchvError> {
    let n = vertex_count(graph)?;
    let edge_masks: Vec<(u64, u64)> = graph
        .edges()
        .iter()
        .map(|&(u, v)| (1u64 << u, 1u64 << v))
        .collect();
    let total = 1u64 << n;
    let chunks = total.div_ceil(CHUNK);
    let (value, mask) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(total);
            let mut best = (i64::MIN, lo);
            for mask in lo..hi {
                let v = value_of_mask(mask, n, &edge_masks);
                if v > best.0 {
                    best = (v, mask);
                }
            }
            best
        })
        .reduce(
            || (i64::MIN, u64::MAX),
            |a, b| {
                if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                    a
                } else {
                    b
                }
            },
        );
    Ok((Quarters(value), Assignment::from_mask(mask, n)))
}

/// 0/1 value assignment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct KsAssignment {
    values: Vec<u8>,
}

impl KsAssignment {
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self {
            values: (0..n).map(|i| (mask >> i & 1) as u8).collect(),
        }
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }
}

/// All 0/1 assignments with no edge fully assigned 1 and exactly one 1 in
/// every complete triad of the graph.
pub fn ks_admissible_assignments(
    graph: &OrthogonalityGraph,
) -> Result<Vec<KsAssignment>, NchvError> {
    let n = vertex_count(graph)?;
    let edges: Vec<u64> = graph
        .edges()
        .iter()
        .map(|&(u, v)| 1u64 << u | 1u64 << v)
        .collect();
    let triads: Vec<u64> = graph
        .triangles()
        .iter()
        .map(|t| t.iter().fold(0u64, |m, &i| m | 1 << i))
        .collect();
    let masks: Vec<u64> = (0..1u64 << n)
        .into_par_iter()
        .filter(|&mask| {
            edges.iter().all(|&e| mask & e != e)
                && triads.iter().all(|&t| (mask & t).count_ones() == 1)
        })
        .collect();
    Ok(masks
        .into_iter()
        .map(|m| KsAssignment::from_mask(m, n))
        .collect())
}

/// Range of `Σ_k h_k` over admissible assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HBound {
    pub max: u32,
    pub min: u32,
    pub admissible: usize,
}

pub fn h_classical_bound(
    graph: &OrthogonalityGraph,
    h_indices: &[usize],
) -> Result<HBound, NchvError> {
    let admissible = ks_admissible_assignments(graph)?;
    let sums: Vec<u32> = admissible
        .iter()
        .map(|a| h_indices.iter().map(|&i| a.values[i] as u32).sum())
        .collect();
    match (sums.iter().max(), sums.iter().min()) {
        (Some(&max), Some(&min)) => Ok(HBound {
            max,
            min,
            admissible: admissible.len(),
        }),
        _ => Err(NchvError::NoAdmissibleAssignment),
    }
}

/// Maximum of `Σ_k h_k` over admissible assignments.
pub fn h_classical_max(graph: &OrthogonalityGraph, h_indices: &[usize]) -> Result<u32, NchvError> {
    h_classical_bound(graph, h_indices).map(|b| b.max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rays::{YuOhSet, EDGE_WEIGHT};

    fn set() -> YuOhSet {
        YuOhSet::canonical()
    }

    #[test]
    fn weight_matches_operator_weight() {
        assert_eq!(EDGE_WEIGHT_QUARTERS as f64 / 4.0, EDGE_WEIGHT);
    }

    #[test]
    fn value_examples() {
        let s = set();
        let g = s.graph();
        let all_plus = Assignment::new(vec![1; 13]);
        assert_eq!(classical_value(&all_plus, g), Quarters(4));
        assert_eq!(classical_value(&all_plus.negated(), g), Quarters(-100));

        let mut a = vec![1i8; 13];
        for l in ["z1", "y2-", "y2+"] {
            a[g.index_of(l).unwrap()] = -1;
        }
        let v = classical_value(&Assignment::new(a), g);
        assert!(v <= Quarters(32));
    }

    #[test]
    fn mask_round_trip() {
        for mask in [0u64, 1, 0b1010_1010_1010, 8191] {
            assert_eq!(Assignment::from_mask(mask, 13).to_mask(), mask);
        }
    }

    #[test]
    fn fast_path_matches_definition() {
        let s = set();
        let g = s.graph();
        let em: Vec<(u64, u64)> = g.edges().iter().map(|&(u, v)| (1 << u, 1 << v)).collect();
        for mask in (0..8192u64).step_by(37) {
            let a = Assignment::from_mask(mask, 13);
            assert_eq!(Quarters(value_of_mask(mask, 13, &em)), classical_value(&a, g));
        }
    }

    #[test]
    fn max_is_eight() {
        let s = set();
        let (v, witness) = classical_max(s.graph()).unwrap();
        assert_eq!(v, Quarters(32));
        assert_eq!(v.to_string(), "8");
        assert_eq!(classical_value(&witness, s.graph()), v);
        assert!(25.0 / 3.0 - v.to_f64() - 1.0 / 3.0 < 1e-12);
    }

    #[test]
    fn max_prefers_lowest_mask() {
        let s = set();
        let (v, witness) = classical_max(s.graph()).unwrap();
        let em: Vec<(u64, u64)> = s.graph().edges().iter().map(|&(u, v)| (1 << u, 1 << v)).collect();
        let first = (0..8192u64).find(|&m| value_of_mask(m, 13, &em) == v.0).unwrap();
        assert_eq!(witness.to_mask(), first);
    }

    #[test]
    fn ks_assignments() {
        let s = set();
        let g = s.graph();
        let all = ks_admissible_assignments(g).unwrap();
        assert!(!all.is_empty());
        let z: Vec<usize> = ["z1", "z2", "z3"].iter().map(|l| g.index_of(l).unwrap()).collect();
        for a in &all {
            assert_eq!(z.iter().map(|&i| a.values()[i]).sum::<u8>(), 1);
            for &(u, v) in g.edges() {
                assert!(a.values()[u] + a.values()[v] <= 1);
            }
        }
    }

    #[test]
    fn h_bound() {
        let s = set();
        let b = h_classical_bound(s.graph(), &s.h_indices()).unwrap();
        assert_eq!(b.max, 1);
        assert_eq!(b.min, 0);
        assert!(b.admissible > 0);
        assert!(4.0 / 3.0 > b.max as f64);
        assert_eq!(h_classical_max(s.graph(), &s.h_indices()).unwrap(), 1);
    }

    #[test]
    fn single_triad_graph() {
        let rays = vec![
            crate::rays::Ray::from_real("a", [1.0, 0.0, 0.0]).unwrap(),
            crate::rays::Ray::from_real("b", [0.0, 1.0, 0.0]).unwrap(),
            crate::rays::Ray::from_real("c", [0.0, 0.0, 1.0]).unwrap(),
        ];
        let g = OrthogonalityGraph::from_rays(&rays);
        assert_eq!(ks_admissible_assignments(&g).unwrap().len(), 3);
        let b = h_classical_bound(&g, &[]).unwrap();
        assert_eq!((b.max, b.min), (0, 0));
    }
}
