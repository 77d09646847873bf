//! Algebraic self-checks of a ray table.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::nchv::{classical_max, h_classical_bound, ks_admissible_assignments};
use crate::qutrit::{Mat3, ALGEBRA_TOL};
use crate::rays::{
    scalar_part, Ray, RayError, YuOhSet, EDGE_COUNT, H_LABELS, MEASUREMENT_RAY_COUNT,
};

/// One named check with its expected and observed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check: String,
    pub expected: Value,
    pub got: Value,
    pub pass: bool,
}

impl Check {
    fn new(check: &str, expected: Value, got: Value, pass: bool) -> Self {
        Self {
            check: check.to_string(),
            expected,
            got,
            pass,
        }
    }

    fn failed(check: &str, expected: Value, reason: String) -> Self {
        Self::new(check, expected, Value::String(reason), false)
    }
}

fn scalar_check(name: &str, want: f64, m: &Result<Mat3, RayError>) -> Check {
    match m {
        Ok(m) => {
            let (lambda, spread) = scalar_part(m);
            let pass = (lambda - want).abs() < ALGEBRA_TOL && spread < ALGEBRA_TOL;
            Check::new(
                name,
                json!({ "scalar": want, "max_deviation": ALGEBRA_TOL }),
                json!({ "scalar": lambda, "max_deviation": spread }),
                pass,
            )
        }
        Err(e) => Check::failed(name, json!(want), e.to_string()),
    }
}

/// Runs every check on `rays`; the table need not be consistent.
pub fn run_checks(rays: Vec<Ray>) -> Vec<Check> {
    let set = YuOhSet::from_rays_unchecked(rays);
    let graph = set.graph();
    let mut out = Vec::new();

    out.push(Check::new(
        "edge_count",
        json!(EDGE_COUNT),
        json!(graph.edge_count()),
        graph.edge_count() == EDGE_COUNT,
    ));
    let operator = set.inequality_operator();
    out.push(scalar_check("inequality_operator", 25.0 / 3.0, &operator));
    out.push(scalar_check("h_sum_operator", 4.0 / 3.0, &set.h_sum_operator()));

    let quantum = operator.as_ref().map_or(f64::NAN, |m| scalar_part(m).0);
    match classical_max(graph) {
        Ok((value, _)) => {
            out.push(Check::new("classical_max", json!(8.0), json!(value.to_f64()), value.0 == 32));
            let gap = quantum - value.to_f64();
            out.push(Check::new(
                "quantum_value",
                json!(25.0 / 3.0),
                json!(quantum),
                (quantum - 25.0 / 3.0).abs() < ALGEBRA_TOL,
            ));
            out.push(Check::new(
                "quantum_gap",
                json!(1.0 / 3.0),
                json!(gap),
                (gap - 1.0 / 3.0).abs() < 1e-12,
            ));
        }
        Err(e) => out.push(Check::failed("classical_max", json!(8.0), e.to_string())),
    }

    match ks_admissible_assignments(graph) {
        Ok(all) => out.push(Check::new(
            "ks_admissible_count",
            json!("> 0"),
            json!(all.len()),
            !all.is_empty(),
        )),
        Err(e) => out.push(Check::failed("ks_admissible_count", json!("> 0"), e.to_string())),
    }

    let h_idx: Option<Vec<usize>> = H_LABELS.iter().map(|l| graph.index_of(l)).collect();
    match h_idx.ok_or_else(|| "missing h rays".to_string()).and_then(|idx| {
        h_classical_bound(graph, &idx).map_err(|e| e.to_string())
    }) {
        Ok(b) => out.push(Check::new(
            "h_classical_max",
            json!(1),
            json!(b.max),
            b.max == 1,
        )),
        Err(e) => out.push(Check::failed("h_classical_max", json!(1), e)),
    }

    let m = set.measurement_rays().len();
    out.push(Check::new(
        "measurement_ray_count",
        json!(MEASUREMENT_RAY_COUNT),
        json!(m),
        m == MEASUREMENT_RAY_COUNT,
    ));
    out
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
