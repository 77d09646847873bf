//! Text, CSV and JSON renderings.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use yuoh_core::experiment::TraceDump;
use yuoh_core::pulse::{duration_of, CalibrationTable, PulseError, PulseSequence};
use yuoh_core::{Channel, ExperimentReport, Ray};

pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PulseRow {
    pub channel: Channel,
    pub theta_rad: f64,
    pub phi_rad: f64,
    pub duration_us: f64,
}

pub fn pulse_rows(seq: &PulseSequence, cal: &CalibrationTable) -> Result<Vec<PulseRow>, PulseError> {
    seq.pulses()
        .iter()
        .map(|p| {
            Ok(PulseRow {
                channel: p.channel(),
                theta_rad: round6(p.theta()),
                phi_rad: round6(p.phi()),
                duration_us: round6(duration_of(p, cal)?),
            })
        })
        .collect()
}

pub fn pulse_table(rows: &[PulseRow]) -> String {
    if rows.is_empty() {
        return "  no pulses required\n".to_string();
    }
    let mut s = format!("  {:<8}{:>12}{:>12}{:>14}\n", "channel", "theta_rad", "phi_rad", "duration_us");
    for r in rows {
        let _ = writeln!(
            s,
            "  {:<8}{:>12}{:>12}{:>14}",
            r.channel.to_string(),
            fmt6(r.theta_rad),
            fmt6(r.phi_rad),
            fmt6(r.duration_us)
        );
    }
    s
}

pub fn vector_text(ray: &Ray) -> String {
    let parts: Vec<String> = ray
        .components()
        .iter()
        .map(|z| {
            if z.im == 0.0 {
                fmt6(z.re)
            } else {
                format!("{}{:+.6}i", fmt6(z.re), z.im)
            }
        })
        .collect();
    format!("({})", parts.join(", "))
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

/// Writes report.json, observables.csv, correlations.csv and summary.csv.
pub fn write_report(dir: &Path, report: &ExperimentReport) -> Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(dir.join("report.json"), json + "\n").context("writing report.json")?;

    let mut obs = writer(&dir.join("observables.csv"))?;
    obs.write_record(["state", "ray", "P", "a_u", "stderr"])?;
    for s in &report.states {
        for p in &s.projections {
            obs.write_record([&s.label, &p.ray, &fmt6(p.p), &fmt6(1.0 - 2.0 * p.p), &fmt6(p.stderr)])?;
        }
    }
    obs.flush()?;

    let mut corr = writer(&dir.join("correlations.csv"))?;
    corr.write_record(["state", "edge_u", "edge_v", "value", "method"])?;
    for s in &report.states {
        for c in &s.correlations {
            for (method, value) in [("joint", c.joint), ("algebraic", c.algebraic)] {
                if let Some(v) = value {
                    corr.write_record([&s.label, &c.u, &c.v, &fmt6(v), method])?;
                }
            }
        }
    }
    corr.flush()?;

    let mut sum = writer(&dir.join("summary.csv"))?;
    sum.write_record(["state", "lhs", "h_sum"])?;
    for s in &report.states {
        sum.write_record([&s.label, &fmt6(s.lhs), &fmt6(s.h_sum)])?;
    }
    sum.flush()?;
    Ok(())
}

pub fn write_traces(path: &Path, traces: &[TraceDump]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["state", "ray", "channel", "duration_us", "counts"])?;
    for t in traces {
        for (d, n) in t.durations.iter().zip(&t.counts) {
            w.write_record([&t.state, &t.ray, &t.channel.to_string(), &fmt6(*d), &fmt6(*n)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Outcome matrix `a_u` (rows prepared states, columns measured rays) and
/// the per-state LHS list.
pub fn render_report(report: &ExperimentReport) -> String {
    let mut s = String::from("outcome matrix a_u = 1 - 2P\n");
    let _ = write!(s, "{:<12}", "state");
    for l in &report.observable_labels {
        let _ = write!(s, "{l:>11}");
    }
    s.push('\n');
    for (state, row) in report.states.iter().zip(report.outcome_matrix()) {
        let _ = write!(s, "{:<12}", state.label);
        for a in row {
            let _ = write!(s, "{:>11}", fmt6(a));
        }
        s.push('\n');
    }
    s.push_str("\nper-state values\n");
    let _ = writeln!(s, "{:<12}{:>12}{:>12}", "state", "lhs", "h_sum");
    for st in &report.states {
        let _ = writeln!(s, "{:<12}{:>12}{:>12}", st.label, fmt6(st.lhs), fmt6(st.h_sum));
    }
    let _ = writeln!(
        s,
        "mean lhs {}  min {}  max {}",
        fmt6(report.summary.lhs_mean),
        fmt6(report.summary.lhs_min),
        fmt6(report.summary.lhs_max)
    );
    s
}

/// One row per state: label, the 13 outcomes, lhs and h_sum.
pub fn write_plot_csv(path: &Path, report: &ExperimentReport) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["state".to_string()];
    header.extend(report.observable_labels.iter().cloned());
    header.extend(["lhs".to_string(), "h_sum".to_string()]);
    w.write_record(&header)?;
    for (state, row) in report.states.iter().zip(report.outcome_matrix()) {
        let mut rec = vec![state.label.clone()];
        rec.extend(row.into_iter().map(fmt6));
        rec.extend([fmt6(state.lhs), fmt6(state.h_sum)]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
