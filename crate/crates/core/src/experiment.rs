//! End-to-end simulation of the contextuality measurement.
//!
//! For every prepared state all 25 measurement rays are read out, the 13
//! observables follow as `a_u = 1 − 2·P_u`, and the 24 edge correlations are
//! assembled from the same projections.
//!
//! Random streams are keyed by `(domain, major, minor, channel)`:
//!
//! | domain | major | minor |
//! |--------|-------|-------|
//! | 0 benchmark | 0 | 0 |
//! | 1 state cell | state index | measurement-ray index |
//! | 2 cached conditional | edge index | direction |
//! | 3 uncached conditional | state index | `2·edge + direction` |

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pulse::{
    compile_measurement, compile_preparation, sequence_unitary_with_amp_error, CalibrationTable,
    PulseError,
};
use crate::qutrit::{depolarize, expectation, Channel, DensityOperator, QutritError, StateVector};
use crate::rays::{Ray, RayError, RayRecord, YuOhSet, EDGE_WEIGHT};
use crate::readout::{
    fit_trace, simulate_rabi_trace, FluorescenceModel, NoiseConfig, PopulationEstimate,
    RabiTrace, ReadoutError, ReferenceLevels, StreamKey,
};

const DOMAIN_BENCHMARK: u8 = 0;
const DOMAIN_CELL: u8 = 1;
const DOMAIN_CONDITIONAL: u8 = 2;
const DOMAIN_CONDITIONAL_UNCACHED: u8 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Qutrit(#[from] QutritError),
    #[error(transparent)]
    Ray(#[from] RayError),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Readout(#[from] ReadoutError),
    #[error("edge index {0} out of range")]
    EdgeIndex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    #[default]
    Joint,
    Algebraic,
    Both,
}

impl CorrelationMethod {
    fn joint(self) -> bool {
        matches!(self, Self::Joint | Self::Both)
    }

    fn algebraic(self) -> bool {
        matches!(self, Self::Algebraic | Self::Both)
    }
}

/// `Tr(ρ·r̂)`.
pub fn ideal_population(state: &DensityOperator, r: &Ray) -> f64 {
    expectation(&r.projector_matrix(), state).expect("projector is Hermitian")
}

/// Signed sum of the four joint outcome probabilities for an edge `(u, v)`
/// with completion `w`. `c_uv` is `P(r_u=1 | r_v=1)`, `c_vu` the reverse.
pub fn joint_correlation(p_u: f64, p_v: f64, p_w: f64, c_uv: f64, c_vu: f64) -> f64 {
    let pp = p_w;
    let mm = c_uv * p_v;
    let pm = (1.0 - c_uv) * p_v;
    let mp = (1.0 - c_vu) * p_u;
    pp + mm - pm - mp
}

/// `1 − 2P_u − 2P_v`, exact for orthogonal rays.
pub fn algebraic_correlation(p_u: f64, p_v: f64) -> f64 {
    1.0 - 2.0 * p_u - 2.0 * p_v
}

/// Conditional probabilities measured on the edge partners themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditionals {
    /// `P(r_u=1 | r_v=1)`: prepare `|r_v⟩`, measure `r̂_u`.
    pub u_given_v: f64,
    /// `P(r_v=1 | r_u=1)`.
    pub v_given_u: f64,
}

/// One fully read-out projector measurement, optionally with its traces.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub estimate: PopulationEstimate,
    pub traces: Option<[RabiTrace; 2]>,
}

/// Simulated laboratory: ray tables, calibration and noise for one run.
#[derive(Debug, Clone)]
pub struct Experiment {
    set: YuOhSet,
    measurement_rays: Vec<Ray>,
    completion_idx: Vec<usize>,
    calibration: CalibrationTable,
    model: FluorescenceModel,
    noise: NoiseConfig,
    reference: ReferenceLevels,
    conditionals: Option<Vec<Conditionals>>,
    parallel: bool,
}

impl Experiment {
    pub fn new(
        calibration: CalibrationTable,
        model: FluorescenceModel,
        noise: NoiseConfig,
    ) -> Result<Self, SimError> {
        Self::with_options(calibration, model, noise, true, true)
    }

    pub fn with_options(
        calibration: CalibrationTable,
        model: FluorescenceModel,
        noise: NoiseConfig,
        cache_conditionals: bool,
        parallel: bool,
    ) -> Result<Self, SimError> {
        calibration.validate()?;
        model.validate()?;
        noise.validate()?;
        let set = YuOhSet::canonical();
        let measurement_rays = set.measurement_rays();
        let completion_idx = set.completion_indices(&measurement_rays);
        let reference = if noise.noiseless {
            ReferenceLevels::exact(&model)
        } else {
            let mut rng = StreamKey::new(DOMAIN_BENCHMARK, 0, 0).rng(noise.seed);
            let bench = simulate_rabi_trace(
                &StateVector::basis(0).density(),
                Channel::Mw1,
                calibration.rabi_period(Channel::Mw1)?,
                &model,
                &noise,
                &mut rng,
            );
            ReferenceLevels::from_benchmark(&bench)?
        };
        let mut exp = Self {
            set,
            measurement_rays,
            completion_idx,
            calibration,
            model,
            noise,
            reference,
            conditionals: None,
            parallel,
        };
        if cache_conditionals {
            let edges = exp.set.graph().edge_count();
            let table = exp
                .map_cells(edges, |e| {
                    exp.measure_conditionals(e, |dir| StreamKey::new(DOMAIN_CONDITIONAL, e as u32, dir))
                })
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?;
            exp.conditionals = Some(table);
        }
        Ok(exp)
    }

    pub fn set(&self) -> &YuOhSet {
        &self.set
    }

    pub fn measurement_rays(&self) -> &[Ray] {
        &self.measurement_rays
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn reference(&self) -> ReferenceLevels {
        self.reference
    }

    pub fn cached_conditionals(&self) -> Option<&[Conditionals]> {
        self.conditionals.as_deref()
    }

    fn map_cells<T: Send, F>(&self, n: usize, f: F) -> Vec<T>
    where
        F: Fn(usize) -> T + Sync + Send,
    {
        if self.parallel {
            (0..n).into_par_iter().map(f).collect()
        } else {
            (0..n).map(f).collect()
        }
    }

    /// Runs the preparation sequence for `target` from `|0⟩`, including the
    /// configured amplitude error and depolarizing channel.
    pub fn prepare(&self, target: &StateVector) -> Result<DensityOperator, SimError> {
        let seq = compile_preparation(target)?;
        let u = sequence_unitary_with_amp_error(&seq, self.noise.effective_amp_error());
        let rho = StateVector::basis(0).density().evolve(&u);
        Ok(depolarize(&rho, self.noise.effective_depolarizing())?)
    }

    /// Reads out `|r⟩⟨r|` on `prepared` through two fitted Rabi traces.
    pub fn measure(
        &self,
        prepared: &DensityOperator,
        r: &Ray,
        key: StreamKey,
        keep_traces: bool,
    ) -> Result<Measurement, SimError> {
        let seq = compile_measurement(&r.state())?;
        let u = sequence_unitary_with_amp_error(&seq, self.noise.effective_amp_error());
        let rotated = prepared.evolve(&u);
        let trace = |ch: Channel| -> Result<RabiTrace, SimError> {
            let mut rng = key.with_channel(ch).rng(self.noise.seed);
            Ok(simulate_rabi_trace(
                &rotated,
                ch,
                self.calibration.rabi_period(ch)?,
                &self.model,
                &self.noise,
                &mut rng,
            ))
        };
        let mw1 = trace(Channel::Mw1)?;
        let mw2 = trace(Channel::Mw2)?;
        let fit1 = fit_trace(&mw1, self.reference)?;
        let fit2 = fit_trace(&mw2, self.reference)?;
        Ok(Measurement {
            estimate: PopulationEstimate::from_fits(&fit2, &fit1),
            traces: keep_traces.then_some([mw1, mw2]),
        })
    }

    /// Single projector readout using the stream of cell
    /// `(state_index, measurement-ray index)`, or a dedicated stream when `r`
    /// is not in the measurement set.
    pub fn measure_projector(
        &self,
        prepared: &DensityOperator,
        r: &Ray,
        state_index: u32,
    ) -> Result<PopulationEstimate, SimError> {
        let minor = self
            .measurement_rays
            .iter()
            .position(|m| m.same_ray(r))
            .unwrap_or(u16::MAX as usize) as u16;
        Ok(self
            .measure(prepared, r, StreamKey::new(DOMAIN_CELL, state_index, minor), false)?
            .estimate)
    }

    fn edge(&self, edge: usize) -> Result<(usize, usize), SimError> {
        self.set
            .graph()
            .edges()
            .get(edge)
            .copied()
            .ok_or(SimError::EdgeIndex(edge))
    }

    /// Looks up the edge joining two labels.
    pub fn edge_between(&self, u: &str, v: &str) -> Result<usize, SimError> {
        let g = self.set.graph();
        let iu = g.index_of(u).ok_or_else(|| RayError::UnknownLabel(u.into()))?;
        let iv = g.index_of(v).ok_or_else(|| RayError::UnknownLabel(v.into()))?;
        g.edge_index(iu, iv)
            .ok_or_else(|| RayError::NotEdge(u.into(), v.into()).into())
    }

    fn measure_conditionals(
        &self,
        edge: usize,
        key: impl Fn(u16) -> StreamKey,
    ) -> Result<Conditionals, SimError> {
        let (u, v) = self.edge(edge)?;
        let ru = &self.set.rays()[u];
        let rv = &self.set.rays()[v];
        let prep_v = self.prepare(&rv.state())?;
        let prep_u = self.prepare(&ru.state())?;
        Ok(Conditionals {
            u_given_v: self.measure(&prep_v, ru, key(0), false)?.estimate.p,
            v_given_u: self.measure(&prep_u, rv, key(1), false)?.estimate.p,
        })
    }

    fn conditionals_for(&self, edge: usize, state_index: u32) -> Result<Conditionals, SimError> {
        match &self.conditionals {
            Some(table) => table.get(edge).copied().ok_or(SimError::EdgeIndex(edge)),
            None => self.measure_conditionals(edge, |dir| {
                StreamKey::new(
                    DOMAIN_CONDITIONAL_UNCACHED,
                    state_index,
                    (2 * edge) as u16 + dir,
                )
            }),
        }
    }

    fn edge_projections(
        &self,
        prepared: &DensityOperator,
        edge: usize,
        state_index: u32,
    ) -> Result<(f64, f64, f64), SimError> {
        let (u, v) = self.edge(edge)?;
        let w = self.completion_idx[edge];
        let p = |i: usize| -> Result<f64, SimError> {
            Ok(self
                .measure(
                    prepared,
                    &self.measurement_rays[i],
                    StreamKey::new(DOMAIN_CELL, state_index, i as u16),
                    false,
                )?
                .estimate
                .p)
        };
        Ok((p(u)?, p(v)?, p(w)?))
    }

    /// `⟨Â_uÂ_v⟩` from the four joint outcome probabilities.
    pub fn correlation_joint(
        &self,
        prepared: &DensityOperator,
        edge: usize,
        state_index: u32,
    ) -> Result<f64, SimError> {
        let (pu, pv, pw) = self.edge_projections(prepared, edge, state_index)?;
        let cond = self.conditionals_for(edge, state_index)?;
        Ok(joint_correlation(pu, pv, pw, cond.u_given_v, cond.v_given_u).clamp(-1.0, 1.0))
    }

    /// `⟨Â_uÂ_v⟩ = 1 − 2P_u − 2P_v`.
    pub fn correlation_algebraic(
        &self,
        prepared: &DensityOperator,
        edge: usize,
        state_index: u32,
    ) -> Result<f64, SimError> {
        let (pu, pv, _) = self.edge_projections(prepared, edge, state_index)?;
        Ok(algebraic_correlation(pu, pv).clamp(-1.0, 1.0))
    }

    /// Runs the full protocol on `states`.
    pub fn run(&self, states: &[Ray], method: CorrelationMethod) -> Result<ExperimentReport, SimError> {
        Ok(self.run_with_traces(states, method, false)?.0)
    }

    /// As [`Self::run`], also returning every Rabi trace when `dump_traces`.
    pub fn run_with_traces(
        &self,
        states: &[Ray],
        method: CorrelationMethod,
        dump_traces: bool,
    ) -> Result<(ExperimentReport, Vec<TraceDump>), SimError> {
        let n_rays = self.measurement_rays.len();
        let cells = self.map_cells(states.len() * n_rays, |cell| {
            let (s, r) = (cell / n_rays, cell % n_rays);
            let prepared = self.prepare(&states[s].state())?;
            self.measure(
                &prepared,
                &self.measurement_rays[r],
                StreamKey::new(DOMAIN_CELL, s as u32, r as u16),
                dump_traces,
            )
        });
        let cells: Vec<Measurement> = cells.into_iter().collect::<Result<_, _>>()?;

        let mut traces = Vec::new();
        let mut reports = Vec::with_capacity(states.len());
        for (s, target) in states.iter().enumerate() {
            let row = &cells[s * n_rays..(s + 1) * n_rays];
            if dump_traces {
                for (r, m) in row.iter().enumerate() {
                    for tr in m.traces.iter().flatten() {
                        traces.push(TraceDump {
                            state: target.label().to_string(),
                            ray: self.measurement_rays[r].label().to_string(),
                            channel: tr.channel,
                            durations: tr.durations.clone(),
                            counts: tr.counts.clone(),
                        });
                    }
                }
            }
            let estimates: Vec<PopulationEstimate> = row.iter().map(|m| m.estimate).collect();
            reports.push(self.assemble_state(target, s as u32, &estimates, method)?);
        }
        Ok((self.assemble_report(states, reports, method), traces))
    }

    fn assemble_state(
        &self,
        target: &Ray,
        state_index: u32,
        est: &[PopulationEstimate],
        method: CorrelationMethod,
    ) -> Result<StateReport, SimError> {
        let n_obs = self.set.rays().len();
        let mut clamped: u32 = est.iter().map(|e| e.clamped).sum();
        let p: Vec<f64> = est.iter().map(|e| e.p).collect();
        let observables: Vec<f64> = p[..n_obs].iter().map(|pu| 1.0 - 2.0 * pu).collect();
        let mut correlations = Vec::with_capacity(self.set.graph().edge_count());
        let mut clamp_corr = |x: f64| {
            if !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&x) {
                clamped += 1;
            }
            x.clamp(-1.0, 1.0)
        };
        for (e, &(u, v)) in self.set.graph().edges().iter().enumerate() {
            let w = self.completion_idx[e];
            let joint = if method.joint() {
                let cond = self.conditionals_for(e, state_index)?;
                Some(clamp_corr(joint_correlation(
                    p[u],
                    p[v],
                    p[w],
                    cond.u_given_v,
                    cond.v_given_u,
                )))
            } else {
                None
            };
            let algebraic = method
                .algebraic()
                .then(|| clamp_corr(algebraic_correlation(p[u], p[v])));
            let (lu, lv) = self.set.graph().edge_labels(e);
            correlations.push(CorrelationRecord {
                u: lu.to_string(),
                v: lv.to_string(),
                joint,
                algebraic,
            });
        }
        let linear: f64 = observables.iter().sum();
        let lhs_of = |pick: fn(&CorrelationRecord) -> Option<f64>| -> Option<f64> {
            let corr: Option<Vec<f64>> = correlations.iter().map(pick).collect();
            corr.map(|c| linear - EDGE_WEIGHT * c.iter().sum::<f64>())
        };
        let lhs_joint = lhs_of(|c| c.joint);
        let lhs_algebraic = lhs_of(|c| c.algebraic);
        let lhs = lhs_joint.or(lhs_algebraic).expect("at least one method");
        let h_sum = self.set.h_indices().iter().map(|&i| p[i]).sum();
        let projections = self
            .measurement_rays
            .iter()
            .zip(est)
            .map(|(r, e)| ProjectionRecord {
                ray: r.label().to_string(),
                p: e.p,
                p1: e.p1,
                p2: e.p2,
                stderr: e.stderr,
            })
            .collect();
        Ok(StateReport {
            label: target.label().to_string(),
            vector: RayRecord::from(target).components,
            projections,
            observables,
            correlations,
            lhs,
            lhs_joint,
            lhs_algebraic,
            h_sum,
            clamped,
        })
    }

    fn assemble_report(
        &self,
        states: &[Ray],
        reports: Vec<StateReport>,
        method: CorrelationMethod,
    ) -> ExperimentReport {
        let n_obs = self.set.rays().len();
        let projection_matrix = reports
            .iter()
            .map(|s| s.projections[..n_obs].iter().map(|p| p.p).collect())
            .collect();
        let complementary_projections = reports
            .iter()
            .map(|s| s.projections[n_obs..].iter().map(|p| p.p).collect())
            .collect();
        let lhs: Vec<f64> = reports.iter().map(|s| s.lhs).collect();
        let h: Vec<f64> = reports.iter().map(|s| s.h_sum).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        let summary = Summary {
            lhs_min: lhs.iter().copied().fold(f64::INFINITY, f64::min),
            lhs_max: lhs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            lhs_mean: mean(&lhs),
            h_sum_min: h.iter().copied().fold(f64::INFINITY, f64::min),
            h_sum_mean: mean(&h),
            clamped: reports.iter().map(|s| s.clamped).sum(),
        };
        ExperimentReport {
            settings: ReportSettings {
                noise: self.noise,
                fluorescence: self.model,
                calibration: self.calibration,
                correlation_method: method,
                conditionals_cached: self.conditionals.is_some(),
            },
            reference: self.reference,
            measurement_rays: self.measurement_rays.iter().map(RayRecord::from).collect(),
            observable_labels: self.set.rays().iter().map(|r| r.label().to_string()).collect(),
            edges: (0..self.set.graph().edge_count())
                .map(|e| {
                    let (u, v) = self.set.graph().edge_labels(e);
                    [u.to_string(), v.to_string()]
                })
                .collect(),
            state_labels: states.iter().map(|s| s.label().to_string()).collect(),
            states: reports,
            projection_matrix,
            complementary_projections,
            summary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionRecord {
    pub ray: String,
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationRecord {
    pub u: String,
    pub v: String,
    pub joint: Option<f64>,
    pub algebraic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateReport {
    pub label: String,
    pub vector: [[f64; 2]; 3],
    /// All 25 measurement rays, canonical 13 first.
    pub projections: Vec<ProjectionRecord>,
    /// `a_u = 1 − 2P_u` for the 13 canonical rays.
    pub observables: Vec<f64>,
    pub correlations: Vec<CorrelationRecord>,
    /// Inequality left-hand side from the primary correlation method.
    pub lhs: f64,
    pub lhs_joint: Option<f64>,
    pub lhs_algebraic: Option<f64>,
    pub h_sum: f64,
    pub clamped: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub lhs_min: f64,
    pub lhs_max: f64,
    pub lhs_mean: f64,
    pub h_sum_min: f64,
    pub h_sum_mean: f64,
    pub clamped: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSettings {
    pub noise: NoiseConfig,
    pub fluorescence: FluorescenceModel,
    pub calibration: CalibrationTable,
    pub correlation_method: CorrelationMethod,
    pub conditionals_cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub settings: ReportSettings,
    pub reference: ReferenceLevels,
    pub measurement_rays: Vec<RayRecord>,
    pub observable_labels: Vec<String>,
    pub edges: Vec<[String; 2]>,
    pub state_labels: Vec<String>,
    pub states: Vec<StateReport>,
    /// `P(prepared, measured)` over the 13 canonical rays.
    pub projection_matrix: Vec<Vec<f64>>,
    /// Projections onto the 12 completion rays, per state.
    pub complementary_projections: Vec<Vec<f64>>,
    pub summary: Summary,
}

impl ExperimentReport {
    /// Outcome matrix `a_u` indexed `[state][ray]`.
    pub fn outcome_matrix(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| s.observables.clone()).collect()
    }

    pub fn lhs_values(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.lhs).collect()
    }

    pub fn h_sums(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.h_sum).collect()
    }
}

/// One Rabi trace, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDump {
    pub state: String,
    pub ray: String,
    pub channel: Channel,
    pub durations: Vec<f64>,
    pub counts: Vec<f64>,
}

/// Runs the protocol on the 13 canonical states with default calibration.
pub fn run_experiment(
    noise: NoiseConfig,
    model: FluorescenceModel,
    states: &[Ray],
) -> Result<ExperimentReport, SimError> {
    Experiment::new(CalibrationTable::default(), model, noise)?.run(states, CorrelationMethod::Joint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rays::canonical_rays;

    fn noiseless() -> Experiment {
        Experiment::new(
            CalibrationTable::default(),
            FluorescenceModel::default(),
            NoiseConfig::noiseless(),
        )
        .unwrap()
    }

    #[test]
    fn ideal_population_examples() {
        let set = YuOhSet::canonical();
        let z1 = set.ray("z1").unwrap();
        assert!((ideal_population(&StateVector::basis(0).density(), z1) - 1.0).abs() < 1e-15);
        let y3m = set.ray("y3-").unwrap().state().density();
        let p = ideal_population(&y3m, set.ray("h1").unwrap());
        assert!((p - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(format!("{p:.3}"), "0.667");
        let mixed = DensityOperator::maximally_mixed();
        assert!((ideal_population(&mixed, set.ray("h3").unwrap()) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn measure_projector_examples() {
        let exp = noiseless();
        let set = exp.set().clone();
        let r = |l| set.ray(l).unwrap().clone();
        for label in ["z1", "y2+", "h2"] {
            let prep = exp.prepare(&r(label).state()).unwrap();
            let est = exp.measure_projector(&prep, &r(label), 0).unwrap();
            assert!((est.p - 1.0).abs() < 1e-9, "{label}: {est:?}");
        }
        let y3m = exp.prepare(&r("y3-").state()).unwrap();
        let est = exp.measure_projector(&y3m, &r("h1"), 0).unwrap();
        assert!((est.p - 2.0 / 3.0).abs() < 1e-9);
        let z1 = exp.prepare(&r("z1").state()).unwrap();
        assert!(exp.measure_projector(&z1, &r("z2"), 0).unwrap().p.abs() < 1e-9);
    }

    #[test]
    fn correlation_examples() {
        let exp = noiseless();
        let z1 = StateVector::basis(0).density();
        let e = exp.edge_between("z2", "z3").unwrap();
        assert!((exp.correlation_joint(&z1, e, 0).unwrap() - 1.0).abs() < 1e-9);
        let e = exp.edge_between("z1", "z2").unwrap();
        assert!((exp.correlation_joint(&z1, e, 0).unwrap() + 1.0).abs() < 1e-9);

        let mixed = DensityOperator::maximally_mixed();
        for e in 0..24 {
            let alg = exp.correlation_algebraic(&mixed, e, 0).unwrap();
            assert!((alg + 1.0 / 3.0).abs() < 1e-9);
        }
        let completions = exp.set().completions();
        for (e, w) in completions.iter().enumerate() {
            let prepared = exp.prepare(&w.state()).unwrap();
            assert!((exp.correlation_algebraic(&prepared, e, 0).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn non_edge_rejected() {
        let exp = noiseless();
        assert!(matches!(
            exp.edge_between("h1", "h2"),
            Err(SimError::Ray(RayError::NotEdge(_, _)))
        ));
        assert!(matches!(
            exp.correlation_joint(&DensityOperator::maximally_mixed(), 99, 0),
            Err(SimError::EdgeIndex(99))
        ));
    }

    #[test]
    fn noiseless_conditionals_vanish() {
        let exp = noiseless();
        for c in exp.cached_conditionals().unwrap() {
            assert!(c.u_given_v.abs() < 1e-9 && c.v_given_u.abs() < 1e-9);
        }
    }

    #[test]
    fn noiseless_run_hits_quantum_values() {
        let rays = canonical_rays();
        let report = run_experiment(NoiseConfig::noiseless(), FluorescenceModel::default(), &rays).unwrap();
        assert_eq!(report.states.len(), 13);
        for s in &report.states {
            assert!((s.lhs - 25.0 / 3.0).abs() < 1e-6, "{}: {}", s.label, s.lhs);
            assert!((s.h_sum - 4.0 / 3.0).abs() < 1e-6);
            assert_eq!(s.clamped, 0);
        }
        assert_eq!(report.summary.clamped, 0);
        assert_eq!(report.complementary_projections[0].len(), 12);
        for (i, row) in report.outcome_matrix().iter().enumerate() {
            assert!((row[i] + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn joint_formula_matches_operator_identity() {
        // With vanishing conditionals and P_u + P_v + P_w = 1 the joint
        // estimator reduces to the algebraic one.
        let (pu, pv) = (0.2, 0.35);
        let pw = 1.0 - pu - pv;
        assert!((joint_correlation(pu, pv, pw, 0.0, 0.0) - algebraic_correlation(pu, pv)).abs() < 1e-15);
    }

    #[test]
    fn uncached_matches_cached_when_noiseless() {
        let cached = noiseless();
        let uncached = Experiment::with_options(
            CalibrationTable::default(),
            FluorescenceModel::default(),
            NoiseConfig::noiseless(),
            false,
            false,
        )
        .unwrap();
        let rho = StateVector::from_real(0.3, 0.5, -0.8).unwrap().density();
        for e in [0, 7, 23] {
            let a = cached.correlation_joint(&rho, e, 3).unwrap();
            let b = uncached.correlation_joint(&rho, e, 3).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }
}
