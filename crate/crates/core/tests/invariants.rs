use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;

use yuoh_core::nchv::{classical_max, classical_value, ks_admissible_assignments, Assignment};
use yuoh_core::pulse::{
    compile_measurement, compile_preparation, duration_of, sequence_unitary, CalibrationTable, Pulse,
};
use yuoh_core::qutrit::{
    apply, depolarize, embedded_rotation, expectation, hermitian_defect, identity, inner, max_abs,
    Amplitudes, DensityOperator, Mat3,
};
use yuoh_core::rays::{canonical_rays, OrthogonalityGraph, Ray};
use yuoh_core::readout::combine;
use yuoh_core::{
    Channel, CorrelationMethod, Experiment, FluorescenceModel, NoiseConfig, StateVector, YuOhSet,
};

fn channel() -> impl Strategy<Value = Channel> {
    prop_oneof![Just(Channel::Mw1), Just(Channel::Mw2)]
}

fn angle() -> impl Strategy<Value = f64> {
    0.0..TAU
}

fn state() -> impl Strategy<Value = StateVector> {
    prop::array::uniform6(-1.0f64..1.0)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
        .prop_map(|v| {
            StateVector::from_amplitudes(Amplitudes::new(
                Complex64::new(v[0], v[1]),
                Complex64::new(v[2], v[3]),
                Complex64::new(v[4], v[5]),
            ))
            .unwrap()
        })
}

fn mixed() -> impl Strategy<Value = DensityOperator> {
    (state(), state(), 0.0f64..1.0).prop_map(|(a, b, w)| {
        DensityOperator::mixture(&[(w, a), (1.0 - w, b)]).unwrap()
    })
}

fn hermitian() -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-2.0f64..2.0).prop_map(|v| {
        let m = Mat3::from_fn(|i, j| Complex64::new(v[3 * i + j], v[3 * j + i]));
        (m + m.adjoint()) * Complex64::new(0.5, 0.0)
    })
}

fn cyclic(r: &Ray) -> Ray {
    let z = r.components();
    Ray::new(r.label(), Amplitudes::new(z[2], z[0], z[1])).unwrap()
}

proptest! {
    #[test]
    fn rotation_products_are_unitary(
        steps in prop::collection::vec((channel(), angle(), angle()), 1..6)
    ) {
        let u = steps.iter().fold(yuoh_core::UnitaryOperator::identity(), |acc, &(ch, t, p)| {
            acc.then(&embedded_rotation(ch, t, p))
        });
        let m = u.matrix();
        prop_assert!(max_abs(&(m.adjoint() * m - identity())) < 1e-12);
    }

    #[test]
    fn inverse_pulse_undoes_pulse(ch in channel(), t in angle(), p in angle()) {
        let pulse = Pulse::new(ch, t, p).unwrap();
        let prod = pulse.unitary().then(&pulse.inverse().unitary());
        prop_assert!(max_abs(&(prod.matrix() - identity())) < 1e-12);
    }

    #[test]
    fn expectation_is_real_and_linear(a in hermitian(), b in hermitian(), x in -3.0f64..3.0, rho in mixed()) {
        let combo = a + b * Complex64::new(x, 0.0);
        let lhs = expectation(&combo, &rho).unwrap();
        let rhs = expectation(&a, &rho).unwrap() + x * expectation(&b, &rho).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn depolarizing_keeps_a_density_operator(rho in mixed(), p in 0.0f64..1.0) {
        let out = depolarize(&rho, p).unwrap();
        prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(hermitian_defect(out.matrix()) < 1e-12);
        prop_assert!(out.eigenvalues().iter().all(|&e| e > -1e-12));
    }

    #[test]
    fn preparation_round_trip(target in state()) {
        let seq = compile_preparation(&target).unwrap();
        prop_assert!(seq.is_well_formed());
        let out = apply(&sequence_unitary(&seq), &StateVector::basis(0)).unwrap();
        prop_assert!(1.0 - out.fidelity(&target) < 1e-10);
        let back = apply(&sequence_unitary(&compile_measurement(&target).unwrap()), &target).unwrap();
        prop_assert!(1.0 - back.component(0).norm() < 1e-10);
    }

    #[test]
    fn duration_scales_with_period(ch in channel(), t in angle(), period in 0.05f64..20.0, k in 0.1f64..10.0) {
        let pulse = Pulse::new(ch, t, 0.0).unwrap();
        let cal = CalibrationTable { rabi_period_mw1: period, rabi_period_mw2: period, ..Default::default() };
        let scaled = CalibrationTable { rabi_period_mw1: k * period, rabi_period_mw2: k * period, ..Default::default() };
        let d = duration_of(&pulse, &cal).unwrap();
        prop_assert!((duration_of(&pulse, &scaled).unwrap() - k * d).abs() < 1e-12 * (1.0 + k * d));
        prop_assert!((d - t * period / TAU).abs() < 1e-12);
    }

    #[test]
    fn negation_identity(mask in 0u64..(1 << 13)) {
        // Flipping every sign keeps the correlation term and negates the linear one.
        let g = YuOhSet::canonical().graph().clone();
        let a = Assignment::from_mask(mask, 13);
        let linear: i64 = a.values().iter().map(|&v| v as i64).sum();
        let v = classical_value(&a, &g).0;
        let w = classical_value(&a.negated(), &g).0;
        prop_assert_eq!(v - w, 8 * linear);
    }

    #[test]
    fn combine_stays_in_unit_interval(p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
        let p = combine(p1, p2);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(p <= p1.min(p2) + 1e-12);
    }

    #[test]
    fn noiseless_lhs_ignores_calibration(t1 in 0.1f64..10.0, t2 in 0.1f64..10.0, target in state()) {
        let cal = CalibrationTable { rabi_period_mw1: t1, rabi_period_mw2: t2, ..Default::default() };
        let exp = Experiment::with_options(cal, FluorescenceModel::default(), NoiseConfig::noiseless(), true, false).unwrap();
        let ray = Ray::new("t", *target.amplitudes()).unwrap();
        let r = exp.run(&[ray], CorrelationMethod::Both).unwrap();
        prop_assert!((r.states[0].lhs - 25.0 / 3.0).abs() < 1e-9);
        prop_assert!((r.states[0].h_sum - 4.0 / 3.0).abs() < 1e-9);
    }
}

#[test]
fn cyclic_relabeling_preserves_the_set() {
    let rays = canonical_rays();
    let moved: Vec<Ray> = rays.iter().map(cyclic).collect();
    for m in &moved {
        assert!(rays.iter().any(|r| r.same_ray(m)), "{} leaves the set", m.label());
    }
    let g = OrthogonalityGraph::from_rays(&moved);
    assert_eq!(g.edge_count(), 24);
    assert_eq!(classical_max(&g).unwrap().0 .0, 32);
}

#[test]
fn ks_assignments_satisfy_constraints() {
    let set = YuOhSet::canonical();
    let rays = set.rays();
    let all = ks_admissible_assignments(set.graph()).unwrap();
    assert!(!all.is_empty());
    for a in &all {
        let v = a.values();
        for i in 0..13 {
            for j in (i + 1)..13 {
                if inner(&rays[i].state(), &rays[j].state()).norm() < 1e-10 {
                    assert!(v[i] + v[j] <= 1);
                    for k in (j + 1)..13 {
                        let ortho = |x: usize, y: usize| inner(&rays[x].state(), &rays[y].state()).norm() < 1e-10;
                        if ortho(i, k) && ortho(j, k) {
                            assert_eq!(v[i] + v[j] + v[k], 1);
                        }
                    }
                }
            }
        }
    }
}
