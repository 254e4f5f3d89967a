use std::sync::OnceLock;

use lgqa::algebra::{ComplexMatrix2, DensityMatrix, C64};
use lgqa::integrate::{evolve, evolve_unitary, IntegratorConfig, MasterEquation};
use lgqa::{AnnealSchedule, BathParams, Drive};
use proptest::prelude::*;

fn sched() -> AnnealSchedule {
    AnnealSchedule::default()
}

fn dissipative() -> &'static MasterEquation {
    static ME: OnceLock<MasterEquation> = OnceLock::new();
    ME.get_or_init(|| {
        let bp = BathParams::new(1e-2, 10.0).unwrap();
        MasterEquation::new(sched(), &bp, &IntegratorConfig::with_dt(1e-2)).unwrap()
    })
}

fn state() -> impl Strategy<Value = DensityMatrix> {
    (0.0..1.0f64, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::PI).prop_map(|(r, phi, th)| {
        DensityMatrix::new(ComplexMatrix2::from_pauli(
            0.5,
            0.5 * r * th.sin() * phi.cos(),
            0.5 * r * th.sin() * phi.sin(),
            0.5 * r * th.cos(),
        ))
        .unwrap()
    })
}

#[test]
fn unitary_baseline_fidelity() {
    let rho = evolve(&sched().initial_state(), 0.0, 14.0, sched(), &BathParams::default(), &IntegratorConfig::default()).unwrap();
    let f = sched().fidelity(&rho, 14.0).unwrap();
    assert!((f - 0.999).abs() <= 1e-3, "fidelity {f}");
    assert!((rho.purity() - 1.0).abs() < 1e-9);
}

#[test]
fn step_refinement() {
    let bp = BathParams::new(1e-2, 10.0).unwrap();
    let rho0 = sched().initial_state();
    for bath in [BathParams::default(), bp] {
        let a = evolve(&rho0, 0.0, 14.0, sched(), &bath, &IntegratorConfig::with_dt(1e-3)).unwrap();
        let b = evolve(&rho0, 0.0, 14.0, sched(), &bath, &IntegratorConfig::with_dt(5e-4)).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-8);
    }
}

#[test]
fn trace_drift_without_renormalization() {
    let bp = BathParams::new(1e-2, 10.0).unwrap();
    let cfg = IntegratorConfig {
        renormalize: false,
        ..IntegratorConfig::default()
    };
    let rho = evolve(&sched().initial_state(), 0.0, 14.0, sched(), &bp, &cfg).unwrap();
    assert!((rho.trace_re() - 1.0).abs() < 1e-9 * 14.0);
}

#[test]
fn pure_state_path_agrees() {
    let cfg = IntegratorConfig::default();
    let psi0 = sched().eigensystem(0.0).unwrap().v0;
    let psi = evolve_unitary(psi0, 0.0, 14.0, sched(), &cfg).unwrap();
    let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    assert!((norm - 1.0).abs() < 1e-10);
    assert!((psi[1].norm_sqr() - 0.999).abs() <= 1e-3);
    let rho = evolve(&sched().initial_state(), 0.0, 14.0, sched(), &BathParams::default(), &cfg).unwrap();
    let from_psi = ComplexMatrix2::outer(psi, psi);
    assert!(rho.matrix().max_abs_diff(&from_psi) < 1e-9);
    assert_eq!(evolve_unitary(psi0, 3.0, 3.0, sched(), &cfg).unwrap(), psi0);
}

#[test]
fn rabi_period_under_static_field() {
    let s = AnnealSchedule::new(1.0, 1.0, std::f64::consts::TAU).unwrap();
    let psi0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let psi = evolve_unitary(psi0, 0.0, s.t_f, Drive::frozen(s, 0.0), &IntegratorConfig::with_dt(1e-3)).unwrap();
    let overlap = (psi0[0].conj() * psi[0] + psi0[1].conj() * psi[1]).norm();
    assert!((overlap - 1.0).abs() < 1e-9);
}

#[test]
fn frozen_schedule_relaxes_to_gibbs() {
    let s = AnnealSchedule::new(1.0, 1.0, 600.0).unwrap();
    let drive = Drive::frozen(s, 0.3);
    let bp = BathParams::new(1e-2, 10.0).unwrap();
    let cfg = IntegratorConfig::with_dt(1e-2);
    let me = MasterEquation::new(drive, &bp, &cfg).unwrap();
    let rho = me.evolve(&s.initial_state(), 0.0, s.t_f).unwrap();

    let es = drive.eigensystem(0.0).unwrap();
    let w1 = 1.0 / (1.0 + (bp.beta * (es.e1 - es.e0)).exp());
    let gibbs = ComplexMatrix2::outer(es.v0, es.v0).scale_re(1.0 - w1) + ComplexMatrix2::outer(es.v1, es.v1).scale_re(w1);
    let gibbs = DensityMatrix::new(gibbs).unwrap();
    assert!(rho.trace_distance(&gibbs) < 1e-6, "distance {}", rho.trace_distance(&gibbs));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_is_linear(a in 0.0..1.0f64, r1 in state(), r2 in state(), t1 in 0.5..14.0f64) {
        let me = dissipative();
        let mix = DensityMatrix::new(r1.matrix().scale_re(a) + r2.matrix().scale_re(1.0 - a)).unwrap();
        let lhs = me.evolve(&mix, 0.0, t1).unwrap();
        let e1 = me.evolve(&r1, 0.0, t1).unwrap();
        let e2 = me.evolve(&r2, 0.0, t1).unwrap();
        let rhs = e1.matrix().scale_re(a) + e2.matrix().scale_re(1.0 - a);
        prop_assert!(lhs.matrix().max_abs_diff(&rhs) < 1e-9);
    }

    #[test]
    fn trace_and_positivity(rho in state(), t0 in 0.0..7.0f64, len in 0.0..7.0f64) {
        let me = dissipative();
        let out = me.evolve(&rho, t0, t0 + len).unwrap();
        prop_assert!((out.trace_re() - 1.0).abs() < 1e-9);
        prop_assert!(out.min_eigenvalue() >= -1e-9);
    }

    #[test]
    fn propagator_matches_evolve(rho in state(), t0 in 0.0..7.0f64, len in 0.0..7.0f64) {
        let me = dissipative();
        let phi = me.propagator(t0, t0 + len).unwrap();
        let a = phi.apply(&rho).unwrap();
        let b = me.evolve(&rho, t0, t0 + len).unwrap();
        prop_assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
    }
}
