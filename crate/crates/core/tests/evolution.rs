use dispersive_core::evolution::*;
use dispersive_core::sampling::{smooth_field, stream_rng};
use dispersive_core::{SpectralField, TorusGeometry};
use proptest::prelude::*;

fn small_data(m: usize, lambda: f64, seed: u64, h03: f64) -> SpectralField<f64> {
    let g = TorusGeometry::new(lambda, m).unwrap();
    let u = smooth_field(g, seed, 8, 1.0, true);
    u.scale_real(h03 / u.sobolev_norm(0.3))
}

fn rel_diff(a: &SpectralField<f64>, b: &SpectralField<f64>) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm()
}

#[test]
fn mass_and_energy_drift_at_default_step() {
    let u0 = small_data(256, 1.0, 11, 0.05);
    let p = FlowProblem::new(DispersionLaw::BenjaminOno, 1.0, u0.clone()).unwrap();
    let dt = default_dt(u0.geometry(), DispersionLaw::BenjaminOno);
    let traj = evolve(&p, dt, 1.0, usize::MAX).unwrap();
    let u1 = traj.last();
    let dm = (conserved_mass(u1) - conserved_mass(&u0)).abs() / conserved_mass(&u0);
    let e0 = conserved_energy(&u0, 1.0).unwrap();
    let de = (conserved_energy(u1, 1.0).unwrap() - e0).abs() / e0.abs();
    assert!(dm <= 1e-8, "mass drift {dm:e}");
    assert!(de <= 1e-6, "energy drift {de:e}");
    assert!(u1.conjugate_symmetry_defect() == 0.0);
}

#[test]
fn fourth_order_self_convergence() {
    let u0 = small_data(256, 1.0, 5, 0.05);
    let p = FlowProblem::new(DispersionLaw::BenjaminOno, -1.0, u0).unwrap();
    let finals: Vec<_> = (7..=10).map(|k| evolve(&p, 2f64.powi(-k), 1.0, usize::MAX).unwrap().last().clone()).collect();
    for w in finals.windows(3) {
        let d1 = w[0].sub(&w[1]).unwrap().l2_norm();
        let d2 = w[1].sub(&w[2]).unwrap().l2_norm();
        let order = (d1 / d2).log2();
        assert!((order - 4.0).abs() <= 0.3, "observed order {order}");
    }
}

#[test]
fn dnls_conserves_mass() {
    let g = TorusGeometry::<f64>::new(2.0, 64).unwrap();
    let u0 = smooth_field(g, 3, 6, 1.0, false).scale_real(0.1);
    let p = FlowProblem::new(DispersionLaw::Schroedinger, 1.0, u0.clone()).unwrap();
    let traj = evolve(&p, default_dt(&g, DispersionLaw::Schroedinger), 0.5, usize::MAX).unwrap();
    let dm = (conserved_mass(traj.last()) - conserved_mass(&u0)).abs() / conserved_mass(&u0);
    assert!(dm < 1e-10, "{dm:e}");
}

#[test]
fn reflection_reverses_time_for_mbo() {
    let u0 = small_data(64, 1.0, 9, 0.3);
    let dt = 2f64.powi(-10);
    let fwd = evolve(&FlowProblem::new(DispersionLaw::BenjaminOno, 1.0, u0.clone()).unwrap(), dt, 0.25, usize::MAX).unwrap();
    let back = FlowProblem::new(DispersionLaw::BenjaminOno, 1.0, fwd.last().reflect()).unwrap();
    let again = evolve(&back, dt, 0.25, usize::MAX).unwrap();
    let err = rel_diff(&again.last().reflect(), &u0);
    assert!(err < 1e-9, "{err:e}");
    // the flow is genuinely nonlinear at this amplitude
    let lin = free_evolve(&u0, 0.25, DispersionLaw::BenjaminOno);
    assert!(rel_diff(fwd.last(), &lin) > 1e-4);
}

#[test]
fn rescaling_commutes_with_flow() {
    let u0 = small_data(64, 1.0, 4, 0.3);
    let dt = 2f64.powi(-10);
    let t = 0.125;
    for law in [DispersionLaw::BenjaminOno, DispersionLaw::Schroedinger] {
        let a = evolve(&FlowProblem::new(law, 1.0, u0.clone()).unwrap(), dt, t, usize::MAX).unwrap();
        let a = rescale(a.last(), 4.0).unwrap();
        let r0 = rescale(&u0, 4.0).unwrap();
        let b = evolve(&FlowProblem::new(law, 1.0, r0).unwrap(), 16.0 * dt, 16.0 * t, usize::MAX).unwrap();
        assert!(rel_diff(b.last(), &a) < 1e-10, "{law:?}");
    }
}

#[test]
fn linear_only_integrator_is_free_flow() {
    let u0 = small_data(64, 2.0, 1, 1.0);
    let it = Integrator::new(DispersionLaw::BenjaminOno, 1.0, *u0.geometry(), 0.01).linear_only();
    let traj = evolve_with(it, &u0, 0.5, usize::MAX).unwrap();
    assert!(rel_diff(traj.last(), &free_evolve(&u0, 0.5, DispersionLaw::BenjaminOno)) < 1e-12);
}

#[test]
fn blowup_reports_step() {
    let u0 = small_data(32, 1.0, 2, 1.0).scale_real(1e3);
    let it = Integrator::new(DispersionLaw::BenjaminOno, 1.0, *u0.geometry(), 0.5);
    match evolve_with(it, &u0, 100.0, 1) {
        Err(dispersive_core::Error::Blowup { step }) => assert!(step >= 1),
        other => panic!("expected blowup, got {:?}", other.map(|t| t.times.len())),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn free_flow_is_unitary(seed in 0u64..1000, t in -5.0f64..5.0, bo in any::<bool>()) {
        let g = TorusGeometry::<f64>::new(2.0, 64).unwrap();
        let u = dispersive_core::sampling::gaussian_field::<f64, _>(g, &mut stream_rng(seed, 0), false, |_| true, |_| 1.0);
        let law = if bo { DispersionLaw::BenjaminOno } else { DispersionLaw::Schroedinger };
        let v = free_evolve(&u, t, law);
        prop_assert!((v.l2_norm() - u.l2_norm()).abs() < 1e-13);
    }

    #[test]
    fn rescale_preserves_l2(seed in 0u64..1000, p in 0i32..4) {
        let u = small_data(64, 1.0, seed, 0.5);
        let r = rescale(&u, 2f64.powi(p)).unwrap();
        prop_assert!((r.l2_norm() - u.l2_norm()).abs() < 1e-14);
    }
}
