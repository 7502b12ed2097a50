use dispersive_core::evolution::*;
use dispersive_core::sampling::{block_field, smooth_field, stream_rng};
use dispersive_core::spacetime::*;
use dispersive_core::{SpectralField, TorusGeometry};
use num_complex::Complex;

const BO: DispersionLaw = DispersionLaw::BenjaminOno;

fn windowed(k: usize, seed: u64, shift: f64) -> SpaceTimeField<f64> {
    let g = TorusGeometry::new(1.0, 1 << (k + 2)).unwrap();
    let u0 = block_field::<f64, _>(g, k, &mut stream_rng(seed, k as u64), true);
    let w = 2f64.powi(-(k as i32));
    let f = SpaceTimeField::windowed_free(&u0, BO, 0.0, w, w / 64.0, 512).unwrap();
    if shift == 0.0 {
        f
    } else {
        // push the modulation away from the dispersion curve by `shift`
        let vals: Vec<_> = (0..f.nt())
            .flat_map(|n| {
                let ph = Complex::from_polar(1.0, shift * f.time(n));
                f.row(n).iter().map(move |c| c * ph).collect::<Vec<_>>()
            })
            .collect();
        SpaceTimeField::new(*f.geometry(), f.t0(), f.dt(), f.nt(), vals, f.support()).unwrap()
    }
}

#[test]
fn spacetime_transform_inverts() {
    let f = windowed(3, 1, 40.0);
    let t = f.spacetime_transform();
    let back = f.inverse_spacetime_transform(&t).unwrap();
    let scale = f.values().iter().map(|c| c.norm()).fold(0.0, f64::max);
    for (a, b) in back.values().iter().zip(f.values()) {
        assert!((a - b).norm() <= 1e-10 * scale);
    }
    // Plancherel in time: ‖ṽ‖_{L²_τ} = (2π)^{1/2}‖v‖_{L²_t}
    let dtau = 2.0 * std::f64::consts::PI / (f.dt() * f.nt() as f64);
    let lhs: f64 = t.iter().map(|c| c.norm_sqr()).sum::<f64>() * dtau;
    let rhs: f64 = f.values().iter().map(|c| c.norm_sqr()).sum::<f64>() * f.dt() * 2.0 * std::f64::consts::PI;
    assert!((lhs - rhs).abs() < 1e-10 * rhs);
}

#[test]
fn zero_and_homogeneity() {
    let f = windowed(4, 2, 0.0);
    let z = f.scale(Complex::new(0.0, 0.0));
    assert_eq!(xk_norm(&z, 4, 0.5, BO).unwrap(), 0.0);
    assert_eq!(fk_norm(&z, 4, BO).unwrap(), 0.0);
    assert_eq!(nk_norm(&z, 4, BO).unwrap(), 0.0);
    for kind in [NormKind::E, NormKind::F, NormKind::N] {
        assert_eq!(assembled_norm(&z, 0.3, kind, BO).unwrap(), 0.0);
    }
    let c = Complex::new(-1.5, 2.0);
    let a = xk_norm(&f, 4, 0.5, BO).unwrap();
    let b = xk_norm(&f.scale(c), 4, 0.5, BO).unwrap();
    assert!((b - c.norm() * a).abs() < 1e-12 * b);
    let a = nk_norm(&f, 4, BO).unwrap();
    let b = nk_norm(&f.scale(c), 4, BO).unwrap();
    assert!((b - c.norm() * a).abs() < 1e-12 * b);
}

#[test]
fn support_violation_is_rejected() {
    let f = windowed(4, 2, 0.0);
    assert!(matches!(xk_norm(&f, 3, 0.5, BO), Err(dispersive_core::Error::Support { block: 3 })));
    assert!(fk_norm(&f, 5, BO).is_err());
}

#[test]
fn transfer_principle_constants_are_uniform_in_k() {
    let vals: Vec<f64> = (3..=7).map(|k| xk_norm(&windowed(k, 3, 0.0), k, 0.5, BO).unwrap()).collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(0.0, f64::max);
    assert!(hi / lo < 1.1, "{vals:?}");
}

#[test]
fn fk_dominates_uniform_l2_and_is_translation_stable() {
    for k in 3..=6 {
        for seed in 0..4 {
            for shift in [0.0, 3.0 * 2f64.powi(k as i32)] {
                let f = windowed(k, seed, shift);
                let fk = fk_norm(&f, k, BO).unwrap();
                let c = f.sup_l2() / fk;
                assert!(c < 0.1, "k {k}: sup L2 / F = {c}");
                let w = 2f64.powi(-(k as i32));
                for s in [w, w / 8.0, w / 3.0] {
                    let moved = fk_norm(&f.translate(s), k, BO).unwrap();
                    assert!((moved / fk - 1.0).abs() <= 0.05);
                }
            }
        }
    }
}

#[test]
fn nk_decays_with_modulation() {
    let k = 4;
    let mut prev = f64::INFINITY;
    for j in k + 1..=k + 5 {
        let f = windowed(k, 7, 2f64.powi(j as i32));
        let n = nk_norm(&f, k, BO).unwrap();
        let x = fk_norm(&f, k, BO).unwrap();
        let r = n * 2f64.powi(j as i32) / x;
        assert!(n < prev);
        assert!(r > 0.3 && r < 3.0, "j {j}: 2^j N/F = {r}");
        prev = n;
    }
}

#[test]
fn energy_norm_of_static_field_tracks_sobolev() {
    let g = TorusGeometry::new(1.0, 128).unwrap();
    let u0 = smooth_field(g, 4, 60, 0.5, true);
    let f = SpaceTimeField::from_fn(g, 0.0, 0.01, 8, (0.0, 0.07), |_| u0.clone()).unwrap();
    for s in [0.0, 0.3, 1.0] {
        for k in u0.active_blocks() {
            let pk = u0.lp_project(k);
            let e = assembled_norm(&f.project(k), s, NormKind::E, BO).unwrap();
            // coefficient-space H^s norm is (2π)^{1/2} times the L²-normalized one
            let h = pk.sobolev_norm(s) / (2.0 * std::f64::consts::PI).sqrt();
            let r = e / h;
            assert!(r > 0.2 && r <= 1.0 + 1e-12, "s {s} k {k}: {r}");
        }
    }
}

#[test]
fn modulation_regularity_trade() {
    // ratio F(b)/F(1/2) for fields living on [-T, T] decays like T^{1/2-b}
    let g = TorusGeometry::new(1.0, 8).unwrap();
    let u0 = block_field::<f64, _>(g, 0, &mut stream_rng(1, 0), true);
    for b in [0.25, 0.35] {
        let pts: Vec<(f64, f64)> = (0..4)
            .map(|i| {
                let t = 2f64.powi(-i);
                let f = SpaceTimeField::windowed_free(&u0, BO, 0.0, t, 1.0 / 256.0, 2048).unwrap();
                let r = fk_norm_b(&f, 0, b, BO).unwrap() / fk_norm(&f, 0, BO).unwrap();
                (t.log2(), r.log2())
            })
            .collect();
        assert!(pts.windows(2).all(|w| w[1].1 < w[0].1));
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope - (0.5 - b)).abs() <= 0.15, "b {b}: slope {slope}");
    }
}

fn mbo_spacetime(seed: u64) -> (SpaceTimeField<f64>, SpaceTimeField<f64>, SpectralField<f64>) {
    let g = TorusGeometry::new(1.0, 64).unwrap();
    let u0 = smooth_field(g, seed, 12, 0.5, true).scale_real(0.3);
    let p = FlowProblem::new(BO, 1.0, u0.clone()).unwrap();
    let traj = evolve(&p, default_dt(&g, BO), 0.5, 4).unwrap();
    let u = SpaceTimeField::from_trajectory(&traj, BO, 0.25).unwrap();
    let n = u.map_slices(|s| nonlinear_term(s, BO, 1.0));
    (u, n, u0)
}

#[test]
fn sobolev_bound_and_linear_energy_inequality_along_flow() {
    let s = 0.3;
    let mut c21 = 0.0f64;
    let mut c23 = 0.0f64;
    for seed in 0..3 {
        let (u, n, u0) = mbo_spacetime(seed);
        let f = assembled_norm(&u, s, NormKind::F, BO).unwrap();
        let e = assembled_norm(&u, s, NormKind::E, BO).unwrap();
        let nn = assembled_norm(&n, s, NormKind::N, BO).unwrap();
        let sup_hs = (0..u.nt()).map(|i| u.slice(i).sobolev_norm(s)).fold(0.0, f64::max) / (2.0 * std::f64::consts::PI).sqrt();
        c21 = c21.max(sup_hs / f);
        c23 = c23.max(f / (e + nn));
        assert!(u0.l2_norm() > 0.0);
    }
    assert!(c21 < 0.2, "embedding constant {c21}");
    assert!(c23 < 64.0, "C(linear energy) = {c23}");
}
