use dispersive_core::sampling::{block_field, gaussian_field, stream_rng};
use dispersive_core::spectral::{block_index, forward_transform, lebesgue_norm_samples};
use dispersive_core::{SpectralField, TorusGeometry};
use num_complex::Complex;
use proptest::prelude::*;

/// Samples by direct summation of the inversion formula, independent of the FFT.
fn direct_samples(f: &SpectralField<f64>) -> Vec<Complex<f64>> {
    let g = f.geometry();
    g.points()
        .iter()
        .map(|&x| {
            let s: Complex<f64> = (0..g.grid_size())
                .map(|j| f.coeffs()[j] * Complex::from_polar(1.0, g.frequency(j) * x))
                .sum();
            s / g.period()
        })
        .collect()
}

fn random(lambda: f64, m: usize, seed: u64, idx: u64) -> SpectralField<f64> {
    let g = TorusGeometry::new(lambda, m).unwrap();
    gaussian_field(g, &mut stream_rng(seed, idx), false, |_| true, |_| 1.0)
}

#[test]
fn plancherel_and_parseval_against_riemann_sums() {
    for &lambda in &[1.0, 2.0, 4.0] {
        for i in 0..100 {
            let f = random(lambda, 256, 1, i);
            let h = random(lambda, 256, 2, i);
            let dx = f.geometry().dx();
            let fs = direct_samples(&f);
            let hs = direct_samples(&h);
            let riemann: f64 = fs.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
            let coeff = f.l2_norm().powi(2);
            assert!((riemann - coeff).abs() <= 1e-12 * coeff);
            let pair: Complex<f64> = fs.iter().zip(&hs).map(|(a, b)| a * b.conj()).sum::<Complex<f64>>() * dx;
            let pc = f.inner(&h).unwrap();
            assert!((pair - pc).norm() <= 1e-12 * f.l2_norm() * h.l2_norm());
        }
    }
}

#[test]
fn round_trip_is_identity() {
    let f = random(2.0, 128, 3, 0);
    let back = forward_transform(*f.geometry(), &f.samples()).unwrap();
    for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
        assert!((a - b).norm() <= 1e-12 * f.max_abs_coeff());
    }
}

#[test]
fn bernstein_constant_is_uniform_in_block() {
    // ‖f‖_∞ / (2^{k/2} ‖f‖_2) over Gaussian ensembles on I_k
    let mut worst = Vec::new();
    for k in 1..=7 {
        let g = TorusGeometry::new(1.0, 1 << (k + 3)).unwrap();
        let r = (0..64)
            .map(|i| {
                let f = block_field::<f64, _>(g, k, &mut stream_rng(5, i), true);
                f.lebesgue_norm(f64::INFINITY).unwrap() / (2f64.powi(k as i32)).sqrt()
            })
            .fold(0.0, f64::max);
        worst.push(r);
    }
    let hi = worst.iter().cloned().fold(0.0, f64::max);
    assert!(hi < 1.0, "Bernstein ratios {worst:?}");
}

#[test]
fn sample_norm_rejects_small_exponent() {
    assert!(lebesgue_norm_samples::<f64>(&[Complex::new(1.0, 0.0)], 1.0, 0.9).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projectors_partition_exactly(seed in 0u64..10_000, lp in 0u32..3) {
        let f = random(2f64.powi(lp as i32), 64, seed, 0);
        let kmax = f.geometry().max_block();
        let mut sum = SpectralField::zeros(*f.geometry(), false);
        for k in 0..=kmax {
            let p = f.lp_project(k);
            sum = sum.add(&p).unwrap();
            for l in 0..=kmax {
                if l != k {
                    prop_assert_eq!(p.lp_project(l).max_abs_coeff(), 0.0);
                }
            }
        }
        prop_assert_eq!(sum.coeffs(), f.coeffs());
    }

    #[test]
    fn hilbert_is_isometry_on_mean_zero(seed in 0u64..10_000) {
        let mut f = random(1.0, 64, seed, 1);
        f.coeffs_mut()[0] = Complex::new(0.0, 0.0);
        f.coeffs_mut()[32] = Complex::new(0.0, 0.0);
        let h = f.hilbert_transform();
        prop_assert!((h.l2_norm() - f.l2_norm()).abs() < 1e-14);
        let hh = h.hilbert_transform();
        for (a, b) in hh.coeffs().iter().zip(f.coeffs()) {
            prop_assert!((a + b).norm() < 1e-15);
        }
    }

    #[test]
    fn real_fields_are_exactly_symmetric(seed in 0u64..10_000) {
        let g = TorusGeometry::new(1.0, 32).unwrap();
        let f = gaussian_field::<f64, _>(g, &mut stream_rng(seed, 0), true, |_| true, |_| 1.0);
        prop_assert_eq!(f.conjugate_symmetry_defect(), 0.0);
        prop_assert!(f.samples().iter().all(|z| z.im.abs() < 1e-15));
    }

    #[test]
    fn sobolev_matches_direct_sum(seed in 0u64..10_000, s in -1.0f64..2.0) {
        let f = random(2.0, 32, seed, 2);
        let g = f.geometry();
        let direct: f64 = (0..32).map(|j| {
            let xi = g.frequency(j);
            (1.0 + xi * xi).powf(s) * f.coeffs()[j].norm_sqr()
        }).sum::<f64>() / 2.0;
        prop_assert!((f.sobolev_norm(s) - direct.sqrt()).abs() <= 1e-13 * direct.sqrt());
    }

    #[test]
    fn blocks_cover_and_are_disjoint(x in -1e4f64..1e4) {
        let k = block_index(x);
        let lo = if k == 0 { 0.0 } else { 2f64.powi(k as i32) };
        prop_assert!(x.abs() >= lo && x.abs() < 2f64.powi(k as i32 + 1));
    }
}
