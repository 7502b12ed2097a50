//! Seeded random fields. Sample `i` of a stream with seed `s` is reproducible on its own,
//! so parallel and serial ensembles agree.

use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::{cst, Scalar};
use crate::spectral::{block_index, SpectralField, TorusGeometry};

pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn complex_normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(cst(re * std::f64::consts::FRAC_1_SQRT_2), cst(im * std::f64::consts::FRAC_1_SQRT_2))
}

/// Complex Gaussian coefficients on the modes selected by `keep(ξ)`, scaled by `weight(ξ)` and
/// normalized to `‖u‖_{L²} = 1`. The Nyquist bin is never populated. Returns the zero field if
/// nothing is selected.
pub fn gaussian_field<T: Scalar, R: Rng + ?Sized>(
    geometry: TorusGeometry<T>,
    rng: &mut R,
    real: bool,
    keep: impl Fn(T) -> bool,
    weight: impl Fn(T) -> T,
) -> SpectralField<T> {
    let nyq = geometry.nyquist_index();
    let coeffs = (0..geometry.grid_size())
        .map(|j| {
            let xi = geometry.frequency(j);
            let z = complex_normal::<T, R>(rng);
            if j != nyq && keep(xi) {
                z * weight(xi)
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
        .collect();
    let f = SpectralField::from_coeffs(geometry, coeffs, real).expect("finite coefficients");
    normalize(f)
}

pub fn normalize<T: Scalar>(f: SpectralField<T>) -> SpectralField<T> {
    let n = f.l2_norm();
    if n > T::zero() {
        f.scale_real(T::one() / n)
    } else {
        f
    }
}

/// Unit-norm Gaussian field supported in the dyadic block `I_k`.
pub fn block_field<T: Scalar, R: Rng + ?Sized>(geometry: TorusGeometry<T>, k: usize, rng: &mut R, real: bool) -> SpectralField<T> {
    gaussian_field(geometry, rng, real, |xi| block_index(xi) == k, |_| T::one())
}

/// Unit-norm Gaussian field on `1 <= |m| <= max_mode` with spectrum `⟨ξ⟩^{-decay}`.
///
/// Coefficients are drawn per integer mode from `(seed, mode)`, so the same seed yields the
/// same function on every grid large enough to hold it.
pub fn smooth_field<T: Scalar>(geometry: TorusGeometry<T>, seed: u64, max_mode: i64, decay: T, real: bool) -> SpectralField<T> {
    let mut coeffs = vec![Complex::new(T::zero(), T::zero()); geometry.grid_size()];
    for m in -max_mode..=max_mode {
        if m == 0 {
            continue;
        }
        let Some(j) = geometry.index_of(m) else { continue };
        if j == geometry.nyquist_index() {
            continue;
        }
        let mut rng = stream_rng(seed, m.unsigned_abs() * 2 + u64::from(m < 0));
        let xi = geometry.frequency(j);
        let w = (T::one() + xi * xi).powf(-decay / cst(2.0));
        coeffs[j] = complex_normal::<T, _>(&mut rng) * w;
    }
    normalize(SpectralField::from_coeffs(geometry, coeffs, real).expect("finite coefficients"))
}
